import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mplab.errors import InvariantViolation, ParameterError, PreconditionError
from mplab.greenmean import DiscreteDisc2D, ExactInterval1D
from mplab.profiles import CuspProfile, Euclidean, Hyperbolic, ModelManifold, SuperExpProfile
from mplab.scheme import (
    DirichletOperator,
    bounded_envelope,
    envelope_refinement,
    kato_check,
    monotone_iteration,
    positivity_experiment,
    refinement_order,
)

EUCLID = ModelManifold(2, Euclidean())
SUPEREXP = ModelManifold(2, SuperExpProfile(1.0))
CUSP = ModelManifold(2, CuspProfile(1.0))


# -- operator ------------------------------------------------------------------------


@pytest.mark.parametrize("M", [EUCLID, ModelManifold(2, Hyperbolic()), SUPEREXP, CUSP], ids=lambda M: M.warping.name)
def test_radial_operator_is_m_matrix(M):
    Op = DirichletOperator.radial(M, 8.0, 256)
    rep = Op.check_m_matrix()
    assert rep["passed"], rep


def test_interval_operator_matches_dense_stencil():
    Op = DirichletOperator.interval(0.0, 1.0, 20, c=2.0)
    h = 1 / 20
    u = np.cos(3 * Op.t)
    ref = np.zeros_like(u)
    ref[1:-1] = (u[:-2] - 2 * u[1:-1] + u[2:]) / h**2 - 2.0 * u[1:-1]
    assert np.allclose(Op.apply(u), ref, rtol=1e-12, atol=1e-10)


def test_operator_parameters():
    with pytest.raises(ParameterError):
        DirichletOperator.interval(1.0, 0.0, 10)
    with pytest.raises(ParameterError):
        DirichletOperator.interval(0.0, 1.0, 10, c=0.0)
    with pytest.raises(ParameterError):
        DirichletOperator.radial(EUCLID, 1.0, 1)


# -- monotone iteration ------------------------------------------------------------------


def test_iteration_fixed_point():
    Op = DirichletOperator.interval(0.0, 1.0, 32)
    z = np.zeros_like(Op.t)
    res = monotone_iteration(Op, z, z)
    assert np.all(res.w == 0.0)


def test_iteration_boundary_driven_zero():
    Op = DirichletOperator.interval(0.0, 1.0, 32)
    res = monotone_iteration(Op, -np.ones_like(Op.t), np.zeros_like(Op.t), tol=1e-12)
    assert np.max(np.abs(res.w)) <= 1e-10
    assert res.residual <= 10 * 1e-12
    assert res.ordered


def test_iteration_matches_direct_solve():
    # oracle: dense solve of the same second-difference system
    n, tol = 40, 1e-12
    Op = DirichletOperator.interval(0.0, 1.0, n)
    h = 1 / n
    A = np.zeros((n + 1, n + 1))
    b = np.zeros(n + 1)
    A[0, 0] = A[n, n] = 1.0
    b[n] = 1.0
    for i in range(1, n):
        A[i, i - 1] = A[i, i + 1] = 1 / h**2
        A[i, i] = -2 / h**2 - 1
    direct = np.linalg.solve(A, b)
    res = monotone_iteration(Op, -np.ones_like(Op.t), Op.t.copy(), tol=tol)
    assert np.allclose(res.w, direct, atol=1e-9)
    assert res.residual <= 10 * tol
    assert np.all(np.diff(res.increments) <= 1e-15)


@settings(max_examples=15)
@given(st.floats(0.1, 3.0), st.floats(1.0, 4.0))
def test_iteration_ordered_between_barriers(a, c):
    Op = DirichletOperator.interval(0.0, 1.0, 24, c=c)
    u1 = -a * np.ones_like(Op.t)
    u2 = a * np.ones_like(Op.t)
    res = monotone_iteration(Op, u1, u2, tol=1e-11)
    assert np.all(res.w >= u1 - 1e-11) and np.all(res.w <= u2 + 1e-11)
    assert res.residual <= 1e-9


def test_iteration_radial_cusp_pipeline():
    Op = DirichletOperator.radial(CUSP, 4.0, 128)
    res = monotone_iteration(Op, np.zeros_like(Op.t), np.full_like(Op.t, 2.0), tol=1e-10)
    assert res.residual <= 1e-9
    assert np.all(res.w <= 2.0 + 1e-10)


def test_iteration_preconditions():
    Op = DirichletOperator.interval(0.0, 1.0, 16)
    one = np.ones_like(Op.t)
    with pytest.raises(PreconditionError):
        monotone_iteration(Op, one, -one)
    with pytest.raises(PreconditionError):
        monotone_iteration(Op, one, 2 * one)  # (Delta - 1) 1 = -1 < 0
    with pytest.raises(PreconditionError):
        monotone_iteration(Op, -2 * one, -one)  # -1 is not a supersolution
    with pytest.raises(InvariantViolation):
        monotone_iteration(Op, -one, one, max_iter=1)


@pytest.mark.parametrize("case", ["interval", "radial"])
def test_refinement_order(case):
    rep = refinement_order(case)
    assert rep["order"] >= 1.9
    assert rep["errors"][1] < rep["errors"][0]


def test_refinement_unknown_case():
    with pytest.raises(ParameterError):
        refinement_order("sphere")


# -- exhaustion envelope --------------------------------------------------------------------------------


def test_envelope_zero():
    env = bounded_envelope(EUCLID, 0.0, radii=(2.0, 4.0))
    for s in env["stages"]:
        assert np.all(s["w"] == 0.0)


def test_envelope_euclidean_decays():
    env = bounded_envelope(EUCLID, -1.0)
    cm = [s["core_max"] for s in env["stages"]]
    assert all(b < a for a, b in zip(cm, cm[1:]))
    assert cm[-1] <= 1e-2 * 2 * env["c"]
    assert all(b < a for a, b in zip(env["cauchy"], env["cauchy"][1:]))
    for s in env["stages"]:
        assert s["smoothing_bounds_ok"] and s["m_matrix"]
        assert s["residual"] <= 1e-9


def test_envelope_superexp_stabilizes_positive():
    env = bounded_envelope(SUPEREXP, -1.0)
    cm = [s["core_max"] for s in env["stages"]]
    assert cm[-1] > 0.5 * 2 * env["c"]
    assert env["cauchy"][-1] < 1e-2
    assert all(b < a for a, b in zip(env["cauchy"], env["cauchy"][1:]))


def test_envelope_rejects_supersolution():
    # (Delta - 1) 0.1 = -0.1 < 0
    with pytest.raises(PreconditionError):
        bounded_envelope(EUCLID, 0.1, radii=(2.0, 4.0))


def test_envelope_radii_validation():
    with pytest.raises(ParameterError):
        bounded_envelope(EUCLID, -1.0, radii=(4.0, 2.0))
    with pytest.raises(ParameterError):
        bounded_envelope(EUCLID, -1.0, radii=(0.5, 2.0), core=1.0)


def test_envelope_refinement_second_order():
    rep = envelope_refinement(EUCLID)
    assert rep["order"] >= 1.9
    assert rep["differences"][1] < rep["differences"][0]


# -- Kato positive part ----------------------------------------------------------------------------------


@pytest.fixture(scope="module")
def disc():
    return DiscreteDisc2D(EUCLID, 1.0, alpha_scale=1 / 16)


def test_kato_nonnegative(disc):
    alpha = disc.alpha_values()
    rep = kato_check(disc, alpha, n_pairs=60)
    assert rep["passed"] and rep["violations"] == 0


def test_kato_nonpositive(disc):
    alpha = disc.alpha_values()
    rep = kato_check(disc, -alpha, n_pairs=60)
    assert rep["passed"] and rep["worst"] == 0.0


def test_kato_sign_changing(disc):
    alpha = disc.alpha_values()
    h = disc.harmonic_extension(np.cos(disc.theta[disc.n_int:]))
    v = alpha * (h - 0.3)
    assert np.min(v) < 0 < np.max(v)
    rep = kato_check(disc, v, n_pairs=200)
    assert rep["passed"], rep


def test_kato_preconditions(disc):
    with pytest.raises(ParameterError):
        kato_check(ExactInterval1D(0.0, 1.0), np.zeros(3))
    with pytest.raises(PreconditionError):
        kato_check(disc, disc.alpha_values() * disc.column(0))


# -- experiments --------------------------------------------------------------------------------------------


def test_linfty_superexp_violated():
    rep = positivity_experiment(SUPEREXP, "linfty")
    assert rep["verdict"] == "VIOLATED"
    u = np.array(rep["witness"]["u"])
    assert np.all(u < 0) and np.max(np.abs(u)) <= 1.0
    assert rep["sc_verdict"] == "INCOMPLETE_EVIDENCE"


def test_linfty_euclidean_consistent():
    rep = positivity_experiment(EUCLID, "Linfty")
    assert rep["verdict"] == "CONSISTENT"
    assert all(e["decayed"] for e in rep["witness"]["envelopes"])


def test_l1_cusp_violated():
    rep = positivity_experiment(CUSP, "l1")
    w = rep["witness"]
    assert rep["verdict"] == "VIOLATED" and w["supersolution_verified"]
    assert w["l1_mass"] < 4 * math.pi
    assert w["l1_mass_bound"] == pytest.approx(4 * math.pi)
    assert all(np.isfinite(w["log_abs_V"]))


def test_l1_other_profiles():
    assert positivity_experiment(EUCLID, "l1")["verdict"] == "CONSISTENT"
    assert positivity_experiment(ModelManifold(2, Hyperbolic()), "l1")["verdict"] == "CONSISTENT"
    assert positivity_experiment(SUPEREXP, "l1")["verdict"] == "INCONCLUSIVE"
    with pytest.raises(ParameterError):
        positivity_experiment(EUCLID, "l2")
