import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mplab.counterexamples import (
    build_cusp,
    disc_remark_check,
    distributional_pairing,
    l1_mass,
    l1_mass_bound,
    supersolution_residual,
    verify_supersolution,
)
from mplab.errors import ParameterError
from mplab.profiles import Bump

EPS = [0.25, 0.5, 1.0, 2.0]


def _mp_residual(eps, t):
    """Delta U - U for U = exp(t^p) - exp(t_eps^p), sigma = exp(-t^p) / t^(1+eps), in 50 digits."""
    with mp.workdps(50):
        eps, t = mp.mpf(eps), mp.mpf(t)
        p = 2 + 2 * eps
        te = (2 * (1 + eps) * eps) ** (-1 / (2 * eps))
        U = lambda s: mp.exp(s**p) - mp.exp(te**p)  # noqa: E731
        logj = lambda s: -(s**p) - (1 + eps) * mp.log(s)  # noqa: E731
        return mp.diff(U, t, 2) + mp.diff(logj, t) * mp.diff(U, t) - U(t)


def _mp_mass(eps):
    with mp.workdps(30):
        eps = mp.mpf(eps)
        p = 2 + 2 * eps
        te = (2 * (1 + eps) * eps) ** (-1 / (2 * eps))
        f = lambda s: -mp.expm1(te**p - s**p) / s ** (1 + eps)  # noqa: E731
        # past X the factor exp(t_eps^p - s^p) is below 1e-80, so the tail is X^-eps / eps
        X = te + 6
        return float(2 * mp.pi * (mp.quad(f, mp.linspace(te, X, 30)) + X ** (-eps) / eps))


@pytest.mark.parametrize("eps", EPS)
def test_verify_supersolution(eps):
    rep = verify_supersolution(build_cusp(eps), tmax=50.0, points=10_000)
    assert rep["passed"]
    assert rep["min_residual_sign"] >= 0
    assert rep["boundary_flux"] > 0
    assert rep["expanded_vs_factored"] < 1e-10


def test_boundary_flux_value():
    # U'(t_eps+) = p t_eps^(p-1) exp(t_eps^p) with p = 4, t_eps = 1/2
    rep = verify_supersolution(build_cusp(1.0))
    assert rep["boundary_flux"] == pytest.approx(4 * 0.5**3 * math.exp(0.5**4), rel=1e-12)


@given(st.floats(0.0, 1.0), st.sampled_from(EPS))
def test_residual_matches_high_precision(s, eps):
    F = build_cusp(eps)
    t = F.t_eps * (1.001 + s)
    sign, logmag = supersolution_residual(F, np.array([t]))
    ref = _mp_residual(eps, t)
    assert sign[0] == 1 and ref > 0
    assert logmag[0] == pytest.approx(float(mp.log(ref)), abs=1e-7)


@pytest.mark.parametrize("eps", EPS)
def test_l1_mass_against_mpmath(eps):
    F = build_cusp(eps)
    m = l1_mass(F, tol=1e-8)
    assert m["finite"] and m["below_bound"]
    assert m["mass"] == pytest.approx(_mp_mass(eps), rel=1e-9)
    assert m["uncertainty"] < 1e-8
    assert m["bound"] == pytest.approx(l1_mass_bound(eps))


def test_l1_mass_below_four_pi_at_eps_one():
    m = l1_mass(build_cusp(1.0))
    assert m["mass"] <= 4 * math.pi
    assert l1_mass_bound(1.0) == pytest.approx(4 * math.pi, rel=1e-14)


@pytest.mark.parametrize("center", [0.6, 1.0, 2.0])
def test_distributional_pairing_nonnegative(center):
    F = build_cusp(1.0)
    assert distributional_pairing(F, Bump(center, 0.4)) > 0


def test_disc_remark():
    rep = disc_remark_check()
    assert rep["operator_nonnegative"] and rep["u_nonpositive"]
    assert rep["operator_at_half"] == pytest.approx(1.5)
    assert rep["norms"]["L1"] == pytest.approx(2 * math.pi / 3)
    assert rep["norms"]["Linf"] == 1.0


def test_invalid_epsilon():
    with pytest.raises(ParameterError):
        build_cusp(0.0)
    with pytest.raises(ParameterError):
        build_cusp(-1.0)
