import math

import numpy as np
import pytest
from scipy.special import i0, iv

from mplab.completeness import (
    Verdict,
    VolumeVerdict,
    alpha_volume_test,
    hsu_test,
    radial_solution,
    sc_ode_test,
    volume_oracle,
)
from mplab.errors import ParameterError
from mplab.profiles import CuspProfile, Euclidean, Hyperbolic, ModelManifold, SuperExpProfile

COMPLETE = [Euclidean(), Hyperbolic(), CuspProfile(1.0), CuspProfile(0.5)]
INCOMPLETE = [SuperExpProfile(1.0), SuperExpProfile(0.5)]


def _ids(p):
    return f"{p.name}"


def test_radial_solution_is_bessel_i0():
    t = np.array([0.5, 1.0, 2.0, 5.0, 10.0])
    sol = radial_solution(ModelManifold(2, Euclidean()), 1.0, 10.0, t_eval=t)
    assert np.allclose(np.exp(sol.log_u), i0(t), rtol=1e-8)
    assert math.exp(sol.log_u[-1]) == pytest.approx(2815.716628, rel=1e-9)


def test_radial_solution_three_dimensions():
    # n = 3, lambda = 1: u = sinh(t) / t
    t = np.array([1.0, 3.0, 8.0])
    sol = radial_solution(ModelManifold(3, Euclidean()), 1.0, 8.0, t_eval=t)
    assert np.allclose(np.exp(sol.log_u), np.sinh(t) / t, rtol=1e-8)


def test_radial_solution_spectral_parameter():
    # n = 2, lambda = 4: u = I0(2 t)
    t = np.array([1.0, 2.0])
    sol = radial_solution(ModelManifold(2, Euclidean()), 4.0, 2.0, t_eval=t)
    assert np.allclose(np.exp(sol.log_u), iv(0, 2 * t), rtol=1e-8)


@pytest.mark.parametrize("p", COMPLETE, ids=_ids)
@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
def test_complete_profiles(p, lam):
    v = sc_ode_test(ModelManifold(2, p), lam=lam)
    assert v.verdict == Verdict.COMPLETE_EVIDENCE
    assert v.witness["log_u"] > math.log(1e8)


@pytest.mark.parametrize("p", INCOMPLETE, ids=_ids)
def test_incomplete_profiles(p):
    v = sc_ode_test(ModelManifold(2, p), lam=1.0)
    assert v.verdict == Verdict.INCOMPLETE_EVIDENCE
    assert v.witness["tail_increment"] < 1e-8


def test_threshold_controls_verdict():
    M = ModelManifold(2, Euclidean())
    assert sc_ode_test(M, T=10.0, growth_threshold=1e3).verdict == Verdict.COMPLETE_EVIDENCE
    assert sc_ode_test(M, T=10.0, growth_threshold=1e4).verdict == Verdict.INCONCLUSIVE


@pytest.mark.parametrize(
    "p, expected",
    [(Euclidean(), "SC"), (Hyperbolic(), "SC"), (CuspProfile(1.0), "SC"), (CuspProfile(0.5), "SC"),
     (SuperExpProfile(1.0), "NOT_SC"), (SuperExpProfile(0.5), "NOT_SC")],
    ids=lambda x: x if isinstance(x, str) else x.name,
)
def test_volume_oracle(p, expected):
    rep = volume_oracle(ModelManifold(2, p))
    assert rep["verdict"] == VolumeVerdict(expected).value


def test_hsu():
    assert hsu_test(ModelManifold(2, Euclidean()), 1.0, 1.0, 10.0)
    assert hsu_test(ModelManifold(2, Hyperbolic()), 1.0, 1.0, 10.0)
    assert not hsu_test(ModelManifold(2, CuspProfile(1.0)), 1.0, 1.0, 10.0)
    assert not hsu_test(ModelManifold(2, SuperExpProfile(1.0)), 1.0, 1.0, 10.0)
    with pytest.raises(ParameterError):
        hsu_test(ModelManifold(2, Euclidean()), 1.0, 2.0, 1.0)


def test_alpha_volume_synthetic():
    fast = alpha_volume_test(volume=lambda t: t**4)
    slow = alpha_volume_test(volume=lambda t: t**2)
    assert fast["passed"] and fast["exponent"] == pytest.approx(4.0)
    assert fast["partial_integral"] == pytest.approx(0.5 * (1 - 100.0**-2), rel=1e-3)
    assert not slow["passed"]


def test_alpha_volume_euclidean_bessel_weight():
    from mplab.drifted import solve_alpha

    M = ModelManifold(2, Euclidean())
    A = solve_alpha(M, 110.0)
    assert alpha_volume_test(M, A.alpha, T=100.0)["passed"]


def test_errors():
    M = ModelManifold(2, Euclidean())
    with pytest.raises(ParameterError):
        radial_solution(M, -1.0, 10.0)
    with pytest.raises(ParameterError):
        alpha_volume_test()
