import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from mplab.acceptance import conjugated_family, subharmonic_family_1d, subharmonic_family_2d
from mplab.drifted import solve_alpha
from mplab.errors import NotSubharmonicError, ParameterError, PreconditionError
from mplab.greenmean import (
    DiscreteDisc2D,
    ExactInterval1D,
    approximation_chain,
    ball_extent,
    certify_subharmonic,
    green,
    level_ball,
    mean_value,
    mollifier,
    monotone_approximation,
    monotone_approximation_closed,
    mr_properties_suite,
    radius_bound,
    representation_check,
    riesz_decompose,
    transfer_factor2,
)
from mplab.profiles import Euclidean, FunctionProfile, ModelManifold

ABS = FunctionProfile(lambda t: np.abs(t - 0.5), lambda t: np.sign(t - 0.5), lambda t: 0 * t, name="abs", kinks=(0.5,))
SQ = FunctionProfile(lambda t: t * t, lambda t: 2 * t, lambda t: 2 + 0 * t, name="t^2")
LIN = FunctionProfile(lambda t: 1.0 * t, lambda t: 1 + 0 * t, lambda t: 0 * t, name="t")
EXP2 = FunctionProfile(lambda t: np.exp(2 * t), lambda t: 2 * np.exp(2 * t), lambda t: 4 * np.exp(2 * t), name="e^2t")


@pytest.fixture(scope="module")
def unit():
    return ExactInterval1D(0.0, 1.0)


@pytest.fixture(scope="module")
def disc():
    return DiscreteDisc2D(ModelManifold(2, Euclidean()), 1.0, alpha_scale=1 / 16)


@pytest.fixture(scope="module")
def disc_unscaled():
    M = ModelManifold(2, Euclidean())
    return DiscreteDisc2D(M, 1.0, alpha=solve_alpha(M, 1.0), nr=48, ntheta=32)


# -- kernel --------------------------------------------------------------------------


def test_green_examples(unit):
    assert float(green(unit, 0.5, 0.5)) == pytest.approx(0.25, abs=1e-14)
    assert float(green(unit, 0.3, 0.7)) == pytest.approx(0.09, abs=1e-14)
    assert float(green(unit, 0.7, 0.3)) == pytest.approx(0.09, abs=1e-14)
    assert float(green(unit, 0.4, 1.0)) == 0.0


@given(st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_green_symmetric_weighted(x, y):
    S = ExactInterval1D(0.0, 1.0, EXP2)
    assert float(S.green(x, y)) == pytest.approx(float(S.green(y, x)), abs=1e-10)


def test_weighted_kernel_flux_jump():
    # w d_y G jumps by -1 across y = x
    S = ExactInterval1D(0.0, 1.0, EXP2)
    x, d = 0.37, 1e-6
    w = float(np.exp(2 * x))
    left = (float(S.green(x, x)) - float(S.green(x, x - d))) / d
    right = (float(S.green(x, x + d)) - float(S.green(x, x))) / d
    assert w * (right - left) == pytest.approx(-1.0, abs=1e-5)


def test_disc_green_symmetric(disc):
    a, b = int(disc.poles[3]), int(disc.poles[40])
    assert disc.green(a, b) == pytest.approx(disc.green(b, a), rel=1e-10)
    assert np.all(disc.column(a)[disc.n_int:] == 0.0)


def test_disc_green_identity(disc):
    rng = np.random.default_rng(1)
    phi = np.zeros(disc.n_all)
    phi[: disc.n_int] = rng.normal(size=disc.n_int)
    rhs = -disc.laplacian(phi) * disc.measure[: disc.n_int]
    for x in disc.poles[::7]:
        g = disc.column(int(x))[: disc.n_int]
        assert g @ rhs == pytest.approx(phi[int(x)], abs=1e-10 * (1 + np.abs(phi).max()))


def test_disc_centre_column_matches_radial_quadrature(disc_unscaled):
    S = disc_unscaled
    A = S.alpha.alpha
    g = S.column(0)
    sel = (S.radius > 0.2) & (S.radius < 0.8)
    for t in np.unique(S.radius[sel]):
        exact, _ = quad(lambda s: 1.0 / (2 * math.pi * s * math.exp(2 * float(A.log_eval(s)))), t, 1.0)
        node = np.flatnonzero(S.radius == t)
        assert np.allclose(g[node], exact, rtol=0.02)


def test_disc_stiffness_is_m_matrix(disc):
    K = disc.K.toarray()
    off = K - np.diag(np.diag(K))
    assert np.allclose(K, K.T)
    assert np.all(off <= 0)
    assert np.all(K.sum(axis=1) >= -1e-12)


# -- level-set balls --------------------------------------------------------------------------


def test_level_ball_examples(unit):
    b = level_ball(unit, 0.5, 8.0)
    assert (b.lo, b.hi) == pytest.approx((0.25, 0.75), abs=1e-12)
    assert not b.degenerate
    assert level_ball(unit, 0.5, 4.0).degenerate
    big = level_ball(unit, 0.5, 1e12)
    assert big.lo < 1e-11 and big.hi > 1 - 1e-11
    with pytest.raises(ParameterError):
        level_ball(unit, 0.5, 0.0)


@given(st.floats(0.05, 0.95), st.floats(4.5, 1e4), st.floats(0.05, 0.99))
def test_level_ball_monotone_in_r(x, r, f):
    S = ExactInterval1D(0.0, 1.0, EXP2)
    assert S.level_ball(x, r).contains(S.level_ball(x, f * r))


@given(st.floats(0.02, 0.98))
def test_flux_weights_sum_to_one(x):
    S = ExactInterval1D(0.0, 1.0, EXP2)
    wl, wr = S.flux_weights(x)
    assert float(wl + wr) == pytest.approx(1.0, abs=1e-10)


def test_disc_flux_weights_sum_to_one(disc):
    for x in disc.poles[::5]:
        r = 4.0 / float(disc.peak(x)[0])
        b = disc.level_ball(int(x), r)
        assert b.weights.sum() == pytest.approx(1.0, abs=1e-10)
        assert b.contains(disc.level_ball(int(x), r / 2))


# -- mean values and representation ---------------------------------------------------------------


def test_mean_value_examples(unit):
    assert float(mean_value(unit, lambda t: np.ones_like(t), 0.5, 8.0)) == pytest.approx(1.0, abs=1e-12)
    assert float(mean_value(unit, LIN, 0.5, 8.0)) == pytest.approx(0.5, abs=1e-12)
    assert float(mean_value(unit, ABS, 0.5, 8.0)) == pytest.approx(0.25, abs=1e-12)
    # degenerate ball returns v(x)
    assert float(mean_value(unit, ABS, 0.3, 2.0)) == pytest.approx(0.2, abs=1e-15)


@given(st.floats(0.02, 0.98), st.floats(1.0, 1e5))
def test_weighted_mean_reproduces_harmonic(x, r):
    S = ExactInterval1D(0.0, 1.0, EXP2)
    # affine functions of h(t) = (1 - e^{-2t}) / 2 are harmonic for this weight
    h = lambda t: 3.0 - 2.0 * (1 - np.exp(-2 * np.asarray(t))) / 2  # noqa: E731
    assert float(S.mean_value(h, x, r)) == pytest.approx(float(h(x)), abs=1e-10)
    assert float(S.mean_value(lambda t: np.ones_like(t), x, r)) == pytest.approx(1.0, abs=1e-10)


def test_representation_examples(unit):
    assert representation_check(unit, SQ, 0.5, 8.0) <= 1e-12
    assert representation_check(unit, LIN, 0.3, 20.0) <= 1e-12
    S = ExactInterval1D(0.0, 1.0, EXP2)
    for x, r in [(0.5, 20.0), (0.3, 50.0), (0.8, 1e3)]:
        assert not S.level_ball(x, r).degenerate
        assert representation_check(S, SQ, x, r) <= 1e-8


C2_FAMILY = [
    SQ,
    EXP2,
    LIN,
    FunctionProfile(lambda t: t**3, lambda t: 3 * t * t, lambda t: 6 * t, name="t^3"),
    FunctionProfile(np.cos, lambda t: -np.sin(t), lambda t: -np.cos(t), name="cos"),
]


@pytest.mark.parametrize("w", [1.0, EXP2], ids=["flat", "e^2t"])
def test_representation_c2_family(w):
    S = ExactInterval1D(0.0, 1.0, w)
    rng = np.random.default_rng(7)
    for f in C2_FAMILY:
        for x in rng.uniform(0.1, 0.9, size=4):
            r = 3.0 / float(S.peak(x))
            assert representation_check(S, f, x, r) <= 1e-8, f.name


def test_representation_oracle_weighted():
    # independent: adaptive quadrature of both terms with the kernel built from quad
    S = ExactInterval1D(0.0, 1.0, EXP2)
    x, r = 0.4, 30.0
    h = lambda t: (1 - math.exp(-2 * t)) / 2  # noqa: E731
    H = h(1.0)
    G = lambda y: h(min(x, y)) * (H - h(max(x, y))) / H  # noqa: E731
    b = S.level_ball(x, r)
    corr = sum(quad(lambda y: (G(y) - 1 / r) * (2 + 4 * y) * math.exp(2 * y), a, c, epsabs=1e-13)[0]
               for a, c in [(b.lo, x), (x, b.hi)])
    m = float(S.mean_value(SQ, x, r))
    assert abs(x * x - m + corr) <= 1e-8


def test_disc_representation(disc):
    for v in subharmonic_family_2d(disc).values():
        for x in disc.poles[::9]:
            r = 3.0 / float(disc.peak(x)[0])
            assert representation_check(disc, v, int(x), r) <= 1e-9 * (1 + np.abs(v).max())


# -- Riesz decomposition ---------------------------------------------------------------------------


def test_riesz_abs(unit):
    d = riesz_decompose(unit, ABS)
    assert len(d.measure.atoms) == 1
    loc, mass = d.measure.atoms[0]
    assert loc == 0.5 and mass == pytest.approx(2.0, abs=1e-10)
    assert d.harmonic_coefficients == pytest.approx((0.5, 0.0), abs=1e-8)
    assert d.reassembly_error <= 1e-8 and d.affine_residual <= 1e-8


def test_riesz_convex_and_harmonic(unit):
    d = riesz_decompose(unit, SQ)
    assert d.measure.atoms == ()
    assert np.allclose(d.measure.density(np.linspace(0.1, 0.9, 5)), 2.0)
    assert d.affine_residual <= 1e-8
    d = riesz_decompose(unit, LIN)
    assert d.measure.atoms == ()
    assert np.allclose(d.potential, 0.0, atol=1e-14)
    assert d.harmonic_coefficients == pytest.approx((0.0, 1.0), abs=1e-10)


def test_riesz_weighted_family():
    S = ExactInterval1D(0.0, 1.0, EXP2)
    for f in [SQ, EXP2, subharmonic_family_1d()[3]]:
        assert riesz_decompose(S, f).reassembly_error <= 1e-8


def test_riesz_rejects_superharmonic(unit):
    neg = FunctionProfile(lambda t: -np.abs(t - 0.5), lambda t: -np.sign(t - 0.5), lambda t: 0 * t, kinks=(0.5,))
    with pytest.raises(NotSubharmonicError):
        riesz_decompose(unit, neg)
    with pytest.raises(NotSubharmonicError):
        riesz_decompose(unit, FunctionProfile(lambda t: -t * t, lambda t: -2 * t, lambda t: -2 + 0 * t))
    assert not certify_subharmonic(unit, neg)


# -- mean-value properties -----------------------------------------------------------------------


def test_mr_properties_interval(unit):
    for f in subharmonic_family_1d():
        rep = mr_properties_suite(unit, f, n_pairs=40, seed=3)
        assert rep["passed"], (f.name, rep)


def test_mr_properties_disc(disc):
    for name, v in subharmonic_family_2d(disc).items():
        assert certify_subharmonic(disc, v), name
        rep = mr_properties_suite(disc, v, n_pairs=30, seed=3)
        assert rep["passed"], (name, rep)


def test_mr_negative_control(disc):
    v = disc.column(int(disc.poles[10]))
    assert not certify_subharmonic(disc, v)
    rep = mr_properties_suite(disc, v, n_pairs=40, seed=0)
    assert rep["violations"]["i"] > 0 and not rep["passed"]


# -- monotone approximation -------------------------------------------------------------------------


def _vk_oracle(c, k):
    # m_s(|t - 0.5|)(0.5) = 0.5 - 2c/s once s > 4c
    f = lambda tau: mollifier(tau) * (0.5 - 2 * c * k / tau)  # noqa: E731
    a = 4 * c * k
    return quad(f, a, 1.0, epsabs=1e-14)[0] if a < 1 else 0.0


def test_vk_closed_form_interval():
    c = 1 / 256
    S = ExactInterval1D(0.0, 1.0, c)
    vals = []
    for k in (1, 2, 4, 8, 16, 32, 64):
        vk = float(monotone_approximation(S, ABS, k, points=[0.5]).values[0])
        assert vk == pytest.approx(_vk_oracle(c, k), abs=1e-12)
        vals.append(vk)
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert vals[-1] == 0.0


def test_vk_constant_and_harmonic():
    S = ExactInterval1D(0.0, 1.0, 1 / 64)
    xs = np.linspace(0.1, 0.9, 9)
    const = FunctionProfile(lambda t: 0 * t + 2.5, lambda t: 0 * t, lambda t: 0 * t)
    assert np.allclose(monotone_approximation(S, const, 3, xs).values, 2.5, atol=1e-13)
    assert np.allclose(monotone_approximation(S, LIN, 3, xs).values, xs, atol=1e-12)


def test_vk_disc_matches_closed_form(disc):
    for v in subharmonic_family_2d(disc).values():
        for k in (1, 4, 16):
            q = monotone_approximation(disc, v, k).values
            closed = monotone_approximation_closed(disc, v, k)
            assert np.allclose(q, closed, rtol=0, atol=1e-10 * (1 + np.abs(v).max()))


def test_vk_requires_subharmonic(unit, disc):
    neg = FunctionProfile(lambda t: -t * t, lambda t: -2 * t, lambda t: -2 + 0 * t)
    with pytest.raises(PreconditionError):
        monotone_approximation(unit, neg, 2)
    with pytest.raises(PreconditionError):
        monotone_approximation(disc, disc.column(0), 2)
    with pytest.raises(ParameterError):
        monotone_approximation(unit, SQ, 0.5)


def test_approximation_chain_interval():
    S = ExactInterval1D(0.0, 1.0, 1 / 256)
    ch = approximation_chain(S, ABS)
    assert ch["passed"]
    assert ch["l1_errors"][-1] < ch["l1_errors"][0]


def test_approximation_chain_disc():
    S = DiscreteDisc2D(ModelManifold(2, Euclidean()), 2.0, alpha_scale=1 / 16)
    alpha = S.alpha_values()
    for u in conjugated_family(S).values():
        assert approximation_chain(S, u / alpha)["passed"]


# -- radii and transfer -----------------------------------------------------------------------------


def test_radius_bound(unit):
    # B_{1/k} = {G > k}; on w = 1 the peak 0.25 is below every k >= 1
    assert radius_bound(unit, 0.5, 8) == 0.0
    assert ball_extent(unit, 0.5, 8.0) == pytest.approx(0.25, abs=1e-12)
    S = ExactInterval1D(0.0, 1.0, 1 / 64)
    assert radius_bound(S, 0.5, 8) == pytest.approx(0.25, abs=1e-12)
    assert radius_bound(unit, 0.5, 100) == 0.0
    with pytest.raises(ParameterError):
        radius_bound(unit, 0.5, 0.5)


def test_radius_bound_monotone():
    S = ExactInterval1D(0.0, 1.0, 1 / 256)
    rs = [radius_bound(S, 0.3, k) for k in (1, 2, 4, 8, 16, 32, 64, 128)]
    assert all(b <= a for a, b in zip(rs, rs[1:]))
    assert rs[-1] < rs[0] / 10


def test_radius_bound_disc(disc):
    x = int(disc.poles[0])
    rs = [radius_bound(disc, x, k) for k in (1, 4, 16, 64, 256)]
    assert all(b <= a + 1e-15 for a, b in zip(rs, rs[1:]))
    assert rs[-1] <= disc.h + 1e-12


def test_transfer_factor2():
    S = DiscreteDisc2D(ModelManifold(2, Euclidean()), 2.0, alpha_scale=1 / 16)
    for u in conjugated_family(S).values():
        rep = transfer_factor2(S, u)
        assert rep["status"] == "PASS" and rep["k0"] is not None
        for row in rep["rows"]:
            if row["k"] >= rep["k0"]:
                assert row["sup_u_k"] <= 2 * rep["esup_u"] + 1e-9
    with pytest.raises(PreconditionError):
        transfer_factor2(S, -np.ones(S.n_all))
