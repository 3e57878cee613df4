"""Operations shared by both Green spaces: mean values, representation formula,
Riesz decomposition, the property suite, monotone approximation and the
factor-2 transfer of the sup bound back to L-subsolutions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from mplab.errors import NotSubharmonicError, ParameterError, PreconditionError
from mplab.greenmean.base import (
    GL_W,
    GL_X,
    GridFunction,
    LevelSetBall,
    RieszMeasure,
    mollifier,
    mollifier_cdf,
    mollifier_first_moment_inv,
)
from mplab.greenmean.disc import DiscreteDisc2D
from mplab.greenmean.interval import ExactInterval1D, _values

__all__ = [
    "green",
    "level_ball",
    "mean_value",
    "representation_check",
    "RieszDecomposition",
    "riesz_decompose",
    "certify_subharmonic",
    "mr_properties_suite",
    "monotone_approximation",
    "monotone_approximation_closed",
    "approximation_chain",
    "ball_extent",
    "radius_bound",
    "transfer_factor2",
]

_GL3_X, _GL3_W = np.polynomial.legendre.leggauss(3)


def green(S, x, y):
    return S.green(x, y)


def level_ball(S, x, r) -> LevelSetBall:
    return S.level_ball(x, r)


def mean_value(S, v, x, r):
    return S.mean_value(v, x, r)


# -- representation formula -------------------------------------------------------


def _composite_gl(lo, hi, sub=8):
    """Nodes and weights of composite 16-point Gauss-Legendre on [lo, hi] (arrays broadcast)."""
    lo, hi = np.broadcast_arrays(np.asarray(lo, float), np.asarray(hi, float))
    edges = lo[..., None] + (hi - lo)[..., None] * np.linspace(0.0, 1.0, sub + 1)
    a, b = edges[..., :-1], edges[..., 1:]
    mid, half = (a + b) / 2, (b - a) / 2
    nodes = mid[..., None] + half[..., None] * GL_X
    weights = half[..., None] * GL_W
    shape = lo.shape + (sub * GL_X.size,)
    return nodes.reshape(shape), weights.reshape(shape)


def representation_check(S, v, x, r) -> float:
    """|v(x) - m_r(v)(x) + int_{B_r(x)} (G(x, .) - 1/r) Delta_alpha v dmu|.

    On the interval ``v`` is a twice-differentiable profile; the integral is
    split at x and at the kinks of v.  On the disc ``v`` holds nodal values and
    the integral is the exact discrete sum over the super-level nodes.
    """
    if isinstance(S, DiscreteDisc2D):
        vals = v.values if isinstance(v, GridFunction) else np.asarray(v, dtype=float)
        x = int(x)
        ball = S.level_ball(x, r)
        if ball.degenerate:
            return 0.0
        g = S.column(x)
        Kv = S.stiffness_apply(vals)
        nodes = ball.nodes
        corr = float((g[nodes] - 1.0 / r) @ Kv[nodes])
        return abs(vals[x] - S.mean_value(vals, x, r) - corr)
    lo, hi, deg = S.ball_ends(float(x), float(r))
    if deg:
        return 0.0
    cuts = sorted({float(lo), float(x), float(hi), *[k for k in getattr(v, "kinks", ()) if lo < k < hi]})
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b <= a:
            continue
        s, w = _composite_gl(a, b)
        f = (S.green(float(x), s) - 1.0 / r) * S.laplacian(v, s) * S.weight(s)
        total += float(w @ f)
    m = float(S.mean_value(v, float(x), float(r)))
    return abs(float(_values(v, np.array(float(x)))) - m + total)


# -- Riesz decomposition (interval) ---------------------------------------------------


@dataclass(frozen=True)
class RieszDecomposition:
    """v = h - G * nu with h affine in the coordinate h(t) = int ds / w."""

    harmonic_coefficients: tuple
    measure: RieszMeasure
    affine_residual: float
    reassembly_error: float
    grid: np.ndarray
    potential: np.ndarray

    def harmonic(self, S: ExactInterval1D, t):
        c0, c1 = self.harmonic_coefficients
        return c0 + c1 * S._h(np.asarray(t, dtype=float))


def _one_sided_d1(v, k):
    d = 1e-12 * max(1.0, abs(k))
    return float(v.d1(np.array(k - d))), float(v.d1(np.array(k + d)))


def riesz_decompose(S: ExactInterval1D, v, samples: int = 401, tol: float = 1e-10) -> RieszDecomposition:
    """Riesz measure of a piecewise-C^2 profile v (kinks listed in ``v.kinks``).

    Density: (1/w)(w v')' on the smooth pieces; atoms: jumps of w v' at kinks.
    Raises NotSubharmonicError on negative density or a downward kink.
    """
    if S.natural_left:
        raise ParameterError("Riesz decomposition is implemented for two-sided intervals")
    kinks = sorted(float(k) for k in getattr(v, "kinks", ()) if S.a < k < S.b)
    grid = np.linspace(S.a, S.b, samples)[1:-1]
    grid = grid[~np.isin(grid, kinks)]
    dens = S.laplacian(v, grid)
    scale = float(np.max(np.abs(v.d2(grid))) + np.max(np.abs(S.w.dlog(grid) * v.d1(grid))) + 1.0)
    if np.min(dens) < -tol * scale:
        raise NotSubharmonicError(f"negative Riesz density {np.min(dens):.3e}")
    atoms = []
    for k in kinks:
        left, right = _one_sided_d1(v, k)
        mass = float(S.weight(np.array(k))) * (right - left)
        if mass < -tol * max(1.0, abs(left) + abs(right)):
            raise NotSubharmonicError(f"downward kink at {k} (mass {mass:.3e})")
        if abs(mass) > 0:
            atoms.append((k, mass))
    measure = RieszMeasure(density=lambda t: S.laplacian(v, t), atoms=tuple(atoms))
    # G * nu on the grid: composite quadrature split at t and at the kinks
    pts = np.array([S.a, *kinks, S.b])
    pot = np.zeros_like(grid)
    for i, t in enumerate(grid):
        cuts = np.unique(np.append(pts, t))
        s, w = _composite_gl(cuts[:-1], cuts[1:])
        s, w = s.ravel(), w.ravel()
        pot[i] = w @ (S.green(t, s) * S.laplacian(v, s) * S.weight(s))
        for k, m in atoms:
            pot[i] += m * float(S.green(t, k))
    vals = _values(v, grid)
    hp = vals + pot
    X = np.stack([np.ones_like(grid), S._h(grid)], axis=1)
    coef, *_ = np.linalg.lstsq(X, hp, rcond=None)
    fit = X @ coef
    affine = float(np.max(np.abs(hp - fit)))
    reassembly = float(np.max(np.abs(vals - (fit - pot))))
    return RieszDecomposition((float(coef[0]), float(coef[1])), measure, affine, reassembly, grid, pot)


def certify_subharmonic(S, v, tol: float = 1e-10) -> bool:
    """True when v is Delta_alpha-subharmonic: Riesz measure >= 0 (interval) or K v <= 0 (disc)."""
    if isinstance(S, DiscreteDisc2D):
        vals = v.values if isinstance(v, GridFunction) else np.asarray(v, dtype=float)
        Kv = S.stiffness_apply(vals)
        scale = np.bincount(S.edge_p, weights=S.edge_c, minlength=S.n_all)[: S.n_int]
        scale = scale * (np.max(np.abs(vals)) + 1e-300)
        return bool(np.all(Kv <= tol * scale))
    try:
        riesz_decompose(S, v, tol=tol)
    except NotSubharmonicError:
        return False
    return True


# -- property suite ----------------------------------------------------------------------


def _random_pairs(S, n, rng):
    if isinstance(S, DiscreteDisc2D):
        xs = rng.choice(S.poles, size=n)
        peaks = S.peak(xs)
    else:
        span = S.b - S.a
        xs = S.a + span * rng.uniform(0.02, 0.98, size=n)
        peaks = S.peak(xs)
    r_deg = 1.0 / peaks
    rs = r_deg * np.exp(rng.uniform(math.log(0.5), math.log(200.0), size=n))
    return xs, rs, r_deg


def _mv(S, v, x, r):
    if isinstance(S, DiscreteDisc2D):
        return S.mean_value(v, int(x), float(r))
    return float(S.mean_value(v, float(x), float(r)))


def _v_at(S, v, x):
    if isinstance(S, DiscreteDisc2D):
        vals = v.values if isinstance(v, GridFunction) else np.asarray(v, dtype=float)
        return float(vals[int(x)])
    return float(_values(v, np.array(float(x))))


def _mean_of_mean(S, v, x, r, s):
    """m_s applied to z -> m_r(v)(z) at x, and the value m_r(v)(x)."""
    mx = _mv(S, v, x, r)
    if isinstance(S, DiscreteDisc2D):
        g = S.column(int(x))
        if g[int(x)] <= 1.0 / s:
            return mx, mx
        ball = S.level_ball(int(x), s)
        vals = v.values if isinstance(v, GridFunction) else np.asarray(v, dtype=float)
        M = np.zeros(S.n_all)
        M[S.n_int:] = vals[S.n_int:]
        for z in np.unique(ball.edges):
            if z < S.n_int:
                M[z] = S.mean_value(vals, int(z), r)
        return mx, S.mean_value(M, int(x), s)
    lo, hi, deg = S.ball_ends(float(x), float(s))
    if deg:
        return mx, mx
    wl, wr = S.flux_weights(float(x))
    ends = np.array([float(lo), float(hi)])
    Mends = S.mean_value(v, ends, np.full(2, float(r)))
    if S.natural_left:
        return mx, float(Mends[1])
    return mx, float(wl * Mends[0] + wr * Mends[1])


def mr_properties_suite(S, v, n_pairs: int = 200, seed: int = 0, tol: float | None = None) -> dict:
    """Check the four mean-value properties of a certified subharmonic v at random (x, r).

    (i)   v(x) <= m_r(v)(x)
    (ii)  m_s(v)(x) <= m_r(v)(x) for s < r (ladder r * [1/2, 3/4, 1, 3/2, 2])
    (iii) m_r(v)(x) -> v(x) as r decreases to the degeneracy threshold 1/G(x, x)
    (iv)  m_r(v) again satisfies (i), at the same centre with radii r/2, r, 2r
    """
    disc = isinstance(S, DiscreteDisc2D)
    if tol is None:
        tol = 1e-7 if disc else 1e-9
    rng = np.random.default_rng(seed)
    xs, rs, r_deg = _random_pairs(S, n_pairs, rng)
    viol = {"i": 0, "ii": 0, "iii": 0, "iv": 0}
    worst = {"i": 0.0, "ii": 0.0, "iii": 0.0, "iv": 0.0}
    ladder = np.array([0.5, 0.75, 1.0, 1.5, 2.0])
    eta = 10.0 ** -np.arange(1, 7)
    for x, r, rd in zip(xs, rs, r_deg):
        vx = _v_at(S, v, x)
        m = _mv(S, v, x, r)
        d = vx - m
        worst["i"] = max(worst["i"], d)
        viol["i"] += d > tol
        ms = np.array([_mv(S, v, x, r * f) for f in ladder])
        d = float(np.max(ms[:-1] - ms[1:]))
        worst["ii"] = max(worst["ii"], d)
        viol["ii"] += d > tol
        gaps = np.array([abs(_mv(S, v, x, rd * (1 + e)) - vx) for e in eta])
        scale = 1.0 + abs(vx)
        d = float(max(np.max(gaps[1:] - gaps[:-1]), gaps[-1] - 1e-4 * scale))
        worst["iii"] = max(worst["iii"], d)
        viol["iii"] += d > tol
        for f in (0.5, 1.0, 2.0):
            mx, mm = _mean_of_mean(S, v, x, r, r * f)
            d = mx - mm
            worst["iv"] = max(worst["iv"], d)
            viol["iv"] += d > tol
    return {
        "pairs": int(n_pairs),
        "tolerance": tol,
        "violations": {k: int(n) for k, n in viol.items()},
        "worst": {k: float(w) for k, w in worst.items()},
        "passed": all(n == 0 for n in viol.values()),
    }


# -- monotone approximation ---------------------------------------------------------------


def _vk_interval(S: ExactInterval1D, v, k: float, x):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    vx = _values(v, x)
    tau_deg = np.minimum(k / S.peak(x), 1.0)
    kinks = [float(q) for q in getattr(v, "kinks", ()) if S.a < q < S.b]
    bps = [tau_deg]
    for q in kinks:
        g = S.green(x, np.full_like(x, q))
        with np.errstate(divide="ignore"):
            bps.append(np.clip(np.where(g > 0, k / g, 1.0), tau_deg, 1.0))
    bps.append(np.ones_like(x))
    B = np.sort(np.stack(bps, axis=1), axis=1)
    total = vx * mollifier_cdf(tau_deg)
    for j in range(B.shape[1] - 1):
        lo, hi = B[:, j], B[:, j + 1]
        tau, w = _composite_gl(lo, hi, sub=4)
        xx = np.broadcast_to(x[:, None], tau.shape)
        with np.errstate(divide="ignore"):
            s = tau / k
        m = S.mean_value(v, xx.ravel(), np.maximum(s, 1e-300).ravel()).reshape(tau.shape)
        total = total + np.sum(w * mollifier(tau) * m, axis=1)
    return total


def _vk_disc(S: DiscreteDisc2D, vals, k: float, xs):
    mass = np.maximum(-S.stiffness_apply(vals), 0.0)
    out = np.empty(len(xs))
    for i, x in enumerate(xs):
        g = S.column(int(x))[: S.n_int]
        sel = (mass > 0) & (g > k)
        gs, ws = g[sel], mass[sel]
        order = np.argsort(-gs)
        gs, ws = gs[order], ws[order]
        # on each piece between consecutive breakpoints k/G_p, m_s = v_x + P - Q k / tau
        bp = np.concatenate([k / gs, [1.0]])
        P = np.concatenate([[0.0], np.cumsum(ws * gs)])
        Q = np.concatenate([[0.0], np.cumsum(ws)])
        lo, hi = bp[:-1], bp[1:]
        mid, half = (lo + hi) / 2, (hi - lo) / 2
        tau = mid[:, None] + half[:, None] * _GL3_X
        wts = half[:, None] * _GL3_W
        idx = np.arange(1, gs.size + 1)[:, None]
        integrand = mollifier(tau) * (P[idx] - Q[idx] * k / tau)
        out[i] = vals[int(x)] + float(np.sum(wts * integrand))
    return out


def _certified(S, v):
    if not certify_subharmonic(S, v):
        raise PreconditionError("input is not certified subharmonic")


def monotone_approximation(S, v, k: float, points=None, certify: bool = True) -> GridFunction:
    """v_k(x) = k int_0^{1/k} phi(k s) m_s(v)(x) ds on the evaluation points.

    Interval: ``points`` are coordinates (default 2001-point grid); disc: node
    indices (default the pole subset).  Degenerate balls contribute v(x).
    """
    if not k >= 1:
        raise ParameterError("k must be >= 1")
    if certify:
        _certified(S, v)
    if isinstance(S, DiscreteDisc2D):
        vals = v.values if isinstance(v, GridFunction) else np.asarray(v, dtype=float)
        xs = S.poles if points is None else np.asarray(points)
        vk = _vk_disc(S, vals, float(k), xs)
        pts = np.stack([S.radius[xs], S.theta[xs]], axis=1)
        return GridFunction(pts, vk, S.measure[xs])
    xs = S.interior_grid() if points is None else np.asarray(points, dtype=float)
    vk = _vk_interval(S, v, float(k), xs)
    w = np.gradient(xs) * S.weight(xs) if xs.size > 1 else None
    return GridFunction(xs, vk, w)


def monotone_approximation_closed(S: DiscreteDisc2D, v, k: float, points=None) -> np.ndarray:
    """Independent closed form on the disc: v_k = v + sum_p mass_p int phi(tau)(G_p - k/tau)_+ dtau."""
    vals = v.values if isinstance(v, GridFunction) else np.asarray(v, dtype=float)
    xs = S.poles if points is None else np.asarray(points)
    mass = -S.stiffness_apply(vals)
    out = np.empty(len(xs))
    for i, x in enumerate(xs):
        g = S.column(int(x))[: S.n_int]
        sel = g > k
        t0 = k / g[sel]
        contrib = g[sel] * (1 - mollifier_cdf(t0)) - k * (2.5 - mollifier_first_moment_inv(t0))
        out[i] = vals[int(x)] + float(mass[sel] @ contrib)
    return out


def approximation_chain(S, v, ks=(1, 2, 4, 8, 16), points=None, tol: float | None = None) -> dict:
    """Ordering v <= v_{k'} <= v_k (k < k'), strictly decreasing L^1 error, and sup v_k <= esup v."""
    disc = isinstance(S, DiscreteDisc2D)
    if tol is None:
        tol = 1e-9
    _certified(S, v)
    approx = [monotone_approximation(S, v, k, points, certify=False) for k in ks]
    pts = approx[0].points
    if disc:
        vals = v.values if isinstance(v, GridFunction) else np.asarray(v, dtype=float)
        xs = S.poles if points is None else np.asarray(points)
        base = vals[xs]
        esup = float(np.max(vals))
    else:
        base = _values(v, pts)
        esup = float(np.max(_values(v, np.linspace(S.a, S.b, 20001)[1:-1])))
    w = approx[0].weights
    l1 = [float(w @ np.abs(a.values - base)) for a in approx]
    order_ok = all(np.all(a.values >= base - tol) for a in approx)
    order_ok &= all(np.all(approx[i + 1].values <= approx[i].values + tol) for i in range(len(ks) - 1))
    strict = all(l1[i + 1] < l1[i] for i in range(len(ks) - 1))
    sup_ok = all(float(np.max(a.values)) <= esup + tol for a in approx)
    return {
        "ks": list(ks),
        "l1_errors": l1,
        "ordering": bool(order_ok),
        "l1_strictly_decreasing": bool(strict),
        "sup_bound": bool(sup_ok),
        "esup": esup,
        "sup_vk": [float(np.max(a.values)) for a in approx],
        "passed": bool(order_ok and strict and sup_ok),
        "values": approx,
    }


# -- radii --------------------------------------------------------------------------------------


def ball_extent(S, x, r) -> float:
    """sup of d(x, z) over the level-set ball B_r(x) (0 when degenerate)."""
    ball = S.level_ball(x, r)
    if ball.degenerate:
        return 0.0
    if isinstance(S, DiscreteDisc2D):
        return float(np.max(S.distance(np.full(ball.nodes.size, int(x)), ball.nodes)))
    return float(max(ball.center - ball.lo, ball.hi - ball.center))


def radius_bound(S, x, k) -> float:
    """r_k(x) = sup { d(x, z) : z in B_{1/k}(x) }."""
    if not k >= 1:
        raise ParameterError("k must be >= 1")
    return ball_extent(S, x, 1.0 / k)


# -- factor-2 transfer ------------------------------------------------------------------------------


def transfer_factor2(S: DiscreteDisc2D, u, ks=None, centers=None, tol: float = 1e-9) -> dict:
    """Transfer sup v_k <= esup v back to u = alpha v with at most a factor 2.

    k0 is the first ladder value with r_k(x) <= inf alpha / sup |alpha'| at
    every centre; for k >= k0 the report checks sup u_k <= 2 esup u.
    """
    uvals = u.values if isinstance(u, GridFunction) else np.asarray(u, dtype=float)
    esup = float(np.max(uvals))
    if esup < 0:
        raise PreconditionError("the factor-2 bound needs esup u >= 0")
    alpha = S.alpha_values()
    vals = uvals / alpha
    if not certify_subharmonic(S, vals):
        raise PreconditionError("u / alpha is not certified Delta_alpha-subharmonic")
    if ks is None:
        ks = [2**j for j in range(0, 11)]
    xs = S.poles if centers is None else np.asarray(centers)
    A = S.alpha.alpha
    # alpha is radially increasing: inf at the pole, sup |alpha'| at the rim
    ratio = math.exp(float(A.log_eval(1e-12 * S.R)) - float(A.log_eval(S.R))) / float(A.dlog(S.R))
    rows = []
    k0 = None
    for k in ks:
        rk = max(radius_bound(S, int(x), k) for x in xs)
        vk = _vk_disc(S, vals, float(k), xs)
        uk = alpha[xs] * vk
        if k0 is None and rk <= ratio:
            k0 = k
        rows.append({"k": int(k), "r_k": rk, "sup_u_k": float(np.max(uk))})
    if k0 is None:
        return {"status": "INCONCLUSIVE", "k0": None, "ratio": ratio, "esup_u": esup, "rows": rows, "passed": False}
    ok = all(row["sup_u_k"] <= 2 * esup + tol for row in rows if row["k"] >= k0)
    return {"status": "PASS" if ok else "FAIL", "k0": int(k0), "ratio": ratio, "esup_u": esup, "rows": rows, "passed": ok}
