"""The positive L-harmonic function alpha and the drifted Laplacian it induces.

alpha solves alpha'' + drift alpha' = c alpha radially with alpha(0) = scale,
alpha'(0) = 0.  It is tabulated as log alpha with its first two derivatives at
the nodes and interpolated by piecewise quintic Hermite polynomials, so that
derivative access is analytic (the interpolant's own derivatives) and residual
checks measure something real.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from mplab._hermite import QuinticTable
from mplab.completeness import T0, _series_start
from mplab.errors import DomainError, InvariantViolation, ParameterError
from mplab.profiles import FunctionProfile, LogProfile, ModelManifold, RadialProfile

__all__ = [
    "AlphaProfile",
    "AlphaSolution",
    "solve_alpha",
    "drifted_apply",
    "conjugation_check",
    "conjugated_apply",
    "ode_residual",
]


class AlphaProfile(LogProfile):
    """log alpha backed by a quintic table of (L, L', L'')."""

    name = "alpha"

    def __init__(self, table: QuinticTable, horizon: float, log_scale: float = 0.0):
        self.table = table
        self.horizon = float(horizon)
        self.log_scale = float(log_scale)
        self.domain = (0.0, float(table.x[-1]))

    def _L(self, t):
        return self.table(t, 0) + self.log_scale

    def _dL(self, t):
        return self.table(t, 1)

    def _d2L(self, t):
        return self.table(t, 2)

    def jet(self, t):
        """(log alpha, alpha'/alpha, (alpha'/alpha)') at t."""
        t = self._arg(t)
        L, q, dq = self.table.jet(t)
        return L + self.log_scale, q, dq


@dataclass(frozen=True)
class AlphaSolution:
    alpha: AlphaProfile
    manifold: ModelManifold
    horizon: float
    c: float = 1.0

    def rescaled(self, log_scale: float) -> "AlphaSolution":
        """Same solution multiplied by exp(log_scale); alpha is only fixed up to a positive constant."""
        a = AlphaProfile(self.alpha.table, self.horizon, self.alpha.log_scale + log_scale)
        return AlphaSolution(a, self.manifold, self.horizon, self.c)


def _integrate_nodes(M: ModelManifold, c: float, end: float, rtol=1e-12, max_step=0.01, min_gap=1e-3):
    """Accepted Radau steps of the Riccati system, restarted at the warping's kinks.

    Step endpoints carry the full local accuracy (dense output would not), and
    restarting at the blend-window ends keeps the jumps in higher derivatives of
    the drift on cell boundaries of the interpolation table.
    """
    drift = M.drift_scalar

    def rhs(t, y):
        q = y[1]
        return [q, c - q * q - drift(t) * q]

    def jac(t, y):
        return [[0.0, 1.0], [0.0, -2.0 * y[1] - drift(t)]]

    w = M.warping
    kinks = sorted(p for p in (getattr(w, "a", None), getattr(w, "b", None), *w.kinks) if p is not None and T0 < p < end)
    edges = [T0, *kinks, end]
    y = _series_start(M.dim, c)
    ts, ys = [np.array([T0])], [y[:, None]]
    for lo, hi in zip(edges[:-1], edges[1:]):
        sol = solve_ivp(
            rhs, (lo, hi), y, method="Radau", jac=jac, rtol=rtol, atol=[1e-14, 1e-300], max_step=max_step
        )
        if sol.status != 0:
            raise InvariantViolation(f"alpha integration failed: {sol.message}")
        keep = _thin(sol.t, min_gap)
        ts.append(sol.t[keep][1:])
        ys.append(sol.y[:, keep][:, 1:])
        y = sol.y[:, -1]
    return np.concatenate(ts), np.concatenate(ys, axis=1)


def _thin(t, min_gap):
    """Indices of a subsequence of t with gaps >= min_gap, always keeping both ends.

    The solver takes tiny steps right after a restart; as interpolation cells,
    those would amplify roundoff in log alpha by 1/h^2 in the second derivative.
    """
    keep = [0]
    for i in range(1, t.size - 1):
        if t[i] - t[keep[-1]] >= min_gap and t[-1] - t[i] >= min_gap:
            keep.append(i)
    keep.append(t.size - 1)
    return np.array(keep)


def solve_alpha(M: ModelManifold, horizon: float, c: float = 1.0, scale: float = 1.0) -> AlphaSolution:
    """Radial positive solution of (Delta - c) alpha = 0 with alpha(0) = scale, alpha'(0) = 0."""
    if not horizon > 0:
        raise ParameterError("horizon must be positive")
    if not scale > 0:
        raise ParameterError("scale must be positive")
    ts, ys = _integrate_nodes(M, c, 1.01 * horizon)
    n = M.dim
    # t = 0 node from the regular jet: L = 0, q = 0, q' = c / n
    L = np.concatenate([[0.0], ys[0]])
    q = np.concatenate([[0.0], ys[1]])
    t = np.concatenate([[0.0], ts])
    drift = np.concatenate([[0.0], M.drift(ts)])
    dq = c - q * q - drift * q
    dq[0] = c / n
    if np.any(q[1:] <= 0):
        raise InvariantViolation("alpha' lost positivity")
    table = QuinticTable(t, L, q, dq)
    return AlphaSolution(AlphaProfile(table, horizon, math.log(scale)), M, float(horizon), float(c))


def ode_residual(A: AlphaSolution, t):
    """Relative residual of alpha'' + drift alpha' - c alpha from the interpolant's derivatives.

    Divided by alpha, this is q' + q^2 + drift q - c; it is reported relative to
    the largest of the individual terms, since that sets the roundoff floor.
    """
    _, q, dq = A.alpha.jet(t)
    d = A.manifold.drift(t)
    terms = np.stack([np.abs(dq), q * q, np.abs(d * q), np.full_like(q, A.c)])
    return np.abs(dq + q * q + d * q - A.c) / np.max(terms, axis=0)


def _check_t(A: AlphaSolution, t):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0) or np.any(t >= A.alpha.domain[1]):
        raise DomainError(f"drifted operator evaluated outside (0, {A.alpha.domain[1]})")
    return t


def drifted_apply(A: AlphaSolution, v: RadialProfile, t):
    """Delta_alpha v = v'' + (drift + 2 alpha'/alpha) v' on radial v."""
    t = _check_t(A, t)
    _, q, _ = A.alpha.jet(t)
    return v.d2(t) + (A.manifold.drift(t) + 2 * q) * v.d1(t)


def _scaled_quotient_jet(A: AlphaSolution, f: RadialProfile, t):
    """alpha times the first two derivatives of f/alpha, from the jets of f and log alpha.

    Multiplying through by alpha keeps everything finite where alpha itself
    over- or underflows.
    """
    _, q, dq = A.alpha.jet(t)
    f0, f1, f2 = f.eval(t), f.d1(t), f.d2(t)
    a1 = f1 - q * f0
    a2 = f2 - 2 * q * f1 + (q * q - dq) * f0
    return a1, a2, (np.abs(f2) + 2 * np.abs(q * f1) + (q * q + np.abs(dq)) * np.abs(f0))


def conjugated_apply(A: AlphaSolution, f: RadialProfile, t):
    """alpha * Delta_alpha(f / alpha) evaluated through the drifted operator on the quotient.

    Returns the value and the magnitude of the largest intermediate term (its
    roundoff scale).
    """
    t = _check_t(A, t)
    _, q, _ = A.alpha.jet(t)
    a1, a2, mag = _scaled_quotient_jet(A, f, t)
    b = A.manifold.drift(t) + 2 * q
    return a2 + b * a1, mag + np.abs(b * a1)


def conjugation_check(A: AlphaSolution, phi: RadialProfile, grid=None, u: RadialProfile | None = None) -> dict:
    """Verify alpha Delta_alpha(phi/alpha) = (Delta - c) phi and its integrated (dual) form.

    ``phi`` must expose a compact ``support`` inside (0, horizon).  The relative
    pointwise residual is measured against the largest term in the chain.  The duality
    compares int Delta_alpha(u/alpha) (alpha phi) sigma^{n-1} dt with
    int u (Delta - c) phi sigma^{n-1} dt, evaluated separately.
    """
    supp = getattr(phi, "support", None)
    if supp is None or not (0 < supp[0] < supp[1] < A.horizon):
        raise ParameterError("test function is not compactly supported inside (0, horizon)")
    lo, hi = supp
    if grid is None:
        grid = np.linspace(lo, hi, 2001)[1:-1]
    grid = np.asarray(grid, dtype=float)
    M, c = A.manifold, A.c
    lhs, scale = conjugated_apply(A, phi, grid)
    rhs = phi.d2(grid) + M.drift(grid) * phi.d1(grid) - c * phi.eval(grid)
    pointwise = float(np.max(np.abs(lhs - rhs)))
    rel = float(np.max(np.abs(lhs - rhs) / np.maximum(scale, 1e-300)))
    if u is None:
        u = FunctionProfile(lambda s: 1.0 + s * s, lambda s: 2.0 * s, lambda s: 2.0 + 0.0 * s, name="1+t^2")
    # composite 16-point Gauss-Legendre on 400 cells: the integrands are smooth
    # and compactly supported, so this is accurate to roundoff
    x, w = np.polynomial.legendre.leggauss(16)
    edges = np.linspace(lo, hi, 401)
    mid, half = (edges[:-1] + edges[1:]) / 2, np.diff(edges) / 2
    s = (mid[:, None] + half[:, None] * x).ravel()
    ws = (half[:, None] * w).ravel()
    dens = np.exp((M.dim - 1) * M.warping.log_eval(s))
    left = conjugated_apply(A, u, s)[0] * phi.eval(s) * dens
    lphi = phi.d2(s) + M.drift(s) * phi.d1(s) - c * phi.eval(s)
    right = u.eval(s) * lphi * dens
    I1, I2 = float(ws @ left), float(ws @ right)
    mag = float(ws @ (np.abs(left) + np.abs(right)))
    return {
        "max_pointwise_residual": pointwise,
        "max_relative_residual": rel,
        "duality_lhs": I1,
        "duality_rhs": I2,
        "duality_residual": abs(I1 - I2),
        "duality_relative": abs(I1 - I2) / max(mag, 1e-300),
    }
