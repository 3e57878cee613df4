"""Finite-volume Green columns of the drifted Laplacian on a geodesic disc.

Polar grid on B_R of a two-dimensional model manifold: one centre node, rings at
radii i*h (i = 1 .. nr-1) with ``ntheta`` nodes each, and a Dirichlet ring at
R.  The weight is alpha^2 sigma, so the stiffness matrix K of -div(alpha^2 grad)
is a symmetric M-matrix and the Green column of x solves K g = e_x.  With this
normalization the discrete Green identity, the flux normalization of level-set
balls and the representation formula hold exactly up to solver roundoff.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from mplab.errors import ParameterError
from mplab.greenmean.base import GL_W, GL_X, GridFunction, LevelSetBall
from mplab.profiles import ModelManifold

__all__ = ["DiscreteDisc2D"]


class DiscreteDisc2D:
    """Discrete Green space on B_R.

    Parameters
    ----------
    M : ModelManifold
        Two-dimensional model.
    R : float
        Disc radius (Dirichlet ring).
    alpha : AlphaSolution, optional
        Positive L-harmonic function; solved on [0, R] when omitted.
    alpha_scale : float
        Constant multiple applied to alpha.  Rescaling alpha by s rescales every
        Green value by 1/s^2, which moves the level-set radii without changing
        the operator Delta_alpha.
    nr, ntheta : int
        Radial and angular resolution.
    pole_stride : int
        Default pole subset is every ``pole_stride``-th interior node.
    """

    def __init__(self, M: ModelManifold, R: float, alpha=None, alpha_scale: float = 1.0, nr: int = 32,
                 ntheta: int = 32, pole_stride: int = 4):
        if M.dim != 2:
            raise ParameterError("the discrete disc is two-dimensional")
        if not R > 0 or nr < 2 or ntheta < 3:
            raise ParameterError("need R > 0, nr >= 2, ntheta >= 3")
        if alpha is None:
            from mplab.drifted import solve_alpha

            alpha = solve_alpha(M, R)
        self.M, self.R, self.nr, self.ntheta = M, float(R), int(nr), int(ntheta)
        self.alpha = alpha
        self.log_alpha_scale = math.log(alpha_scale)
        self.h = self.R / self.nr
        self.dtheta = 2 * math.pi / self.ntheta
        self.n_int = 1 + (self.nr - 1) * self.ntheta
        self.n_all = self.n_int + self.ntheta
        rad = np.zeros(self.n_all)
        th = np.zeros(self.n_all)
        for i in range(1, self.nr + 1):
            sl = self._ring(i)
            rad[sl] = i * self.h
            th[sl] = np.arange(self.ntheta) * self.dtheta
        self.radius, self.theta = rad, th
        self._assemble()
        self.lu = splu(self.K.tocsc())
        self._cols: dict[int, np.ndarray] = {}
        self.poles = np.arange(0, self.n_int, max(1, int(pole_stride)))

    # -- geometry -----------------------------------------------------------
    def _ring(self, i):
        if i == 0:
            return slice(0, 1)
        start = 1 + (i - 1) * self.ntheta if i < self.nr else self.n_int
        return slice(start, start + self.ntheta)

    def log_alpha(self, t):
        t = np.maximum(np.asarray(t, dtype=float), 1e-12 * self.R)
        return self.alpha.alpha.log_eval(t) + self.log_alpha_scale

    def alpha_values(self):
        return np.exp(self.log_alpha(self.radius))

    def _log_weight(self, t):
        # alpha^2 sigma
        return 2 * self.log_alpha(t) + self.M.warping.log_eval(t)

    def _weight_integral(self, lo, hi):
        lo, hi = np.asarray(lo, float), np.asarray(hi, float)
        mid, half = (lo + hi) / 2, (hi - lo) / 2
        s = mid[..., None] + half[..., None] * GL_X
        return (np.exp(self._log_weight(s.reshape(-1))).reshape(s.shape) * GL_W).sum(-1) * half

    def _assemble(self):
        h, dth, nt = self.h, self.dtheta, self.ntheta
        P, Q, C = [], [], []
        j = np.arange(nt)
        # centre to ring 1
        c0 = math.exp(float(self._log_weight(h / 2))) * dth / h
        P.append(np.zeros(nt, int)), Q.append(self._ring(1).start + j), C.append(np.full(nt, c0))
        for i in range(1, self.nr):
            ring = self._ring(i).start + j
            outer = self._ring(i + 1).start + j
            rm = (i + 0.5) * h
            P.append(ring), Q.append(outer), C.append(np.full(nt, math.exp(float(self._log_weight(rm))) * dth / h))
            ri = i * h
            ca = math.exp(2 * float(self.log_alpha(ri))) * h / (float(self.M.warping.eval(ri)) * dth)
            P.append(ring), Q.append(self._ring(i).start + (j + 1) % nt), C.append(np.full(nt, ca))
        self.edge_p = np.concatenate(P)
        self.edge_q = np.concatenate(Q)
        self.edge_c = np.concatenate(C)
        n = self.n_int
        interior_q = self.edge_q < n
        p, q, c = self.edge_p, self.edge_q, self.edge_c
        diag = np.bincount(p, weights=c, minlength=n) + np.bincount(q[interior_q], weights=c[interior_q], minlength=n)
        pi, qi, ci = p[interior_q], q[interior_q], c[interior_q]
        self.K = sparse.coo_matrix(
            (np.concatenate([diag, -ci, -ci]), (np.concatenate([np.arange(n), pi, qi]), np.concatenate([np.arange(n), qi, pi]))),
            shape=(n, n),
        ).tocsr()
        meas = np.zeros(self.n_all)
        meas[0] = 2 * math.pi * float(self._weight_integral(0.0, h / 2))
        for i in range(1, self.nr):
            meas[self._ring(i)] = dth * float(self._weight_integral(i * h - h / 2, i * h + h / 2))
        self.measure = meas

    # -- linear algebra -------------------------------------------------------
    def stiffness_apply(self, v):
        """(K v)_p on interior nodes, with v given on all nodes (boundary ring included)."""
        v = np.asarray(v, dtype=float)
        p, q, c = self.edge_p, self.edge_q, self.edge_c
        flux = c * (v[p] - v[q])
        out = np.bincount(p, weights=flux, minlength=self.n_all)
        out -= np.bincount(q, weights=flux, minlength=self.n_all)
        return out[: self.n_int]

    def laplacian(self, v):
        """Discrete Delta_alpha v on interior nodes."""
        return -self.stiffness_apply(v) / self.measure[: self.n_int]

    def column(self, x: int) -> np.ndarray:
        """G(x, .) on all nodes (zero on the Dirichlet ring)."""
        x = int(x)
        if not 0 <= x < self.n_int:
            raise ParameterError("Green poles must be interior nodes")
        col = self._cols.get(x)
        if col is None:
            e = np.zeros(self.n_int)
            e[x] = 1.0
            col = np.zeros(self.n_all)
            col[: self.n_int] = self.lu.solve(e)
            self._cols[x] = col
        return col

    def green(self, x, y):
        return self.column(x)[np.asarray(y)]

    def peak(self, x):
        return np.array([self.column(int(xi))[int(xi)] for xi in np.atleast_1d(x)])

    # -- level sets -----------------------------------------------------------
    def _cut(self, g, inside):
        p, q, c = self.edge_p, self.edge_q, self.edge_c
        cut = inside[p] != inside[q]
        pin = np.where(inside[p], p, q)[cut]
        qout = np.where(inside[p], q, p)[cut]
        return pin, qout, c[cut] * (g[pin] - g[qout])

    def level_ball(self, x, r) -> LevelSetBall:
        if not r > 0:
            raise ParameterError("radius parameter must be positive")
        x = int(x)
        g = self.column(x)
        deg = g[x] <= 1.0 / r
        inside = g > 1.0 / r
        inside[x] = True
        pin, qout, flux = self._cut(g, inside)
        return LevelSetBall(
            center=x, r=float(r), degenerate=bool(deg), nodes=np.flatnonzero(inside),
            edges=np.stack([pin, qout], axis=1), weights=flux,
        )

    def mean_value(self, v, x, r):
        """Flux-weighted average of v over the cut edges, v linearly interpolated to the G = 1/r crossing."""
        vals = v.values if isinstance(v, GridFunction) else np.asarray(v, dtype=float)
        x = int(x)
        g = self.column(x)
        if g[x] <= 1.0 / r:
            return float(vals[x])
        inside = g > 1.0 / r
        pin, qout, flux = self._cut(g, inside)
        a = g[pin] - 1.0 / r
        b = 1.0 / r - g[qout]
        ve = (b * vals[pin] + a * vals[qout]) / (a + b)
        return float(flux @ ve)

    def mean_value_closed(self, v, x, r, mass=None):
        """m_r(v)(x) = v(x) + sum_p (-K v)_p (G(x, p) - 1/r)_+, the representation-formula value."""
        vals = v.values if isinstance(v, GridFunction) else np.asarray(v, dtype=float)
        if mass is None:
            mass = -self.stiffness_apply(vals)
        g = self.column(int(x))[: self.n_int]
        return float(vals[int(x)] + mass @ np.maximum(g - 1.0 / r, 0.0))

    # -- sampling -------------------------------------------------------------
    def sample(self, f, radial: bool = True) -> GridFunction:
        """Evaluate f(t) (radial) or f(t, theta) on all nodes."""
        t = np.maximum(self.radius, 1e-12 * self.R)
        vals = f(t) if radial else f(t, self.theta)
        return self.grid_function(np.asarray(vals, dtype=float))

    def grid_function(self, values) -> GridFunction:
        pts = np.stack([self.radius, self.theta], axis=1)
        return GridFunction(pts, np.asarray(values, dtype=float), self.measure)

    def distance(self, x, z):
        x, z = np.asarray(x), np.asarray(z)
        return self.M.distance(self.radius[x], self.theta[x], self.radius[z], self.theta[z])

    def harmonic_extension(self, boundary_values):
        """Discrete Delta_alpha-harmonic function with the given values on the Dirichlet ring."""
        v = np.zeros(self.n_all)
        v[self.n_int:] = boundary_values
        rhs = -self.stiffness_apply(v)
        v[: self.n_int] = self.lu.solve(rhs)
        return v
