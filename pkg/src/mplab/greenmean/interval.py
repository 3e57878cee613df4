"""Closed-form Dirichlet Green kernel of (1/w)(w v')' on an interval.

With the coordinate h(t) = int_a^t ds / w(s) and H = h(b),

    G(x, y) = h(x ^ y) (H - h(x v y)) / H,

so level sets, boundary fluxes and mean values reduce to arithmetic in h.  A
``natural_left`` interval models the radial sector of a model manifold: the
left end is the pole, which carries no boundary condition, and the kernel for
radial data is G(x, y) = T(x v y) with T(t) = int_t^b ds / w(s).  There T is
tabulated in log form so that weights spanning thousands of orders of magnitude
(sigma^{n-1} alpha^2 on a cusp) stay representable.
"""

from __future__ import annotations

import math
import numbers

import numpy as np

from mplab.errors import ParameterError
from mplab.greenmean.base import GL_W, GL_X, LevelSetBall
from mplab.profiles import RadialProfile

__all__ = ["ExactInterval1D", "ConstantWeight"]

_LOG_GLW = np.log(GL_W)
_BISECT_STEPS = 60


class ConstantWeight(RadialProfile):
    name = "constant"

    def __init__(self, value: float):
        if not value > 0:
            raise ParameterError("weight must be positive")
        self.value = float(value)
        self.domain = (-math.inf, math.inf)

    def eval(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.value)

    def d1(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    def d2(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    def log_eval(self, t):
        return np.full_like(np.asarray(t, dtype=float), math.log(self.value))

    def dlog(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))


def _values(v, t):
    return np.asarray(v.eval(t) if hasattr(v, "eval") else v(t), dtype=float)


class ExactInterval1D:
    """Weighted interval (a, b) with measure w(t) dt and Dirichlet ends.

    Parameters
    ----------
    a, b : float
        Interval ends, a < b.
    w : float or RadialProfile
        Positive weight.  Profiles must provide ``log_eval`` and ``dlog``.
    natural_left : bool
        Treat ``a`` (must be 0) as the pole of a radial sector.
    nodes : int
        Table size for non-constant weights.
    """

    def __init__(self, a: float, b: float, w=1.0, natural_left: bool = False, nodes: int = 4001):
        if not a < b:
            raise ParameterError("need a < b")
        self.a, self.b = float(a), float(b)
        self.natural_left = bool(natural_left)
        if isinstance(w, numbers.Real):
            w = ConstantWeight(float(w))
        self.w = w
        self.const = w.value if isinstance(w, ConstantWeight) else None
        if self.natural_left:
            if self.a != 0.0:
                raise ParameterError("a natural left end must sit at the pole t = 0")
            self._build_tail(nodes)
        elif self.const is None:
            self._build_h(nodes)
        self.H = self._h(np.array([self.b]))[0] if not self.natural_left else math.inf

    # -- tables -----------------------------------------------------------
    def _cell_log_integral(self, lo, hi):
        """log int_lo^hi ds / w(s), vectorized, 16-point Gauss-Legendre."""
        lo, hi = np.broadcast_arrays(np.asarray(lo, float), np.asarray(hi, float))
        mid, half = (lo + hi) / 2, (hi - lo) / 2
        s = mid[..., None] + half[..., None] * GL_X
        with np.errstate(divide="ignore"):
            terms = -self.w.log_eval(s.reshape(-1)).reshape(s.shape) + _LOG_GLW + np.log(half)[..., None]
        return np.logaddexp.reduce(terms, axis=-1)

    def _build_h(self, nodes):
        x = np.linspace(self.a, self.b, nodes)
        cells = np.exp(self._cell_log_integral(x[:-1], x[1:]))
        self._x = x
        self._hx = np.concatenate([[0.0], np.cumsum(cells)])

    def _build_tail(self, nodes):
        b = self.b
        near = np.geomspace(1e-12 * b, min(1.0, b / 2), 600)
        x = np.unique(np.concatenate([near, np.linspace(near[-1], b, nodes)]))
        cells = self._cell_log_integral(x[:-1], x[1:])
        logT = np.empty(x.size)
        logT[-1] = -np.inf
        acc = -np.inf
        for i in range(x.size - 2, -1, -1):
            acc = np.logaddexp(acc, cells[i])
            logT[i] = acc
        self._x = x
        self._logT = logT

    def _cell(self, t):
        return np.clip(np.searchsorted(self._x, t, side="right") - 1, 0, self._x.size - 2)

    # -- coordinates --------------------------------------------------------
    def _h(self, t):
        t = np.asarray(t, dtype=float)
        if self.const is not None:
            return (t - self.a) / self.const
        i = self._cell(t)
        part = np.exp(self._cell_log_integral(self._x[i], np.maximum(t, self._x[i])))
        return self._hx[i] + np.where(t > self._x[i], part, 0.0)

    def log_tail(self, t):
        """log T(t) = log int_t^b ds / w (natural-left intervals)."""
        t = np.asarray(t, dtype=float)
        i = self._cell(t)
        right = self._x[i + 1]
        with np.errstate(divide="ignore"):
            part = self._cell_log_integral(np.minimum(t, right), right)
            part = np.where(t < right, part, -np.inf)
        return np.logaddexp(self._logT[i + 1], part)

    def _invert(self, f, target, increasing):
        """Solve f(t) = target on [a, b] by bracketing on the table and bisection."""
        target = np.asarray(target, dtype=float)
        if self.natural_left:
            node_vals = self._logT
        else:
            node_vals = self._hx
        if increasing:
            j = np.clip(np.searchsorted(node_vals, target, side="right") - 1, 0, self._x.size - 2)
        else:
            j = np.clip(np.searchsorted(-node_vals, -target, side="right") - 1, 0, self._x.size - 2)
        lo, hi = self._x[j].copy(), self._x[j + 1].copy()
        for _ in range(_BISECT_STEPS):
            mid = 0.5 * (lo + hi)
            fm = f(mid)
            go_right = fm < target if increasing else fm > target
            lo = np.where(go_right, mid, lo)
            hi = np.where(go_right, hi, mid)
        return 0.5 * (lo + hi)

    def hinv(self, hv):
        hv = np.asarray(hv, dtype=float)
        if self.const is not None:
            return self.a + self.const * hv
        return self._invert(self._h, hv, increasing=True)

    # -- kernel --------------------------------------------------------------
    def green(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        if self.natural_left:
            return np.exp(self.log_tail(np.maximum(x, y)))
        hl, hr = self._h(np.minimum(x, y)), self._h(np.maximum(x, y))
        return hl * (self.H - hr) / self.H

    def peak(self, x):
        """G(x, x), finite on an interval."""
        return self.green(x, x)

    def flux_weights(self, x):
        """(left, right) boundary weights |w d_y G| of every non-degenerate ball at x."""
        x = np.asarray(x, dtype=float)
        if self.natural_left:
            return np.zeros_like(x), np.ones_like(x)
        hx = self._h(x)
        return (self.H - hx) / self.H, hx / self.H

    def ball_ends(self, x, r):
        """Vectorized (lo, hi, degenerate) of the level-set ball B_r(x)."""
        x, r = np.broadcast_arrays(np.asarray(x, float), np.asarray(r, float))
        if self.natural_left:
            lt = self.log_tail(x)
            deg = lt <= -np.log(r)
            hi = self._invert(self.log_tail, -np.log(r), increasing=False)
            hi = np.where(deg, x, np.maximum(hi, x))
            return np.where(deg, x, self.a), hi, deg
        H = self.H
        hx = self._h(x)
        deg = hx * (H - hx) / H <= 1.0 / r
        with np.errstate(divide="ignore", invalid="ignore"):
            h_lo = np.where(deg, hx, H / (r * (H - hx)))
            h_hi = np.where(deg, hx, H - H / (r * hx))
        lo = np.where(deg, x, self.hinv(np.clip(h_lo, 0.0, H)))
        hi = np.where(deg, x, self.hinv(np.clip(h_hi, 0.0, H)))
        return np.minimum(lo, x), np.maximum(hi, x), deg

    def level_ball(self, x, r) -> LevelSetBall:
        if not r > 0:
            raise ParameterError("radius parameter must be positive")
        lo, hi, deg = self.ball_ends(float(x), float(r))
        wl, wr = self.flux_weights(float(x))
        return LevelSetBall(
            center=float(x), r=float(r), degenerate=bool(deg), lo=float(lo), hi=float(hi),
            weights=np.array([float(wl), float(wr)]),
        )

    def mean_value(self, v, x, r):
        """m_r(v)(x); v(x) itself on degenerate balls.  Vectorized in x and r."""
        lo, hi, deg = self.ball_ends(x, r)
        wl, wr = self.flux_weights(x)
        vx = _values(v, np.asarray(x, dtype=float))
        right = _values(v, hi)
        if self.natural_left:
            return np.where(deg, vx, right)
        left = _values(v, lo)
        return np.where(deg, vx, wl * left + wr * right)

    # -- operator -------------------------------------------------------------
    def weight(self, t):
        return np.exp(self.w.log_eval(t))

    def laplacian(self, v, t):
        """(1/w)(w v')' = v'' + (w'/w) v' on a twice-differentiable v."""
        t = np.asarray(t, dtype=float)
        return v.d2(t) + self.w.dlog(t) * v.d1(t)

    def distance(self, x, z):
        return np.abs(np.asarray(x, float) - np.asarray(z, float))

    def interior_grid(self, n: int = 2001):
        return np.linspace(self.a, self.b, n)[1:-1]
