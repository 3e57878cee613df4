"""Piecewise quintic Hermite interpolation from value, slope and curvature data."""

import numpy as np

# rows: p(0), p'(0), p''(0), p(1), p'(1), p''(1) for p(s) = sum c_k s^k
_CONSTRAINTS = np.array(
    [
        [1, 0, 0, 0, 0, 0],
        [0, 1, 0, 0, 0, 0],
        [0, 0, 2, 0, 0, 0],
        [1, 1, 1, 1, 1, 1],
        [0, 1, 2, 3, 4, 5],
        [0, 0, 2, 6, 12, 20],
    ],
    dtype=float,
)
_INV = np.linalg.inv(_CONSTRAINTS)


def quintic_coefficients(h, y0, d0, c0, y1, d1, c1):
    """Monomial coefficients in s = (t - t0)/h of the quintic matching both jets."""
    h = np.asarray(h, dtype=float)
    rhs = np.stack(
        np.broadcast_arrays(y0, h * d0, h * h * c0, y1, h * d1, h * h * c1), axis=0
    )
    return np.tensordot(_INV, rhs, axes=(1, 0))


def eval_quintic(coef, s, h):
    """Value, first and second t-derivative of the quintic(s) at local coordinate s."""
    c = coef
    p = ((((c[5] * s + c[4]) * s + c[3]) * s + c[2]) * s + c[1]) * s + c[0]
    dp = (((5 * c[5] * s + 4 * c[4]) * s + 3 * c[3]) * s + 2 * c[2]) * s + c[1]
    ddp = ((20 * c[5] * s + 12 * c[4]) * s + 6 * c[3]) * s + 2 * c[2]
    return p, dp / h, ddp / (h * h)


class QuinticTable:
    """Piecewise quintic Hermite interpolant through tabulated (y, y', y'')."""

    def __init__(self, x, y, dy, ddy):
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.size < 2 or np.any(np.diff(x) <= 0):
            raise ValueError("table abscissae must be strictly increasing")
        self.x = x
        self.y = np.asarray(y, dtype=float)
        self.dy = np.asarray(dy, dtype=float)
        self.ddy = np.asarray(ddy, dtype=float)
        h = np.diff(x)
        self._h = h
        self._coef = quintic_coefficients(
            h, self.y[:-1], self.dy[:-1], self.ddy[:-1], self.y[1:], self.dy[1:], self.ddy[1:]
        )

    def __call__(self, t, nu=0):
        t = np.asarray(t, dtype=float)
        i = np.clip(np.searchsorted(self.x, t, side="right") - 1, 0, self.x.size - 2)
        h = self._h[i]
        s = (t - self.x[i]) / h
        p, dp, ddp = eval_quintic(self._coef[:, i], s, h)
        return (p, dp, ddp)[nu]

    def jet(self, t):
        t = np.asarray(t, dtype=float)
        i = np.clip(np.searchsorted(self.x, t, side="right") - 1, 0, self.x.size - 2)
        h = self._h[i]
        return eval_quintic(self._coef[:, i], (t - self.x[i]) / h, h)
