"""Shared containers and the fixed mollifier used by the monotone approximation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LevelSetBall",
    "GridFunction",
    "RieszMeasure",
    "mollifier",
    "mollifier_cdf",
    "mollifier_first_moment_inv",
    "GL_X",
    "GL_W",
]

GL_X, GL_W = np.polynomial.legendre.leggauss(16)


def mollifier(s):
    """phi(s) = 30 s^2 (1 - s)^2 on [0, 1]: non-negative, C^1, unit mass."""
    s = np.asarray(s, dtype=float)
    return np.where((s >= 0) & (s <= 1), 30.0 * s * s * (1 - s) ** 2, 0.0)


def mollifier_cdf(s):
    """int_0^s phi = 10 s^3 - 15 s^4 + 6 s^5, clipped to [0, 1]."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    return s**3 * (10.0 + s * (-15.0 + 6.0 * s))


def mollifier_first_moment_inv(s):
    """int_0^s phi(t)/t dt = 15 s^2 - 20 s^3 + 7.5 s^4 (equals 2.5 at s = 1)."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    return s * s * (15.0 + s * (-20.0 + 7.5 * s))


@dataclass(frozen=True)
class LevelSetBall:
    """{y : G(x, y) > 1/r} together with x, and the flux weights on its boundary.

    In 1D ``lo``/``hi`` are the interval ends and ``weights`` the two flux
    weights.  In 2D ``nodes`` lists the super-level nodes and ``edges`` the cut
    edges (inside node, outside node) with their fluxes in ``weights``.
    """

    center: object
    r: float
    degenerate: bool
    lo: float = np.nan
    hi: float = np.nan
    nodes: np.ndarray | None = None
    edges: np.ndarray | None = None
    weights: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def contains(self, other: "LevelSetBall") -> bool:
        if other.degenerate:
            return True
        if self.degenerate:
            return False
        if self.nodes is not None:
            return bool(np.all(np.isin(other.nodes, self.nodes)))
        return bool(self.lo <= other.lo + 1e-15 and other.hi <= self.hi + 1e-15)


@dataclass(frozen=True)
class GridFunction:
    """Samples of a function on a grid, with quadrature weights for integrals."""

    points: np.ndarray
    values: np.ndarray
    weights: np.ndarray | None = None

    def __call__(self, t):
        if np.ndim(self.points) != 1:
            raise TypeError("pointwise evaluation is defined for 1D grids only")
        return np.interp(t, self.points, self.values)

    def integral(self) -> float:
        if self.weights is None:
            raise ValueError("grid function has no quadrature weights")
        return float(self.weights @ self.values)


@dataclass(frozen=True)
class RieszMeasure:
    """Density (Delta_alpha v, a callable or samples) plus point masses."""

    density: object
    atoms: tuple = ()

    @property
    def atom_mass(self) -> float:
        return float(sum(m for _, m in self.atoms))
