"""Radial profiles and warped-product model manifolds R+ x_sigma S^{n-1}.

A profile is a scalar function of the radial coordinate with analytic access to
its first two derivatives.  Profiles whose values over- or underflow at large
radius (cusps, super-exponential warpings, the L-harmonic function alpha) also
expose their logarithm and its derivatives, and every geometric quantity below
is computed from those log-derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy import integrate

from mplab._hermite import quintic_coefficients, eval_quintic
from mplab.errors import DomainError, InvariantViolation, ParameterError

__all__ = [
    "RadialProfile",
    "FunctionProfile",
    "LogProfile",
    "LogPiece",
    "Euclidean",
    "Hyperbolic",
    "BlendedProfile",
    "CuspProfile",
    "cusp_threshold",
    "SuperExpProfile",
    "Bump",
    "Product",
    "ModelManifold",
    "sphere_area",
    "gaussian_curvature",
    "radial_laplacian",
    "volume_ball",
    "total_volume",
    "fd_derivative_errors",
    "profile_from_spec",
]


def _floats(t):
    # keep extended precision when the caller asks for it (difference checks)
    t = np.asarray(t)
    return t if np.issubdtype(t.dtype, np.floating) else t.astype(float)


class RadialProfile:
    """Base class.  Subclasses provide ``eval``, ``d1`` and ``d2``."""

    name = "custom"
    domain: tuple = (0.0, math.inf)
    kinks: tuple = ()

    def _arg(self, t):
        t = _floats(t)
        lo, hi = self.domain
        if np.any(~np.isfinite(t)) or np.any(t <= lo) or np.any(t >= hi):
            raise DomainError(f"{self.name}: argument outside open domain {self.domain}")
        return t

    def eval(self, t):
        raise NotImplementedError

    def d1(self, t):
        raise NotImplementedError

    def d2(self, t):
        raise NotImplementedError

    def __call__(self, t):
        return self.eval(t)

    def log_eval(self, t):
        return np.log(self.eval(t))

    def dlog(self, t):
        return self.d1(t) / self.eval(t)

    def dlog_scalar(self, t: float) -> float:
        """(log f)'(t) for a single float; overridden where a cheaper path exists (ODE right-hand sides)."""
        return float(self.dlog(t))

    def d2log(self, t):
        f = self.eval(t)
        return self.d2(t) / f - (self.d1(t) / f) ** 2


class FunctionProfile(RadialProfile):
    """User-supplied profile; missing derivatives fall back to central differences."""

    def __init__(self, f, df=None, d2f=None, domain=(0.0, math.inf), name="custom", kinks=()):
        self._f, self._df, self._d2f = f, df, d2f
        self.domain = tuple(domain)
        self.name = name
        self.kinks = tuple(kinks)

    def eval(self, t):
        return np.asarray(self._f(self._arg(t)), dtype=float) * 1.0

    def d1(self, t):
        t = self._arg(t)
        if self._df is not None:
            return np.asarray(self._df(t), dtype=float) * 1.0
        h = 1e-6 * np.maximum(1.0, np.abs(t))
        return (self._f(t + h) - self._f(t - h)) / (2 * h)

    def d2(self, t):
        t = self._arg(t)
        if self._d2f is not None:
            return np.asarray(self._d2f(t), dtype=float) * 1.0
        h = 1e-4 * np.maximum(1.0, np.abs(t))
        return (self._f(t + h) - 2 * self._f(t) + self._f(t - h)) / (h * h)


class LogProfile(RadialProfile):
    """Positive profile specified through L = log f and its two derivatives."""

    def _L(self, t):
        raise NotImplementedError

    def _dL(self, t):
        raise NotImplementedError

    def _d2L(self, t):
        raise NotImplementedError

    def log_eval(self, t):
        return self._L(self._arg(t))

    def dlog(self, t):
        return self._dL(self._arg(t))

    def d2log(self, t):
        return self._d2L(self._arg(t))

    def eval(self, t):
        return np.exp(self._L(self._arg(t)))

    def d1(self, t):
        t = self._arg(t)
        return np.exp(self._L(t)) * self._dL(t)

    def d2(self, t):
        t = self._arg(t)
        g = self._dL(t)
        return np.exp(self._L(t)) * (self._d2L(t) + g * g)


class LogPiece(NamedTuple):
    L: Callable
    dL: Callable
    d2L: Callable


LOG_T = LogPiece(np.log, lambda t: 1.0 / t, lambda t: -1.0 / (t * t))


class Euclidean(LogProfile):
    name = "euclidean"

    def _L(self, t):
        return np.log(t)

    def _dL(self, t):
        return 1.0 / t

    def _d2L(self, t):
        return -1.0 / (t * t)

    def dlog_scalar(self, t: float) -> float:
        if not t > 0:
            raise DomainError("euclidean: argument outside open domain")
        return 1.0 / t

    def eval(self, t):
        return self._arg(t) * 1.0

    def d1(self, t):
        return np.ones_like(self._arg(t))

    def d2(self, t):
        return np.zeros_like(self._arg(t))


class Hyperbolic(LogProfile):
    name = "hyperbolic"

    def _L(self, t):
        return t + np.log1p(-np.exp(-2 * t)) - math.log(2.0)

    def _dL(self, t):
        return 1.0 / np.tanh(t)

    def _d2L(self, t):
        return -1.0 / np.sinh(t) ** 2

    def eval(self, t):
        return np.sinh(self._arg(t))

    def d1(self, t):
        return np.cosh(self._arg(t))

    def d2(self, t):
        return np.sinh(self._arg(t))


class BlendedProfile(LogProfile):
    """log f = left on (0, a], quintic Hermite blend on (a, b), right on [b, inf).

    The blend matches value, slope and curvature of log f at both ends, so f is
    C^2.  Construction scans the blend on a 10^4-point grid and refuses profiles
    whose logarithm is not finite there.
    """

    def __init__(self, left: LogPiece, right: LogPiece, a: float, b: float, name="blended"):
        if not 0 < a < b:
            raise ParameterError(f"blend window must satisfy 0 < a < b, got ({a}, {b})")
        self.left, self.right, self.a, self.b = left, right, float(a), float(b)
        self.name = name
        h = self.b - self.a
        self._coef = quintic_coefficients(
            h, left.L(a), left.dL(a), left.d2L(a), right.L(b), right.dL(b), right.d2L(b)
        )
        scan = np.linspace(self.a, self.b, 10_000)
        vals = self._L(scan)
        if not np.all(np.isfinite(vals)) or not np.all(np.exp(vals) > 0):
            raise InvariantViolation(f"{name}: blended profile not positive on ({a}, {b})")

    def _jet(self, t):
        t = _floats(t)
        h = self.b - self.a
        s = np.clip((t - self.a) / h, 0.0, 1.0)
        p, dp, ddp = eval_quintic(self._coef, s, h)
        lo = t <= self.a
        hi = t >= self.b
        # evaluate closed forms only where they apply (log t is -inf at 0, etc.)
        tl = np.where(lo, t, self.a)
        th = np.where(hi, t, self.b)
        L = np.where(lo, self.left.L(tl), np.where(hi, self.right.L(th), p))
        dL = np.where(lo, self.left.dL(tl), np.where(hi, self.right.dL(th), dp))
        d2L = np.where(lo, self.left.d2L(tl), np.where(hi, self.right.d2L(th), ddp))
        return L, dL, d2L

    def dlog_scalar(self, t: float) -> float:
        if not self.domain[0] < t < self.domain[1]:
            raise DomainError(f"{self.name}: argument outside open domain {self.domain}")
        if t <= self.a:
            return float(self.left.dL(t))
        if t >= self.b:
            return float(self.right.dL(t))
        h = self.b - self.a
        return float(eval_quintic(self._coef, (t - self.a) / h, h)[1])

    def _L(self, t):
        return self._jet(t)[0]

    def _dL(self, t):
        return self._jet(t)[1]

    def _d2L(self, t):
        return self._jet(t)[2]


def _cusp_piece(eps):
    p = 2.0 + 2.0 * eps
    return LogPiece(
        lambda t: -(t**p) - (1 + eps) * np.log(t),
        lambda t: -p * t ** (p - 1) - (1 + eps) / t,
        lambda t: -p * (p - 1) * t ** (p - 2) + (1 + eps) / (t * t),
    )


def cusp_threshold(eps: float) -> float:
    """Radius where the positive part of the cusp supersolution switches on."""
    return (2.0 * (1.0 + eps) * eps) ** (-1.0 / (2.0 * eps))


class CuspProfile(BlendedProfile):
    """sigma = t near the pole and j(t) = exp(-t^(2+2eps)) / t^(1+eps) beyond t_eps."""

    def __init__(self, epsilon: float):
        if not epsilon > 0:
            raise ParameterError(f"cusp requires epsilon > 0, got {epsilon}")
        self.epsilon = float(epsilon)
        t_eps = cusp_threshold(self.epsilon)
        a = 0.25 if t_eps > 0.25 else t_eps / 2
        super().__init__(LOG_T, _cusp_piece(self.epsilon), a, t_eps, name="cusp")


class SuperExpProfile(BlendedProfile):
    """sigma = t on (0, 1/4] and exp(t^(2+delta)) on [1, inf)."""

    def __init__(self, delta: float):
        if not delta > 0:
            raise ParameterError(f"superexp requires delta > 0, got {delta}")
        self.delta = float(delta)
        p = 2.0 + self.delta
        right = LogPiece(
            lambda t: t**p,
            lambda t: p * t ** (p - 1),
            lambda t: p * (p - 1) * t ** (p - 2),
        )
        super().__init__(LOG_T, right, 0.25, 1.0, name="superexp")


class Bump(RadialProfile):
    """C-infinity bump exp(-1/(1-s^2)), s = (t - center)/halfwidth, scaled by ``height``."""

    def __init__(self, center, halfwidth, height=1.0):
        self.center, self.halfwidth, self.height = float(center), float(halfwidth), float(height)
        self.support = (self.center - self.halfwidth, self.center + self.halfwidth)
        self.domain = (-math.inf, math.inf)
        self.name = "bump"

    def _parts(self, t):
        t = self._arg(t)
        s = (t - self.center) / self.halfwidth
        inside = np.abs(s) < 1
        si = np.where(inside, s, 0.0)
        den = 1.0 - si * si
        f = np.where(inside, self.height * np.exp(-1.0 / den), 0.0)
        g1 = -2.0 * si / den**2  # (log f)' in s
        g2 = -(2.0 + 6.0 * si * si) / den**3  # (log f)'' in s
        return f, inside, g1 / self.halfwidth, g2 / self.halfwidth**2

    def eval(self, t):
        return self._parts(t)[0]

    def d1(self, t):
        f, inside, g1, _ = self._parts(t)
        return np.where(inside, f * g1, 0.0)

    def d2(self, t):
        f, inside, g1, g2 = self._parts(t)
        return np.where(inside, f * (g2 + g1 * g1), 0.0)


class Product(RadialProfile):
    """Pointwise product f*g with Leibniz derivatives."""

    def __init__(self, f: RadialProfile, g: RadialProfile):
        self.f, self.g = f, g
        self.domain = (max(f.domain[0], g.domain[0]), min(f.domain[1], g.domain[1]))
        self.name = f"{f.name}*{g.name}"
        supp = [getattr(p, "support", None) for p in (f, g)]
        supp = [s for s in supp if s is not None]
        if supp:
            self.support = (max(s[0] for s in supp), min(s[1] for s in supp))

    def eval(self, t):
        return self.f.eval(t) * self.g.eval(t)

    def d1(self, t):
        return self.f.d1(t) * self.g.eval(t) + self.f.eval(t) * self.g.d1(t)

    def d2(self, t):
        return (
            self.f.d2(t) * self.g.eval(t)
            + 2 * self.f.d1(t) * self.g.d1(t)
            + self.f.eval(t) * self.g.d2(t)
        )


def sphere_area(n: int) -> float:
    """Volume of the unit sphere S^{n-1}; 2*pi for n = 2."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


@dataclass(frozen=True)
class ModelManifold:
    dim: int
    warping: RadialProfile = field(default_factory=Euclidean)

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise ParameterError(f"dimension must be an integer >= 2, got {self.dim}")

    def drift(self, t):
        """Mean curvature of the distance spheres, (n-1) sigma'/sigma."""
        return (self.dim - 1) * self.warping.dlog(t)

    def drift_scalar(self, t: float) -> float:
        return (self.dim - 1) * self.warping.dlog_scalar(t)

    def distance(self, t1, th1, t2, th2):
        """Geodesic distance between points in polar coordinates (n = 2 charts).

        Exact for the flat and hyperbolic warpings.  Otherwise an upper bound: the
        shortest of the broken paths that travel radially to some radius s, along
        the circle of radius s, and radially out again.
        """
        t1, th1, t2, th2 = np.broadcast_arrays(*map(lambda a: np.asarray(a, float), (t1, th1, t2, th2)))
        dth = np.abs(np.mod(th1 - th2 + np.pi, 2 * np.pi) - np.pi)
        if isinstance(self.warping, Euclidean):
            return np.sqrt(np.maximum(t1 * t1 + t2 * t2 - 2 * t1 * t2 * np.cos(dth), 0.0))
        if isinstance(self.warping, Hyperbolic):
            c = np.cosh(t1) * np.cosh(t2) - np.sinh(t1) * np.sinh(t2) * np.cos(dth)
            return np.arccosh(np.maximum(c, 1.0))
        best = t1 + t2
        hi = np.maximum(t1, t2)
        for frac in np.linspace(0.0, 1.0, 17)[1:]:
            s = np.maximum(frac * hi, 1e-300)
            cand = np.abs(t1 - s) + np.abs(t2 - s) + self.warping.eval(s) * dth
            best = np.minimum(best, cand)
        return best


def gaussian_curvature(M: ModelManifold, t):
    """Radial sectional curvature -sigma''/sigma (Gaussian curvature when n = 2)."""
    s = M.warping
    g = s.dlog(t)
    return -(s.d2log(t) + g * g)


def radial_laplacian(M: ModelManifold, f: RadialProfile, t):
    """Laplace-Beltrami operator on a radial function: f'' + (n-1)(sigma'/sigma) f'."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("radial Laplacian is evaluated at t > 0 only")
    return f.d2(t) + M.drift(t) * f.d1(t)


def _volume_breakpoints(M, t):
    s = M.warping
    pts = [p for p in (getattr(s, "a", None), getattr(s, "b", None)) if p is not None and 0 < p < t]
    return pts or None


def volume_ball(M: ModelManifold, t: float) -> float:
    """vol(B_t) = |S^{n-1}| * int_0^t sigma^{n-1}; ``t = inf`` gives the total volume."""
    if t == math.inf:
        return total_volume(M)[0]
    if not t > 0:
        raise DomainError("volume_ball requires t > 0")
    k = M.dim - 1
    f = lambda s: math.exp(k * float(M.warping.log_eval(s)))  # noqa: E731
    val, _ = integrate.quad(
        f, 0.0, t, points=_volume_breakpoints(M, t), epsabs=0.0, epsrel=1e-12, limit=400
    )
    return sphere_area(M.dim) * val


def total_volume(M: ModelManifold, rel_tail=1e-14, t_max=1e4):
    """(volume, tail_bound).  Infinite volume returns (inf, inf).

    The tail beyond a cut T is bounded by exp(k L(T)) / |k L'(T)|, valid when
    log sigma^k is concave and decreasing past T (true for the cusp family).
    """
    k = M.dim - 1
    T = 1.0
    while T <= t_max:
        g = k * float(M.warping.dlog(T))
        g2 = k * float(M.warping.d2log(T))
        if g < 0 and g2 <= 0:
            part = volume_ball(M, T) / sphere_area(M.dim)
            tail = math.exp(k * float(M.warping.log_eval(T))) / abs(g)
            if tail <= rel_tail * part:
                return sphere_area(M.dim) * (part + tail / 2), sphere_area(M.dim) * tail / 2
        T *= 1.25
    return math.inf, math.inf


def fd_derivative_errors(p: RadialProfile, t, use_log=False):
    """Relative mismatch between analytic and centred-difference derivatives.

    Uses step h = 1e-5 * max(1, t), evaluated in extended precision so that the
    second difference is not dominated by double-precision roundoff.  The second-derivative error is measured
    against the scale |f| / max(1, t)^2 + |f''| so that roundoff in the difference
    quotient does not masquerade as an analytic error when f'' is tiny.
    """
    t = np.asarray(t, dtype=np.longdouble)
    h = 1e-5 * np.maximum(1.0, t)
    if use_log:
        f, d1, d2 = p.log_eval, p.dlog, p.d2log
    else:
        f, d1, d2 = p.eval, p.d1, p.d2
    fp, f0, fm = f(t + h), f(t), f(t - h)
    fd1 = (fp - fm) / (2 * h)
    fd2 = (fp - 2 * f0 + fm) / (h * h)
    a1, a2 = d1(t), d2(t)
    scale1 = np.abs(a1) + np.abs(f0) / np.maximum(1.0, t)
    scale2 = np.abs(a2) + np.abs(f0) / np.maximum(1.0, t) ** 2 + np.abs(a1) / np.maximum(1.0, t)
    return (np.abs(fd1 - a1) / scale1).astype(float), (np.abs(fd2 - a2) / scale2).astype(float)


def profile_from_spec(spec: dict) -> RadialProfile:
    """Build a catalog profile from ``{"profile": name, ...params}``."""
    spec = dict(spec)
    name = spec.pop("profile", None)
    if name == "euclidean":
        prof = Euclidean()
    elif name == "hyperbolic":
        prof = Hyperbolic()
    elif name == "cusp":
        prof = CuspProfile(spec.pop("epsilon", 1.0))
    elif name == "superexp":
        prof = SuperExpProfile(spec.pop("delta", 1.0))
    else:
        raise ParameterError(f"unknown profile {name!r}")
    if spec:
        raise ParameterError(f"unexpected profile parameters {sorted(spec)}")
    return prof
