"""The cusp family violating the L^1 positivity property, and the unit-disc example.

Everything that involves exp(t^(2+2eps)) is carried in log-magnitude form: for
eps = 1 that factor overflows a double near t = 5.16 while the sweeps run to
t = 50.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import sympy as sp
from scipy import integrate

from mplab.errors import InvariantViolation, ParameterError
from mplab.profiles import CuspProfile, ModelManifold, RadialProfile, cusp_threshold

__all__ = [
    "CuspFamily",
    "CuspSupersolution",
    "build_cusp",
    "supersolution_residual",
    "verify_supersolution",
    "l1_mass",
    "l1_mass_bound",
    "distributional_pairing",
    "disc_remark_check",
]


class CuspSupersolution(RadialProfile):
    """u(t) = (exp(t^p) - exp(t_eps^p))_+ with p = 2 + 2 eps."""

    def __init__(self, epsilon: float):
        self.epsilon = float(epsilon)
        self.p = 2.0 + 2.0 * self.epsilon
        self.t_eps = cusp_threshold(self.epsilon)
        self.kinks = (self.t_eps,)
        self.name = "cusp_supersolution"

    def log_eval(self, t):
        """log u for t > t_eps (-inf at or below the threshold)."""
        t = self._arg(t)
        tp, tep = t**self.p, self.t_eps**self.p
        with np.errstate(divide="ignore", invalid="ignore"):
            out = tp + np.log(-np.expm1(tep - tp))
        return np.where(t > self.t_eps, out, -np.inf)

    def eval(self, t):
        t = self._arg(t)
        return np.where(t > self.t_eps, np.exp(np.maximum(t, self.t_eps) ** self.p) - math.exp(self.t_eps**self.p), 0.0)

    def d1(self, t):
        """One-sided (right) derivative at t_eps, matching the boundary flux term."""
        t = self._arg(t)
        e = self.epsilon
        out = 2 * (1 + e) * t ** (1 + 2 * e) * np.exp(np.maximum(t, self.t_eps) ** self.p)
        return np.where(t >= self.t_eps, out, 0.0)

    def d2(self, t):
        t = self._arg(t)
        e = self.epsilon
        poly = 2 * (1 + e) * (2 * (1 + e) * t ** (2 + 4 * e) + (1 + 2 * e) * t ** (2 * e))
        return np.where(t > self.t_eps, poly * np.exp(np.maximum(t, self.t_eps) ** self.p), 0.0)


@dataclass(frozen=True)
class CuspFamily:
    epsilon: float
    t_eps: float
    sigma: CuspProfile
    U: CuspSupersolution

    @property
    def manifold(self) -> ModelManifold:
        return ModelManifold(2, self.sigma)


def build_cusp(epsilon: float) -> CuspFamily:
    if not epsilon > 0:
        raise ParameterError(f"epsilon must be positive, got {epsilon}")
    sigma = CuspProfile(epsilon)
    U = CuspSupersolution(epsilon)
    return CuspFamily(float(epsilon), cusp_threshold(epsilon), sigma, U)


def _bracket(F: CuspFamily, t):
    e = F.epsilon
    return 2 * (1 + e) * e * t ** (2 * e) - 1


def supersolution_residual(F: CuspFamily, t):
    """Sign and log-magnitude of Delta U - U at t >= t_eps.

    Uses the factored form exp(t^p) * bracket + exp(t_eps^p).  When the bracket
    is non-negative the two terms are combined with logaddexp; a negative bracket
    (only possible through roundoff at t_eps) is compared against
    -exp(t_eps^p - t^p) before subtracting.
    """
    t = np.asarray(t, dtype=float)
    p = 2.0 + 2.0 * F.epsilon
    tp, tep = t**p, F.t_eps**p
    B = _bracket(F, t)
    sign = np.ones_like(t)
    logmag = np.empty_like(t)
    pos = B > 0
    logmag[pos] = np.logaddexp(tp[pos] + np.log(B[pos]), tep)
    zero = B == 0
    logmag[zero] = tep
    neg = B < 0
    if np.any(neg):
        x = np.log(-B[neg]) + tp[neg] - tep  # log of |B| e^{t^p} / e^{t_eps^p}
        sign[neg] = np.sign(-np.expm1(x))
        with np.errstate(divide="ignore"):
            logmag[neg] = tep + np.log(np.abs(np.expm1(x)))
    return sign, logmag


def _expanded_bracket(F: CuspFamily, t):
    """(u'' + (sigma'/sigma) u' - u - exp(t_eps^p)) / exp(t^p) from the unsimplified terms."""
    e = F.epsilon
    d2 = 2 * (1 + e) * (2 * (1 + e) * t ** (2 + 4 * e) + (1 + 2 * e) * t ** (2 * e))
    d1 = 2 * (1 + e) * t ** (1 + 2 * e)
    drift = F.sigma.dlog(t)
    return d2 + drift * d1 - 1.0, np.abs(d2) + np.abs(drift * d1)


def verify_supersolution(F: CuspFamily, tmax: float = 50.0, points: int = 10_000) -> dict:
    """Sweep (t_eps, tmax] on log-spaced points; PASS iff every residual is >= 0 and u'(t_eps+) >= 0."""
    if tmax <= F.t_eps:
        raise ParameterError("tmax must exceed t_eps")
    t = np.geomspace(F.t_eps, tmax, points + 1)[1:]
    with np.errstate(over="raise", invalid="raise"):
        try:
            sign, logmag = supersolution_residual(F, t)
            expanded, scale = _expanded_bracket(F, t)
        except FloatingPointError as exc:  # pragma: no cover - would be a log-domain bug
            raise InvariantViolation(f"overflow in log-domain residual: {exc}") from exc
    B = _bracket(F, t)
    cancel = float(np.max(np.abs(expanded - B) / scale))
    # factored-form sign test: bracket >= -exp(t_eps^p - t^p)
    p = 2.0 + 2.0 * F.epsilon
    factored_ok = bool(np.all(B >= -np.exp(F.t_eps**p - t**p)))
    e = F.epsilon
    log_flux = math.log(2 * (1 + e)) + (1 + 2 * e) * math.log(F.t_eps) + F.t_eps**p
    flux = math.exp(log_flux)
    min_sign = float(sign.min())
    return {
        "epsilon": F.epsilon,
        "t_eps": F.t_eps,
        "tmax": float(tmax),
        "points": int(points),
        "min_residual_sign": min_sign,
        "min_log_residual": float(logmag.min()),
        "factored_check": factored_ok,
        "expanded_vs_factored": cancel,
        "expanded_min_sign": float(np.sign(expanded + np.exp(F.t_eps**p - t**p)).min()),
        "boundary_flux": flux,
        "passed": bool(min_sign >= 0 and factored_ok and flux >= 0),
    }


def l1_mass_bound(epsilon: float) -> float:
    """2 pi t_eps^{-eps} / eps: the mass with the factor (1 - e^{t_eps^p - t^p}) dropped."""
    t_eps = cusp_threshold(epsilon)
    return 2 * math.pi * t_eps ** (-epsilon) / epsilon


def l1_mass(F: CuspFamily, tol: float = 1e-8) -> dict:
    """2 pi int_0^inf u j dt, with u j = (1 - exp(t_eps^p - t^p)) / t^(1+eps) past t_eps.

    Quadrature runs to a cut T where exp(t_eps^p - T^p) underflows relative to
    double precision; beyond T the integrand equals t^-(1+eps) to within that
    factor, so the tail is T^-eps/eps with a rigorous two-sided bracket.
    """
    e, te = F.epsilon, F.t_eps
    p = 2.0 + 2.0 * e
    integrand = lambda t: -math.expm1(te**p - t**p) / t ** (1 + e)  # noqa: E731
    T = (te**p + 40.0) ** (1 / p)
    body, err = integrate.quad(integrand, te, T, epsabs=tol * 1e-3, epsrel=1e-13, limit=200)
    tail_hi = T ** (-e) / e
    tail_lo = tail_hi * (-math.expm1(te**p - T**p))
    mass = 2 * math.pi * (body + tail_hi)
    uncertainty = 2 * math.pi * (err + tail_hi - tail_lo)
    bound = l1_mass_bound(e)
    return {
        "epsilon": e,
        "mass": mass,
        "uncertainty": uncertainty,
        "bound": bound,
        "finite": bool(math.isfinite(mass)),
        "below_bound": bool(mass + uncertainty <= bound),
    }


def distributional_pairing(F: CuspFamily, phi: RadialProfile) -> float:
    """int_M U (Delta phi - phi) dV for a compactly supported radial test function.

    Non-negative for every phi >= 0 when Delta U >= U distributionally; this is the
    integrated check, including the boundary flux at t_eps, that the pointwise
    sweep cannot see.
    """
    lo, hi = phi.support
    lo = max(lo, F.t_eps)
    if hi <= lo:
        return 0.0
    M = F.manifold

    def f(t):
        lap = phi.d2(t) + M.drift(t) * phi.d1(t)
        # U * sigma computed in log form: exp(log U + log sigma)
        w = math.exp(float(F.U.log_eval(t)) + float(F.sigma.log_eval(t)))
        return w * (lap - phi.eval(t))

    val, _ = integrate.quad(f, lo, hi, epsabs=1e-13, epsrel=1e-11, limit=400)
    return 2 * math.pi * val


def disc_remark_check() -> dict:
    """u = -r on the unit disc: -Delta u + u = 1/r - r >= 0 on (0,1), u <= 0, u in every L^p.

    The inequality direction is the computed one; it is the sign the incomplete
    disc needs to violate positivity preservation.
    """
    r, th = sp.symbols("r theta", positive=True)
    u = -r
    lap = sp.diff(r * sp.diff(u, r), r) / r
    op = sp.simplify(-lap + u)
    # minimum of 1/r - r on (0, 1) is approached at r -> 1 where it equals 0
    nonneg = bool(sp.solve_univariate_inequality(op < 0, r, relational=False).intersect(sp.Interval.open(0, 1)).is_empty)
    norms = {
        "L1": sp.integrate(sp.Abs(u) * r, (r, 0, 1), (th, 0, 2 * sp.pi)),
        "L2": sp.sqrt(sp.integrate(u**2 * r, (r, 0, 1), (th, 0, 2 * sp.pi))),
        "Linf": sp.Integer(1),
    }
    return {
        "operator": str(op),
        "operator_at_half": float(op.subs(r, sp.Rational(1, 2))),
        "operator_nonnegative": nonneg,
        "u_nonpositive": True,
        "norms": {k: float(v) for k, v in norms.items()},
        "norms_exact": {k: str(sp.nsimplify(v)) for k, v in norms.items()},
    }
