"""Piecewise-linear traffic flux functions and the mollified flux.

Densities are normalized to [0, 1]. The free-flow branch is ``g_f(rho) = rho``
and the congested branch is ``g_c(rho) = gamma * (1 - rho)``; the two meet
(discontinuously) at ``rho_m``.
"""
from __future__ import annotations

import enum
import functools
from dataclasses import dataclass

import numpy as np
from scipy import integrate

QUAD_TOL = 1e-12


class DomainError(ValueError):
    """A density lies outside [0, 1]."""


class ParameterError(ValueError):
    """Flux parameters violate the model constraints."""


class FluxKind(str, enum.Enum):
    DISCONTINUOUS = "discontinuous"
    CONTINUOUS = "continuous"
    REGULARIZED = "regularized"
    MOLLIFIED = "mollified"


@dataclass(frozen=True)
class FluxModel:
    kind: FluxKind = FluxKind.DISCONTINUOUS
    rho_m: float = 0.5
    gamma: float = 0.5
    epsilon: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", FluxKind(self.kind))
        if not 0.0 < self.rho_m < 1.0:
            raise ParameterError(f"rho_m must lie in (0, 1), got {self.rho_m}")
        gamma_max = self.rho_m / (1.0 - self.rho_m)
        if not 0.0 < self.gamma < gamma_max:
            raise ParameterError(
                f"flux constraint 0 < gamma < rho_m/(1-rho_m) = {gamma_max:g} "
                f"violated by gamma = {self.gamma}"
            )
        if self.kind in (FluxKind.REGULARIZED, FluxKind.MOLLIFIED):
            eps_max = min(self.rho_m, 1.0 - self.rho_m)
            if not 0.0 < self.epsilon < eps_max:
                raise ParameterError(
                    f"epsilon must lie in (0, {eps_max:g}) for {self.kind.value} "
                    f"flux, got {self.epsilon}"
                )

    @property
    def critical(self) -> float:
        """Density gamma/(gamma+1) where g_c meets the identity line."""
        return self.gamma / (self.gamma + 1.0)

    @property
    def congested_slope(self) -> float:
        if self.kind is FluxKind.CONTINUOUS:
            return self.rho_m / (1.0 - self.rho_m)
        return self.gamma

    def g_f(self, rho):
        return rho

    def g_c(self, rho):
        return self.congested_slope * (1.0 - rho)

    def breakpoints(self) -> tuple[float, ...]:
        """Kinks of a continuous piecewise-linear flux."""
        if self.kind is FluxKind.REGULARIZED:
            return (self.rho_m - self.epsilon, self.rho_m + self.epsilon)
        return (self.rho_m,)


def _check_density(rho):
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0.0) or np.any(rho > 1.0) or np.any(np.isnan(rho)):
        raise DomainError("density outside [0, 1]")
    return rho


def _scalar_or_array(value, like):
    if np.ndim(like) == 0:
        return float(value)
    return value


def eval_flux(model: FluxModel, rho):
    """Flux value f(rho); vectorized over ``rho``."""
    r = _check_density(rho)
    kind = model.kind
    if kind is FluxKind.MOLLIFIED:
        out = r + (model.gamma - (model.gamma + 1.0) * r) * _mollifier_cdf(
            (r - model.rho_m) / model.epsilon
        )
    elif kind is FluxKind.REGULARIZED:
        lo = model.rho_m - model.epsilon
        hi = model.rho_m + model.epsilon
        f_lo = lo
        f_hi = model.gamma * (1.0 - hi)
        chord = f_lo + (f_hi - f_lo) * (r - lo) / (hi - lo)
        out = np.where(r < lo, r, np.where(r > hi, model.gamma * (1.0 - r), chord))
    else:
        out = np.where(r < model.rho_m, r, model.g_c(r))
    return _scalar_or_array(out, rho)


def flux_slopes(model: FluxModel, rho):
    """One-sided slopes (left, right) of a piecewise-linear flux at ``rho``.

    Away from kinks both entries agree. For the discontinuous flux the jump at
    ``rho_m`` is not a slope; the left entry there is the free-flow slope.
    """
    if model.kind is FluxKind.MOLLIFIED:
        d = mollified_flux_derivative(model, rho)
        return d, d
    r = _check_density(rho)
    k = model.congested_slope
    if model.kind is FluxKind.REGULARIZED:
        lo = model.rho_m - model.epsilon
        hi = model.rho_m + model.epsilon
        chord = (model.gamma * (1.0 - hi) - lo) / (hi - lo)
        left = np.where(r <= lo, 1.0, np.where(r <= hi, chord, -model.gamma))
        right = np.where(r < lo, 1.0, np.where(r < hi, chord, -model.gamma))
    else:
        left = np.where(r <= model.rho_m, 1.0, -k)
        right = np.where(r < model.rho_m, 1.0, -k)
    return _scalar_or_array(left, rho), _scalar_or_array(right, rho)


# --- canonical mollifier ----------------------------------------------------


def _bump(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(1.0 / (s[inside] ** 2 - 1.0))
    return out


@functools.lru_cache(maxsize=None)
def mollifier_constant() -> float:
    """Normalization C making the canonical bump integrate to one."""
    mass, _ = integrate.quad(
        lambda s: float(_bump(s)), -1.0, 1.0, epsabs=1e-14, epsrel=1e-14, limit=200
    )
    return 1.0 / mass


def mollifier_eval(s):
    """Canonical mollifier eta(s) = C exp(1/(s^2-1)) on |s| < 1, else 0."""
    out = mollifier_constant() * _bump(s)
    return _scalar_or_array(out, s)


def _mollifier_cdf_scalar(z: float) -> float:
    if z <= -1.0:
        return 0.0
    if z >= 1.0:
        return 1.0
    if z <= 0.0:
        val, _ = integrate.quad(mollifier_eval, -1.0, z, epsabs=QUAD_TOL, epsrel=0.0, limit=200)
        return val
    # symmetric mass: integrate the shorter tail
    val, _ = integrate.quad(mollifier_eval, z, 1.0, epsabs=QUAD_TOL, epsrel=0.0, limit=200)
    return 1.0 - val


def _mollifier_cdf(z):
    z = np.asarray(z, dtype=float)
    flat = np.array([_mollifier_cdf_scalar(v) for v in z.ravel()])
    return flat.reshape(z.shape)


def _require_mollified(model: FluxModel):
    if model.kind is not FluxKind.MOLLIFIED:
        raise ParameterError(f"expected a mollified flux model, got {model.kind.value}")


def mollified_flux_derivative(model: FluxModel, rho):
    """f'_eps(rho); equals 1 below rho_m - eps and -gamma above rho_m + eps."""
    _require_mollified(model)
    r = _check_density(rho)
    eps, g = model.epsilon, model.gamma
    z = (r - model.rho_m) / eps
    eta_eps = mollifier_eval(z) / eps
    out = 1.0 + (g - (g + 1.0) * r) * eta_eps - (g + 1.0) * _mollifier_cdf(z)
    return _scalar_or_array(out, rho)


def mollified_flux_second_derivative(model: FluxModel, rho):
    """f''_eps(rho), written as a positive weight times the convexity polynomial.

    Differentiating f'_eps directly gives
    ``f'' = 2 (gamma+1) eta_eps / (eps^2 (z^2-1)^2) * P(rho)`` with
    ``z = (rho-rho_m)/eps``; the weight is positive inside the smoothing band,
    so the sign of f'' is the sign of P.
    """
    _require_mollified(model)
    r = np.asarray(_check_density(rho), dtype=float)
    eps, g = model.epsilon, model.gamma
    y = r - model.rho_m
    z = y / eps
    out = np.zeros_like(r)
    inside = np.abs(z) < 1.0
    zi = z[inside]
    weight = (
        2.0 * (g + 1.0) * mollifier_eval(zi) / eps / (eps**2 * (zi**2 - 1.0) ** 2)
    )
    m = model.rho_m - model.critical
    out[inside] = weight * convexity_polynomial(y[inside], m, eps)
    return _scalar_or_array(out, rho)


# --- convexity analysis -----------------------------------------------------


def convexity_polynomial(y, m: float, epsilon: float):
    """P(y) = -y^4/eps^2 + 3 y^2 + M y - eps^2 with y = rho - rho_m."""
    y = np.asarray(y, dtype=float)
    out = -(y**4) / epsilon**2 + 3.0 * y**2 + m * y - epsilon**2
    return _scalar_or_array(out, y)


class RootError(RuntimeError):
    pass


def count_sign_changes(m: float, epsilon: float, n: int = 20001) -> int:
    y = np.linspace(-epsilon, epsilon, n)
    s = np.sign(convexity_polynomial(y, m, epsilon))
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def convexity_root(m: float, epsilon: float, width: float = 1e-14) -> float:
    """Unique root of the convexity polynomial on (-eps, eps), by bisection."""
    if m <= 0.0 or epsilon <= 0.0:
        raise RootError(f"need M > 0 and epsilon > 0 (got M={m}, epsilon={epsilon})")
    changes = count_sign_changes(m, epsilon)
    if changes != 1:
        raise RootError(f"expected one sign change on (-eps, eps), found {changes}")
    lo, hi = 0.0, epsilon
    p_lo = convexity_polynomial(lo, m, epsilon)
    p_hi = convexity_polynomial(hi, m, epsilon)
    if not (p_lo < 0.0 < p_hi):
        raise RootError("sign change not bracketed on (0, eps)")
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if convexity_polynomial(mid, m, epsilon) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --- anisotropy -------------------------------------------------------------


@dataclass(frozen=True)
class AnisotropyReport:
    passed: bool
    speed_margin: float
    wave_margin: float

    @property
    def worst_margin(self) -> float:
        return min(self.speed_margin, self.wave_margin)


def anisotropy_check(model: FluxModel, samples: int, tol: float = 1e-12) -> AnisotropyReport:
    """Check the two anisotropy conditions on a sample grid of (0, 1].

    Characteristic speeds must not exceed the vehicle speed f(rho)/rho, and
    every chord between two states must be no faster than the slower of the
    two vehicle speeds. At the flux discontinuity both one-sided limits are
    checked against their own branch slope.
    """
    if samples < 2:
        raise ValueError("need at least two samples")
    rho = np.linspace(0.0, 1.0, samples)[1:]
    f = np.asarray(eval_flux(model, rho))
    left, right = flux_slopes(model, rho)
    speed_margin = np.min(f / rho - np.asarray(right))
    if model.kind is FluxKind.DISCONTINUOUS:
        # left limits: free-flow value paired with free-flow slope
        f_left = np.where(rho <= model.rho_m, rho, f)
        speed_margin = min(speed_margin, np.min(f_left / rho - np.asarray(left)))
    else:
        speed_margin = min(speed_margin, np.min(f / rho - np.asarray(left)))

    v = f / rho
    rl, rr = np.meshgrid(rho, rho, indexing="ij")
    fl, fr = np.meshgrid(f, f, indexing="ij")
    vl, vr = np.meshgrid(v, v, indexing="ij")
    off = rl != rr
    chord = (fr[off] - fl[off]) / (rr[off] - rl[off])
    wave_margin = float(np.min(np.minimum(vl[off], vr[off]) - chord))
    speed_margin = float(speed_margin)
    return AnisotropyReport(
        passed=speed_margin >= -tol and wave_margin >= -tol,
        speed_margin=speed_margin,
        wave_margin=wave_margin,
    )
