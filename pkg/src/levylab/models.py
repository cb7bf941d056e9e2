"""Symmetric unimodal pure-jump Lévy models.

A model is described by its radial Lévy density

    nu(r) = scale * C(d, alpha) * r**(-d - alpha) * g(r),

where ``g`` is 1 (alpha-stable), ``exp(-theta r)`` (tempered) or the indicator
of ``r <= R`` (truncated).  ``C(d, alpha)`` is chosen so that the alpha-stable
member has characteristic exponent exactly ``scale * |xi|**alpha``; the other
kinds share the same small-``r`` singularity.  ``BROWNIAN`` is a reference
model with exponent ``scale * |xi|**2`` and no Lévy measure; it only exists to
validate the deterministic solver.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate, special

from levylab.errors import DomainError, ParameterError, UnsupportedModelError

LOG_GROWTH_FREQUENCIES = 2.0 ** np.arange(4, 21)


class Kind(str, enum.Enum):
    ALPHA_STABLE = "alpha_stable"
    TEMPERED_STABLE = "tempered_stable"
    TRUNCATED_STABLE = "truncated_stable"
    BROWNIAN = "brownian_reference"


def stable_constant(d: int, alpha: float) -> float:
    """Constant C with ``int (1 - cos(xi.x)) C |x|^{-d-alpha} dx = |xi|^alpha``."""
    return (alpha * 2.0 ** (alpha - 1.0) * math.gamma((d + alpha) / 2.0)
            / (math.pi ** (d / 2.0) * math.gamma(1.0 - alpha / 2.0)))


@dataclass(frozen=True)
class LevyModel:
    kind: Kind
    alpha: float = 1.0
    theta: float | None = None
    R: float | None = None
    dimension: int = 1
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.dimension not in (1, 2):
            raise ParameterError(f"dimension must be 1 or 2, got {self.dimension}")
        if not self.scale > 0:
            raise ParameterError(f"scale must be positive, got {self.scale}")
        if self.kind is Kind.BROWNIAN:
            object.__setattr__(self, "alpha", 2.0)
            return
        if not 0.0 < self.alpha < 2.0:
            raise ParameterError(f"alpha must lie in (0, 2), got {self.alpha}")
        if self.kind is Kind.TEMPERED_STABLE and not (self.theta and self.theta > 0):
            raise ParameterError("tempered_stable needs theta > 0")
        if self.kind is Kind.TRUNCATED_STABLE and not (self.R and self.R > 0):
            raise ParameterError("truncated_stable needs R > 0")

    # constructors -------------------------------------------------------

    @classmethod
    def alpha_stable(cls, alpha, dimension=1, scale=1.0):
        return cls(Kind.ALPHA_STABLE, alpha=alpha, dimension=dimension, scale=scale)

    @classmethod
    def tempered_stable(cls, alpha, theta, dimension=1, scale=1.0):
        return cls(Kind.TEMPERED_STABLE, alpha=alpha, theta=theta,
                   dimension=dimension, scale=scale)

    @classmethod
    def truncated_stable(cls, alpha, R, dimension=1, scale=1.0):
        return cls(Kind.TRUNCATED_STABLE, alpha=alpha, R=R,
                   dimension=dimension, scale=scale)

    @classmethod
    def brownian(cls, dimension=1, scale=1.0):
        return cls(Kind.BROWNIAN, dimension=dimension, scale=scale)

    # serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value, "dimension": self.dimension, "scale": self.scale}
        if self.kind is not Kind.BROWNIAN:
            out["alpha"] = self.alpha
        if self.theta is not None:
            out["theta"] = self.theta
        if self.R is not None:
            out["R"] = self.R
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "LevyModel":
        return cls(**data)

    # properties ---------------------------------------------------------

    @property
    def is_pure_jump(self) -> bool:
        return self.kind is not Kind.BROWNIAN

    @property
    def density_constant(self) -> float:
        """``scale * C(d, alpha)``; the coefficient of ``r**(-d-alpha)`` near 0."""
        self._require_jumps()
        return self.scale * stable_constant(self.dimension, self.alpha)

    @property
    def support_radius(self) -> float:
        return self.R if self.kind is Kind.TRUNCATED_STABLE else math.inf

    def _require_jumps(self):
        if not self.is_pure_jump:
            raise UnsupportedModelError("brownian_reference has no Lévy measure")

    def damping(self, r):
        """The factor ``g(r)`` multiplying the stable density."""
        r = np.asarray(r, dtype=float)
        if self.kind is Kind.TEMPERED_STABLE:
            return np.exp(-self.theta * r)
        if self.kind is Kind.TRUNCATED_STABLE:
            return (r <= self.R).astype(float)
        return np.ones_like(r)

    def describe(self) -> str:
        parts = [self.kind.value, f"d={self.dimension}"]
        if self.is_pure_jump:
            parts.append(f"alpha={self.alpha:g}")
        if self.theta is not None:
            parts.append(f"theta={self.theta:g}")
        if self.R is not None:
            parts.append(f"R={self.R:g}")
        if self.scale != 1.0:
            parts.append(f"scale={self.scale:g}")
        return "(".join([parts[0], ", ".join(parts[1:])]) + ")"


# ---------------------------------------------------------------------------
# Lévy density and integrals against it


def levy_density(model: LevyModel, r):
    """Radial Lévy density ``nu(r)`` (intensity per unit volume) for ``r > 0``."""
    model._require_jumps()
    r_arr = np.asarray(r, dtype=float)
    if np.any(~(r_arr > 0)):
        raise DomainError("levy_density is defined for r > 0 only")
    out = model.density_constant * r_arr ** (-model.dimension - model.alpha) * model.damping(r_arr)
    return out if np.ndim(r) else float(out)


def _radial_moment_closed(model: LevyModel, lo: float, hi: float, p: float) -> float:
    """``int_lo^hi r**p nu(r) dr`` for the stable and truncated kinds."""
    hi = min(hi, model.support_radius)
    if hi <= lo:
        return 0.0
    e = p - model.dimension - model.alpha + 1.0
    c = model.density_constant
    if abs(e) < 1e-14:
        return c * (math.log(hi) - math.log(lo))
    lo_term = lo ** e if lo > 0 else 0.0
    if math.isinf(hi):
        if e >= 0:
            return math.inf
        return c * (-lo_term) / e
    return c * (hi ** e - lo_term) / e


def upper_gamma(s: float, x: float) -> float:
    """Upper incomplete gamma ``Gamma(s, x)`` for real ``s`` (also s <= 0) and x > 0."""
    if x <= 0:
        if s <= 0:
            return math.inf
        return math.gamma(s)
    if s > 0:
        return special.gammaincc(s, x) * special.gamma(s)
    if abs(s) < 1e-14:
        return float(special.exp1(x))
    # Gamma(s, x) = (Gamma(s + 1, x) - x^s e^{-x}) / s
    return (upper_gamma(s + 1.0, x) - x ** s * math.exp(-x)) / s


def radial_moment(model: LevyModel, lo: float, hi: float = math.inf, p: float = 0.0) -> float:
    """``int_lo^hi r**p nu(r) dr`` along a ray (no surface factor).

    Closed forms: powers for the stable and truncated kinds, incomplete gamma
    functions for the tempered kind.
    """
    model._require_jumps()
    if lo < 0 or hi < lo:
        raise DomainError(f"bad integration range ({lo}, {hi})")
    if model.kind is not Kind.TEMPERED_STABLE:
        return _radial_moment_closed(model, lo, hi, p)
    s = p - model.dimension - model.alpha + 1.0
    if lo == 0.0 and s <= 0:
        return math.inf
    theta = model.theta
    upper = 0.0 if math.isinf(hi) else upper_gamma(s, theta * hi)
    return model.density_constant * theta ** (-s) * (upper_gamma(s, theta * lo) - upper)


def _sphere_area(d: int) -> float:
    return 2.0 if d == 1 else 2.0 * math.pi


def radial_tail_mass(model: LevyModel, r: float) -> float:
    """Mass ``nu({|x| > r})`` of the Lévy measure outside the ball of radius r."""
    if not r > 0:
        raise DomainError("tail mass needs r > 0")
    return _sphere_area(model.dimension) * radial_moment(model, r, math.inf, model.dimension - 1)


# ---------------------------------------------------------------------------
# characteristic exponent


def _psi_scalar_stable(model: LevyModel, k: float) -> float:
    return model.scale * k ** model.alpha


def _one_minus_j0(z: float) -> float:
    """``1 - J0(z)`` without cancellation for small ``z`` (power series below 1)."""
    if z >= 1.0:
        return 1.0 - float(special.j0(z))
    q, term, total = 0.25 * z * z, 1.0, 0.0
    for m in range(1, 12):
        term *= -q / (m * m)
        total -= term
    return total


def _hankel_tail(model: LevyModel, k: float, r0: float, upper: float) -> float:
    """``int_r0^upper J0(k r) nu(r) r dr`` (d = 2).

    Exact Bessel kernel over the first hundred oscillations, then the two-term
    Hankel asymptotic expansion of J0 with Fourier-weighted quadrature.
    """
    c, a = model.density_constant, model.alpha
    g = lambda r: c * r ** (-1.0 - a) * float(model.damping(r))
    r_big = min(upper, r0 + 200.0 * math.pi / k)
    pts = np.linspace(r0, r_big, 101)
    near = sum(integrate.quad(lambda r: special.j0(k * r) * g(r), lo, hi, epsabs=0.0, epsrel=1e-12)[0]
               for lo, hi in zip(pts[:-1], pts[1:]))
    if r_big >= upper:
        return near
    # J0(x) ~ sqrt(2/(pi x)) [cos(x - pi/4) + sin(x - pi/4)/(8x)]
    amp = lambda r: g(r) * math.sqrt(2.0 / (math.pi * k * r))
    h = math.sqrt(0.5)
    fc = lambda r: amp(r) * h * (1.0 - 1.0 / (8.0 * k * r))
    fs = lambda r: amp(r) * h * (1.0 + 1.0 / (8.0 * k * r))
    if math.isinf(upper):
        kw = dict(limlst=200)
    else:
        kw = dict(epsabs=0.0, epsrel=1e-10, limit=2000)
    # cos(x - pi/4) = h (cos x + sin x); sin(x - pi/4) = h (sin x - cos x)
    cpart, _ = integrate.quad(fc, r_big, upper, weight="cos", wvar=k, **kw)
    spart, _ = integrate.quad(fs, r_big, upper, weight="sin", wvar=k, **kw)
    return near + cpart + spart


@lru_cache(maxsize=65536)
def _psi_quadrature(model: LevyModel, k: float) -> float:
    """``psi`` by quadrature for the tempered and truncated kinds (|xi| = k > 0)."""
    d, a, c = model.dimension, model.alpha, model.density_constant
    length = min(model.support_radius, 3.0 / model.theta if model.theta else math.inf)
    if k * length < 1e-6:
        # two Taylor terms of 1 - cos (d = 1) or 1 - J0 (d = 2); the next is below 1e-12 relative
        m2 = radial_moment(model, 0.0, math.inf, d + 1.0)
        m4 = radial_moment(model, 0.0, math.inf, d + 3.0)
        c2, c4 = (0.5, 1.0 / 24.0) if d == 1 else (0.25, 1.0 / 64.0)
        return _sphere_area(d) * (c2 * k * k * m2 - c4 * k ** 4 * m4)
    r0 = min(1.0 / k, model.support_radius)
    opts = dict(epsabs=0.0, epsrel=1e-12, limit=1000)
    if d == 1:
        def head_f(r):
            return 2.0 * math.sin(0.5 * k * r) ** 2 / (r * r) * float(model.damping(r)) if r > 0 else 0.5 * k * k
    else:
        def head_f(r):
            return _one_minus_j0(k * r) / (r * r) * float(model.damping(r)) if r > 0 else 0.25 * k * k
    head, _ = integrate.quad(head_f, 0.0, r0, weight="alg", wvar=(1.0 - a, 0.0), **opts)
    head *= c
    upper = model.support_radius
    if r0 >= upper:
        tail = 0.0
    elif d == 1:
        mass = radial_moment(model, r0, upper)
        nu = lambda r: c * r ** (-1.0 - a) * float(model.damping(r))
        # tempered mass beyond r0 + 60/theta is below e^-60 of the rest
        stop = min(upper, r0 + 60.0 / model.theta) if model.theta else upper
        edges = [r0]
        while edges[-1] < stop:
            edges.append(min(2.0 * edges[-1], stop))
        # the cos-weighted rule can settle on a wrong value when pushed to 1e-12
        osc = sum(integrate.quad(nu, lo, hi, weight="cos", wvar=k, epsabs=0.0, epsrel=1e-10,
                                 limit=1000)[0]
                  for lo, hi in zip(edges, edges[1:]))
        tail = mass - osc
    else:
        mass = radial_moment(model, r0, upper, 1.0)
        tail = mass - _hankel_tail(model, k, r0, upper)
    return _sphere_area(d) * (head + tail)


def _psi_tempered_1d(model: LevyModel, k: float) -> float:
    """Closed form of ``psi`` for the tempered kind in d = 1.

    With ``u = k/theta`` the bracket ``1 - (1+u^2)^(alpha/2) cos(alpha atan u)``
    is rewritten through ``expm1``/``log1p`` so that small ``k`` keeps its digits.
    """
    a, th, c = model.alpha, model.theta, model.density_constant
    u = k / th
    if a == 1.0:
        return 2.0 * c * th * (u * math.atan(u) - 0.5 * math.log1p(u * u))
    b = a * math.atan(u)
    bracket = 2.0 * math.sin(0.5 * b) ** 2 - math.expm1(0.5 * a * math.log1p(u * u)) * math.cos(b)
    return 2.0 * c * math.gamma(-a) * th ** a * bracket


def char_exponent(model: LevyModel, xi) -> float | np.ndarray:
    """Characteristic exponent ``psi(xi) = int (1 - cos(xi.x)) nu(dx)``.

    ``xi`` is a scalar (any dimension, read as ``|xi|``), a length-``d`` vector,
    or an array whose last axis has length ``d`` when ``d = 2``.
    """
    xi = np.asarray(xi, dtype=float)
    if model.dimension == 2 and xi.ndim >= 1 and xi.shape[-1] == 2:
        k = np.linalg.norm(xi, axis=-1)
    else:
        k = np.abs(xi)
    if model.kind is Kind.BROWNIAN:
        out = model.scale * k ** 2
    elif model.kind is Kind.ALPHA_STABLE:
        out = model.scale * k ** model.alpha
    elif model.kind is Kind.TEMPERED_STABLE and model.dimension == 1:
        flat = np.array([_psi_tempered_1d(model, float(v)) for v in np.ravel(k)])
        out = flat.reshape(k.shape)
    else:
        flat = np.array([_psi_quadrature(model, float(v)) if v > 0 else 0.0
                         for v in np.ravel(k)])
        out = flat.reshape(k.shape)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# log-growth condition and hypotheses


@dataclass(frozen=True)
class LogGrowthReport:
    ok: bool
    frequencies: tuple
    ratios: tuple
    reason: str

    def __bool__(self):
        return self.ok


def check_log_growth(model: LevyModel | Callable[[float], float],
                     threshold: float = 2.0) -> LogGrowthReport:
    """Probe ``psi(xi)/log|xi| -> infinity`` on ``|xi| = 2^4, ..., 2^20``.

    Passes when the ratio sequence is strictly increasing and its last value
    exceeds ``threshold``.  ``model`` may also be a bare exponent callable.
    """
    psi = model if callable(model) else (lambda k: char_exponent(model, k))
    ratios = tuple(float(psi(k)) / math.log(k) for k in LOG_GROWTH_FREQUENCIES)
    increasing = all(b > a for a, b in zip(ratios, ratios[1:]))
    if not increasing:
        reason = "psi/log|xi| is not increasing on the probe sequence"
    elif ratios[-1] <= threshold:
        reason = f"psi/log|xi| ends at {ratios[-1]:.3g} <= threshold {threshold:g}"
    else:
        reason = "ok"
    return LogGrowthReport(reason == "ok", tuple(LOG_GROWTH_FREQUENCIES.tolist()), ratios, reason)


@dataclass(frozen=True)
class HypothesisReport:
    pure_jump: bool
    unimodal: bool
    levy_integrable: bool
    infinite_measure: bool

    @property
    def conforming(self) -> bool:
        return self.pure_jump and self.unimodal and self.levy_integrable and self.infinite_measure

    def violations(self) -> list[str]:
        names = {"pure_jump": "pure jump", "unimodal": "unimodal Lévy measure",
                 "levy_integrable": "integrable Lévy measure",
                 "infinite_measure": "infinite Lévy measure"}
        return [label for key, label in names.items() if not getattr(self, key)]


def check_hypotheses(model: LevyModel) -> HypothesisReport:
    """Numerically check the standing hypotheses on the Lévy measure."""
    if not model.is_pure_jump:
        # no Lévy measure at all: the zero measure is trivially unimodal and integrable
        return HypothesisReport(False, True, True, False)
    r_max = min(1e3, model.support_radius, 200.0 / model.theta if model.theta else math.inf)
    r = np.geomspace(1e-6, r_max, 400)
    nu = levy_density(model, r)
    unimodal = bool(np.all(np.isfinite(nu)) and np.all(nu > 0) and np.all(np.diff(nu) <= 0))
    s = _sphere_area(model.dimension)
    d = model.dimension
    small = s * radial_moment(model, 0.0, 1.0, d + 1)
    large = radial_tail_mass(model, 1.0)
    integrable = bool(np.isfinite(small) and np.isfinite(large))
    # finite measures have shrinking increments as eps -> 0; infinite ones do not
    masses = [radial_tail_mass(model, eps) for eps in (1e-2, 1e-4, 1e-6)]
    infinite = bool(0 < masses[1] - masses[0] <= masses[2] - masses[1])
    return HypothesisReport(True, unimodal, integrable, infinite)


# ---------------------------------------------------------------------------
# free transition density


def _frequency_cutoff(model: LevyModel, t: float) -> float:
    k = 1.0
    while t * char_exponent(model, k) < -math.log(1e-12):
        k *= 2.0
        if k > 2.0 ** 60:
            raise UnsupportedModelError("exp(-t psi) does not decay; density not available")
    return k


def transition_density(model: LevyModel, t: float, x) -> float:
    """Free transition density ``p_t(x)`` by Fourier inversion of ``exp(-t psi)``.

    ``x`` is a scalar (d = 1) or a point / radius (d = 2; the density is radial).
    """
    if not t > 0:
        raise DomainError("transition_density needs t > 0")
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x)) if x.ndim else abs(float(x))
    d = model.dimension
    if model.kind is Kind.BROWNIAN:
        var = 2.0 * model.scale * t
        return (2.0 * math.pi * var) ** (-d / 2.0) * math.exp(-r * r / (2.0 * var))
    if not check_log_growth(model).ok:
        raise UnsupportedModelError("log-growth condition fails; p_t may be unbounded")
    cutoff = _frequency_cutoff(model, t)
    weight = lambda k: math.exp(-t * char_exponent(model, k))
    opts = dict(epsabs=1e-14, epsrel=1e-11, limit=4000)
    if d == 1:
        if r == 0.0:
            val, _ = integrate.quad(weight, 0.0, cutoff, **opts)
        else:
            val, _ = integrate.quad(weight, 0.0, cutoff, weight="cos", wvar=r, **opts)
        return val / math.pi
    f = lambda k: special.j0(k * r) * weight(k) * k
    n_osc = int(cutoff * r / math.pi) + 1
    pts = np.linspace(0.0, cutoff, min(n_osc, 2000) + 1)
    val = sum(integrate.quad(f, lo, hi, **opts)[0] for lo, hi in zip(pts[:-1], pts[1:]))
    return val / (2.0 * math.pi)


def transition_cdf_tail(model: LevyModel, t: float, L: float) -> float:
    """``P(|X_t| > L)`` in d = 1 via the sine transform of ``exp(-t psi)``."""
    if model.dimension != 1:
        raise ParameterError("transition_cdf_tail is implemented for d = 1")
    cutoff = _frequency_cutoff(model, t)
    f = lambda k: (math.exp(-t * char_exponent(model, k)) - 1.0) / k if k > 0 else 0.0
    # P(|X_t| <= L) = (2/pi) int_0^inf sin(kL)/k e^{-t psi(k)} dk, with the
    # constant part int sin(kL)/k = pi/2 and e^{-t psi} ~ 0 beyond the cutoff.
    val, _ = integrate.quad(f, 0.0, cutoff, weight="sin", wvar=L, epsabs=1e-14, epsrel=1e-11, limit=4000)
    beyond = 0.5 * math.pi - special.sici(cutoff * L)[0]
    return -(2.0 / math.pi) * (val - beyond)
