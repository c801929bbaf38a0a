"""Limit kernels of the rescaled second-order correlation function and the Marchenko-Pastur density.

Three kernels describe the complex ensembles:

- sine, S(x, y) = sin(pi (x - y)) / (pi (x - y)), in the bulk,
- Airy, A(x, y) = (Ai(x) Ai'(y) - Ai'(x) Ai(y)) / (x - y), at the soft edge,
- Bessel, J(x, y) = (J(sqrt x) sqrt y J'(sqrt y) - sqrt x J'(sqrt x) J(sqrt y)) / (2 (x - y)), at the hard edge.

The real ensembles have the differentiated kernels D K, with D = (d/dy - d/dx) / (x - y) for the sine and
Airy kernels and D = (y d/dy - x d/dx) / (x - y) for the Bessel kernel.

All six kernels have a removable singularity on the diagonal. Within `near_diag_threshold` of it they are
evaluated from a Taylor expansion about c = (x + y) / 2, quadratic in h = (x - y) / 2; the Taylor coefficients
of Ai and of J(sqrt x) come from their differential equations.
"""

import logging
from enum import Enum
from fractions import Fraction
from typing import Any

import mpmath
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .helper import resolve_precision
from .polycore import to_bigfloat, to_rational
from .recursion import EnsembleSpec, Variant
from .series import TruncatedSeries
from .specfun import SeriesPolicy, airy, bessel_j

logger = logging.getLogger(__name__)

DEFAULT_NEAR_DIAG_THRESHOLD = 1e-4
TAYLOR_ORDER = 6

# Custom Exceptions


class KernelDomainError(Exception):
    """Custom exception for kernel arguments outside the kernel's domain."""

    pass


class StepSizeError(Exception):
    """Custom exception for finite-difference steps too coarse for the requested tolerance."""

    pass


class Regime(str, Enum):
    BULK = 'bulk'
    SOFT = 'soft'
    HARD = 'hard'


class KernelKind(str, Enum):
    SINE = 'sine'
    AIRY = 'airy'
    BESSEL = 'bessel'
    SINE_DIFF = 'sine_diff'
    AIRY_DIFF = 'airy_diff'
    BESSEL_DIFF = 'bessel_diff'

    @property
    def is_bessel(self) -> bool:
        return self in (KernelKind.BESSEL, KernelKind.BESSEL_DIFF)

    @property
    def is_differentiated(self) -> bool:
        return self in (KernelKind.SINE_DIFF, KernelKind.AIRY_DIFF, KernelKind.BESSEL_DIFF)

    @property
    def base(self) -> 'KernelKind':
        """The complex-ensemble kernel D is applied to."""
        return _BASE[self]

    @property
    def regime(self) -> Regime:
        return _REGIME[self]

    @property
    def denominator_power(self) -> int:
        return 3 if self.is_differentiated else 1

    @classmethod
    def for_regime(cls, regime: Regime | str, variant: Variant | str) -> 'KernelKind':
        """Kernel in the limit of the given regime for the given ensemble variant."""
        kind = {Regime.BULK: cls.SINE, Regime.SOFT: cls.AIRY, Regime.HARD: cls.BESSEL}[Regime(regime)]
        if Variant(variant) is Variant.REAL:
            return _DIFFERENTIATED[kind]
        return kind


_BASE = {
    KernelKind.SINE: KernelKind.SINE,
    KernelKind.AIRY: KernelKind.AIRY,
    KernelKind.BESSEL: KernelKind.BESSEL,
    KernelKind.SINE_DIFF: KernelKind.SINE,
    KernelKind.AIRY_DIFF: KernelKind.AIRY,
    KernelKind.BESSEL_DIFF: KernelKind.BESSEL,
}
_DIFFERENTIATED = {
    KernelKind.SINE: KernelKind.SINE_DIFF,
    KernelKind.AIRY: KernelKind.AIRY_DIFF,
    KernelKind.BESSEL: KernelKind.BESSEL_DIFF,
}
_REGIME = {
    KernelKind.SINE: Regime.BULK,
    KernelKind.SINE_DIFF: Regime.BULK,
    KernelKind.AIRY: Regime.SOFT,
    KernelKind.AIRY_DIFF: Regime.SOFT,
    KernelKind.BESSEL: Regime.HARD,
    KernelKind.BESSEL_DIFF: Regime.HARD,
}


def _coordinate(value: Any) -> Fraction:
    try:
        return to_rational(value)
    except TypeError as e:
        raise ValueError(str(e)) from e


class KernelPoint(BaseModel):
    """A kernel evaluation request.

    Attributes:
        kind: Which of the six kernels.
        x: First argument; BigFloat inputs are stored exactly.
        y: Second argument.
        alpha: Bessel order, ignored by the other kinds.
        near_diag_threshold: Below this |x - y| the Taylor expansion about the diagonal is used.
    """

    model_config = ConfigDict(extra='forbid', frozen=True, arbitrary_types_allowed=True)

    kind: KernelKind
    x: Fraction
    y: Fraction
    alpha: int = Field(default=0, ge=0)
    near_diag_threshold: float = Field(default=DEFAULT_NEAR_DIAG_THRESHOLD, gt=0)

    @field_validator('x', 'y', mode='before')
    @classmethod
    def _parse_coordinate(cls, value: Any) -> Fraction:
        return _coordinate(value)

    @model_validator(mode='after')
    def check_domain(self) -> 'KernelPoint':
        """The Bessel kernels live on the positive half-line."""
        if self.kind.is_bessel and (self.x <= 0 or self.y <= 0):
            raise ValueError(f'{self.kind.value} kernel needs x > 0 and y > 0, got x={self.x}, y={self.y}')
        return self


# Marchenko-Pastur density


def mp_density(xi: Any, prec: int | None = None) -> mpmath.mpf:
    """g(xi) = sqrt(xi (4 - xi)) / (2 pi xi) on 0 < xi < 4."""
    bits = resolve_precision(prec)
    with mpmath.workprec(bits):
        x = to_bigfloat(xi, bits)
        if not 0 < x < 4:
            raise KernelDomainError(f'Marchenko-Pastur density is supported on (0, 4), got xi={xi}')
        return mpmath.sqrt(x * (4 - x)) / (2 * mpmath.pi * x)


# Building blocks


def _pair(kind: KernelKind, t: mpmath.mpf, alpha: int, policy: SeriesPolicy) -> tuple[mpmath.mpf, mpmath.mpf]:
    """(f, g) with K = (f(x) g(y) - g(x) f(y)) / (x - y): (Ai, Ai') or (J(sqrt t), sqrt t J'(sqrt t) / 2)."""
    if kind.base is KernelKind.AIRY:
        return airy(t, policy)
    root = mpmath.sqrt(t)
    value, derivative = bessel_j(alpha, root, policy)
    return value, root * derivative / 2


def _taylor_pair(kind: KernelKind, c: mpmath.mpf, alpha: int, policy: SeriesPolicy) -> tuple[list, list]:
    """Taylor coefficients of (f, g) about c, up to TAYLOR_ORDER."""
    n = TAYLOR_ORDER
    f0, g0 = _pair(kind, c, alpha, policy)
    if kind.base is KernelKind.AIRY:
        # Ai'' = (c + t) Ai
        a = [f0, g0]
        for k in range(n):
            prev = a[k - 1] if k >= 1 else 0
            a.append((c * a[k] + prev) / ((k + 2) * (k + 1)))
        return a[: n + 1], [(k + 1) * a[k + 1] for k in range(n + 1)]
    # phi(t) = J(sqrt t) solves 4 t^2 phi'' + 4 t phi' + (t - alpha^2) phi = 0
    a = [f0, g0 / c]
    for k in range(n):
        prev = a[k - 1] if k >= 1 else 0
        num = 4 * c * (k + 1) * (2 * k + 1) * a[k + 1] + (4 * k * k + c - alpha * alpha) * a[k] + prev
        a.append(-num / (4 * c * c * (k + 2) * (k + 1)))
    d = [(k + 1) * a[k + 1] for k in range(n + 1)]
    # psi = t phi'
    return a[: n + 1], [c * d[k] + (d[k - 1] if k >= 1 else 0) for k in range(n + 1)]


def _numerator(kind: KernelKind, fx: Any, gx: Any, fy: Any, gy: Any, x: Any, y: Any, alpha: int) -> Any:
    """Numerator of K(x, y) over (x - y)^p, p = kind.denominator_power.

    Written with ring operations only, so it evaluates both numbers and truncated series in h.
    """
    wronskian = fx * gy - gx * fy
    if not kind.is_differentiated:
        return wronskian
    if kind is KernelKind.AIRY_DIFF:
        return 2 * wronskian + (x - y) * ((x + y) * (fx * fy) - 2 * (gx * gy))
    quarter = mpmath.mpf(0.25)
    return (x + y) * wronskian + (x - y) * ((2 * alpha * alpha - x - y) * (fx * fy) * quarter - 2 * (gx * gy))


def _sine_direct(kind: KernelKind, d: mpmath.mpf) -> mpmath.mpf:
    pd = mpmath.pi * d
    if kind is KernelKind.SINE:
        return mpmath.sin(pd) / pd
    return 2 * mpmath.sin(pd) / (pd * d * d) - 2 * mpmath.cos(pd) / (d * d)


def _sine_taylor(kind: KernelKind, d: mpmath.mpf) -> mpmath.mpf:
    pd2 = (mpmath.pi * d) ** 2
    if kind is KernelKind.SINE:
        return 1 - pd2 / 6
    return 2 * mpmath.pi**2 / 3 - mpmath.pi**2 * pd2 / 15


def _taylor_terms(
    kind: KernelKind, c: mpmath.mpf, alpha: int, policy: SeriesPolicy
) -> tuple[mpmath.mpf, mpmath.mpf]:
    """(K0, K2) with K(c + h, c - h) = K0 + K2 h^2 + O(h^4)."""
    n = TAYLOR_ORDER
    f, g = _taylor_pair(kind, c, alpha, policy)
    zero = mpmath.mpf(0)
    sign = [(-1) ** k for k in range(n + 1)]
    fx = TruncatedSeries(f, n)
    gx = TruncatedSeries(g, n)
    fy = TruncatedSeries([f[k] * sign[k] for k in range(n + 1)], n)
    gy = TruncatedSeries([g[k] * sign[k] for k in range(n + 1)], n)
    x = TruncatedSeries([c, mpmath.mpf(1)] + [zero] * (n - 1), n)
    y = TruncatedSeries([c, mpmath.mpf(-1)] + [zero] * (n - 1), n)
    numerator = _numerator(kind, fx, gx, fy, gy, x, y, alpha)
    p = kind.denominator_power
    scale = mpmath.mpf(2) ** p
    return numerator[p] / scale, numerator[p + 2] / scale


# Evaluation


def kernel_eval(p: KernelPoint, prec: int | None = None) -> mpmath.mpf:
    """Evaluate the kernel at a validated point.

    Off the diagonal the closed forms are used with guard bits covering the cancellation in the numerator;
    within `near_diag_threshold` the quadratic Taylor expansion about the diagonal.
    """
    bits = resolve_precision(prec)
    policy = SeriesPolicy(precision=bits)
    with mpmath.workprec(bits):
        x = to_bigfloat(p.x, bits)
        y = to_bigfloat(p.y, bits)
        d = x - y
        near = abs(d) < p.near_diag_threshold
        if p.kind.base is KernelKind.SINE:
            return _sine_taylor(p.kind, d) if near else _sine_direct(p.kind, d)
        if near:
            k0, k2 = _taylor_terms(p.kind, (x + y) / 2, p.alpha, policy)
            return k0 + k2 * (d / 2) ** 2
        power = p.kind.denominator_power
        guard = power * max(0, -int(mpmath.floor(mpmath.log(abs(d), 2)))) + 20
        inner = SeriesPolicy(precision=bits + guard, crossover=policy.radius)
        with mpmath.workprec(bits + guard):
            fx, gx = _pair(p.kind, x, p.alpha, inner)
            fy, gy = _pair(p.kind, y, p.alpha, inner)
            value = _numerator(p.kind, fx, gx, fy, gy, x, y, p.alpha) / d**power
    with mpmath.workprec(bits):
        return +value


def kernel(
    kind: KernelKind | str, x: Any, y: Any, alpha: int = 0, prec: int | None = None, **kwargs: Any
) -> mpmath.mpf:
    """Shorthand for `kernel_eval(KernelPoint(...))`, raising KernelDomainError on invalid arguments."""
    try:
        point = KernelPoint(kind=KernelKind(kind), x=x, y=y, alpha=alpha, **kwargs)
    except ValidationError as e:
        raise KernelDomainError(f'invalid kernel point: {e}') from e
    return kernel_eval(point, prec)


def diagonal_value(kind: KernelKind | str, x: Any, alpha: int = 0, prec: int | None = None) -> mpmath.mpf:
    """K(x, x) in closed form.

    Sine: 1. Differentiated sine: 2 pi^2 / 3. Airy: Ai'(x)^2 - x Ai(x)^2.
    Bessel: (J'(sqrt x)^2 + (1 - alpha^2 / x) J(sqrt x)^2) / 4. The differentiated Airy and Bessel kernels
    take the leading Taylor coefficient.
    """
    kind = KernelKind(kind)
    bits = resolve_precision(prec)
    policy = SeriesPolicy(precision=bits)
    with mpmath.workprec(bits):
        t = to_bigfloat(x, bits)
        if kind.is_bessel and t <= 0:
            raise KernelDomainError(f'{kind.value} kernel needs x > 0, got {x}')
        if kind is KernelKind.SINE:
            return mpmath.mpf(1)
        if kind is KernelKind.SINE_DIFF:
            return 2 * mpmath.pi**2 / 3
        if kind is KernelKind.AIRY:
            ai, aip = airy(t, policy)
            return aip * aip - t * ai * ai
        if kind is KernelKind.BESSEL:
            j, jp = bessel_j(alpha, mpmath.sqrt(t), policy)
            return (jp * jp + (1 - mpmath.mpf(alpha * alpha) / t) * j * j) / 4
        k0, _ = _taylor_terms(kind, t, alpha, policy)
        return k0


# Differential operators


def apply_D_numeric(
    regime: Regime | str,
    x: Any,
    y: Any,
    h: Any = Fraction(1, 10_000),
    alpha: int = 0,
    tol: float = 1e-6,
    prec: int | None = None,
) -> mpmath.mpf:
    """Apply D to the regime's complex-ensemble kernel by central differences with step h.

    The truncation error is estimated by repeating the differences with step 2h; `StepSizeError` is raised
    when the estimate exceeds `tol` or when h is not small against |x - y|.
    """
    regime = Regime(regime)
    kind = KernelKind.for_regime(regime, Variant.COMPLEX)
    bits = resolve_precision(prec)
    with mpmath.workprec(bits):
        xb, yb, hb = to_bigfloat(x, bits), to_bigfloat(y, bits), to_bigfloat(h, bits)
        if hb <= 0:
            raise StepSizeError(f'step must be positive, got h={h}')
        if 4 * hb > abs(xb - yb):
            raise StepSizeError(f'step h={h} is not small against |x - y| = {mpmath.nstr(abs(xb - yb), 6)}')
        if regime is Regime.HARD and min(xb, yb) - 2 * hb <= 0:
            raise StepSizeError(f'step h={h} leaves the positive half-line at x={x}, y={y}')

        def k(s: mpmath.mpf, t: mpmath.mpf) -> mpmath.mpf:
            return kernel_eval(KernelPoint(kind=kind, x=s, y=t, alpha=alpha), bits)

        def differences(step: mpmath.mpf) -> mpmath.mpf:
            dx = (k(xb + step, yb) - k(xb - step, yb)) / (2 * step)
            dy = (k(xb, yb + step) - k(xb, yb - step)) / (2 * step)
            if regime is Regime.HARD:
                return (yb * dy - xb * dx) / (xb - yb)
            return (dy - dx) / (xb - yb)

        value = differences(hb)
        # central differences are O(h^2): the h vs 2h gap is three times the error at h
        estimate = abs(differences(2 * hb) - value) / 3
        logger.debug(f'D_{regime.value} at ({x}, {y}): error estimate {mpmath.nstr(estimate, 3)}')
        if estimate > tol:
            raise StepSizeError(f'estimated truncation error {mpmath.nstr(estimate, 3)} exceeds {tol} at h={h}')
        return value


# Limits


def predicted_limit(
    regime: Regime | str, ensemble: EnsembleSpec, mu: Any, nu: Any, alpha: int = 0, prec: int | None = None
) -> mpmath.mpf:
    """exp(b*) K(mu, nu), with K the kernel of the regime for the ensemble variant."""
    kind = KernelKind.for_regime(regime, ensemble.variant)
    bits = resolve_precision(prec)
    value = kernel_eval(KernelPoint(kind=kind, x=mu, y=nu, alpha=alpha), bits)
    with mpmath.workprec(bits):
        return mpmath.exp(to_bigfloat(ensemble.bstar, bits)) * value


def bulk_unscaled_limit(ensemble: EnsembleSpec, xi: Any, mu: Any, nu: Any, prec: int | None = None) -> mpmath.mpf:
    """Bulk limit for the unscaled shift N xi + mu, complex ensembles.

    With rho = sqrt((1 - xi/4) / xi) = pi g(xi) this is exp(b*) (rho / pi) sin(rho (mu - nu)) / (rho (mu - nu)),
    i.e. exp(b*) g(xi) S(g(xi) mu, g(xi) nu).
    """
    if ensemble.variant is not Variant.COMPLEX:
        raise ValueError('the unscaled bulk limit is stated for complex ensembles')
    bits = resolve_precision(prec)
    with mpmath.workprec(bits):
        x = to_bigfloat(xi, bits)
        if not 0 < x < 4:
            raise KernelDomainError(f'bulk points lie in (0, 4), got xi={xi}')
        rho = mpmath.sqrt((1 - x / 4) / x)
        t = rho * (to_bigfloat(mu, bits) - to_bigfloat(nu, bits))
        sinc = mpmath.mpf(1) if t == 0 else mpmath.sin(t) / t
        return mpmath.exp(to_bigfloat(ensemble.bstar, bits)) * rho / mpmath.pi * sinc

