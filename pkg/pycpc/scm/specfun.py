"""Laguerre polynomials and the Bessel and Airy functions used by the kernels and the contour integrals.

Each function has a power-series branch, summed with enough guard bits to absorb cancellation, and a
Poincare asymptotic branch for large arguments. The switch happens at the crossover radius of a
`SeriesPolicy`, by default max(30, precision / 2) in the natural variable of each function
(|z| for I, x for J, zeta = (2/3)|x|^(3/2) for Ai). Beyond that radius the smallest asymptotic term
is below 2^(-precision).
"""

import logging
import math
from collections.abc import Callable
from fractions import Fraction
from typing import Any

import mpmath
from pydantic import BaseModel, ConfigDict, Field

from .helper import MIN_PRECISION, default_precision
from .polycore import to_bigfloat

logger = logging.getLogger(__name__)

LOG2_E = 1.4426950408889634

# Custom Exceptions


class SeriesConvergenceError(Exception):
    """Custom exception for series that do not reach the target precision within the term budget."""

    pass


class SeriesPolicy(BaseModel):
    """Evaluation policy shared by the special functions."""

    model_config = ConfigDict(extra='forbid', frozen=True)

    precision: int = Field(default_factory=default_precision, ge=MIN_PRECISION)
    crossover: float | None = Field(default=None, gt=0)
    max_terms: int = Field(default=100_000, ge=1)

    @property
    def radius(self) -> float:
        """Crossover radius between the series and the asymptotic branch."""
        if self.crossover is not None:
            return self.crossover
        return max(30.0, self.precision / 2)

    @classmethod
    def for_precision(cls, prec: int | None) -> 'SeriesPolicy':
        return cls() if prec is None else cls(precision=prec)


def _policy(policy: SeriesPolicy | None, prec: int | None) -> SeriesPolicy:
    if policy is not None:
        return policy
    return SeriesPolicy.for_precision(prec)


def _big(x: Any, prec: int | None = None) -> mpmath.mpf | mpmath.mpc:
    if isinstance(x, (mpmath.mpf, mpmath.mpc)):
        return x
    if isinstance(x, complex):
        return mpmath.mpc(x)
    if isinstance(x, float):
        return mpmath.mpf(x)
    return to_bigfloat(x, prec)


def _tolerance() -> mpmath.mpf:
    return mpmath.ldexp(1, -mpmath.mp.prec)


# Laguerre


def laguerre(n: int, alpha: int, x: Any) -> Any:
    """Generalized Laguerre polynomial L_n^(alpha)(x) = sum_k binom(n + alpha, n - k) (-x)^k / k!.

    Exact for Fraction (and BivariatePolynomial) arguments, BigFloat otherwise. Any integer alpha with
    n + alpha >= 0 is allowed.
    """
    if n < 0 or n + alpha < 0:
        raise ValueError(f'Laguerre polynomial needs n >= 0 and n + alpha >= 0, got n={n}, alpha={alpha}')
    coeffs = [Fraction(math.comb(n + alpha, n - k), math.factorial(k)) for k in range(n + 1)]
    big = isinstance(x, (mpmath.mpf, mpmath.mpc, float))
    if big:
        x = _big(x)
        scalars: list[Any] = [to_bigfloat(c) for c in coeffs]
    else:
        scalars = list(coeffs)
    y = -x
    result: Any = scalars[n]
    for k in range(n - 1, -1, -1):
        result = result * y + scalars[k]
    return result


# Modified Bessel function I


def _asymptotic_coefficients(alpha: int) -> Callable[[int, Any], Any]:
    """Return a_k(alpha) = prod_{j<=k} (4 alpha^2 - (2j - 1)^2) / (k! 8^k) as a recurrence step."""
    mu4 = 4 * alpha * alpha

    def step(k: int, prev: Any) -> Any:
        return prev * (mu4 - (2 * k - 1) ** 2) / (8 * k)

    return step


def bessel_i_series(alpha: int, z: Any, policy: SeriesPolicy | None = None, prec: int | None = None) -> Any:
    """I_alpha(z) = sum_k (z/2)^(2k + alpha) / (k! (k + alpha)!)."""
    pol = _policy(policy, prec)
    z = _big(z, pol.precision)
    guard = int(LOG2_E * 2 * float(abs(z))) + 20 if isinstance(z, mpmath.mpc) else 20
    with mpmath.workprec(pol.precision + guard):
        half = z / 2
        q = half * half
        term = half**alpha / mpmath.factorial(alpha)
        total = term
        tol = _tolerance()
        k = 0
        while True:
            k += 1
            if k > pol.max_terms:
                raise SeriesConvergenceError(f'I_{alpha} series did not converge in {pol.max_terms} terms at z={z}')
            term = term * q / (k * (k + alpha))
            total += term
            if k > abs(half) and abs(term) <= tol * abs(total):
                break
    with mpmath.workprec(pol.precision):
        return +total


def bessel_i_asymptotic(alpha: int, z: Any, policy: SeriesPolicy | None = None, prec: int | None = None) -> Any:
    """Large-|z| expansion of I_alpha(z) for Re z >= 0.

    I(z) ~ e^z / sqrt(2 pi z) sum (-1)^k a_k / z^k, plus +-i (-1)^alpha e^(-z) / sqrt(2 pi z) sum a_k / z^k
    off the real axis, the sign following Im z.
    """
    pol = _policy(policy, prec)
    z = _big(z, pol.precision)
    with mpmath.workprec(pol.precision + 20):
        if mpmath.re(z) < 0:
            raise ValueError('the asymptotic branch of I_alpha is used for Re z >= 0 only')
        step = _asymptotic_coefficients(alpha)
        tol = _tolerance()
        a = mpmath.mpf(1)
        inv = 1 / z
        power = mpmath.mpf(1)
        dominant = mpmath.mpf(1)
        recessive = mpmath.mpf(1)
        prev_size = mpmath.inf
        for k in range(1, pol.max_terms + 1):
            a = step(k, a)
            power = power * inv
            term = a * power
            size = abs(term)
            if size > prev_size:
                raise SeriesConvergenceError(f'asymptotic series for I_{alpha} diverged before converging at z={z}')
            dominant += (-1) ** k * term
            recessive += term
            if size <= tol:
                break
            prev_size = size
        else:
            raise SeriesConvergenceError(f'asymptotic series for I_{alpha} needs more than {pol.max_terms} terms')
        root = mpmath.sqrt(2 * mpmath.pi * z)
        value = mpmath.exp(z) / root * dominant
        if isinstance(z, mpmath.mpc) and mpmath.im(z) != 0:
            sign = 1 if mpmath.im(z) > 0 else -1
            value += sign * 1j * (-1) ** alpha * mpmath.exp(-z) / root * recessive
    with mpmath.workprec(pol.precision):
        return +value


def bessel_i(alpha: int, z: Any, policy: SeriesPolicy | None = None, prec: int | None = None) -> Any:
    """Modified Bessel function I_alpha(z) of integer order alpha >= 0, entire in z."""
    if alpha < 0:
        raise ValueError(f'order must be a non-negative integer, got {alpha}')
    pol = _policy(policy, prec)
    with mpmath.workprec(pol.precision):
        z = _big(z, pol.precision)
        if abs(z) < pol.radius:
            return bessel_i_series(alpha, z, pol)
        if mpmath.re(z) < 0:
            # I_alpha(-z) = (-1)^alpha I_alpha(z)
            return (-1) ** alpha * bessel_i_asymptotic(alpha, -z, pol)
        return bessel_i_asymptotic(alpha, z, pol)


def bessel_i_even(alpha: int, w: Any, policy: SeriesPolicy | None = None, prec: int | None = None) -> Any:
    """sum_k w^k / ((k + alpha)! k!) = u^(-alpha) I_alpha(2u) with u^2 = w, single-valued in w."""
    pol = _policy(policy, prec)
    with mpmath.workprec(pol.precision):
        w = _big(w, pol.precision)
        u = mpmath.sqrt(w)
        if 2 * abs(u) >= pol.radius:
            return bessel_i(alpha, 2 * u, pol) / u**alpha
    guard = int(3 * float(abs(u))) + 30
    with mpmath.workprec(pol.precision + guard):
        term = 1 / mpmath.factorial(alpha)
        total = term
        tol = _tolerance()
        k = 0
        while True:
            k += 1
            if k > pol.max_terms:
                raise SeriesConvergenceError(f'even Bessel series did not converge in {pol.max_terms} terms at w={w}')
            term = term * w / (k * (k + alpha))
            total += term
            if k > abs(u) and abs(term) <= tol * abs(total):
                break
    with mpmath.workprec(pol.precision):
        return +total


# Bessel function J


def bessel_j_series(alpha: int, x: Any, policy: SeriesPolicy | None = None, prec: int | None = None) -> mpmath.mpf:
    """J_alpha(x) = sum_k (-1)^k (x/2)^(2k + alpha) / (k! (k + alpha)!)."""
    pol = _policy(policy, prec)
    x = _big(x, pol.precision)
    guard = int(LOG2_E * float(abs(x))) + 20
    with mpmath.workprec(pol.precision + guard):
        half = x / 2
        q = -half * half
        term = half**alpha / mpmath.factorial(alpha)
        total = term
        tol = _tolerance()
        k = 0
        while True:
            k += 1
            if k > pol.max_terms:
                raise SeriesConvergenceError(f'J_{alpha} series did not converge in {pol.max_terms} terms at x={x}')
            term = term * q / (k * (k + alpha))
            total += term
            if k > abs(half) and abs(term) <= tol * max(abs(total), tol):
                break
    with mpmath.workprec(pol.precision):
        return +total


def bessel_j_asymptotic(alpha: int, x: Any, policy: SeriesPolicy | None = None, prec: int | None = None) -> mpmath.mpf:
    """Hankel expansion J(x) ~ sqrt(2 / (pi x)) (P cos w - Q sin w), w = x - alpha pi / 2 - pi / 4."""
    pol = _policy(policy, prec)
    x = _big(x, pol.precision)
    with mpmath.workprec(pol.precision + 20):
        if x <= 0:
            raise ValueError('the asymptotic branch of J_alpha needs x > 0')
        step = _asymptotic_coefficients(alpha)
        tol = _tolerance()
        a = mpmath.mpf(1)
        power = mpmath.mpf(1)
        p_sum = mpmath.mpf(1)
        q_sum = mpmath.mpf(0)
        prev_size = mpmath.inf
        for k in range(1, pol.max_terms + 1):
            a = step(k, a)
            power = power / x
            term = a * power
            size = abs(term)
            if size > prev_size:
                raise SeriesConvergenceError(f'Hankel expansion for J_{alpha} diverged before converging at x={x}')
            # a_k / x^k enters P for even k and Q for odd k, with sign (-1)^(k // 2)
            signed = term if (k // 2) % 2 == 0 else -term
            if k % 2:
                q_sum += signed
            else:
                p_sum += signed
            if size <= tol:
                break
            prev_size = size
        else:
            raise SeriesConvergenceError(f'Hankel expansion for J_{alpha} needs more than {pol.max_terms} terms')
        w = x - alpha * mpmath.pi / 2 - mpmath.pi / 4
        value = mpmath.sqrt(2 / (mpmath.pi * x)) * (p_sum * mpmath.cos(w) - q_sum * mpmath.sin(w))
    with mpmath.workprec(pol.precision):
        return +value


def _bessel_j_value(alpha: int, x: mpmath.mpf, pol: SeriesPolicy) -> mpmath.mpf:
    if alpha < 0:
        # J_{-a} = (-1)^a J_a for integer order
        return (-1) ** alpha * _bessel_j_value(-alpha, x, pol)
    if x < pol.radius:
        return bessel_j_series(alpha, x, pol)
    return bessel_j_asymptotic(alpha, x, pol)


def bessel_j(
    alpha: int, x: Any, policy: SeriesPolicy | None = None, prec: int | None = None
) -> tuple[mpmath.mpf, mpmath.mpf]:
    """Return (J_alpha(x), J_alpha'(x)) for integer alpha >= 0 and real x >= 0."""
    if alpha < 0:
        raise ValueError(f'order must be a non-negative integer, got {alpha}')
    pol = _policy(policy, prec)
    with mpmath.workprec(pol.precision):
        x = _big(x, pol.precision)
        if x < 0:
            raise ValueError(f'J_alpha is evaluated for x >= 0 only, got {x}')
        value = _bessel_j_value(alpha, x, pol)
        if alpha == 0:
            derivative = -_bessel_j_value(1, x, pol)
        else:
            derivative = (_bessel_j_value(alpha - 1, x, pol) - _bessel_j_value(alpha + 1, x, pol)) / 2
        return value, derivative


# Airy function


def _airy_origin() -> tuple[mpmath.mpf, mpmath.mpf]:
    """Ai(0) and Ai'(0)."""
    ai0 = 1 / (mpmath.cbrt(9) * mpmath.gamma(mpmath.mpf(2) / 3))
    aip0 = -1 / (mpmath.cbrt(3) * mpmath.gamma(mpmath.mpf(1) / 3))
    return ai0, aip0


def _zeta(x: mpmath.mpf) -> mpmath.mpf:
    return 2 * abs(x) ** mpmath.mpf(1.5) / 3


def airy_series(x: Any, policy: SeriesPolicy | None = None, prec: int | None = None) -> tuple[mpmath.mpf, mpmath.mpf]:
    """Maclaurin series of (Ai, Ai') from Ai'' = x Ai: (k + 2)(k + 1) a_(k+2) = a_(k-1)."""
    pol = _policy(policy, prec)
    x = _big(x, pol.precision)
    guard = int(2 * LOG2_E * float(_zeta(x))) + 30
    with mpmath.workprec(pol.precision + guard):
        a0, a1 = _airy_origin()
        coeffs = [a0, a1, mpmath.mpf(0)]
        value = a0 + a1 * x
        derivative = a1
        tol = _tolerance()
        xpow = x  # x^(k-1)
        quiet = 0
        k = 2
        while True:
            k += 1
            if k > pol.max_terms:
                raise SeriesConvergenceError(f'Airy series did not converge in {pol.max_terms} terms at x={x}')
            coeffs.append(coeffs[k - 3] / (k * (k - 1)))
            xpow = xpow * x
            dterm = k * coeffs[k] * xpow
            vterm = dterm * x / k
            value += vterm
            derivative += dterm
            scale = max(abs(value), abs(derivative), tol)
            # a_k vanishes for every third k, so require three consecutive small contributions
            small = abs(vterm) <= tol * scale and abs(dterm) <= tol * scale
            quiet = quiet + 1 if small else 0
            if quiet >= 3 and k > abs(x) ** 1.5:
                break
    with mpmath.workprec(pol.precision):
        return +value, +derivative


def airy_asymptotic(
    x: Any, policy: SeriesPolicy | None = None, prec: int | None = None
) -> tuple[mpmath.mpf, mpmath.mpf]:
    """Large-|x| expansions of (Ai, Ai') in zeta = (2/3)|x|^(3/2), exponential for x > 0, oscillatory for x < 0."""
    pol = _policy(policy, prec)
    x = _big(x, pol.precision)
    with mpmath.workprec(pol.precision + 20):
        if x == 0:
            raise ValueError('the asymptotic branch of Ai needs x != 0')
        zeta = _zeta(x)
        tol = _tolerance()
        u = [mpmath.mpf(1)]
        v = [mpmath.mpf(1)]
        prev_size = mpmath.inf
        for k in range(1, pol.max_terms + 1):
            uk = u[-1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216 * k)
            vk = -uk * (6 * k + 1) / (6 * k - 1)
            size = max(abs(uk), abs(vk)) / zeta**k
            if size > prev_size:
                raise SeriesConvergenceError(f'Airy asymptotic series diverged before converging at x={x}')
            u.append(uk)
            v.append(vk)
            if size <= tol:
                break
            prev_size = size
        else:
            raise SeriesConvergenceError(f'Airy asymptotic series needs more than {pol.max_terms} terms')
        root_pi = mpmath.sqrt(mpmath.pi)
        quarter = abs(x) ** mpmath.mpf(0.25)
        if x > 0:
            su = mpmath.fsum((-1) ** k * u[k] / zeta**k for k in range(len(u)))
            sv = mpmath.fsum((-1) ** k * v[k] / zeta**k for k in range(len(v)))
            decay = mpmath.exp(-zeta)
            value = decay / (2 * root_pi * quarter) * su
            derivative = -quarter * decay / (2 * root_pi) * sv
        else:
            theta = zeta - mpmath.pi / 4
            c, s = mpmath.cos(theta), mpmath.sin(theta)
            ue = mpmath.fsum((-1) ** k * u[2 * k] / zeta ** (2 * k) for k in range((len(u) + 1) // 2))
            uo = mpmath.fsum((-1) ** k * u[2 * k + 1] / zeta ** (2 * k + 1) for k in range(len(u) // 2))
            ve = mpmath.fsum((-1) ** k * v[2 * k] / zeta ** (2 * k) for k in range((len(v) + 1) // 2))
            vo = mpmath.fsum((-1) ** k * v[2 * k + 1] / zeta ** (2 * k + 1) for k in range(len(v) // 2))
            value = (c * ue + s * uo) / (root_pi * quarter)
            derivative = quarter / root_pi * (s * ve - c * vo)
    with mpmath.workprec(pol.precision):
        return +value, +derivative


def airy(x: Any, policy: SeriesPolicy | None = None, prec: int | None = None) -> tuple[mpmath.mpf, mpmath.mpf]:
    """Return (Ai(x), Ai'(x)) for real x."""
    pol = _policy(policy, prec)
    with mpmath.workprec(pol.precision):
        x = _big(x, pol.precision)
        if _zeta(x) < pol.radius:
            return airy_series(x, pol)
        return airy_asymptotic(x, pol)
