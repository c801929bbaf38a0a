"""Exact scalars, bigfloat conversions and bivariate polynomials in the shift parameters mu and nu.

Every exact computation in the package is carried by `fractions.Fraction` (exported here as `Rational`)
and by `BivariatePolynomial`. Numerical evaluation uses `mpmath.mpf` / `mpmath.mpc` (exported as `BigFloat`),
whose exponent range is unbounded, so magnitudes like e^{4N} never overflow.
"""

import math
from collections.abc import Iterable, Mapping
from fractions import Fraction
from typing import Any, Literal, Union

import mpmath
from mpmath.libmp import from_rational, round_nearest

Rational = Fraction
BigFloat = mpmath.mpf
Exponent = tuple[int, int]
Coefficient = Union[Fraction, int]
Numeric = Union[Fraction, int, mpmath.mpf, mpmath.mpc]

# Custom Exceptions


class PolynomialFormatError(Exception):
    """Custom exception for malformed serialized polynomials."""

    pass


# Scalars


def to_rational(value: Any) -> Fraction:
    """Convert `value` exactly to a Fraction.

    Accepts Fractions, integers, finite floats, finite mpf values and strings of the form
    'p/q', '17', '-0.125' or '1e-3'.

    Raises:
        ValueError: If the value is not finite or the string is not a rational literal.
        TypeError: If the value has an unsupported type.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError('booleans are not rational inputs')
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f'cannot convert non-finite float {value!r} to a rational')
        return Fraction(value)
    if isinstance(value, mpmath.mpf):
        return bigfloat_to_rational(value)
    if isinstance(value, str):
        text = value.strip()
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as e:
            raise ValueError(f"'{value}' is not a rational literal: {e}") from e
    raise TypeError(f'cannot convert {type(value).__name__} to a rational')


def to_bigfloat(value: Any, prec: int | None = None) -> mpmath.mpf:
    """Round `value` to the nearest BigFloat with `prec` bits (the current mpmath precision if omitted).

    Rational inputs are rounded correctly, i.e. exactly once.
    """
    if isinstance(value, mpmath.mpf) and prec is None:
        return value
    q = to_rational(value)
    bits = mpmath.mp.prec if prec is None else prec
    return mpmath.mp.make_mpf(from_rational(q.numerator, q.denominator, bits, round_nearest))


def bigfloat_to_rational(x: mpmath.mpf) -> Fraction:
    """Return the exact rational value of a finite BigFloat."""
    if not mpmath.isfinite(x):
        raise ValueError(f'cannot convert non-finite value {x} to a rational')
    sign, man, exp, _ = x._mpf_
    value = Fraction(int(man)) * Fraction(2) ** exp
    return -value if sign else value


def as_numeric(value: Any) -> Numeric:
    """Normalize an evaluation point: exact inputs stay exact, everything else becomes mpf or mpc."""
    if isinstance(value, (Fraction, mpmath.mpf, mpmath.mpc)):
        return value
    if isinstance(value, int) and not isinstance(value, bool):
        return Fraction(value)
    if isinstance(value, complex):
        return mpmath.mpc(value)
    if isinstance(value, str):
        return to_rational(value)
    return mpmath.mpf(value)


# Polynomials


class BivariatePolynomial:
    """Exact polynomial in mu and nu with rational coefficients.

    `terms` maps exponent pairs (i, j), the degrees in mu and nu, to nonzero coefficients.
    Instances are immutable and hashable. Arithmetic with integers and Fractions is supported
    on both sides.
    """

    __slots__ = ('_terms', '_hash')

    def __init__(self, terms: Mapping[Exponent, Coefficient] | None = None):
        cleaned: dict[Exponent, Fraction] = {}
        for key, c in (terms or {}).items():
            i, j = key
            if i < 0 or j < 0:
                raise ValueError(f'negative exponent pair {key} in polynomial term')
            c = Fraction(c)
            if c:
                cleaned[(int(i), int(j))] = c
        self._terms = cleaned
        self._hash: int | None = None

    @classmethod
    def _wrap(cls, terms: dict[Exponent, Fraction]) -> 'BivariatePolynomial':
        obj = cls.__new__(cls)
        obj._terms = terms
        obj._hash = None
        return obj

    @classmethod
    def zero(cls) -> 'BivariatePolynomial':
        return cls._wrap({})

    @classmethod
    def constant(cls, c: Coefficient) -> 'BivariatePolynomial':
        return cls({(0, 0): c})

    @classmethod
    def monomial(cls, i: int, j: int, c: Coefficient = 1) -> 'BivariatePolynomial':
        return cls({(i, j): c})

    @classmethod
    def mu(cls) -> 'BivariatePolynomial':
        return cls._wrap({(1, 0): Fraction(1)})

    @classmethod
    def nu(cls) -> 'BivariatePolynomial':
        return cls._wrap({(0, 1): Fraction(1)})

    @classmethod
    def mu_nu_power(cls, k: int) -> 'BivariatePolynomial':
        """Return (mu nu)^k."""
        return cls._wrap({(k, k): Fraction(1)})

    # Inspection

    @property
    def terms(self) -> dict[Exponent, Fraction]:
        return dict(self._terms)

    def coeff(self, i: int, j: int) -> Fraction:
        return self._terms.get((i, j), Fraction(0))

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def degree_mu(self) -> int:
        return max((i for i, _ in self._terms), default=0)

    @property
    def degree_nu(self) -> int:
        return max((j for _, j in self._terms), default=0)

    @property
    def total_degree(self) -> int:
        return max((i + j for i, j in self._terms), default=0)

    def nu_coefficient(self, j: int) -> 'BivariatePolynomial':
        """Return the coefficient of nu^j as a polynomial in mu alone."""
        return BivariatePolynomial._wrap({(i, 0): c for (i, jj), c in self._terms.items() if jj == j})

    def swap(self) -> 'BivariatePolynomial':
        """Exchange the roles of mu and nu."""
        return BivariatePolynomial._wrap({(j, i): c for (i, j), c in self._terms.items()})

    def is_symmetric(self) -> bool:
        return self == self.swap()

    def reduce_chiral(self, a: int, b: int) -> 'BivariatePolynomial':
        """Divide by mu^a nu^b and halve every exponent.

        Maps a chiral-normalized value, a polynomial in mu^2 and nu^2 times (mu nu)^(n-m),
        to the covariance normalization.

        Raises:
            ValueError: If some term is not divisible by mu^a nu^b or leaves an odd exponent.
        """
        out: dict[Exponent, Fraction] = {}
        for (i, j), c in self._terms.items():
            ri, rj = i - a, j - b
            if ri < 0 or rj < 0 or ri % 2 or rj % 2:
                raise ValueError(f'term mu^{i} nu^{j} does not reduce under (mu nu) division by ({a}, {b})')
            out[(ri // 2, rj // 2)] = c
        return BivariatePolynomial._wrap(out)

    # Arithmetic

    @staticmethod
    def _coerce(other: Any) -> 'BivariatePolynomial | None':
        if isinstance(other, BivariatePolynomial):
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return BivariatePolynomial.constant(other)
        return None

    def __add__(self, other: Any) -> 'BivariatePolynomial':
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        out = dict(self._terms)
        for key, c in rhs._terms.items():
            s = out.get(key, 0) + c
            if s:
                out[key] = s
            else:
                out.pop(key, None)
        return BivariatePolynomial._wrap(out)

    __radd__ = __add__

    def __neg__(self) -> 'BivariatePolynomial':
        return BivariatePolynomial._wrap({k: -c for k, c in self._terms.items()})

    def __sub__(self, other: Any) -> 'BivariatePolynomial':
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        return self + (-rhs)

    def __rsub__(self, other: Any) -> 'BivariatePolynomial':
        lhs = self._coerce(other)
        if lhs is None:
            return NotImplemented
        return lhs - self

    def scale(self, c: Coefficient) -> 'BivariatePolynomial':
        c = Fraction(c)
        if not c:
            return BivariatePolynomial.zero()
        return BivariatePolynomial._wrap({k: v * c for k, v in self._terms.items()})

    def __mul__(self, other: Any) -> 'BivariatePolynomial':
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.scale(other)
        if not isinstance(other, BivariatePolynomial):
            return NotImplemented
        out: dict[Exponent, Fraction] = {}
        for (i1, j1), c1 in self._terms.items():
            for (i2, j2), c2 in other._terms.items():
                key = (i1 + i2, j1 + j2)
                out[key] = out.get(key, 0) + c1 * c2
        return BivariatePolynomial._wrap({k: c for k, c in out.items() if c})

    __rmul__ = __mul__

    def __truediv__(self, other: Any) -> 'BivariatePolynomial':
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.scale(1 / Fraction(other))
        return NotImplemented

    def __pow__(self, k: int) -> 'BivariatePolynomial':
        if k < 0:
            raise ValueError('negative powers are not polynomials')
        result = BivariatePolynomial.constant(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def shift(self, i: int, j: int) -> 'BivariatePolynomial':
        """Multiply by the monomial mu^i nu^j."""
        return BivariatePolynomial._wrap({(a + i, b + j): c for (a, b), c in self._terms.items()})

    # Comparison

    def __eq__(self, other: object) -> bool:
        if isinstance(other, BivariatePolynomial):
            return self._terms == other._terms
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self._terms == BivariatePolynomial.constant(other)._terms
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __bool__(self) -> bool:
        return bool(self._terms)

    # Evaluation

    def evaluate(self, mu: Any, nu: Any) -> Numeric:
        """Evaluate by nested Horner schemes, first in nu then in mu.

        Exact when both points are rational; otherwise BigFloat at the current mpmath precision.
        """
        mu, nu = as_numeric(mu), as_numeric(nu)
        exact = isinstance(mu, Fraction) and isinstance(nu, Fraction)
        zero: Numeric = Fraction(0) if exact else mpmath.mpf(0)
        if not self._terms:
            return zero
        if not exact:
            mu = mu if isinstance(mu, (mpmath.mpf, mpmath.mpc)) else to_bigfloat(mu)
            nu = nu if isinstance(nu, (mpmath.mpf, mpmath.mpc)) else to_bigfloat(nu)
        rows: dict[int, dict[int, Fraction]] = {}
        for (i, j), c in self._terms.items():
            rows.setdefault(i, {})[j] = c
        result = zero
        for i in range(self.degree_mu, -1, -1):
            row = rows.get(i, {})
            inner = zero
            for j in range(max(row, default=0), -1, -1):
                c = row.get(j, 0)
                inner = inner * nu + (c if exact else to_bigfloat(c))
            result = result * mu + inner
        return result

    # Serialization

    def to_terms(self) -> list[list[Any]]:
        """Return the JSON term list [[i, j, 'num/den'], ...] ordered by (i, j)."""
        return [[i, j, f'{c.numerator}/{c.denominator}'] for (i, j), c in sorted(self._terms.items())]

    @classmethod
    def from_terms(cls, terms: Iterable[Any]) -> 'BivariatePolynomial':
        """Parse a JSON term list as produced by `to_terms`."""
        out: dict[Exponent, Fraction] = {}
        for entry in terms:
            if not isinstance(entry, (list, tuple)) or len(entry) != 3:
                raise PolynomialFormatError(f'term must be [i, j, "num/den"], got {entry!r}')
            i, j, raw = entry
            if not isinstance(i, int) or not isinstance(j, int) or i < 0 or j < 0:
                raise PolynomialFormatError(f'exponents must be non-negative integers, got {entry!r}')
            if (i, j) in out:
                raise PolynomialFormatError(f'duplicate exponent pair ({i}, {j})')
            try:
                out[(i, j)] = to_rational(raw)
            except (ValueError, TypeError) as e:
                raise PolynomialFormatError(f'invalid coefficient in {entry!r}: {e}') from e
        return cls(out)

    def to_string(self) -> str:
        """Render as e.g. 'mu*nu - mu - nu + 5/2', highest total degree first."""
        if not self._terms:
            return '0'
        parts: list[str] = []
        for (i, j), c in sorted(self._terms.items(), key=lambda t: (-(t[0][0] + t[0][1]), -t[0][0])):
            factors = [name if k == 1 else f'{name}^{k}' for name, k in (('mu', i), ('nu', j)) if k]
            mag = abs(c)
            if factors:
                body = '*'.join(factors if mag == 1 else [str(mag), *factors])
            else:
                body = str(mag)
            if not parts:
                parts.append(f'-{body}' if c < 0 else body)
            else:
                parts.append(f'- {body}' if c < 0 else f'+ {body}')
        return ' '.join(parts)

    def __str__(self) -> str:
        return self.to_string()

    def __repr__(self) -> str:
        return f'BivariatePolynomial({self.to_string()!r})'


def poly_arith(a: BivariatePolynomial, b: BivariatePolynomial, op: Literal['add', 'sub', 'mul']) -> BivariatePolynomial:
    """Exact sum, difference or product of two polynomials."""
    if op == 'add':
        return a + b
    if op == 'sub':
        return a - b
    if op == 'mul':
        return a * b
    raise ValueError(f"Invalid operation '{op}'. Expected one of 'add', 'sub', 'mul'.")


def poly_eval(p: BivariatePolynomial, mu: Any, nu: Any) -> Numeric:
    """Evaluate `p` at (mu, nu); exact for rational inputs."""
    return p.evaluate(mu, nu)
