"""Exact first and second moments of characteristic polynomials of sample covariance matrices.

For an n x m matrix X with i.i.d. entries, the second-order correlation function is
f(n, m; mu, nu) = E det(X*X - mu) det(X*X - nu). This module computes it

- from the coupled recursions for the chiral block matrix [[mu I_n, X], [X*, mu I_m]] and its deleted minors,
- from the combined chiral recursions in the m- and n-directions,
- from the covariance recursions obtained after the chiral substitution, again in both directions,

and computes the coefficients c_alpha(m) = f(m + alpha, m) / ((m + alpha)! m!) of the generating function
F_alpha(z) both from their coefficient recursion and by expanding the closed form of F_alpha.

The covariance recursions and the generating functions involve mu and nu only through mu nu and mu + nu.
Every such routine is written once over a coefficient ring: `BivariatePolynomial` for results symbolic in
mu and nu, `Fraction` for exact values at a rational point.
"""

import logging
import math
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Any, Literal

import mpmath
from pydantic import BaseModel, ConfigDict, field_serializer, field_validator, model_validator

from .helper import relative_gap, resolve_precision
from .polycore import BivariatePolynomial, PolynomialFormatError, to_bigfloat, to_rational
from .series import ONE, ZERO, TruncatedSeries
from .specfun import laguerre

logger = logging.getLogger(__name__)

Direction = Literal['m', 'n']

# Custom Exceptions


class MomentIndexError(Exception):
    """Custom exception for moment indices outside the supported range."""

    pass


class PrecisionLossError(Exception):
    """Custom exception for numeric recursions that lose more precision than the working budget allows."""

    pass


# Ensembles


class Variant(str, Enum):
    COMPLEX = 'complex'
    REAL = 'real'


class EnsembleSpec(BaseModel):
    """Complex or real sample covariance ensemble with entry fourth moment `b`.

    For the complex variant the real and imaginary parts of each entry have variance 1/2 and fourth moment b,
    so E|X|^4 = 2b + 1/2. For the real variant the entries have variance 1 and fourth moment b.
    """

    model_config = ConfigDict(extra='forbid', frozen=True, arbitrary_types_allowed=True)

    variant: Variant
    b: Fraction

    @field_validator('b', mode='before')
    @classmethod
    def _parse_b(cls, value: Any) -> Fraction:
        try:
            return to_rational(value)
        except TypeError as e:
            raise ValueError(str(e)) from e

    @field_serializer('b')
    def _serialize_b(self, b: Fraction) -> str:
        return f'{b.numerator}/{b.denominator}'

    @model_validator(mode='after')
    def check_fourth_moment(self) -> 'EnsembleSpec':
        """Jensen: the fourth moment is at least the squared variance."""
        floor = Fraction(1, 4) if self.variant is Variant.COMPLEX else Fraction(1)
        if self.b < floor:
            raise ValueError(f'{self.variant.value} ensembles need b >= {floor}, got b = {self.b}')
        return self

    @classmethod
    def of(cls, variant: Variant | str, b: Any) -> 'EnsembleSpec':
        return cls(variant=Variant(variant), b=b)

    @classmethod
    def gaussian(cls, variant: Variant | str) -> 'EnsembleSpec':
        """Gaussian entries: b* vanishes."""
        v = Variant(variant)
        return cls(variant=v, b=Fraction(3, 4) if v is Variant.COMPLEX else Fraction(3))

    @property
    def bstar(self) -> Fraction:
        """Excess fourth moment entering every limit as exp(b*)."""
        if self.variant is Variant.COMPLEX:
            return 2 * (self.b - Fraction(3, 4))
        return self.b - 3

    @property
    def fourth_moment(self) -> Fraction:
        """E|X_ij|^4: 2b + 1/2 (complex) or b (real)."""
        if self.variant is Variant.COMPLEX:
            return 2 * self.b + Fraction(1, 2)
        return self.b

    @property
    def power(self) -> int:
        """Exponent offset p in (1 - z)^(-2k - alpha - p): 2 (complex) or 3 (real)."""
        return 2 if self.variant is Variant.COMPLEX else 3

    @property
    def excess(self) -> int:
        return self.power - 2

    @property
    def label(self) -> str:
        return f'{self.variant.value}(b={self.b})'


# Rings


def _ring(mu: Any, nu: Any) -> tuple[Any, Any]:
    """Return (mu nu, mu + nu) as polynomials, or as Fractions when a rational point is given."""
    if mu is None and nu is None:
        return BivariatePolynomial.mu_nu_power(1), BivariatePolynomial.mu() + BivariatePolynomial.nu()
    if mu is None or nu is None:
        raise ValueError('mu and nu must be given together')
    mu_q, nu_q = to_rational(mu), to_rational(nu)
    return mu_q * nu_q, mu_q + nu_q


def _as_poly(value: Any) -> BivariatePolynomial:
    return value if isinstance(value, BivariatePolynomial) else BivariatePolynomial.constant(value)


def _point(mu: Any, nu: Any) -> tuple[Fraction | None, Fraction | None]:
    if mu is None and nu is None:
        return None, None
    if mu is None or nu is None:
        raise ValueError('mu and nu must be given together')
    return to_rational(mu), to_rational(nu)


def chiral_to_covariance(p: BivariatePolynomial, n: int, m: int) -> BivariatePolynomial:
    """Turn a chiral value into the covariance normalization.

    The chiral value equals (mu nu)^(n-m) times the covariance value with mu, nu replaced by mu^2, nu^2.
    """
    if n >= m:
        return p.reduce_chiral(n - m, n - m)
    return p.shift(m - n, m - n).reduce_chiral(0, 0)


# First moments


def _check_indices(n: int, m: int) -> None:
    if n < 0 or m < 0:
        raise MomentIndexError(f'moment indices must be non-negative, got (n, m) = ({n}, {m})')


@lru_cache(maxsize=256)
def first_moment_recursive(n: int, m: int) -> BivariatePolynomial:
    """Chiral first moment E det([[lam I_n, X], [X*, lam I_m]]) as a polynomial in lam (stored in the mu slot).

    Built with f(n, m) = lam f(n, m-1) - n f(n-1, m-1) from f(n, 0) = lam^n.
    """
    _check_indices(n, m)
    lam = BivariatePolynomial.mu()
    grid: dict[tuple[int, int], BivariatePolynomial] = {}
    for i in range(n + 1):
        grid[(i, 0)] = lam**i
        for j in range(1, m + 1):
            prev = grid[(i - 1, j - 1)] * i if i >= 1 else BivariatePolynomial.zero()
            grid[(i, j)] = lam * grid[(i, j - 1)] - prev
    return grid[(n, m)]


@lru_cache(maxsize=256)
def first_moment_recursive_n(n: int, m: int) -> BivariatePolynomial:
    """Same chiral first moment, built in the n-direction: f(n, m) = lam f(n-1, m) - m f(n-1, m-1), f(0, m) = lam^m."""
    _check_indices(n, m)
    lam = BivariatePolynomial.mu()
    grid: dict[tuple[int, int], BivariatePolynomial] = {(0, j): lam**j for j in range(m + 1)}
    for i in range(1, n + 1):
        for j in range(m + 1):
            prev = grid[(i - 1, j - 1)] * j if j >= 1 else BivariatePolynomial.zero()
            grid[(i, j)] = lam * grid[(i - 1, j)] - prev
    return grid[(n, m)]


def first_moment_covariance(n: int, m: int) -> BivariatePolynomial:
    """E det(lam I_m - X*X) as a polynomial in lam, from the chiral recursion."""
    p = first_moment_recursive(n, m)
    if n >= m:
        return p.reduce_chiral(n - m, 0)
    return p.shift(m - n, 0).reduce_chiral(0, 0)


def first_moment_laguerre(n: int, m: int, lam: Any) -> Any:
    """Return (-1)^m m! L_m^(n-m)(lam) = E det(lam I_m - X*X).

    Exact for rational `lam`; `lam` may also be a BigFloat or a polynomial.

    Raises:
        MomentIndexError: If n < m.
    """
    _check_indices(n, m)
    if n < m:
        raise MomentIndexError(f'the Laguerre formula needs n >= m, got (n, m) = ({n}, {m})')
    if isinstance(lam, (int, str, float)):
        lam = to_rational(lam)
    return laguerre(m, n - m, lam) * ((-1) ** m * math.factorial(m))


# Chiral auxiliary system


class Tag(str, Enum):
    """Deletion patterns of the chiral minors."""

    DOT = '.'
    T01 = '01'
    T10 = '10'
    A = '11A'
    B = '11B'
    C = '11C'


AuxKey = tuple[int, int, Tag, Tag]


class ChiralAuxTable:
    """Chiral values f(n, m, left, right) for 0 <= n <= n_max, 0 <= m <= m_max.

    At most one of the two tags differs from Tag.DOT. Entries outside their defining range read as zero.
    """

    def __init__(self, ensemble: EnsembleSpec, n_max: int, m_max: int, entries: dict[AuxKey, BivariatePolynomial]):
        self.ensemble = ensemble
        self.n_max = n_max
        self.m_max = m_max
        self.entries = entries

    def get(self, n: int, m: int, left: Tag = Tag.DOT, right: Tag = Tag.DOT) -> BivariatePolynomial:
        if n < 0 or m < 0:
            return BivariatePolynomial.zero()
        return self.entries.get((n, m, left, right), BivariatePolynomial.zero())

    def f(self, n: int, m: int) -> BivariatePolynomial:
        return self.get(n, m)

    def covariance(self, n: int, m: int) -> BivariatePolynomial:
        """f(n, m) after the chiral substitution."""
        return chiral_to_covariance(self.f(n, m), n, m)

    def __len__(self) -> int:
        return len(self.entries)


def chiral_system_table(ensemble: EnsembleSpec, n_max: int, m_max: int) -> ChiralAuxTable:
    """Solve the ten coupled chiral recursions over the rectangle [0, n_max] x [0, m_max].

    The real variant carries the extra 11B minors and uses E X^4 = b in place of 2b + 1/2.
    Terms with a negative index are zero; they always come with a vanishing factor.
    """
    _check_indices(n_max, m_max)
    q = ensemble.fourth_moment
    second = (Tag.A, Tag.C, Tag.B) if ensemble.variant is Variant.REAL else (Tag.A, Tag.C)
    simple = second[1:]
    mu, nu = BivariatePolynomial.mu(), BivariatePolynomial.nu()
    munu = mu * nu
    table: dict[AuxKey, BivariatePolynomial] = {}
    zero = BivariatePolynomial.zero()
    dot = Tag.DOT

    def get(n: int, m: int, left: Tag = dot, right: Tag = dot) -> BivariatePolynomial:
        if n < 0 or m < 0:
            return zero
        return table.get((n, m, left, right), zero)

    for n in range(n_max + 1):
        for m in range(m_max + 1):
            # minors with a column deletion on the m side
            if m >= 1:
                table[(n, m, dot, Tag.T01)] = mu * get(n, m - 1) - get(n, m - 1, Tag.T10) * n
                table[(n, m, dot, Tag.T10)] = nu * get(n, m - 1) - get(n, m - 1, Tag.T01) * n
            if m >= 2:
                table[(n, m, dot, Tag.A)] = (
                    munu * get(n, m - 2)
                    - mu * get(n, m - 2, Tag.T01) * n
                    - nu * get(n, m - 2, Tag.T10) * n
                    + get(n - 1, m - 2) * n
                    + get(n, m - 2, Tag.A) * (n * (n - 1))
                )
                for tag in simple:
                    table[(n, m, dot, tag)] = get(n - 1, m - 2) * n + get(n, m - 2, tag) * (n * (n - 1))
            # minors with a row deletion on the n side
            if n >= 1:
                table[(n, m, Tag.T01, dot)] = mu * get(n - 1, m) - get(n - 1, m, dot, Tag.T10) * m
                table[(n, m, Tag.T10, dot)] = nu * get(n - 1, m) - get(n - 1, m, dot, Tag.T01) * m
            if n >= 2:
                table[(n, m, Tag.A, dot)] = (
                    munu * get(n - 2, m)
                    - mu * get(n - 2, m, dot, Tag.T01) * m
                    - nu * get(n - 2, m, dot, Tag.T10) * m
                    + get(n - 2, m - 1) * m
                    + get(n - 2, m, dot, Tag.A) * (m * (m - 1))
                )
                for tag in simple:
                    table[(n, m, tag, dot)] = get(n - 2, m - 1) * m + get(n - 2, m, dot, tag) * (m * (m - 1))
            # the determinant itself
            if m == 0:
                table[(n, 0, dot, dot)] = munu**n
            elif n == 0:
                table[(0, m, dot, dot)] = munu**m
            else:
                pairs = BivariatePolynomial.zero()
                for tag in second:
                    pairs = pairs + get(n, m - 1, tag)
                table[(n, m, dot, dot)] = (
                    munu * get(n, m - 1)
                    - mu * get(n, m - 1, Tag.T01) * n
                    - nu * get(n, m - 1, Tag.T10) * n
                    + get(n - 1, m - 1) * (q * n)
                    + pairs * (n * (n - 1))
                )
    logger.debug(f'chiral system {ensemble.label} solved up to ({n_max}, {m_max}): {len(table)} entries')
    return ChiralAuxTable(ensemble, n_max, m_max, table)


# Combined recursions


def _recursion_grid(
    n: int,
    m: int,
    ensemble: EnsembleSpec,
    direction: Direction,
    *,
    munu: Any,
    linear: Any,
    step: Any,
    chiral: bool,
) -> dict[tuple[int, int], Any]:
    """Fill f over [0, n] x [0, m] with one of the four combined recursions.

    `linear` multiplies the n f(n-1, m-1) (or m f(n-1, m-1)) term: mu^2 + nu^2 in the chiral case,
    mu + nu in the covariance case. `step` multiplies the terms one step back in the recursion direction.
    """
    bstar = ensemble.bstar
    s = ensemble.excess
    grid: dict[tuple[int, int], Any] = {}

    def at(i: int, j: int) -> Any:
        if i < 0 or j < 0:
            return ZERO
        return grid.get((i, j), ZERO)

    for i in range(n + 1):
        for j in range(m + 1):
            if direction == 'm' and j == 0:
                grid[(i, 0)] = munu**i if chiral else munu**0
                continue
            if direction == 'n' and i == 0:
                grid[(0, j)] = munu**j
                continue
            f11, f22, f33 = at(i - 1, j - 1), at(i - 2, j - 2), at(i - 3, j - 3)
            bracket = f11 - f22 * (2 * (i - 1) * (j - 1)) + f33 * ((i - 1) * (i - 2) * (j - 1) * (j - 2))
            if direction == 'm':
                value = (
                    f11 * (i * (i + j + s))
                    - f22 * (i * (i + s) * (i - 1) * (j - 1))
                    + bracket * (bstar * i)
                    + step * at(i, j - 1)
                    + step * at(i - 1, j - 2) * (i * (j - 1))
                    - linear * f11 * i
                )
            else:
                value = (
                    f11 * ((i + j + s) * j)
                    - f22 * ((i - 1) * (j + s) * j * (j - 1))
                    + bracket * (bstar * j)
                    + step * at(i - 1, j)
                    + step * at(i - 2, j - 1) * ((i - 1) * j)
                    - linear * f11 * j
                )
            grid[(i, j)] = value
    return grid


def _covariance_grid(
    ensemble: EnsembleSpec, n: int, m: int, direction: Direction, mu: Any = None, nu: Any = None
) -> dict[tuple[int, int], Any]:
    munu, musum = _ring(mu, nu)
    step = munu if direction == 'm' else ONE
    return _recursion_grid(n, m, ensemble, direction, munu=munu, linear=musum, step=step, chiral=False)


def _check_order(n: int, m: int) -> None:
    _check_indices(n, m)
    if n < m:
        raise MomentIndexError(
            f'second moments are computed for n >= m; got (n, m) = ({n}, {m}), use second_moment_auto'
        )


@lru_cache(maxsize=512)
def second_moment_exact(ensemble: EnsembleSpec, n: int, m: int) -> BivariatePolynomial:
    """f(n, m; mu, nu) for n >= m from the covariance recursion in the m-direction.

    Initial conditions f(n, 0) = 1 and f(0, m) = (mu nu)^m.

    Raises:
        MomentIndexError: If n < m or an index is negative.
    """
    _check_order(n, m)
    return _as_poly(_covariance_grid(ensemble, n, m, 'm')[(n, m)])


@lru_cache(maxsize=512)
def second_moment_exact_alt(ensemble: EnsembleSpec, n: int, m: int) -> BivariatePolynomial:
    """f(n, m; mu, nu) for n >= m from the covariance recursion in the n-direction."""
    _check_order(n, m)
    return _as_poly(_covariance_grid(ensemble, n, m, 'n')[(n, m)])


def second_moment_at(
    ensemble: EnsembleSpec, n: int, m: int, mu: Any, nu: Any, direction: Direction = 'm'
) -> Fraction:
    """Exact value of f(n, m; mu, nu) at a rational point, without building the polynomial."""
    _check_order(n, m)
    return _covariance_grid(ensemble, n, m, direction, mu, nu)[(n, m)]


def second_moment_auto(ensemble: EnsembleSpec, n: int, m: int) -> BivariatePolynomial:
    """f(n, m; mu, nu) for any n, m >= 0; n < m uses f(n, m) = (mu nu)^(m-n) f(m, n)."""
    _check_indices(n, m)
    if n >= m:
        return second_moment_exact(ensemble, n, m)
    return second_moment_exact(ensemble, m, n).shift(m - n, m - n)


def second_moment_chiral(ensemble: EnsembleSpec, n: int, m: int, direction: Direction = 'm') -> BivariatePolynomial:
    """Chiral f(n, m) from the combined chiral recursion in the m- or n-direction."""
    _check_indices(n, m)
    mu, nu = BivariatePolynomial.mu(), BivariatePolynomial.nu()
    munu = mu * nu
    grid = _recursion_grid(n, m, ensemble, direction, munu=munu, linear=mu * mu + nu * nu, step=munu, chiral=True)
    return grid[(n, m)]


class MomentTable(BaseModel):
    """All f(n, m; mu, nu) for 0 <= n <= n_max, 0 <= m <= m_max in the covariance normalization."""

    model_config = ConfigDict(extra='forbid', arbitrary_types_allowed=True)

    ensemble: EnsembleSpec
    n_max: int
    m_max: int
    entries: dict[tuple[int, int], BivariatePolynomial]

    @model_validator(mode='after')
    def check_rectangle(self) -> 'MomentTable':
        """The table must hold exactly the rectangle it declares."""
        expected = {(n, m) for n in range(self.n_max + 1) for m in range(self.m_max + 1)}
        if set(self.entries) != expected:
            raise ValueError(f'table entries do not cover [0, {self.n_max}] x [0, {self.m_max}]')
        return self

    def get(self, n: int, m: int) -> BivariatePolynomial:
        try:
            return self.entries[(n, m)]
        except KeyError as e:
            raise MomentIndexError(f'({n}, {m}) lies outside the table [0, {self.n_max}] x [0, {self.m_max}]') from e

    def covers(self, n_max: int, m_max: int) -> bool:
        return n_max <= self.n_max and m_max <= self.m_max

    def restrict(self, n_max: int, m_max: int) -> 'MomentTable':
        entries = {k: v for k, v in self.entries.items() if k[0] <= n_max and k[1] <= m_max}
        return MomentTable(ensemble=self.ensemble, n_max=n_max, m_max=m_max, entries=entries)

    def to_document(self) -> dict[str, Any]:
        """JSON cache form, entries ordered by (n, m) and terms by (i, j)."""
        return {
            'ensemble': self.ensemble.variant.value,
            'b': f'{self.ensemble.b.numerator}/{self.ensemble.b.denominator}',
            'n_max': self.n_max,
            'm_max': self.m_max,
            'entries': [{'n': n, 'm': m, 'terms': p.to_terms()} for (n, m), p in sorted(self.entries.items())],
        }

    @classmethod
    def from_document(cls, doc: dict[str, Any]) -> 'MomentTable':
        """Parse the JSON cache form.

        Raises:
            PolynomialFormatError: If an entry is malformed.
        """
        try:
            ensemble = EnsembleSpec.of(doc['ensemble'], doc['b'])
            raw_entries = doc['entries']
        except (KeyError, ValueError) as e:
            raise PolynomialFormatError(f'invalid moment table document: {e}') from e
        entries: dict[tuple[int, int], BivariatePolynomial] = {}
        for entry in raw_entries:
            try:
                key = (int(entry['n']), int(entry['m']))
                terms = entry['terms']
            except (KeyError, TypeError, ValueError) as e:
                raise PolynomialFormatError(f'invalid table entry {entry!r}: {e}') from e
            entries[key] = BivariatePolynomial.from_terms(terms)
        n_max = doc.get('n_max', max((n for n, _ in entries), default=0))
        m_max = doc.get('m_max', max((m for _, m in entries), default=0))
        return cls(ensemble=ensemble, n_max=n_max, m_max=m_max, entries=entries)


def moment_table(ensemble: EnsembleSpec, n_max: int, m_max: int) -> MomentTable:
    """Tabulate f over the full rectangle with the n-direction recursion (valid on both sides of the diagonal)."""
    _check_indices(n_max, m_max)
    grid = _covariance_grid(ensemble, n_max, m_max, 'n')
    logger.info(f'built moment table {ensemble.label} up to ({n_max}, {m_max})')
    return MomentTable(ensemble=ensemble, n_max=n_max, m_max=m_max, entries={k: _as_poly(v) for k, v in grid.items()})


# Numeric recursion


def _as_bigfloat(x: Any) -> mpmath.mpf:
    if isinstance(x, (mpmath.mpf, mpmath.mpc)):
        return +x
    return to_bigfloat(x)


def _normalized_value(ensemble: EnsembleSpec, n: int, m: int, mu: Any, nu: Any, bits: int) -> mpmath.mpf:
    """g(n, m) = f(n, m) / (n! m!) through the coefficient recursion in BigFloat."""
    with mpmath.workprec(bits):
        mu_b, nu_b = _as_bigfloat(mu), _as_bigfloat(nu)
        munu, musum = mu_b * nu_b, mu_b + nu_b
        bstar = to_bigfloat(ensemble.bstar)
        s = ensemble.excess
        alpha = n - m
        zero = mpmath.mpf(0)
        g: dict[tuple[int, int], mpmath.mpf] = {}

        def at(i: int, j: int) -> mpmath.mpf:
            return g.get((i, j), zero) if i >= 0 and j >= 0 else zero

        for i in range(alpha, n + 1):
            g[(i, 0)] = 1 / mpmath.factorial(i)
        for j in range(1, m + 1):
            for i in range(j + alpha, n + 1):
                a = i - j
                g11, g22, g33 = at(i - 1, j - 1), at(i - 2, j - 2), at(i - 3, j - 3)
                value = (
                    (2 * j + a + s) * g11
                    - (j + a + s) * g22
                    + bstar * (g11 - 2 * g22 + g33)
                    + munu * (at(i, j - 1) + at(i - 1, j - 2))
                    - musum * g11
                )
                g[(i, j)] = value / j
        return g[(n, m)]


def second_moment_numeric(
    ensemble: EnsembleSpec,
    n: int,
    m: int,
    mu: Any,
    nu: Any,
    prec: int | None = None,
    check: bool = True,
    max_precision: int | None = None,
) -> mpmath.mpf:
    """Return f(n, m; mu, nu) / (n! m!) in BigFloat arithmetic, rounded to `prec` bits.

    With `check`, the recursion is rerun at doubled working precision until two successive runs agree to
    2^(20 - prec) relative, and the more precise run is returned. Near the soft edge (mu, nu close to 4n) the
    recursion cancels heavily and typically needs one or two doublings.

    Raises:
        MomentIndexError: If n < m.
        PrecisionLossError: If no two successive runs agree below `max_precision` bits (default 16 prec).
    """
    _check_order(n, m)
    bits = resolve_precision(prec)
    value = _normalized_value(ensemble, n, m, mu, nu, bits)
    if not check:
        return value
    ceiling = max_precision if max_precision is not None else 16 * bits
    budget = mpmath.ldexp(1, 20 - bits)
    work = bits
    while True:
        reference = _normalized_value(ensemble, n, m, mu, nu, 2 * work)
        with mpmath.workprec(2 * work):
            gap = relative_gap(value, reference)
        if gap <= budget:
            logger.debug(f'numeric recursion ({n}, {m}) stable at {work} bits, gap {mpmath.nstr(gap, 3)}')
            with mpmath.workprec(bits):
                return +reference
        if 2 * work >= ceiling:
            raise PrecisionLossError(
                f'numeric recursion for ({n}, {m}) lost precision: relative gap {mpmath.nstr(gap, 5)} between '
                f'{work} and {2 * work} bits exceeds {mpmath.nstr(budget, 5)}'
            )
        logger.debug(f'numeric recursion ({n}, {m}): gap {mpmath.nstr(gap, 3)} at {work} bits, doubling')
        value, work = reference, 2 * work


# Generating function coefficients


def _factorial_inverse(k: int) -> Fraction:
    return Fraction(1, math.factorial(k))


@lru_cache(maxsize=128)
def _coefficient_table(
    ensemble: EnsembleSpec, alpha: int, m: int, mu: Fraction | None, nu: Fraction | None
) -> dict[tuple[int, int], Any]:
    """c_a(j) for alpha <= a <= alpha + m and j <= m - (a - alpha), by the coefficient recursion."""
    munu, musum = _ring(mu, nu)
    bstar = ensemble.bstar
    s = ensemble.excess
    c: dict[tuple[int, int], Any] = {}

    def at(a: int, j: int) -> Any:
        return c.get((a, j), ZERO) if j >= 0 else ZERO

    for a in range(alpha + m, alpha - 1, -1):
        for j in range(0, m - (a - alpha) + 1):
            if j == 0:
                c[(a, 0)] = _factorial_inverse(a)
                continue
            c1, c2, c3 = at(a, j - 1), at(a, j - 2), at(a, j - 3)
            value = (
                c1 * (2 * j + a + s)
                - c2 * (j + a + s)
                + (c1 - c2 * 2 + c3) * bstar
                + munu * (at(a + 1, j - 1) + at(a + 1, j - 2))
                - musum * c1
            )
            c[(a, j)] = value / j
    return c


def gf_coeff_recursive(ensemble: EnsembleSpec, alpha: int, m: int, mu: Any = None, nu: Any = None) -> Any:
    """c_alpha(m) from the coefficient recursion, c_alpha(0) = 1/alpha!.

    Symbolic in mu and nu unless a rational point is given.
    """
    _check_indices(alpha, m)
    mu_q, nu_q = _point(mu, nu)
    value = _coefficient_table(ensemble, alpha, m, mu_q, nu_q)[(alpha, m)]
    return value if mu_q is not None else _as_poly(value)


@lru_cache(maxsize=128)
def _closed_series(
    ensemble: EnsembleSpec, alpha: int, order: int, mu: Fraction | None, nu: Fraction | None
) -> TruncatedSeries:
    munu, musum = _ring(mu, nu)
    exponent = TruncatedSeries([ZERO, ensemble.bstar - musum] + [-musum] * max(order - 1, 0), order)
    envelope = exponent.exp()
    bessel_part = TruncatedSeries.zero(order)
    for k in range(order + 1):
        weight = munu**k * Fraction(1, math.factorial(k + alpha) * math.factorial(k))
        tail = TruncatedSeries.inverse_power(2 * k + alpha + ensemble.power, order).shift(k)
        bessel_part = bessel_part + tail * weight
    return envelope * bessel_part


def gf_series(ensemble: EnsembleSpec, alpha: int, order: int, mu: Any = None, nu: Any = None) -> TruncatedSeries:
    """F_alpha(z) through z^order, expanded from its closed form.

    F_alpha(z) = exp(-(mu + nu) z / (1 - z) + b* z) sum_k (mu nu z)^k / ((k + alpha)! k!) (1 - z)^(-2k - alpha - p)
    with p = 2 (complex) or 3 (real). Summands with k > order start beyond z^order, so the k-sum stops there.
    """
    _check_indices(alpha, order)
    mu_q, nu_q = _point(mu, nu)
    return _closed_series(ensemble, alpha, order, mu_q, nu_q)


def gf_coeff_closed(ensemble: EnsembleSpec, alpha: int, m: int, mu: Any = None, nu: Any = None) -> Any:
    """c_alpha(m) as the z^m coefficient of the closed form of F_alpha."""
    value = gf_series(ensemble, alpha, m, mu, nu)[m]
    return value if mu is not None else _as_poly(value)


class OdeCheckResult(BaseModel):
    model_config = ConfigDict(extra='forbid', frozen=True)

    ok: bool
    truncation: int
    mismatch_order: int | None = None

    def __bool__(self) -> bool:
        return self.ok


def gf_ode_check(
    ensemble: EnsembleSpec,
    alpha: int,
    truncation: int,
    mu: Any = None,
    nu: Any = None,
    bstar_perturbation: Any = 0,
) -> OdeCheckResult:
    """Check the first-order ODE of F_alpha as an identity of truncated series.

    The identity is checked with the factor (1 - z)^2 cleared:
    (1 - z)^2 F' = (p + alpha)(1 - z) F + b* (1 - z)^2 F - (mu + nu) F + mu nu (1 + z) F_{alpha+1}.
    A mismatch in the z^r coefficient is reported as order r + 1, the index of the coefficient it constrains.
    `bstar_perturbation` shifts b* in the ODE only.
    """
    if truncation < 3:
        raise ValueError(f'ODE check needs a truncation of at least 3, got {truncation}')
    munu, musum = _ring(mu, nu)
    bstar = ensemble.bstar + to_rational(bstar_perturbation)
    M = truncation
    F = gf_series(ensemble, alpha, M + 1, mu, nu)
    G = gf_series(ensemble, alpha + 1, M, mu, nu)
    Fm = F.truncate(M)
    one_minus_z = TruncatedSeries([ONE, -ONE], M)
    one_plus_z = TruncatedSeries([ONE, ONE], M)
    lhs = one_minus_z * one_minus_z * F.derivative()
    rhs = (
        one_minus_z * Fm * (alpha + ensemble.power)
        + one_minus_z * one_minus_z * Fm * bstar
        - Fm * musum
        + one_plus_z * G * munu
    )
    power = lhs.first_mismatch(rhs)
    if power is None:
        return OdeCheckResult(ok=True, truncation=M)
    logger.info(f'ODE check {ensemble.label} alpha={alpha} fails at order {power + 1}')
    return OdeCheckResult(ok=False, truncation=M, mismatch_order=power + 1)

