"""Probabilistic oracles for f(n, m; mu, nu) = E det(X*X - mu) det(X*X - nu).

- Monte Carlo over random n x m matrices with i.i.d. Gaussian, Rademacher or uniform entries. Samples are
  drawn in fixed-size chunks; chunk c uses a Philox generator keyed by SeedSequence(seed, spawn_key=(c,)), so
  every sample is a deterministic function of (seed, sample index) whatever the number of workers.
- Exact enumeration over all sign patterns of Rademacher entries, in exact arithmetic over Q or Q(i).
- The block-determinant identity relating the chiral matrix [[l I_n, X], [X*, l I_m]] to X*X and XX*.
"""

import itertools
import logging
import math
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from enum import Enum
from fractions import Fraction
from typing import Any

import mpmath
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from sympy.polys.domains import QQ, QQ_I
from sympy.polys.matrices import DomainMatrix

from .polycore import BivariatePolynomial, to_rational
from .recursion import EnsembleSpec, Variant

logger = logging.getLogger(__name__)

MAX_STATES = 2**24
DEFAULT_CHUNK_SIZE = 4096
RECOMPUTE_FRACTION = 0.01
RECOMPUTE_PRECISION = 128

# Custom Exceptions


class StateSpaceError(Exception):
    """Custom exception for enumerations with more states than can be visited."""

    pass


class DistributionKind(str, Enum):
    GAUSSIAN = 'gaussian'
    RADEMACHER = 'rademacher'
    UNIFORM = 'uniform'


# Fourth moment b of a (real part of an) entry, per variant
_FOURTH_MOMENT = {
    (DistributionKind.GAUSSIAN, Variant.COMPLEX): Fraction(3, 4),
    (DistributionKind.GAUSSIAN, Variant.REAL): Fraction(3),
    (DistributionKind.RADEMACHER, Variant.COMPLEX): Fraction(1, 4),
    (DistributionKind.RADEMACHER, Variant.REAL): Fraction(1),
    (DistributionKind.UNIFORM, Variant.COMPLEX): Fraction(9, 20),
    (DistributionKind.UNIFORM, Variant.REAL): Fraction(9, 5),
}


class EntryDistribution(BaseModel):
    """Law of the matrix entries.

    Real entries have variance 1. Complex entries have independent real and imaginary parts of variance 1/2
    each, so E|X|^2 = 1 and E X^2 = 0. `b` is the fourth moment of a real entry, or of the real part of a
    complex entry.
    """

    model_config = ConfigDict(extra='forbid', frozen=True)

    kind: DistributionKind
    variant: Variant

    @property
    def part_variance(self) -> Fraction:
        return Fraction(1, 2) if self.variant is Variant.COMPLEX else Fraction(1)

    @property
    def b(self) -> Fraction:
        return _FOURTH_MOMENT[(self.kind, self.variant)]

    @property
    def ensemble(self) -> EnsembleSpec:
        return EnsembleSpec(variant=self.variant, b=self.b)

    @property
    def is_discrete(self) -> bool:
        return self.kind is DistributionKind.RADEMACHER

    def _parts(self, rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
        scale = math.sqrt(self.part_variance)
        if self.kind is DistributionKind.GAUSSIAN:
            return rng.standard_normal(shape) * scale
        if self.kind is DistributionKind.RADEMACHER:
            return (2.0 * rng.integers(0, 2, size=shape) - 1.0) * scale
        # U(-a, a) has variance a^2 / 3
        half_width = math.sqrt(3 * self.part_variance)
        return rng.uniform(-half_width, half_width, size=shape)

    def draw(self, rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
        """Draw an array of entries; complex variants draw the real parts first, then the imaginary parts."""
        if self.variant is Variant.COMPLEX:
            return self._parts(rng, shape) + 1j * self._parts(rng, shape)
        return self._parts(rng, shape)


class SampleConfig(BaseModel):
    """A Monte Carlo run: matrix shape, entry law, number of samples and seed."""

    model_config = ConfigDict(extra='forbid', frozen=True)

    n: int = Field(ge=1)
    m: int = Field(ge=1)
    variant: Variant
    distribution: EntryDistribution
    sample_count: int = Field(ge=1)
    seed: int = Field(ge=0, lt=2**64)
    chunk_size: int = Field(default=DEFAULT_CHUNK_SIZE, ge=1)

    @model_validator(mode='after')
    def check_shape(self) -> 'SampleConfig':
        if self.n < self.m:
            raise ValueError(f'sample matrices need n >= m, got n={self.n}, m={self.m}')
        if self.distribution.variant is not self.variant:
            raise ValueError(
                f'distribution is for {self.distribution.variant.value} entries, config is {self.variant.value}'
            )
        return self

    @classmethod
    def of(
        cls, n: int, m: int, variant: Variant | str, kind: DistributionKind | str, **kwargs: Any
    ) -> 'SampleConfig':
        v = Variant(variant)
        distribution = EntryDistribution(kind=DistributionKind(kind), variant=v)
        return cls(n=n, m=m, variant=v, distribution=distribution, **kwargs)

    @property
    def chunk_count(self) -> int:
        return -(-self.sample_count // self.chunk_size)

    def chunk_length(self, chunk: int) -> int:
        return min(self.chunk_size, self.sample_count - chunk * self.chunk_size)


def _generator(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(chunk,))))


def sample_batch(cfg: SampleConfig, chunk: int) -> np.ndarray:
    """The matrices of one chunk, shape (chunk_length, n, m)."""
    if not 0 <= chunk < cfg.chunk_count:
        raise ValueError(f'chunk must lie in [0, {cfg.chunk_count}), got {chunk}')
    rng = _generator(cfg.seed, chunk)
    return cfg.distribution.draw(rng, (cfg.chunk_length(chunk), cfg.n, cfg.m))


def sample_matrix(cfg: SampleConfig, index: int = 0) -> np.ndarray:
    """The n x m matrix drawn as sample `index` of the run."""
    if not 0 <= index < cfg.sample_count:
        raise ValueError(f'sample index must lie in [0, {cfg.sample_count}), got {index}')
    return sample_batch(cfg, index // cfg.chunk_size)[index % cfg.chunk_size]


# Monte Carlo


def _gram(batch: np.ndarray) -> np.ndarray:
    """X*X for each matrix of a batch (conjugate transpose for complex entries)."""
    return np.conj(np.swapaxes(batch, -1, -2)) @ batch


def _precise_det_product(gram: np.ndarray, shifts: Sequence[float]) -> float:
    with mpmath.workprec(RECOMPUTE_PRECISION):
        w = mpmath.matrix(gram.tolist())
        size = gram.shape[0]
        product = mpmath.mpf(1)
        for shift in shifts:
            product *= mpmath.det(w - shift * mpmath.eye(size))
        return float(mpmath.re(product))


def _chunk_values(args: tuple) -> np.ndarray:
    """det(X*X - s_1) ... det(X*X - s_k) for every sample of a chunk."""
    cfg, chunk, shifts = args
    gram = _gram(sample_batch(cfg, chunk))
    eye = np.eye(cfg.m)
    values = np.ones(gram.shape[0])
    worst = np.zeros(gram.shape[0])
    for shift in shifts:
        shifted = gram - shift * eye
        values = values * np.linalg.det(shifted).real
        worst = np.maximum(worst, np.linalg.cond(shifted))
    # the worst-conditioned samples are redone in high precision
    redo = max(1, math.ceil(RECOMPUTE_FRACTION * len(values)))
    for i in np.argsort(-worst, kind='stable')[:redo]:
        values[i] = _precise_det_product(gram[i], shifts)
    return values


class MCEstimate(BaseModel):
    """Sample mean and its standard error."""

    model_config = ConfigDict(frozen=True)

    mean: float
    stderr: float
    sample_count: int

    def z_score(self, exact: Any) -> float:
        """(mean - exact) / stderr."""
        target = float(to_rational(exact)) if not isinstance(exact, float) else exact
        if self.stderr == 0:
            return 0.0 if self.mean == target else math.inf
        return (self.mean - target) / self.stderr

    def agrees_with(self, exact: Any, sigmas: float = 4.0) -> bool:
        return abs(self.z_score(exact)) <= sigmas


def _estimate(cfg: SampleConfig, shifts: Sequence[float], workers: int | None) -> MCEstimate:
    jobs = [(cfg, chunk, tuple(shifts)) for chunk in range(cfg.chunk_count)]
    if workers is None or workers <= 1 or len(jobs) == 1:
        chunks = [_chunk_values(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            chunks = list(ex.map(_chunk_values, jobs))
    values = np.concatenate(chunks)
    mean = float(np.mean(values))
    stderr = float(np.std(values, ddof=1) / math.sqrt(len(values))) if len(values) > 1 else math.inf
    logger.info(f'MC {cfg.variant.value} {cfg.distribution.kind.value} ({cfg.n}x{cfg.m}), {len(values)} samples: '
                f'{mean:.6g} +- {stderr:.3g}')
    return MCEstimate(mean=mean, stderr=stderr, sample_count=len(values))


def mc_second_moment(cfg: SampleConfig, mu: Any, nu: Any, workers: int | None = None) -> MCEstimate:
    """Monte Carlo estimate of E det(X*X - mu) det(X*X - nu)."""
    return _estimate(cfg, (float(to_rational(mu)), float(to_rational(nu))), workers)


def mc_first_moment(cfg: SampleConfig, lam: Any, workers: int | None = None) -> MCEstimate:
    """Monte Carlo estimate of E det(X*X - lambda)."""
    return _estimate(cfg, (float(to_rational(lam)),), workers)


class MCReport(BaseModel):
    """A Monte Carlo run with its result and, when known, the exact value it is compared with."""

    model_config = ConfigDict(extra='forbid', frozen=True)

    config: SampleConfig
    mu: str
    nu: str
    mean: float
    stderr: float
    exact_value: float | None = None
    z_score: float | None = None

    @classmethod
    def build(cls, cfg: SampleConfig, mu: Any, nu: Any, estimate: MCEstimate, exact: Any = None) -> 'MCReport':
        return cls(
            config=cfg,
            mu=str(to_rational(mu)),
            nu=str(to_rational(nu)),
            mean=estimate.mean,
            stderr=estimate.stderr,
            exact_value=None if exact is None else float(to_rational(exact)),
            z_score=None if exact is None else estimate.z_score(exact),
        )

    def passed(self, sigmas: float = 4.0) -> bool:
        return self.z_score is None or abs(self.z_score) <= sigmas


class SampleMoments(BaseModel):
    """Empirical moments of an entry distribution."""

    model_config = ConfigDict(frozen=True)

    count: int
    mean: complex
    second_moment: float
    pseudo_second_moment: complex
    part_fourth_moment: float
    part_fourth_stderr: float
    abs_fourth_moment: float


def sample_moments(distribution: EntryDistribution, count: int, seed: int) -> SampleMoments:
    """Mean, E|X|^2, E X^2, the fourth moment of the real part (which is b) and E|X|^4 from `count` draws."""
    if count < 2:
        raise ValueError(f'sample moments need at least two draws, got {count}')
    x = distribution.draw(_generator(seed, 0), (count,))
    real4 = np.real(x) ** 4
    return SampleMoments(
        count=count,
        mean=complex(np.mean(x)),
        second_moment=float(np.mean(np.abs(x) ** 2)),
        pseudo_second_moment=complex(np.mean(x * x)),
        part_fourth_moment=float(np.mean(real4)),
        part_fourth_stderr=float(np.std(real4, ddof=1) / math.sqrt(count)),
        abs_fourth_moment=float(np.mean(np.abs(x) ** 4)),
    )


# Exact enumeration


def _fraction(q: Any) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


def _gaussian_element(re: Fraction, im: Fraction = Fraction(0)) -> Any:
    return QQ_I(QQ(re.numerator, re.denominator), QQ(im.numerator, im.denominator))


def _real_part(element: Any) -> Fraction:
    if element.y:
        raise ValueError(f'expected a real value, got {element}')
    return _fraction(element.x)


def _charpoly(gram: list[list[tuple[Fraction, Fraction]]]) -> list[Fraction]:
    """Coefficients of det(x - W), highest degree first, for a Hermitian W over Q(i)."""
    size = len(gram)
    rows = [[_gaussian_element(re, im) for re, im in row] for row in gram]
    return [_real_part(c) for c in DomainMatrix(rows, (size, size), QQ_I).charpoly()]


def _state_grams(n: int, m: int, variant: Variant) -> Any:
    """Yield W = X*X for every equiprobable Rademacher sign pattern, entries as (re, im) Fraction pairs.

    Complex entries are (s + i t) / sqrt 2, so W = S*S / 2 for the Gaussian-integer matrix S = s + i t.
    """
    complex_entries = variant is Variant.COMPLEX
    per_entry = 2 if complex_entries else 1
    half = Fraction(1, 2)
    for signs in itertools.product((1, -1), repeat=per_entry * n * m):
        if complex_entries:
            s = [[(signs[2 * (i * m + j)], signs[2 * (i * m + j) + 1]) for j in range(m)] for i in range(n)]
        else:
            s = [[(signs[i * m + j], 0) for j in range(m)] for i in range(n)]
        gram = []
        for k in range(m):
            row = []
            for ell in range(m):
                # conj(a + ib)(c + id) = (ac + bd) + i(ad - bc)
                re = sum(s[i][k][0] * s[i][ell][0] + s[i][k][1] * s[i][ell][1] for i in range(n))
                im = sum(s[i][k][0] * s[i][ell][1] - s[i][k][1] * s[i][ell][0] for i in range(n))
                row.append((re * half, im * half) if complex_entries else (Fraction(re), Fraction(im)))
            gram.append(row)
        yield gram


def state_count(n: int, m: int, variant: Variant | str) -> int:
    return 2 ** ((2 if Variant(variant) is Variant.COMPLEX else 1) * n * m)


def brute_force_polynomial(n: int, m: int, variant: Variant | str) -> BivariatePolynomial:
    """E det(X*X - mu) det(X*X - nu) over all Rademacher sign patterns, exactly, as a polynomial in mu, nu.

    With det(x - W) = sum_i a_i x^i the product is p(mu) p(nu), whose average is sum E[a_i a_j] mu^i nu^j.

    Raises:
        StateSpaceError: more than 2^24 sign patterns.
    """
    v = Variant(variant)
    if n < 1 or m < 1:
        raise ValueError(f'enumeration needs n, m >= 1, got n={n}, m={m}')
    states = state_count(n, m, v)
    if states > MAX_STATES:
        raise StateSpaceError(f'{v.value} ({n}x{m}) Rademacher enumeration has {states} states, limit is {MAX_STATES}')
    sums: dict[tuple[int, int], Fraction] = {}
    for gram in _state_grams(n, m, v):
        # highest degree first
        coeffs = _charpoly(gram)[::-1]
        for i, a in enumerate(coeffs):
            if not a:
                continue
            for j, c in enumerate(coeffs):
                if c:
                    sums[(i, j)] = sums.get((i, j), Fraction(0)) + a * c
    logger.info(f'enumerated {states} {v.value} sign patterns for ({n}x{m})')
    return BivariatePolynomial({k: c / states for k, c in sums.items()})


def brute_force_expectation(n: int, m: int, variant: Variant | str, mu: Any, nu: Any) -> Fraction:
    """Exact Rademacher average of det(X*X - mu) det(X*X - nu) at rational mu, nu."""
    return brute_force_polynomial(n, m, variant).evaluate(to_rational(mu), to_rational(nu))


# Chiral block identity


def _entry(value: Any) -> tuple[Fraction, Fraction]:
    if isinstance(value, tuple):
        re, im = value
        return to_rational(re), to_rational(im)
    if isinstance(value, complex):
        return Fraction(value.real), Fraction(value.imag)
    return to_rational(value), Fraction(0)


def _det(rows: list[list[tuple[Fraction, Fraction]]]) -> Any:
    size = len(rows)
    if size == 0:
        return QQ_I.one
    elements = [[_gaussian_element(re, im) for re, im in row] for row in rows]
    return DomainMatrix(elements, (size, size), QQ_I).det()


def _cmul(a: tuple[Fraction, Fraction], b: tuple[Fraction, Fraction]) -> tuple[Fraction, Fraction]:
    return a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0]


def chiral_determinants(lam: Any, X: Sequence[Sequence[Any]]) -> tuple[Any, Any, Any]:
    """det([[l I_n, X], [X*, l I_m]]), det(l^2 I_m - X*X) and det(l^2 I_n - XX*), exactly over Q(i).

    Entries of X may be rationals, Python complex numbers (converted exactly) or (re, im) pairs.
    """
    lam_q = to_rational(lam)
    x = [[_entry(v) for v in row] for row in X]
    n = len(x)
    m = len(x[0]) if n else 0
    if any(len(row) != m for row in x):
        raise ValueError('X must be a rectangular matrix')
    zero = (Fraction(0), Fraction(0))
    xstar = [[(x[i][j][0], -x[i][j][1]) for i in range(n)] for j in range(m)]
    block = []
    for i in range(n):
        block.append([(lam_q, Fraction(0)) if k == i else zero for k in range(n)] + x[i])
    for j in range(m):
        block.append(xstar[j] + [(lam_q, Fraction(0)) if k == j else zero for k in range(m)])

    def gram(left: list[list[tuple[Fraction, Fraction]]], right: list[list[tuple[Fraction, Fraction]]]) -> list:
        size, inner = len(left), len(right)
        out = []
        for i in range(size):
            row = []
            for k in range(size):
                re = Fraction(0)
                im = Fraction(0)
                for t in range(inner):
                    p = _cmul(left[i][t], right[t][k])
                    re, im = re + p[0], im + p[1]
                diag = lam_q * lam_q if i == k else Fraction(0)
                row.append((diag - re, -im))
            out.append(row)
        return out

    small = gram(xstar, x) if m else []
    large = gram(x, xstar) if n else []
    return _det(block), _det(small), _det(large)


def chiral_identity_check(n: int, m: int, lam: Any, X: Sequence[Sequence[Any]]) -> bool:
    """Exact check of det([[l I_n, X], [X*, l I_m]]) = l^(n-m) det(l^2 - X*X) = l^(m-n) det(l^2 - XX*)."""
    if to_rational(lam) == 0:
        raise ValueError('the chiral identity is checked for lambda != 0')
    if len(X) != n or any(len(row) != m for row in X):
        raise ValueError(f'X must be {n}x{m}')
    block, small, large = chiral_determinants(lam, X)
    lam_el = _gaussian_element(to_rational(lam))
    d = n - m
    if d >= 0:
        power = lam_el**d
        ok = block == small * power and block * power == large
    else:
        power = lam_el**-d
        ok = block * power == small and block == large * power
    logger.debug(f'chiral identity ({n}x{m}, lambda={lam}): block={block}, X*X={small}, XX*={large}')
    return bool(ok)
