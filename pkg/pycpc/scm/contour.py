"""Cauchy-integral evaluation of f(n, m; mu, nu) / (n! m!), the limit scans and the quadrature identities.

With alpha = n - m the normalized moment is the z^m coefficient of the generating function

    F_alpha(z) = exp(-(mu + nu) z / (1 - z) + b* z) (1 - z)^(-alpha - p) sum_k w^k / ((k + alpha)! k!),

w = mu nu z / (1 - z)^2 and p = 2 (complex) or 3 (real). It is extracted by the periodic trapezoid rule on a
circle of radius R < 1, with node doubling until two resolutions agree.

Line integrals (the Laplace inversion, Bessel-product and Airy identities) run along a parabola
z = sigma (1 + iu)^2 opening to the left, or along a vertical line, with the trapezoid rule in the path
parameter and the tails cut where the integrand is negligible.
"""

import logging
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Any, Literal

import mpmath
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .helper import MIN_PRECISION, default_precision, is_power_of_two, relative_gap, resolve_precision
from .kernels import KernelKind, Regime, kernel, mp_density, predicted_limit
from .polycore import bigfloat_to_rational, to_bigfloat, to_rational
from .recursion import EnsembleSpec, Variant, second_moment_numeric
from .specfun import SeriesPolicy, bessel_i, bessel_i_even, bessel_j

logger = logging.getLogger(__name__)

MIN_NODES = 256
DEFAULT_TOLERANCE = 1e-14
NODE_CHUNK = 64

Route = Literal['auto', 'series', 'bessel']
Method = Literal['contour', 'recursion']

# Custom Exceptions


class QuadratureError(Exception):
    """Custom exception for quadratures that do not converge or leave an imaginary residual."""

    pass


def _real(value: Any) -> Fraction:
    try:
        return to_rational(value)
    except TypeError as e:
        raise ValueError(str(e)) from e


class ContourSpec(BaseModel):
    """Circle and resolution for extracting the z^m coefficient of F_alpha, m = N - alpha.

    Attributes:
        N: The row index n.
        alpha: n - m.
        radius: Radius R of the circle, 0 < R < 1.
        node_count: Initial number of nodes, a power of two.
        precision: Working precision in bits.
        max_doublings: How often the node count may double before giving up.
        tol: Relative agreement required between two successive resolutions.
    """

    model_config = ConfigDict(extra='forbid', frozen=True, arbitrary_types_allowed=True)

    N: int = Field(ge=0)
    alpha: int = Field(default=0, ge=0)
    radius: Fraction = Fraction(1, 2)
    node_count: int = MIN_NODES
    precision: int = Field(default_factory=default_precision, ge=MIN_PRECISION)
    max_doublings: int = Field(default=8, ge=0)
    tol: float = Field(default=DEFAULT_TOLERANCE, gt=0)

    @field_validator('radius', mode='before')
    @classmethod
    def _parse_radius(cls, value: Any) -> Fraction:
        return _real(value)

    @model_validator(mode='after')
    def check_contour(self) -> 'ContourSpec':
        """F_alpha has an essential singularity at z = 1, so the circle must stay inside the unit disc."""
        if not 0 < self.radius < 1:
            raise ValueError(f'radius must lie strictly between 0 and 1, got {self.radius}')
        if self.node_count < MIN_NODES or not is_power_of_two(self.node_count):
            raise ValueError(f'node_count must be a power of two >= {MIN_NODES}, got {self.node_count}')
        if self.alpha > self.N:
            raise ValueError(f'alpha must not exceed N, got N={self.N}, alpha={self.alpha}')
        return self

    @property
    def n(self) -> int:
        return self.N

    @property
    def m(self) -> int:
        return self.N - self.alpha

    @classmethod
    def for_indices(cls, n: int, m: int, **kwargs: Any) -> 'ContourSpec':
        if n < m:
            raise ValueError(f'contour integrals need n >= m, got n={n}, m={m}')
        return cls(N=n, alpha=n - m, **kwargs)


class QuadratureResult(BaseModel):
    """Outcome of a quadrature: the real value, the relative imaginary residual and the resolution used."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    value: mpmath.mpf
    imaginary_residual: mpmath.mpf
    nodes_used: int
    precision_bits: int

    def __float__(self) -> float:
        return float(self.value)


# Integrand


def _log_prefactor(z: mpmath.mpc, spec: ContourSpec, musum: Any, bstar: Any, power: int) -> mpmath.mpc:
    """log of exp(-(mu + nu) z / (1 - z) + b* z) (1 - z)^(-alpha - p) z^(-m), principal logarithms."""
    one_minus = 1 - z
    return (
        -musum * z / one_minus
        + bstar * z
        - (spec.alpha + power) * mpmath.log(one_minus)
        - spec.m * mpmath.log(z)
    )


def _even_bessel(alpha: int, z: mpmath.mpc, munu: Any, route: Route, policy: SeriesPolicy) -> mpmath.mpc:
    """sum_k w^k / ((k + alpha)! k!) with w = mu nu z / (1 - z)^2."""
    w = munu * z / (1 - z) ** 2
    if route == 'series' or w == 0:
        series_only = SeriesPolicy(precision=policy.precision, crossover=float('inf'), max_terms=policy.max_terms)
        return bessel_i_even(alpha, w, series_only)
    if route == 'bessel':
        # ((mu nu z)^(1/2))^(-alpha) I_alpha(2 (mu nu z)^(1/2) / (1 - z)) with arg sqrt z in [-pi/2, pi/2]
        root = mpmath.sqrt(munu) * mpmath.sqrt(z)
        return bessel_i(alpha, 2 * root / (1 - z), policy) / root**alpha * (1 - z) ** alpha
    return bessel_i_even(alpha, w, policy)


def integrand(
    z: Any, spec: ContourSpec, mu: Any, nu: Any, ensemble: EnsembleSpec, route: Route = 'auto'
) -> mpmath.mpc:
    """F_alpha(z) / z^(m + 1), the function whose contour integral over 2 pi i is the z^m coefficient."""
    bits = spec.precision
    policy = SeriesPolicy(precision=bits)
    with mpmath.workprec(bits):
        zz = mpmath.mpc(z) if not isinstance(z, (mpmath.mpc, mpmath.mpf)) else z
        mu_b, nu_b = to_bigfloat(mu, bits), to_bigfloat(nu, bits)
        log_pref = _log_prefactor(zz, spec, mu_b + nu_b, to_bigfloat(ensemble.bstar, bits), ensemble.power)
        return mpmath.exp(log_pref) * _even_bessel(spec.alpha, zz, mu_b * nu_b, route, policy) / zz


def _node_values(args: tuple) -> list[mpmath.mpc]:
    """z F_alpha(z) / z^(m + 1) at the nodes exp(2 pi i j / K), for a block of indices j."""
    spec, mu, nu, ensemble, route, count, indices = args
    bits = spec.precision
    policy = SeriesPolicy(precision=bits)
    out = []
    with mpmath.workprec(bits):
        radius = to_bigfloat(spec.radius, bits)
        mu_b, nu_b = to_bigfloat(mu, bits), to_bigfloat(nu, bits)
        musum, munu = mu_b + nu_b, mu_b * nu_b
        bstar = to_bigfloat(ensemble.bstar, bits)
        for j in indices:
            z = radius * mpmath.expjpi(mpmath.mpf(2 * j) / count)
            log_pref = _log_prefactor(z, spec, musum, bstar, ensemble.power)
            out.append(mpmath.exp(log_pref) * _even_bessel(spec.alpha, z, munu, route, policy))
    return out


def _evaluate(
    spec: ContourSpec,
    mu: Any,
    nu: Any,
    ensemble: EnsembleSpec,
    route: Route,
    count: int,
    indices: Sequence[int],
    workers: int | None,
) -> list[mpmath.mpc]:
    blocks = [indices[i : i + NODE_CHUNK] for i in range(0, len(indices), NODE_CHUNK)]
    jobs = [(spec, mu, nu, ensemble, route, count, block) for block in blocks]
    if workers is None or workers <= 1 or len(jobs) == 1:
        results = [_node_values(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_node_values, jobs))
    return [v for block in results for v in block]


def _half_sum(values: Sequence[mpmath.mpc], count: int) -> mpmath.mpf:
    """Trapezoid sum (1/K) sum_j v_j from the nodes 0..K/2, using v_(K - j) = conj(v_j)."""
    edge = [values[0], values[count // 2]]
    inner = [2 * mpmath.re(v) for v in values[1 : count // 2]]
    return mpmath.fsum([mpmath.re(v) for v in edge] + inner) / count


def _full_circle_residual(values: Sequence[mpmath.mpc], mirrored: Sequence[mpmath.mpc], count: int) -> mpmath.mpf:
    """|Im (1/K) sum_j v_j| over all K nodes; `mirrored` holds the nodes K/2 + 1..K - 1."""
    return abs(mpmath.fsum([mpmath.im(v) for v in values] + [mpmath.im(v) for v in mirrored])) / count


def contour_integral(
    spec: ContourSpec,
    mu: Any,
    nu: Any,
    ensemble: EnsembleSpec,
    route: Route = 'auto',
    workers: int | None = None,
) -> QuadratureResult:
    """(1/2 pi i) times the integral of F_alpha(z) / z^(m + 1) over |z| = R, i.e. f(n, m; mu, nu) / (n! m!).

    The node count starts at max(node_count, next power of two above 2 (m + 1)) and doubles until two
    successive sums agree to `spec.tol`; nodes already evaluated are reused. The sums use the upper half circle
    and conjugate symmetry; the lower half is evaluated once at the final resolution for the imaginary residual.
    Node values are summed with `mpmath.fsum`, so the result does not depend on `workers`.

    Raises:
        QuadratureError: no convergence after `spec.max_doublings` doublings, or the imaginary part of the
            full-circle sum exceeds the tolerance.
    """
    count = spec.node_count
    while count <= 2 * (spec.m + 1):
        count *= 2
    bits = spec.precision
    with mpmath.workprec(bits):
        values = _evaluate(spec, mu, nu, ensemble, route, count, list(range(count // 2 + 1)), workers)
        previous = _half_sum(values, count)
        for _ in range(spec.max_doublings + 1):
            fresh = _evaluate(spec, mu, nu, ensemble, route, 2 * count, list(range(1, count + 1, 2)), workers)
            merged: list[mpmath.mpc] = []
            for j in range(count // 2):
                merged.extend([values[j], fresh[j]])
            merged.append(values[count // 2])
            values, count = merged, 2 * count
            current = _half_sum(values, count)
            gap = relative_gap(current, previous)
            logger.debug(f'contour (n={spec.n}, m={spec.m}): {count} nodes, relative change {mpmath.nstr(gap, 3)}')
            if gap <= spec.tol:
                break
            previous = current
        else:
            raise QuadratureError(
                f'contour integral for (n={spec.n}, m={spec.m}) did not converge with {count} nodes '
                f'(relative change {mpmath.nstr(gap, 3)}, tolerance {spec.tol})'
            )
        mirrored = _evaluate(spec, mu, nu, ensemble, route, count, list(range(count // 2 + 1, count)), workers)
        residual = _full_circle_residual(values, mirrored, count)
        relative_residual = residual / abs(current) if current else residual
        if relative_residual > spec.tol:
            raise QuadratureError(f'imaginary residual {mpmath.nstr(relative_residual, 3)} exceeds {spec.tol}')
        return QuadratureResult(
            value=current, imaginary_residual=relative_residual, nodes_used=count, precision_bits=bits
        )


# Limit scans


class RegimeConfig(BaseModel):
    """A scaling regime for the limit theorems.

    Attributes:
        regime: Bulk, soft edge or hard edge.
        ensemble: The ensemble, which also selects the kernel (plain for complex, differentiated for real).
        mu: First scaled variable.
        nu: Second scaled variable.
        xi: Bulk point in (0, 4); bulk only.
        alpha: n - m.
    """

    model_config = ConfigDict(extra='forbid', frozen=True, arbitrary_types_allowed=True)

    regime: Regime
    ensemble: EnsembleSpec
    mu: Fraction
    nu: Fraction
    xi: Fraction | None = None
    alpha: int = Field(default=0, ge=0)

    @field_validator('mu', 'nu', mode='before')
    @classmethod
    def _parse_point(cls, value: Any) -> Fraction:
        return _real(value)

    @field_validator('xi', mode='before')
    @classmethod
    def _parse_xi(cls, value: Any) -> Fraction | None:
        return None if value is None else _real(value)

    @model_validator(mode='after')
    def check_regime(self) -> 'RegimeConfig':
        if self.regime is Regime.BULK:
            if self.xi is None or not 0 < self.xi < 4:
                raise ValueError(f'bulk scaling needs 0 < xi < 4, got xi={self.xi}')
        elif self.xi is not None:
            raise ValueError(f'xi only applies to the bulk, got xi={self.xi} for {self.regime.value}')
        if self.regime is Regime.HARD and (self.mu <= 0 or self.nu <= 0):
            raise ValueError(f'hard-edge scaling needs mu > 0 and nu > 0, got mu={self.mu}, nu={self.nu}')
        return self

    @property
    def kernel_kind(self) -> KernelKind:
        return KernelKind.for_regime(self.regime, self.ensemble.variant)

    def radius(self, N: int, prec: int | None = None) -> Fraction:
        """1 - 1/N in the bulk and at the hard edge, 1 - N^(-1/3) rounded to `prec` bits at the soft edge."""
        if self.regime is Regime.SOFT:
            with mpmath.workprec(resolve_precision(prec)):
                return bigfloat_to_rational(1 - mpmath.cbrt(N) ** -1)
        return 1 - Fraction(1, N)

    def shifted(self, N: int, prec: int | None = None) -> tuple[mpmath.mpf, mpmath.mpf]:
        """The unscaled arguments (mu_N, nu_N) at which f is evaluated."""
        bits = resolve_precision(prec)
        with mpmath.workprec(bits):
            mu, nu = to_bigfloat(self.mu, bits), to_bigfloat(self.nu, bits)
            if self.regime is Regime.BULK:
                xi = to_bigfloat(self.xi, bits)
                g = mp_density(xi, bits)
                return N * xi + mu / g, N * xi + nu / g
            if self.regime is Regime.SOFT:
                step = mpmath.cbrt(2) ** 4 * mpmath.cbrt(N)
                return 4 * N + mu * step, 4 * N + nu * step
            return mu / (4 * N), nu / (4 * N)

    def normalization(self, N: int, prec: int | None = None) -> mpmath.mpf:
        """The factor multiplying f / (n! m!): the regime's prefactor times Z_N at the shifted arguments."""
        bits = resolve_precision(prec)
        real = self.ensemble.variant is Variant.REAL
        mu_n, nu_n = self.shifted(N, bits)
        with mpmath.workprec(bits):
            z_n = (mu_n * nu_n) ** (mpmath.mpf(self.alpha) / 2)
            if self.regime is not Regime.HARD:
                z_n *= mpmath.exp(-(mu_n + nu_n) / 2)
            if self.regime is Regime.BULK:
                xi = to_bigfloat(self.xi, bits)
                g = mp_density(xi, bits)
                prefactor = 1 / (N * xi * g**3) if real else 1 / g
            elif self.regime is Regime.SOFT:
                prefactor = mpmath.mpf(4) if real else mpmath.cbrt(2) ** 4 * mpmath.cbrt(N)
            else:
                prefactor = mpmath.mpf(1) / (16 * N * N) if real else mpmath.mpf(1) / (4 * N)
            return prefactor * z_n

    def predicted_limit(self, prec: int | None = None) -> mpmath.mpf:
        return predicted_limit(self.regime, self.ensemble, self.mu, self.nu, self.alpha, prec)


class LimitRow(BaseModel):
    """One row of a limit scan."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    N: int
    scaled_value: mpmath.mpf
    predicted_limit: mpmath.mpf
    abs_error: mpmath.mpf
    nodes_used: int
    precision_bits: int

    def to_csv_row(self, digits: int = 17) -> dict[str, str | int]:
        return {
            'N': self.N,
            'scaled_value': mpmath.nstr(self.scaled_value, digits),
            'predicted_limit': mpmath.nstr(self.predicted_limit, digits),
            'abs_error': mpmath.nstr(self.abs_error, digits),
            'nodes_used': self.nodes_used,
            'precision_bits': self.precision_bits,
        }


LIMIT_CSV_HEADER = ['N', 'scaled_value', 'predicted_limit', 'abs_error', 'nodes_used', 'precision_bits']


def _limit_row(args: tuple) -> LimitRow:
    config, N, method, bits, node_count, tol = args
    mu_n, nu_n = config.shifted(N, bits)
    n, m = N, N - config.alpha
    if method == 'recursion':
        value = second_moment_numeric(config.ensemble, n, m, mu_n, nu_n, prec=bits)
        nodes = 0
    else:
        spec = ContourSpec(
            N=N, alpha=config.alpha, radius=config.radius(N, bits), node_count=node_count, precision=bits, tol=tol
        )
        result = contour_integral(spec, mu_n, nu_n, config.ensemble)
        value, nodes = result.value, result.nodes_used
    limit = config.predicted_limit(bits)
    with mpmath.workprec(bits):
        scaled = config.normalization(N, bits) * value
        row = LimitRow(
            N=N,
            scaled_value=scaled,
            predicted_limit=limit,
            abs_error=abs(scaled - limit),
            nodes_used=nodes,
            precision_bits=bits,
        )
    logger.info(f'{config.regime.value} N={N}: scaled {mpmath.nstr(scaled, 10)}, error {mpmath.nstr(row.abs_error, 3)}')
    return row


def limit_scan(
    config: RegimeConfig,
    N_list: Iterable[int],
    method: Method = 'contour',
    prec: int | None = None,
    node_count: int = MIN_NODES,
    tol: float = DEFAULT_TOLERANCE,
    workers: int | None = None,
) -> list[LimitRow]:
    """Evaluate the normalized left-hand side of the regime's limit theorem for each N.

    `method='contour'` uses `contour_integral` on the regime's radius schedule; `method='recursion'` uses
    `second_moment_numeric`. Rows come back in the order of `N_list`.
    """
    bits = resolve_precision(prec)
    Ns = list(N_list)
    for N in Ns:
        if N < config.alpha + 1:
            raise ValueError(f'limit scans need N >= alpha + 1 = {config.alpha + 1}, got N={N}')
    jobs = [(config, N, method, bits, node_count, tol) for N in Ns]
    if workers is None or workers <= 1 or len(jobs) == 1:
        return [_limit_row(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_limit_row, jobs))


def errors_decrease(rows: Sequence[LimitRow]) -> bool:
    """True if |scaled(N) - limit| strictly decreases along the scan."""
    return all(b.abs_error < a.abs_error for a, b in zip(rows, rows[1:]))


def error_ratios(rows: Sequence[LimitRow]) -> list[mpmath.mpf]:
    return [a.abs_error / b.abs_error for a, b in zip(rows, rows[1:])]


# Line integrals


class IdentityCheck(BaseModel):
    """Both sides of a quadrature identity."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str
    lhs: mpmath.mpf
    rhs: mpmath.mpf
    nodes_used: int

    @property
    def abs_error(self) -> mpmath.mpf:
        return abs(self.lhs - self.rhs)

    def agrees(self, tol: float) -> bool:
        return self.abs_error <= tol * max(1, abs(self.rhs))


def _trapezoid_line(
    f: Callable[[mpmath.mpf], mpmath.mpc], tol: float, step: float = 0.25, max_halvings: int = 10
) -> tuple[mpmath.mpc, int]:
    """Integral of f over the real line by the trapezoid rule, halving the step until two sums agree.

    The sum runs outward from 0 until three consecutive terms fall below tol times the partial sum.
    """

    def truncated_sum(h: mpmath.mpf) -> tuple[mpmath.mpc, int]:
        total = f(mpmath.mpf(0))
        used = 1
        quiet = 0
        k = 0
        while quiet < 3:
            k += 1
            pair = f(k * h) + f(-k * h)
            total += pair
            used += 2
            quiet = quiet + 1 if abs(pair) <= tol * abs(total) * mpmath.mpf('1e-3') else 0
            if used > 10**6:
                raise QuadratureError('line integral tails do not decay')
        return h * total, used

    h = mpmath.mpf(step)
    previous, used = truncated_sum(h)
    for _ in range(max_halvings):
        h /= 2
        current, used = truncated_sum(h)
        if relative_gap(current, previous) <= tol:
            return current, used
        previous = current
    raise QuadratureError(f'line integral did not converge after {max_halvings} step halvings')


def _parabola_integral(
    integrand_fn: Callable[[mpmath.mpc], mpmath.mpc], tol: float, sigma: Any = 1
) -> tuple[mpmath.mpc, int]:
    """(1/2 pi i) times the integral of integrand_fn along z = sigma (1 + iu)^2, u from -inf to inf."""
    s = mpmath.mpf(sigma)

    def along(u: mpmath.mpf) -> mpmath.mpc:
        w = 1 + 1j * u
        return integrand_fn(s * w * w) * 2 * s * w

    total, used = _trapezoid_line(along, tol)
    return total / (2 * mpmath.pi), used


def _vertical_integral(
    integrand_fn: Callable[[mpmath.mpc], mpmath.mpc], tol: float, abscissa: Any = 1
) -> tuple[mpmath.mpc, int]:
    """(1/2 pi i) times the integral of integrand_fn along Re z = abscissa, upwards."""
    c = mpmath.mpf(abscissa)
    total, used = _trapezoid_line(lambda s: integrand_fn(mpmath.mpc(c, s)), tol)
    return total / (2 * mpmath.pi), used


def _tolerance(prec: int) -> float:
    return max(1e-30, 2.0 ** (-prec // 2))


def laplace_sine_identity_check(a: Any, t: Any, prec: int | None = None) -> IdentityCheck:
    """(1/2 pi i) int e^(tz) e^(-a^2 / 4z) z^(-3/2) dz = 2 sin(a sqrt t) / (sqrt pi a)."""
    bits = resolve_precision(prec)
    with mpmath.workprec(bits):
        a_b, t_b = to_bigfloat(a, bits), to_bigfloat(t, bits)
        if a_b <= 0 or t_b <= 0:
            raise ValueError(f'the Laplace identity needs a > 0 and t > 0, got a={a}, t={t}')
        lhs, used = _parabola_integral(
            lambda z: mpmath.exp(t_b * z - a_b * a_b / (4 * z)) * z ** mpmath.mpf(-1.5), _tolerance(bits)
        )
        rhs = 2 * mpmath.sin(a_b * mpmath.sqrt(t_b)) / (mpmath.sqrt(mpmath.pi) * a_b)
        return IdentityCheck(name='laplace-sine', lhs=mpmath.re(lhs), rhs=rhs, nodes_used=used)


def bessel_product_identity_check(alpha: int, mu: Any, nu: Any, prec: int | None = None) -> IdentityCheck:
    """(1/2 pi i) int exp(z/4 - (mu + nu)/z) I_alpha(2 sqrt(mu nu) / z) / z^2 dz = J_alpha(mu, nu).

    The right-hand side is the Bessel kernel.
    """
    bits = resolve_precision(prec)
    policy = SeriesPolicy(precision=bits)
    with mpmath.workprec(bits):
        mu_b, nu_b = to_bigfloat(mu, bits), to_bigfloat(nu, bits)
        if mu_b <= 0 or nu_b <= 0:
            raise ValueError(f'the Bessel-product identity needs mu > 0 and nu > 0, got mu={mu}, nu={nu}')
        root = mpmath.sqrt(mu_b * nu_b)

        def fn(z: mpmath.mpc) -> mpmath.mpc:
            return mpmath.exp(z / 4 - (mu_b + nu_b) / z) * bessel_i(alpha, 2 * root / z, policy) / (z * z)

        lhs, used = _parabola_integral(fn, _tolerance(bits))
        rhs = kernel(KernelKind.BESSEL, mu_b, nu_b, alpha=alpha, prec=bits)
        return IdentityCheck(name='bessel-product', lhs=mpmath.re(lhs), rhs=rhs, nodes_used=used)


def bessel_pair_laplace_check(alpha: int, x: Any, y: Any, t: Any, prec: int | None = None) -> IdentityCheck:
    """(1/2 pi i) int e^(tz) exp(-(x^2 + y^2)/z) I_alpha(2xy/z) / z dz = J_alpha(2x sqrt t) J_alpha(2y sqrt t)."""
    bits = resolve_precision(prec)
    policy = SeriesPolicy(precision=bits)
    with mpmath.workprec(bits):
        x_b, y_b, t_b = (to_bigfloat(v, bits) for v in (x, y, t))
        if t_b <= 0:
            raise ValueError(f'the Bessel-pair identity needs t > 0, got t={t}')

        def fn(z: mpmath.mpc) -> mpmath.mpc:
            return mpmath.exp(t_b * z - (x_b * x_b + y_b * y_b) / z) * bessel_i(alpha, 2 * x_b * y_b / z, policy) / z

        lhs, used = _parabola_integral(fn, _tolerance(bits))
        root_t = mpmath.sqrt(t_b)
        jx, _ = bessel_j(alpha, 2 * abs(x_b) * root_t, policy)
        jy, _ = bessel_j(alpha, 2 * abs(y_b) * root_t, policy)
        sign = 1 if (x_b * y_b >= 0 or alpha % 2 == 0) else -1
        return IdentityCheck(name='bessel-pair', lhs=mpmath.re(lhs), rhs=sign * jx * jy, nodes_used=used)


def airy_integral_identity_check(mu: Any, nu: Any, prec: int | None = None) -> IdentityCheck:
    """(1/(4 pi^(3/2) i)) int exp(z^3/12 - (mu + nu) z / 2 - (mu - nu)^2 / 4z) z^(-3/2) dz = A(mu, nu).

    The path is the vertical line Re z = 1, on which exp(z^3 / 12) decays like a Gaussian.
    """
    bits = resolve_precision(prec)
    with mpmath.workprec(bits):
        mu_b, nu_b = to_bigfloat(mu, bits), to_bigfloat(nu, bits)
        if mu_b == nu_b:
            raise ValueError('the Airy-integral identity is checked off the diagonal, mu != nu')
        total = mu_b + nu_b
        gap2 = (mu_b - nu_b) ** 2

        def fn(z: mpmath.mpc) -> mpmath.mpc:
            return mpmath.exp(z**3 / 12 - total * z / 2 - gap2 / (4 * z)) * z ** mpmath.mpf(-1.5)

        # (1/(4 pi^(3/2) i)) = (1/(2 pi i)) / (2 sqrt pi)
        lhs, used = _vertical_integral(fn, _tolerance(bits))
        lhs = lhs / (2 * mpmath.sqrt(mpmath.pi))
        rhs = kernel(KernelKind.AIRY, mu_b, nu_b, prec=bits)
        return IdentityCheck(name='airy-integral', lhs=mpmath.re(lhs), rhs=rhs, nodes_used=used)
