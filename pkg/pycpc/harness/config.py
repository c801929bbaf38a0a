import logging
from fractions import Fraction
from pathlib import Path
from typing import Annotated, Any, Literal

import toml
from deepdiff import DeepDiff
from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    PlainSerializer,
    ValidationError,
    field_validator,
    model_validator,
)

from pycpc.scm.contour import MIN_NODES, RegimeConfig
from pycpc.scm.ensemble import DistributionKind, EntryDistribution, SampleConfig
from pycpc.scm.helper import MIN_PRECISION
from pycpc.scm.kernels import KernelKind, Regime
from pycpc.scm.polycore import to_rational
from pycpc.scm.recursion import EnsembleSpec, Variant

logger = logging.getLogger(__name__)

LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR')


# Custom Exceptions


class ConfigError(Exception):
    """Raised when a run configuration cannot be read or validated."""

    pass


# Field types


def _parse_rational(value: Any) -> Fraction:
    # TOML floats are taken as the decimal literal the user wrote, 0.3 -> 3/10
    if isinstance(value, float):
        value = repr(value)
    try:
        return to_rational(value)
    except TypeError as e:
        raise ValueError(str(e)) from e


def _format_rational(q: Fraction) -> str:
    return f'{q.numerator}/{q.denominator}'


def _split(value: Any) -> Any:
    """'50,100,200' -> ['50', '100', '200']; lists pass through."""
    if isinstance(value, str):
        return [part.strip() for part in value.split(',') if part.strip()]
    return value


def _split_pairs(value: Any) -> Any:
    """'1,2;1/2,3/2' or ['1,2', '1/2,3/2'] -> [['1', '2'], ['1/2', '3/2']]."""
    if isinstance(value, str):
        value = [pair for pair in value.split(';') if pair.strip()]
    if isinstance(value, (list, tuple)):
        return [_split(pair) for pair in value]
    return value


RationalValue = Annotated[Fraction, BeforeValidator(_parse_rational), PlainSerializer(_format_rational)]
RationalPair = tuple[RationalValue, RationalValue]


class _Record(BaseModel):
    model_config = ConfigDict(extra='forbid', arbitrary_types_allowed=True)


class _EnsembleRecord(_Record):
    """Ensemble variant and fourth moment; `b` defaults to the Gaussian value of the variant."""

    ensemble: Variant = Variant.COMPLEX
    b: RationalValue | None = None

    @model_validator(mode='after')
    def check_ensemble(self) -> '_EnsembleRecord':
        try:
            self.ensemble_spec()
        except ValidationError as e:
            raise ValueError(f'invalid ensemble: {e.errors()[0]["msg"]}') from e
        return self

    def ensemble_spec(self) -> EnsembleSpec:
        if self.b is None:
            return EnsembleSpec.gaussian(self.ensemble)
        return EnsembleSpec.of(self.ensemble, self.b)


# Subcommand records


class ExactConfig(_EnsembleRecord):
    n: int = Field(ge=0)
    m: int = Field(ge=0)
    mu: RationalValue | None = None
    nu: RationalValue | None = None
    use_cache: bool = True

    @model_validator(mode='after')
    def check_point(self) -> 'ExactConfig':
        if (self.mu is None) != (self.nu is None):
            raise ValueError('mu and nu must be given together')
        return self


class GfCheckConfig(_EnsembleRecord):
    """Coefficient equality of the two generating-function routes and the tabulated moments, m = 0..m_max."""

    alpha: int = Field(default=0, ge=0)
    m_max: int = Field(default=25, ge=0)
    mu: RationalValue = Fraction(2)
    nu: RationalValue = Fraction(3)
    symbolic: bool = False


class ContourConfig(_EnsembleRecord):
    n: int = Field(ge=0)
    m: int = Field(ge=0)
    mu: RationalValue
    nu: RationalValue
    radii: list[RationalValue] = [Fraction(1, 2)]
    node_count: int = MIN_NODES
    route: Literal['auto', 'series', 'bessel'] = 'auto'
    quadrature_tol: float = Field(default=1e-14, gt=0)
    tol: float = Field(default=1e-10, gt=0)

    @field_validator('radii', mode='before')
    @classmethod
    def _split_radii(cls, value: Any) -> Any:
        return _split(value)

    @model_validator(mode='after')
    def check_indices(self) -> 'ContourConfig':
        if self.n < self.m:
            raise ValueError(f'contour integrals need n >= m, got n={self.n}, m={self.m}')
        if not self.radii:
            raise ValueError('at least one radius is required')
        for r in self.radii:
            if not 0 < r < 1:
                raise ValueError(f'radii must lie strictly between 0 and 1, got {r}')
        return self


class McConfig(_Record):
    """Monte Carlo runs; repetition r uses seed + r."""

    ensemble: Variant = Variant.COMPLEX
    distribution: DistributionKind = DistributionKind.GAUSSIAN
    n: int = Field(ge=1)
    m: int = Field(ge=1)
    mu: RationalValue = Fraction(1)
    nu: RationalValue = Fraction(2)
    samples: int = Field(default=100_000, ge=2)
    seed: int = Field(default=0, ge=0)
    repetitions: int = Field(default=1, ge=1)
    chunk_size: int = Field(default=4096, ge=1)
    sigmas: float = Field(default=4.0, gt=0)
    min_pass_fraction: float = Field(default=0.95, ge=0, le=1)

    @model_validator(mode='after')
    def check_shape(self) -> 'McConfig':
        try:
            self.sample_config(0)
        except ValidationError as e:
            raise ValueError(f'invalid Monte Carlo run: {e.errors()[0]["msg"]}') from e
        if self.seed + self.repetitions > 2**64:
            raise ValueError('seed + repetitions must stay below 2^64')
        return self

    @property
    def seeds(self) -> list[int]:
        return [self.seed + r for r in range(self.repetitions)]

    def sample_config(self, repetition: int) -> SampleConfig:
        return SampleConfig(
            n=self.n,
            m=self.m,
            variant=self.ensemble,
            distribution=EntryDistribution(kind=self.distribution, variant=self.ensemble),
            sample_count=self.samples,
            seed=self.seed + repetition,
            chunk_size=self.chunk_size,
        )


class BruteConfig(_Record):
    ensemble: Variant = Variant.COMPLEX
    n: int = Field(ge=0)
    m: int = Field(ge=0)


# Final-error bound, smallest and largest error ratio per doubling of N
LIMIT_CRITERIA: dict[Regime, tuple[float | None, float | None, float | None]] = {
    Regime.BULK: (0.05, 1.5, 3.0),
    Regime.SOFT: (None, 1.15, None),
    Regime.HARD: (0.05, None, None),
}


class LimitsConfig(_EnsembleRecord):
    regime: Regime
    alpha: int = Field(default=0, ge=0)
    xi: RationalValue | None = None
    mu: RationalValue
    nu: RationalValue
    N: list[int] = [50, 100, 200, 400]
    method: Literal['contour', 'recursion'] = 'contour'
    node_count: int = MIN_NODES
    quadrature_tol: float = Field(default=1e-14, gt=0)
    max_relative_error: float | None = Field(default=None, gt=0)
    min_ratio: float | None = Field(default=None, gt=0)
    max_ratio: float | None = Field(default=None, gt=0)

    @field_validator('N', mode='before')
    @classmethod
    def _split_N(cls, value: Any) -> Any:
        return _split(value)

    @model_validator(mode='after')
    def check_scan(self) -> 'LimitsConfig':
        if not self.N:
            raise ValueError('at least one N is required')
        if any(N < self.alpha + 1 for N in self.N):
            raise ValueError(f'limit scans need N >= alpha + 1 = {self.alpha + 1}, got {self.N}')
        try:
            self.regime_config()
        except ValidationError as e:
            raise ValueError(f'invalid regime: {e.errors()[0]["msg"]}') from e
        return self

    def regime_config(self) -> RegimeConfig:
        return RegimeConfig(
            regime=self.regime, ensemble=self.ensemble_spec(), mu=self.mu, nu=self.nu, xi=self.xi, alpha=self.alpha
        )

    def criteria(self) -> tuple[float | None, float | None, float | None]:
        """The final-error bound and the error-ratio band; unset values fall back to `LIMIT_CRITERIA[regime]`."""
        max_error, low, high = LIMIT_CRITERIA[self.regime]
        return (
            self.max_relative_error if self.max_relative_error is not None else max_error,
            self.min_ratio if self.min_ratio is not None else low,
            self.max_ratio if self.max_ratio is not None else high,
        )


class KernelsConfig(_Record):
    kinds: list[KernelKind] = list(KernelKind)
    points: int = Field(default=20, ge=1)
    alpha: int = Field(default=0, ge=0)
    h: RationalValue = Fraction(1, 10_000)
    operator_tol: float = Field(default=1e-6, gt=0)
    diagonal_tol: float = Field(default=1e-8, gt=0)
    density_tol: float = Field(default=1e-12, gt=0)

    @field_validator('kinds', mode='before')
    @classmethod
    def _split_kinds(cls, value: Any) -> Any:
        return _split(value)

    @model_validator(mode='after')
    def check_kinds(self) -> 'KernelsConfig':
        if not self.kinds:
            raise ValueError('at least one kernel kind is required')
        return self


class IdentitiesConfig(_Record):
    """Quadrature identities; `pairs` feed the Bessel-product check, `laplace_points` are (a, t)."""

    alphas: list[int] = [0, 1, 2]
    pairs: list[RationalPair] = [
        (Fraction(1), Fraction(2)),
        (Fraction(1, 2), Fraction(3, 2)),
        (Fraction(2), Fraction(5, 2)),
    ]
    airy_pairs: list[RationalPair] = [(Fraction(1, 2), Fraction(-1, 2)), (Fraction(1), Fraction(0))]
    laplace_points: list[RationalPair] = [(Fraction(1), Fraction(1, 2)), (Fraction(3), Fraction(2))]
    bessel_tol: float = Field(default=1e-10, gt=0)
    laplace_tol: float = Field(default=1e-8, gt=0)
    airy_tol: float = Field(default=1e-8, gt=0)

    @field_validator('alphas', mode='before')
    @classmethod
    def _split_alphas(cls, value: Any) -> Any:
        return _split(value)

    @field_validator('pairs', 'airy_pairs', 'laplace_points', mode='before')
    @classmethod
    def _split_point_pairs(cls, value: Any) -> Any:
        return _split_pairs(value)

    @model_validator(mode='after')
    def check_points(self) -> 'IdentitiesConfig':
        if any(a < 0 for a in self.alphas):
            raise ValueError(f'alphas must be non-negative, got {self.alphas}')
        if any(mu <= 0 or nu <= 0 for mu, nu in self.pairs):
            raise ValueError('Bessel-product pairs need mu > 0 and nu > 0')
        if any(mu == nu for mu, nu in self.airy_pairs):
            raise ValueError('Airy-integral pairs need mu != nu')
        if any(a <= 0 or t <= 0 for a, t in self.laplace_points):
            raise ValueError('Laplace points need a > 0 and t > 0')
        return self


SECTIONS: dict[str, type[_Record]] = {
    'exact': ExactConfig,
    'gf-check': GfCheckConfig,
    'contour': ContourConfig,
    'mc': McConfig,
    'brute': BruteConfig,
    'limits': LimitsConfig,
    'kernels': KernelsConfig,
    'identities': IdentitiesConfig,
}


class RunConfig(_Record):
    """A run configuration file: global settings and one optional table per subcommand.

    The TOML tables are named after the subcommands with underscores, e.g. `[gf_check]`.
    """

    precision: int | None = Field(default=None, ge=MIN_PRECISION)
    workers: int | None = Field(default=None, ge=1)
    log_level: str | None = None
    out: str | None = None
    cache_dir: str | None = None
    exact: ExactConfig | None = None
    gf_check: GfCheckConfig | None = None
    contour: ContourConfig | None = None
    mc: McConfig | None = None
    brute: BruteConfig | None = None
    limits: LimitsConfig | None = None
    kernels: KernelsConfig | None = None
    identities: IdentitiesConfig | None = None

    @field_validator('log_level', mode='before')
    @classmethod
    def _parse_log_level(cls, value: Any) -> Any:
        if value is None:
            return None
        level = str(value).upper()
        if level not in LOG_LEVELS:
            raise ValueError(f"log_level must be one of {', '.join(LOG_LEVELS)}, got '{value}'")
        return level

    def resolve(self, subcommand: str, overrides: dict[str, Any]) -> tuple['RunConfig', _Record]:
        """Merge CLI overrides (None means unset) into the subcommand's table and validate it.

        Returns the run configuration with the resolved table in place, and the table itself.

        Raises:
            ConfigError: If the merged table is invalid.
        """
        field = subcommand.replace('-', '_')
        record_type = SECTIONS[subcommand]
        current = getattr(self, field)
        merged = current.model_dump() if current is not None else {}
        merged.update({k: v for k, v in overrides.items() if v is not None})
        try:
            record = record_type.model_validate(merged)
        except ValidationError as e:
            raise ConfigError(f'invalid [{field}] configuration: {_describe(e)}') from e
        return self.model_copy(update={field: record}), record


def _describe(e: ValidationError) -> str:
    parts = []
    for error in e.errors():
        location = '.'.join(str(p) for p in error['loc'])
        parts.append(f'{location}: {error["msg"]}' if location else error['msg'])
    return '; '.join(parts)


# Parsing and emission


def parse_config(text: str) -> RunConfig:
    """Parse a TOML run configuration.

    Raises:
        ConfigError: If the text is not TOML or does not describe a valid run.
    """
    try:
        data = toml.loads(text)
    except toml.TomlDecodeError as e:
        raise ConfigError(f'invalid TOML: {e}') from e
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f'invalid run configuration: {_describe(e)}') from e


def load_config(path: Path | str) -> RunConfig:
    """Read and parse a TOML run configuration file."""
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as e:
        raise ConfigError(f'cannot read configuration {path}: {e}') from e
    config = parse_config(text)
    logger.debug(f'loaded run configuration from {path}')
    return config


def config_document(config: RunConfig) -> dict[str, Any]:
    """Plain JSON/TOML form; rationals as 'p/q' strings, unset values dropped."""
    return config.model_dump(mode='json', exclude_none=True)


def emit_config(config: RunConfig) -> str:
    return toml.dumps(config_document(config))


def round_trip_diff(config: RunConfig) -> DeepDiff:
    """Differences between `config` and parse(emit(config)); empty when the round trip is exact."""
    again = parse_config(emit_config(config))
    return DeepDiff(config_document(config), config_document(again))


def check_round_trip(config: RunConfig) -> None:
    """Raises ConfigError if emitting and re-parsing `config` changes it."""
    diff = round_trip_diff(config)
    if diff:
        raise ConfigError(f'configuration does not round-trip through TOML: {diff.to_json()}')
