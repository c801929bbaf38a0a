import json
import logging
from pathlib import Path
from typing import Any

import click
from pydantic import BaseModel, ConfigDict

from pycpc.scm.ensemble import StateSpaceError
from pycpc.scm.helper import MIN_PRECISION, default_precision
from pycpc.scm.kernels import KernelKind, Regime

from .config import LOG_LEVELS, ConfigError, RunConfig, check_round_trip, config_document, load_config
from .persist import CheckFailure, RunManifest, TableCache, package_versions, utc_now, write_manifest
from .runs import RUNNERS, Session

logger = logging.getLogger(__name__)

DEFAULT_OUT = 'results'
VARIANTS = ['complex', 'real']


class HarnessError(click.ClickException):
    """Custom exception for configuration, state-space and I/O errors in a run."""

    exit_code = 2


class _Invocation(BaseModel):
    model_config = ConfigDict(extra='forbid', arbitrary_types_allowed=True)

    run: RunConfig
    session: Session


def execute(run: RunConfig, subcommand: str, overrides: dict[str, Any], session: Session) -> RunManifest:
    """Resolve the subcommand's record, run it, echo its output and write the manifest.

    Raises:
        ConfigError: If the merged configuration is invalid or does not round-trip.
        CheckFailure: If any check failed; the manifest has been written.
    """
    started = utc_now()
    resolved, record = run.resolve(subcommand, overrides)
    check_round_trip(resolved)
    logger.info(f'running {subcommand} at {session.precision} bits')
    output = RUNNERS[subcommand](record, session)
    for line in output.lines:
        click.echo(line)
    manifest = RunManifest(
        subcommand=subcommand,
        config=config_document(resolved),
        versions=package_versions(),
        seeds=output.seeds,
        precision=session.precision,
        started_at=started,
        finished_at=utc_now(),
        checks=output.checks,
        artifacts=[str(p) for p in output.artifacts],
    )
    write_manifest(session.out, manifest)
    if not manifest.passed:
        raise CheckFailure(manifest)
    return manifest


def _dispatch(invocation: _Invocation, subcommand: str, overrides: dict[str, Any]) -> None:
    try:
        execute(invocation.run, subcommand, overrides, invocation.session)
    except ConfigError as e:
        raise HarnessError(str(e)) from e
    except StateSpaceError as e:
        raise HarnessError(str(e)) from e
    except OSError as e:
        raise HarnessError(f'cannot write results: {e}') from e
    except CheckFailure as e:
        logger.error(str(e))
        click.echo(json.dumps(e.manifest.failure_report(), indent=2))
        click.get_current_context().exit(1)


# Option groups

ensemble_option = click.option('--ensemble', type=click.Choice(VARIANTS), help='Ensemble variant.')
b_option = click.option('--b', help="Fourth moment b as 'p/q'; defaults to the Gaussian value.")
mu_option = click.option('--mu', help="First spectral variable as 'p/q' or a decimal.")
nu_option = click.option('--nu', help="Second spectral variable as 'p/q' or a decimal.")
n_option = click.option('--n', type=click.IntRange(min=0), help='Row count n.')
m_option = click.option('--m', type=click.IntRange(min=0), help='Column count m.')


@click.group(context_settings={'help_option_names': ['-h', '--help']})
@click.option(
    '--config',
    'config_path',
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help='TOML run configuration; command-line options override it.',
)
@click.option('--out', type=click.Path(file_okay=False, path_type=Path), help=f'Output directory [{DEFAULT_OUT}].')
@click.option('--precision', type=click.IntRange(min=MIN_PRECISION), help='Working precision in bits.')
@click.option('--log-level', type=click.Choice(LOG_LEVELS, case_sensitive=False), help='Logging level [INFO].')
@click.option('--workers', type=click.IntRange(min=1), help='Worker processes for parallel stages.')
@click.option('--cache-dir', type=click.Path(file_okay=False, path_type=Path), help='Exact-table cache [OUT/cache].')
@click.version_option(package_name='pycpc')
@click.pass_context
def cli(
    ctx: click.Context,
    config_path: Path | None,
    out: Path | None,
    precision: int | None,
    log_level: str | None,
    workers: int | None,
    cache_dir: Path | None,
) -> None:
    """Second-order correlations of characteristic polynomials of sample covariance matrices.

    Every subcommand writes its CSV table and a JSON run manifest into the output directory. The exit status
    is 0 when all checks pass, 1 when a check fails (a JSON failure report is printed) and 2 for usage or
    configuration errors.
    """
    try:
        run = load_config(config_path) if config_path is not None else RunConfig()
    except ConfigError as e:
        raise HarnessError(str(e)) from e
    overrides = {
        'precision': precision,
        'workers': workers,
        'log_level': log_level.upper() if log_level else None,
        'out': str(out) if out is not None else None,
        'cache_dir': str(cache_dir) if cache_dir is not None else None,
    }
    run = run.model_copy(update={k: v for k, v in overrides.items() if v is not None})
    logging.basicConfig(
        level=run.log_level or 'INFO',
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
        force=True,
    )
    try:
        bits = run.precision if run.precision is not None else default_precision()
    except ValueError as e:
        raise HarnessError(str(e)) from e
    root = Path(run.out or DEFAULT_OUT)
    session = Session(
        out=root,
        precision=bits,
        workers=run.workers,
        cache=TableCache(Path(run.cache_dir) if run.cache_dir else root / 'cache'),
    )
    ctx.obj = _Invocation(run=run, session=session)


@cli.command()
@ensemble_option
@b_option
@n_option
@m_option
@mu_option
@nu_option
@click.option('--cache/--no-cache', 'use_cache', default=None, help='Reuse cached exact tables [cache].')
@click.pass_obj
def exact(invocation: _Invocation, **options: Any) -> None:
    """Print f(n, m; mu, nu) as a polynomial and in its JSON form."""
    _dispatch(invocation, 'exact', options)


@cli.command('gf-check')
@ensemble_option
@b_option
@click.option('--alpha', type=click.IntRange(min=0), help='alpha = n - m.')
@click.option('--mmax', 'm_max', type=click.IntRange(min=0), help='Largest coefficient index [25].')
@mu_option
@nu_option
@click.option('--symbolic/--at-point', default=None, help='Compare polynomials instead of values at (mu, nu).')
@click.pass_obj
def gf_check(invocation: _Invocation, **options: Any) -> None:
    """Check that both generating-function routes and the moment table agree coefficient by coefficient."""
    _dispatch(invocation, 'gf-check', options)


@cli.command()
@ensemble_option
@b_option
@n_option
@m_option
@mu_option
@nu_option
@click.option('--radii', help="Comma-separated radii in (0, 1) [1/2].")
@click.option('--nodes', 'node_count', type=click.IntRange(min=1), help='Initial node count, a power of two.')
@click.option('--route', type=click.Choice(['auto', 'series', 'bessel']), help='Evaluation of the Bessel factor.')
@click.option('--tol', type=click.FloatRange(min=0, min_open=True), help='Relative tolerance against the exact value.')
@click.pass_obj
def contour(invocation: _Invocation, **options: Any) -> None:
    """Evaluate f(n, m) / (n! m!) as a Cauchy integral and compare with the exact value."""
    _dispatch(invocation, 'contour', options)


@cli.command()
@ensemble_option
@click.option('--distribution', type=click.Choice(['gaussian', 'rademacher', 'uniform']), help='Entry law.')
@click.option('--n', type=click.IntRange(min=1), help='Row count n.')
@click.option('--m', type=click.IntRange(min=1), help='Column count m.')
@mu_option
@nu_option
@click.option('--samples', type=click.IntRange(min=2), help='Samples per run.')
@click.option('--seed', type=click.IntRange(min=0), help='Seed of the first run.')
@click.option('--repetitions', type=click.IntRange(min=1), help='Number of seeded runs.')
@click.option('--sigmas', type=click.FloatRange(min=0, min_open=True), help='Accepted |z-score| [4].')
@click.pass_obj
def mc(invocation: _Invocation, **options: Any) -> None:
    """Monte Carlo estimate of E det(X*X - mu) det(X*X - nu) against the exact value."""
    _dispatch(invocation, 'mc', options)


@cli.command()
@ensemble_option
@n_option
@m_option
@click.pass_obj
def brute(invocation: _Invocation, **options: Any) -> None:
    """Average over all Rademacher sign patterns in exact arithmetic and compare with the recursion."""
    _dispatch(invocation, 'brute', options)


@cli.command()
@click.option('--regime', type=click.Choice([r.value for r in Regime]), help='Scaling regime.')
@ensemble_option
@b_option
@click.option('--alpha', type=click.IntRange(min=0), help='alpha = n - m.')
@click.option('--xi', help='Bulk point in (0, 4).')
@mu_option
@nu_option
@click.option('--N', 'N', help='Comma-separated matrix sizes, e.g. 50,100,200,400.')
@click.option(
    '--method',
    type=click.Choice(['contour', 'recursion']),
    help='Evaluation method [contour]; recursion raises its precision as needed near the soft edge.',
)
@click.option(
    '--max-relative-error',
    type=float,
    help='Largest accepted relative error at the last N [0.05; none at the soft edge].',
)
@click.option('--min-ratio', type=float, help='Smallest accepted error ratio per doubling [1.5 bulk, 1.15 soft edge].')
@click.option('--max-ratio', type=float, help='Largest accepted error ratio per doubling [3 bulk].')
@click.pass_obj
def limits(invocation: _Invocation, **options: Any) -> None:
    """Scan the normalized second moment over N against its bulk, soft-edge or hard-edge limit."""
    _dispatch(invocation, 'limits', options)


@cli.command()
@click.option('--kinds', help='Comma-separated kernel kinds: ' + ', '.join(k.value for k in KernelKind) + '.')
@click.option('--points', type=click.IntRange(min=1), help='Grid points per kernel [20].')
@click.option('--alpha', type=click.IntRange(min=0), help='Bessel order.')
@click.option('--h', help='Finite-difference step.')
@click.pass_obj
def kernels(invocation: _Invocation, **options: Any) -> None:
    """Tabulate the limit kernels and check the D operators, diagonal formulas and the density."""
    _dispatch(invocation, 'kernels', options)


@cli.command()
@click.option('--alphas', help='Comma-separated Bessel orders [0,1,2].')
@click.option('--pairs', help="Bessel (mu, nu) pairs as 'mu,nu;mu,nu'.")
@click.option('--airy-pairs', help="Airy (mu, nu) pairs as 'mu,nu;mu,nu'.")
@click.option('--laplace-points', help="Laplace (a, t) points as 'a,t;a,t'.")
@click.pass_obj
def identities(invocation: _Invocation, **options: Any) -> None:
    """Check the Bessel-product, Bessel-pair, Laplace sine and Airy-integral identities."""
    _dispatch(invocation, 'identities', options)


def main() -> None:
    cli(prog_name='pycpc')
