"""Subcommand bodies: each takes a validated record and a session and returns its checks and files."""

import json
import logging
import math
from collections.abc import Callable
from fractions import Fraction
from pathlib import Path
from typing import Any

import mpmath
from pydantic import BaseModel, ConfigDict

from pycpc.scm.contour import (
    LIMIT_CSV_HEADER,
    ContourSpec,
    QuadratureError,
    airy_integral_identity_check,
    bessel_pair_laplace_check,
    bessel_product_identity_check,
    contour_integral,
    error_ratios,
    errors_decrease,
    laplace_sine_identity_check,
    limit_scan,
)
from pycpc.scm.ensemble import (
    DistributionKind,
    EntryDistribution,
    MCReport,
    brute_force_polynomial,
    chiral_identity_check,
    mc_second_moment,
)
from pycpc.scm.helper import relative_gap
from pycpc.scm.kernels import (
    KernelDomainError,
    KernelKind,
    Regime,
    StepSizeError,
    apply_D_numeric,
    diagonal_value,
    kernel,
    mp_density,
)
from pycpc.scm.polycore import BivariatePolynomial, to_bigfloat
from pycpc.scm.recursion import (
    PrecisionLossError,
    Variant,
    gf_coeff_closed,
    gf_coeff_recursive,
    gf_ode_check,
    moment_table,
    second_moment_at,
    second_moment_auto,
    second_moment_exact,
)
from pycpc.scm.specfun import SeriesConvergenceError

from .config import (
    BruteConfig,
    ContourConfig,
    ExactConfig,
    GfCheckConfig,
    IdentitiesConfig,
    KernelsConfig,
    LimitsConfig,
    McConfig,
)
from .persist import CheckOutcome, TableCache, write_csv

logger = logging.getLogger(__name__)

NUMERIC_ERRORS = (QuadratureError, PrecisionLossError, SeriesConvergenceError, StepSizeError, KernelDomainError)

# half-width of the symmetric off-diagonal offset for the diagonal formulas
DIAGONAL_OFFSET = Fraction(1, 100_000)


class Session(BaseModel):
    """Settings shared by every subcommand of one invocation."""

    model_config = ConfigDict(extra='forbid', arbitrary_types_allowed=True)

    out: Path
    precision: int
    workers: int | None = None
    cache: TableCache


class RunOutput(BaseModel):
    model_config = ConfigDict(extra='forbid')

    checks: list[CheckOutcome] = []
    artifacts: list[Path] = []
    seeds: list[int] = []
    lines: list[str] = []


def _fmt(value: Any, digits: int = 17) -> str:
    if isinstance(value, BivariatePolynomial):
        return value.to_string()
    if isinstance(value, Fraction):
        return f'{value.numerator}/{value.denominator}'
    if isinstance(value, (mpmath.mpf, mpmath.mpc)):
        return mpmath.nstr(value, digits)
    return str(value)


def _failed(name: str, error: Exception) -> CheckOutcome:
    logger.warning(f'{name}: {error}')
    return CheckOutcome(name=name, passed=False, detail={'error': str(error)})


# exact


def run_exact(cfg: ExactConfig, session: Session) -> RunOutput:
    """Tabulate f up to (n, m), print f(n, m) and check it against the m-direction recursion."""
    ensemble = cfg.ensemble_spec()
    if cfg.use_cache:
        table, hit = session.cache.fetch(ensemble, cfg.n, cfg.m)
    else:
        table, hit = moment_table(ensemble, cfg.n, cfg.m), False
    poly = table.get(cfg.n, cfg.m)
    reference = second_moment_auto(ensemble, cfg.n, cfg.m)
    out = RunOutput()
    detail = {'n': cfg.n, 'm': cfg.m, 'cache_hit': hit}
    out.checks.append(CheckOutcome(name='cross-recursion', passed=poly == reference, detail=detail))
    document = {
        'ensemble': ensemble.variant.value,
        'b': _fmt(ensemble.b),
        'n': cfg.n,
        'm': cfg.m,
        'terms': poly.to_terms(),
    }
    out.lines = [poly.to_string(), json.dumps(document)]
    if cfg.mu is not None and cfg.nu is not None:
        out.lines.append(f'f({cfg.n}, {cfg.m}; {_fmt(cfg.mu)}, {_fmt(cfg.nu)}) = {_fmt(poly.evaluate(cfg.mu, cfg.nu))}')
    rows = [{'i': i, 'j': j, 'coefficient': c} for i, j, c in poly.to_terms()]
    out.artifacts.append(write_csv(session.out / 'exact.csv', ['i', 'j', 'coefficient'], rows))
    return out


# gf-check


def run_gf_check(cfg: GfCheckConfig, session: Session) -> RunOutput:
    """c_alpha(m) from the closed form, from the coefficient recursion and as f(m + alpha, m) / ((m + alpha)! m!)."""
    ensemble = cfg.ensemble_spec()
    alpha = cfg.alpha
    mu, nu = (None, None) if cfg.symbolic else (cfg.mu, cfg.nu)
    rows = []
    mismatches = []
    for m in range(cfg.m_max + 1):
        n = m + alpha
        weight = Fraction(1, math.factorial(n) * math.factorial(m))
        closed = gf_coeff_closed(ensemble, alpha, m, mu, nu)
        recursive = gf_coeff_recursive(ensemble, alpha, m, mu, nu)
        if cfg.symbolic:
            moment: Any = second_moment_exact(ensemble, n, m).scale(weight)
        else:
            moment = second_moment_at(ensemble, n, m, mu, nu) * weight
        equal = closed == recursive and recursive == moment
        if not equal:
            mismatches.append(m)
        rows.append(
            {'m': m, 'closed': _fmt(closed), 'recursive': _fmt(recursive), 'moment': _fmt(moment), 'equal': equal}
        )
    count = cfg.m_max + 1
    out = RunOutput()
    out.checks.append(
        CheckOutcome(
            name='gf-coefficients',
            passed=not mismatches,
            detail={'alpha': alpha, 'coefficients': count, 'mismatches': mismatches},
        )
    )
    if mismatches:
        out.lines.append(f'FAIL, {len(mismatches)} of {count} coefficients differ (m = {mismatches})')
    else:
        out.lines.append(f'PASS, {count} coefficients equal')
    if cfg.m_max >= 3:
        ode = gf_ode_check(ensemble, alpha, cfg.m_max, mu, nu)
        out.checks.append(
            CheckOutcome(
                name='gf-ode',
                passed=ode.ok,
                detail={'truncation': ode.truncation, 'mismatch_order': ode.mismatch_order},
            )
        )
        out.lines.append(
            f'ODE holds through order {ode.truncation}' if ode.ok else f'ODE fails at order {ode.mismatch_order}'
        )
    header = ['m', 'closed', 'recursive', 'moment', 'equal']
    out.artifacts.append(write_csv(session.out / 'gf-check.csv', header, rows))
    return out


# contour


def run_contour(cfg: ContourConfig, session: Session) -> RunOutput:
    """Cauchy-integral value of f(n, m) / (n! m!) on each radius against the exact value."""
    ensemble = cfg.ensemble_spec()
    bits = session.precision
    exact = second_moment_at(ensemble, cfg.n, cfg.m, cfg.mu, cfg.nu) * Fraction(
        1, math.factorial(cfg.n) * math.factorial(cfg.m)
    )
    out = RunOutput()
    rows = []
    values = []
    with mpmath.workprec(bits):
        exact_b = to_bigfloat(exact, bits)
        for radius in cfg.radii:
            name = f'contour R={_fmt(radius)}'
            spec = ContourSpec.for_indices(
                cfg.n, cfg.m, radius=radius, node_count=cfg.node_count, precision=bits, tol=cfg.quadrature_tol
            )
            try:
                result = contour_integral(spec, cfg.mu, cfg.nu, ensemble, cfg.route, session.workers)
            except NUMERIC_ERRORS as e:
                out.checks.append(_failed(name, e))
                continue
            error = relative_gap(result.value, exact_b)
            values.append(result.value)
            out.checks.append(
                CheckOutcome(
                    name=name,
                    passed=error <= cfg.tol,
                    detail={'relative_error': float(error), 'nodes_used': result.nodes_used},
                )
            )
            rows.append(
                {
                    'radius': _fmt(radius),
                    'value': _fmt(result.value),
                    'exact': _fmt(exact_b),
                    'relative_error': _fmt(error, 5),
                    'imaginary_residual': _fmt(result.imaginary_residual, 5),
                    'nodes_used': result.nodes_used,
                    'precision_bits': result.precision_bits,
                }
            )
            out.lines.append(f'R={_fmt(radius)}: {_fmt(result.value, 20)} (relative error {_fmt(error, 3)})')
        if len(values) > 1:
            spread = max(relative_gap(a, b) for a in values for b in values)
            out.checks.append(
                CheckOutcome(name='radius-independence', passed=spread <= cfg.tol, detail={'spread': float(spread)})
            )
    header = ['radius', 'value', 'exact', 'relative_error', 'imaginary_residual', 'nodes_used', 'precision_bits']
    out.artifacts.append(write_csv(session.out / 'contour.csv', header, rows))
    return out


# mc


def run_mc(cfg: McConfig, session: Session) -> RunOutput:
    """Repeated seeded Monte Carlo runs against the exact second moment of the matching b."""
    ensemble = EntryDistribution(kind=cfg.distribution, variant=cfg.ensemble).ensemble
    exact = second_moment_at(ensemble, cfg.n, cfg.m, cfg.mu, cfg.nu)
    out = RunOutput(seeds=cfg.seeds)
    rows = []
    reports = []
    within = 0
    for repetition in range(cfg.repetitions):
        sample_cfg = cfg.sample_config(repetition)
        estimate = mc_second_moment(sample_cfg, cfg.mu, cfg.nu, session.workers)
        report = MCReport.build(sample_cfg, cfg.mu, cfg.nu, estimate, exact)
        passed = report.passed(cfg.sigmas)
        within += passed
        reports.append(report.model_dump(mode='json'))
        rows.append(
            {
                'repetition': repetition,
                'seed': sample_cfg.seed,
                'samples': estimate.sample_count,
                'mean': repr(report.mean),
                'stderr': repr(report.stderr),
                'exact': _fmt(exact),
                'z_score': repr(report.z_score),
                'within': passed,
            }
        )
    fraction = within / cfg.repetitions
    out.checks.append(
        CheckOutcome(
            name='mc-concordance',
            passed=fraction >= cfg.min_pass_fraction,
            detail={'within': within, 'repetitions': cfg.repetitions, 'sigmas': cfg.sigmas},
        )
    )
    out.lines.append(
        f'{within} of {cfg.repetitions} runs within {cfg.sigmas:g} standard errors of the exact value {_fmt(exact)}'
    )
    header = ['repetition', 'seed', 'samples', 'mean', 'stderr', 'exact', 'z_score', 'within']
    out.artifacts.append(write_csv(session.out / 'mc.csv', header, rows))
    reports_path = session.out / 'mc.reports.json'
    reports_path.write_text(json.dumps(reports, indent=2), encoding='utf-8')
    out.artifacts.append(reports_path)
    return out


# brute


def _witness_matrix(n: int, m: int, variant: Variant) -> list[list[Any]]:
    """A fixed small-integer n x m matrix (Gaussian integers for the complex variant)."""
    rows = []
    for i in range(n):
        row: list[Any] = []
        for j in range(m):
            re = (i + 2 * j) % 3 - 1
            row.append((re, (i * j + 1) % 2) if variant is Variant.COMPLEX else re)
        rows.append(row)
    return rows


def run_brute(cfg: BruteConfig, session: Session) -> RunOutput:
    """Exact enumeration over Rademacher sign patterns against the recursion with the Rademacher b."""
    ensemble = EntryDistribution(kind=DistributionKind.RADEMACHER, variant=cfg.ensemble).ensemble
    brute = brute_force_polynomial(cfg.n, cfg.m, cfg.ensemble)
    reference = second_moment_auto(ensemble, cfg.n, cfg.m)
    out = RunOutput()
    detail = {'n': cfg.n, 'm': cfg.m, 'b': _fmt(ensemble.b)}
    out.checks.append(CheckOutcome(name='brute-force', passed=brute == reference, detail=detail))
    out.lines = [brute.to_string(), 'PASS' if brute == reference else f'FAIL, recursion gives {reference.to_string()}']
    if cfg.n and cfg.m:
        lam = Fraction(7, 3)
        chiral = chiral_identity_check(cfg.n, cfg.m, lam, _witness_matrix(cfg.n, cfg.m, cfg.ensemble))
        out.checks.append(CheckOutcome(name='chiral-identity', passed=chiral, detail={'lambda': _fmt(lam)}))
    terms = {(i, j): c for i, j, c in brute.to_terms()}
    reference_terms = {(i, j): c for i, j, c in reference.to_terms()}
    rows = [
        {'i': i, 'j': j, 'brute_force': terms.get((i, j), '0'), 'recursion': reference_terms.get((i, j), '0')}
        for i, j in sorted(set(terms) | set(reference_terms))
    ]
    out.artifacts.append(write_csv(session.out / 'brute.csv', ['i', 'j', 'brute_force', 'recursion'], rows))
    return out


# limits


def run_limits(cfg: LimitsConfig, session: Session) -> RunOutput:
    """Limit scan of the normalized moment against exp(b*) K(mu, nu), judged by `LimitsConfig.criteria`."""
    config = cfg.regime_config()
    out = RunOutput()
    try:
        rows = limit_scan(
            config,
            cfg.N,
            method=cfg.method,
            prec=session.precision,
            node_count=cfg.node_count,
            tol=cfg.quadrature_tol,
            workers=session.workers,
        )
    except NUMERIC_ERRORS as e:
        out.checks.append(_failed('limit-scan', e))
        return out
    out.artifacts.append(write_csv(session.out / 'limits.csv', LIMIT_CSV_HEADER, [r.to_csv_row() for r in rows]))
    for row in rows:
        value, limit = _fmt(row.scaled_value, 12), _fmt(row.predicted_limit, 12)
        out.lines.append(f'N={row.N}: {value} vs {limit}, error {_fmt(row.abs_error, 3)}')
    if len(rows) > 1:
        out.checks.append(
            CheckOutcome(
                name='errors-decrease',
                passed=errors_decrease(rows),
                detail={'abs_errors': [float(r.abs_error) for r in rows]},
            )
        )
    max_error, low, high = cfg.criteria()
    if max_error is not None:
        last = rows[-1]
        relative = last.abs_error / abs(last.predicted_limit) if last.predicted_limit else last.abs_error
        out.checks.append(
            CheckOutcome(
                name='final-error',
                passed=relative <= max_error,
                detail={'N': last.N, 'relative_error': float(relative)},
            )
        )
    if len(rows) > 1 and (low is not None or high is not None):
        ratios = [float(r) for r in error_ratios(rows)]
        out.checks.append(
            CheckOutcome(
                name='error-ratios',
                passed=all((low is None or r >= low) and (high is None or r <= high) for r in ratios),
                detail={'ratios': ratios, 'min_ratio': low, 'max_ratio': high},
            )
        )
    return out


# kernels


def kernel_grid(regime: Regime, count: int) -> list[tuple[Fraction, Fraction]]:
    """Off-diagonal sample points; hard-edge points stay on the positive half-line."""
    if regime is Regime.BULK:
        return [(Fraction(-2) + Fraction(k, 5), Fraction(-2) + Fraction(k, 5) + Fraction(3, 4)) for k in range(count)]
    if regime is Regime.SOFT:
        return [(Fraction(-3) + Fraction(k, 4), Fraction(-3) + Fraction(k, 4) - Fraction(1, 2)) for k in range(count)]
    return [(Fraction(1, 2) + Fraction(k, 4), Fraction(7, 4) + Fraction(k, 4)) for k in range(count)]


def _within(error: Any, tol: float, scale: Any) -> bool:
    return bool(error <= tol * max(1, abs(scale)))


def _kernel_checks(kind: KernelKind, cfg: KernelsConfig, bits: int) -> tuple[list[dict[str, Any]], list[CheckOutcome]]:
    rows = []
    worst_operator = mpmath.mpf(0)
    worst_diagonal = mpmath.mpf(0)
    operator_ok = True
    diagonal_ok = True
    checks = []
    d = DIAGONAL_OFFSET
    for x, y in kernel_grid(kind.regime, cfg.points):
        value = kernel(kind, x, y, alpha=cfg.alpha, prec=bits)
        row: dict[str, Any] = {'kind': kind.value, 'x': _fmt(x), 'y': _fmt(y), 'value': _fmt(value)}
        if kind.is_differentiated:
            try:
                fd = apply_D_numeric(kind.regime, x, y, h=cfg.h, alpha=cfg.alpha, tol=cfg.operator_tol, prec=bits)
            except StepSizeError as e:
                checks.append(_failed(f'{kind.value} operator at ({_fmt(x)}, {_fmt(y)})', e))
                operator_ok = False
            else:
                error = abs(fd - value)
                worst_operator = max(worst_operator, error)
                operator_ok = operator_ok and _within(error, cfg.operator_tol, value)
                row.update(finite_difference=_fmt(fd), operator_error=_fmt(error, 5))
        diagonal = diagonal_value(kind, x, alpha=cfg.alpha, prec=bits)
        nearby = kernel(kind, x - d, x + d, alpha=cfg.alpha, prec=bits, near_diag_threshold=float(d) / 10)
        error = abs(nearby - diagonal)
        worst_diagonal = max(worst_diagonal, error)
        diagonal_ok = diagonal_ok and _within(error, cfg.diagonal_tol, diagonal)
        row.update(diagonal=_fmt(diagonal), diagonal_error=_fmt(error, 5))
        rows.append(row)
    if kind.is_differentiated:
        checks.append(
            CheckOutcome(
                name=f'{kind.value} operator',
                passed=operator_ok,
                detail={'points': cfg.points, 'max_abs_error': float(worst_operator)},
            )
        )
    checks.append(
        CheckOutcome(
            name=f'{kind.value} diagonal',
            passed=diagonal_ok,
            detail={'points': cfg.points, 'max_abs_error': float(worst_diagonal)},
        )
    )
    return rows, checks


def run_kernels(cfg: KernelsConfig, session: Session) -> RunOutput:
    """Tabulate the kernels; check the differentiated kernels against D and the diagonal formulas."""
    bits = session.precision
    out = RunOutput()
    rows = []
    for kind in cfg.kinds:
        try:
            kind_rows, checks = _kernel_checks(kind, cfg, bits)
        except NUMERIC_ERRORS as e:
            out.checks.append(_failed(f'{kind.value} kernel', e))
            continue
        rows.extend(kind_rows)
        out.checks.extend(checks)
    worst = mpmath.mpf(0)
    density_ok = True
    with mpmath.workprec(bits):
        for k in range(1, 40):
            xi = Fraction(k, 10)
            lhs = (mpmath.pi * mp_density(xi, bits)) ** 2
            rhs = to_bigfloat((1 - xi / 4) / xi, bits)
            error = abs(lhs - rhs)
            worst = max(worst, error)
            density_ok = density_ok and _within(error, cfg.density_tol, rhs)
    out.checks.append(CheckOutcome(name='density', passed=density_ok, detail={'max_abs_error': float(worst)}))
    for check in out.checks:
        out.lines.append(f'{"PASS" if check.passed else "FAIL"} {check.name}')
    header = ['kind', 'x', 'y', 'value', 'finite_difference', 'operator_error', 'diagonal', 'diagonal_error']
    out.artifacts.append(write_csv(session.out / 'kernels.csv', header, rows))
    return out


# identities


def run_identities(cfg: IdentitiesConfig, session: Session) -> RunOutput:
    """Quadrature identities behind the limit kernels, each against its closed form."""
    bits = session.precision
    jobs: list[tuple[str, float, Callable[[], Any]]] = []
    for alpha in cfg.alphas:
        for mu, nu in cfg.pairs:
            jobs.append(
                (
                    f'bessel-product alpha={alpha} mu={_fmt(mu)} nu={_fmt(nu)}',
                    cfg.bessel_tol,
                    lambda a=alpha, x=mu, y=nu: bessel_product_identity_check(a, x, y, bits),
                )
            )
        for x, y in cfg.pairs:
            jobs.append(
                (
                    f'bessel-pair alpha={alpha} x={_fmt(x)} y={_fmt(y)}',
                    cfg.laplace_tol,
                    lambda a=alpha, x=x, y=y: bessel_pair_laplace_check(a, x, y, Fraction(1, 4), bits),
                )
            )
    for a, t in cfg.laplace_points:
        jobs.append(
            (
                f'laplace-sine a={_fmt(a)} t={_fmt(t)}',
                cfg.laplace_tol,
                lambda a=a, t=t: laplace_sine_identity_check(a, t, bits),
            )
        )
    for mu, nu in cfg.airy_pairs:
        jobs.append(
            (
                f'airy-integral mu={_fmt(mu)} nu={_fmt(nu)}',
                cfg.airy_tol,
                lambda x=mu, y=nu: airy_integral_identity_check(x, y, bits),
            )
        )
    out = RunOutput()
    rows = []
    for name, tol, job in jobs:
        try:
            result = job()
        except NUMERIC_ERRORS as e:
            out.checks.append(_failed(name, e))
            continue
        passed = result.agrees(tol)
        out.checks.append(
            CheckOutcome(name=name, passed=passed, detail={'abs_error': float(result.abs_error), 'tol': tol})
        )
        rows.append(
            {
                'name': name,
                'lhs': _fmt(result.lhs),
                'rhs': _fmt(result.rhs),
                'abs_error': _fmt(result.abs_error, 5),
                'nodes_used': result.nodes_used,
            }
        )
        out.lines.append(f'{"PASS" if passed else "FAIL"} {name}: error {_fmt(result.abs_error, 3)}')
    header = ['name', 'lhs', 'rhs', 'abs_error', 'nodes_used']
    out.artifacts.append(write_csv(session.out / 'identities.csv', header, rows))
    return out


RUNNERS: dict[str, Callable[[Any, Session], RunOutput]] = {
    'exact': run_exact,
    'gf-check': run_gf_check,
    'contour': run_contour,
    'mc': run_mc,
    'brute': run_brute,
    'limits': run_limits,
    'kernels': run_kernels,
    'identities': run_identities,
}
