# test_contour.py

from fractions import Fraction

import mpmath
import pytest
from pydantic import ValidationError

import pycpc.scm.contour as contour_module
from pycpc.scm.contour import (
    LIMIT_CSV_HEADER,
    ContourSpec,
    IdentityCheck,
    LimitRow,
    QuadratureError,
    RegimeConfig,
    airy_integral_identity_check,
    bessel_pair_laplace_check,
    bessel_product_identity_check,
    contour_integral,
    error_ratios,
    errors_decrease,
    integrand,
    laplace_sine_identity_check,
    limit_scan,
)
from pycpc.scm.kernels import KernelKind
from pycpc.scm.polycore import to_bigfloat
from pycpc.scm.recursion import EnsembleSpec, second_moment_at

PREC = 128
COMPLEX_GAUSSIAN = EnsembleSpec.gaussian('complex')


def normalized_exact(ensemble, n, m, mu, nu):
    value = second_moment_at(ensemble, n, m, mu, nu)
    with mpmath.workprec(PREC):
        return mpmath.mpf(value.numerator) / value.denominator / (mpmath.factorial(n) * mpmath.factorial(m))


def rel(a, b):
    with mpmath.workprec(PREC):
        return abs(a - b) / max(abs(a), abs(b))


# Contour specification


@pytest.mark.parametrize(
    'kwargs, message',
    [
        ({'N': 3, 'radius': 1}, 'radius must lie strictly between 0 and 1'),
        ({'N': 3, 'radius': 0}, 'radius must lie strictly between 0 and 1'),
        ({'N': 3, 'node_count': 300}, 'node_count must be a power of two'),
        ({'N': 3, 'node_count': 128}, 'node_count must be a power of two'),
        ({'N': 3, 'alpha': 4}, 'alpha must not exceed N'),
    ],
)
def test_contour_spec_validation(kwargs, message):
    with pytest.raises(ValidationError, match=message):
        ContourSpec(precision=PREC, **kwargs)


def test_contour_spec_indices():
    spec = ContourSpec.for_indices(7, 4, radius='1/3', precision=PREC)
    assert (spec.N, spec.alpha, spec.n, spec.m) == (7, 3, 7, 4)
    assert spec.radius == Fraction(1, 3)
    with pytest.raises(ValueError, match='need n >= m'):
        ContourSpec.for_indices(2, 3)


# Cauchy integrals against the exact recursion


@pytest.mark.parametrize(
    'ensemble, n, m, mu, nu',
    [
        (COMPLEX_GAUSSIAN, 3, 2, Fraction(1, 2), Fraction(3, 2)),
        (COMPLEX_GAUSSIAN, 8, 8, Fraction(2), Fraction(3)),
        (EnsembleSpec.of('complex', 2), 6, 3, Fraction(-1), Fraction(5, 2)),
        (EnsembleSpec.gaussian('real'), 5, 5, Fraction(1), Fraction(2)),
        (EnsembleSpec.of('real', 5), 8, 6, Fraction(7, 3), Fraction(1, 4)),
    ],
)
def test_contour_matches_exact(ensemble, n, m, mu, nu):
    spec = ContourSpec.for_indices(n, m, precision=PREC)
    result = contour_integral(spec, mu, nu, ensemble)
    assert rel(result.value, normalized_exact(ensemble, n, m, mu, nu)) < 1e-10
    assert result.precision_bits == PREC
    assert result.nodes_used >= 512
    assert result.imaginary_residual <= spec.tol


def test_imaginary_residual_covers_the_whole_circle(mocker):
    node_values = contour_module._node_values

    def lopsided(args):
        count, indices = args[-2], args[-1]
        return [v + 1j * abs(v) if 2 * j > count else v for v, j in zip(node_values(args), indices)]

    mocker.patch('pycpc.scm.contour._node_values', side_effect=lopsided)
    spec = ContourSpec.for_indices(6, 4, precision=PREC)
    with pytest.raises(QuadratureError, match='imaginary residual'):
        contour_integral(spec, 1, 2, COMPLEX_GAUSSIAN)


def test_contour_radius_independence():
    values = []
    for radius in ('1/4', '1/2', '3/4'):
        spec = ContourSpec.for_indices(6, 4, radius=radius, precision=PREC)
        values.append(contour_integral(spec, 2, 3, COMPLEX_GAUSSIAN).value)
    assert rel(values[0], values[1]) < 1e-10
    assert rel(values[1], values[2]) < 1e-10


def test_bessel_routes_agree():
    spec = ContourSpec.for_indices(6, 3, precision=PREC)
    series = contour_integral(spec, 2, 3, COMPLEX_GAUSSIAN, route='series').value
    bessel = contour_integral(spec, 2, 3, COMPLEX_GAUSSIAN, route='bessel').value
    assert rel(series, bessel) < 1e-12


def test_workers_do_not_change_the_sum():
    spec = ContourSpec.for_indices(4, 3, precision=PREC)
    serial = contour_integral(spec, 1, 2, COMPLEX_GAUSSIAN)
    parallel = contour_integral(spec, 1, 2, COMPLEX_GAUSSIAN, workers=2)
    assert serial.value == parallel.value
    assert serial.nodes_used == parallel.nodes_used


def test_integrand_is_real_on_the_positive_axis():
    spec = ContourSpec.for_indices(3, 2, precision=PREC)
    value = integrand(mpmath.mpf('0.5'), spec, 1, 2, COMPLEX_GAUSSIAN)
    assert abs(mpmath.im(value)) < mpmath.mpf(10) ** -30


def test_contour_without_convergence():
    spec = ContourSpec.for_indices(40, 40, radius='99/100', max_doublings=0, precision=64)
    with pytest.raises(QuadratureError, match='did not converge'):
        contour_integral(spec, 1, 2, COMPLEX_GAUSSIAN)


# Regimes


@pytest.mark.parametrize(
    'kwargs, message',
    [
        ({'regime': 'bulk', 'mu': 0, 'nu': 1}, 'bulk scaling needs 0 < xi < 4'),
        ({'regime': 'bulk', 'mu': 0, 'nu': 1, 'xi': 4}, 'bulk scaling needs 0 < xi < 4'),
        ({'regime': 'soft', 'mu': 0, 'nu': 1, 'xi': 1}, 'xi only applies to the bulk'),
        ({'regime': 'hard', 'mu': 0, 'nu': 1}, 'hard-edge scaling needs mu > 0 and nu > 0'),
    ],
)
def test_regime_validation(kwargs, message):
    with pytest.raises(ValidationError, match=message):
        RegimeConfig(ensemble=COMPLEX_GAUSSIAN, **kwargs)


def test_regime_radius_and_kernel():
    bulk = RegimeConfig(regime='bulk', ensemble=COMPLEX_GAUSSIAN, mu='3/10', nu='-1/5', xi=1)
    assert bulk.radius(10) == Fraction(9, 10)
    assert bulk.kernel_kind is KernelKind.SINE
    soft = RegimeConfig(regime='soft', ensemble=EnsembleSpec.gaussian('real'), mu=0, nu=1)
    assert soft.radius(8, PREC) == Fraction(1, 2)
    assert isinstance(soft.radius(10, PREC), Fraction)
    assert soft.kernel_kind is KernelKind.AIRY_DIFF


def test_hard_edge_shift():
    hard = RegimeConfig(regime='hard', ensemble=COMPLEX_GAUSSIAN, mu=1, nu=2)
    mu_n, nu_n = hard.shifted(50, PREC)
    with mpmath.workprec(PREC):
        assert mu_n == mpmath.mpf(1) / 200
        assert nu_n == mpmath.mpf(2) / 200


def test_methods_agree_at_moderate_size():
    config = RegimeConfig(regime='bulk', ensemble=COMPLEX_GAUSSIAN, mu='3/10', nu='-1/5', xi=1)
    contour = limit_scan(config, [20], method='contour', prec=PREC)[0]
    recursion = limit_scan(config, [20], method='recursion', prec=PREC)[0]
    assert rel(contour.scaled_value, recursion.scaled_value) < 1e-8
    assert recursion.nodes_used == 0
    assert contour.predicted_limit == recursion.predicted_limit


def test_soft_edge_scan_on_the_contour():
    config = RegimeConfig(regime='soft', ensemble=COMPLEX_GAUSSIAN, mu='1/2', nu='-1/2')
    contour = limit_scan(config, [8], prec=256)[0]
    recursion = limit_scan(config, [8], method='recursion', prec=256)[0]
    assert contour.nodes_used > 0
    assert rel(contour.scaled_value, recursion.scaled_value) < 1e-8


def test_contour_spec_stores_bigfloat_radius_exactly():
    with mpmath.workprec(PREC):
        radius = 1 - mpmath.cbrt(10) ** -1
    spec = ContourSpec(N=10, radius=radius, precision=PREC)
    assert isinstance(spec.radius, Fraction)
    assert to_bigfloat(spec.radius, PREC) == radius


def test_limit_scan_rejects_small_sizes():
    config = RegimeConfig(regime='hard', ensemble=COMPLEX_GAUSSIAN, mu=1, nu=2, alpha=3)
    with pytest.raises(ValueError, match='N >= alpha \\+ 1 = 4'):
        limit_scan(config, [3, 8])


def _row(N, error):
    value = mpmath.mpf(1) + error
    return LimitRow(
        N=N, scaled_value=value, predicted_limit=mpmath.mpf(1), abs_error=error, nodes_used=512, precision_bits=64
    )


def test_error_bookkeeping():
    rows = [_row(50, mpmath.mpf('0.08')), _row(100, mpmath.mpf('0.04')), _row(200, mpmath.mpf('0.02'))]
    assert errors_decrease(rows)
    assert [float(r) for r in error_ratios(rows)] == pytest.approx([2.0, 2.0])
    assert not errors_decrease(rows[::-1])
    assert list(rows[0].to_csv_row()) == LIMIT_CSV_HEADER
    assert rows[0].to_csv_row(digits=3)['abs_error'] == '0.08'


@pytest.mark.slow
@pytest.mark.parametrize(
    'ensemble, mu, nu',
    [
        (COMPLEX_GAUSSIAN, '3/10', '-1/5'),
        (COMPLEX_GAUSSIAN, '1/2', '1/2'),
        (EnsembleSpec.gaussian('real'), '3/10', '-1/5'),
    ],
)
def test_bulk_limit_converges(ensemble, mu, nu):
    config = RegimeConfig(regime='bulk', ensemble=ensemble, mu=mu, nu=nu, xi=1)
    rows = limit_scan(config, [50, 100, 200, 400], prec=256)
    assert errors_decrease(rows)
    assert rows[-1].abs_error <= 0.05 * abs(rows[-1].predicted_limit)


@pytest.mark.slow
@pytest.mark.parametrize('variant', ['complex', 'real'])
def test_soft_edge_limit_converges(variant):
    config = RegimeConfig(regime='soft', ensemble=EnsembleSpec.gaussian(variant), mu='1/2', nu='-1/2')
    rows = limit_scan(config, [64, 128, 256], prec=256, workers=2)
    assert errors_decrease(rows)
    assert all(ratio >= 1.15 for ratio in error_ratios(rows))


@pytest.mark.slow
@pytest.mark.parametrize('variant', ['complex', 'real'])
@pytest.mark.parametrize('alpha', [0, 1])
def test_hard_edge_limit_converges(variant, alpha):
    config = RegimeConfig(regime='hard', ensemble=EnsembleSpec.gaussian(variant), mu=1, nu=2, alpha=alpha)
    rows = limit_scan(config, [50, 100, 200, 400], prec=256, workers=2)
    assert [r.N for r in rows] == [50, 100, 200, 400]
    assert errors_decrease(rows)
    assert rows[-1].abs_error <= 0.05 * abs(rows[-1].predicted_limit)


# Line-integral identities


@pytest.mark.parametrize('a, t', [(1, '1/2'), (3, 2), ('1/10', 1)])
def test_laplace_sine_identity(a, t):
    check = laplace_sine_identity_check(a, t, prec=64)
    assert check.name == 'laplace-sine'
    assert check.agrees(1e-8)


@pytest.mark.parametrize('alpha', [0, 1, 2])
def test_bessel_product_identity(alpha):
    assert bessel_product_identity_check(alpha, 1, 2, prec=64).agrees(1e-8)


@pytest.mark.parametrize('alpha, x, y', [(0, '1/2', 1), (1, 1, '3/2'), (1, -1, '1/2')])
def test_bessel_pair_identity(alpha, x, y):
    assert bessel_pair_laplace_check(alpha, x, y, '1/4', prec=64).agrees(1e-8)


@pytest.mark.parametrize('mu, nu', [('1/2', '-1/2'), (1, 0)])
def test_airy_integral_identity(mu, nu):
    assert airy_integral_identity_check(mu, nu, prec=64).agrees(1e-8)


@pytest.mark.parametrize(
    'call, message',
    [
        (lambda: laplace_sine_identity_check(0, 1), 'a > 0 and t > 0'),
        (lambda: bessel_product_identity_check(0, -1, 1), 'mu > 0 and nu > 0'),
        (lambda: bessel_pair_laplace_check(0, 1, 1, 0), 't > 0'),
        (lambda: airy_integral_identity_check(1, 1), 'off the diagonal'),
    ],
)
def test_identity_domains(call, message):
    with pytest.raises(ValueError, match=message):
        call()


def test_identity_check_tolerance_is_relative():
    check = IdentityCheck(name='x', lhs=mpmath.mpf(1000.5), rhs=mpmath.mpf(1000), nodes_used=1)
    assert check.abs_error == mpmath.mpf(0.5)
    assert check.agrees(1e-3)
    assert not check.agrees(1e-4)
