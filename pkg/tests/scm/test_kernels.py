# test_kernels.py

from fractions import Fraction

import mpmath
import pytest

from pycpc.scm.kernels import (
    KernelDomainError,
    KernelKind,
    Regime,
    StepSizeError,
    apply_D_numeric,
    bulk_unscaled_limit,
    diagonal_value,
    kernel,
    mp_density,
    predicted_limit,
)
from pycpc.scm.recursion import EnsembleSpec

PREC = 128


def as_mpf(q):
    q = Fraction(q)
    return mpmath.mpf(q.numerator) / q.denominator


def rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), mpmath.mpf(10) ** -30)


def sine_ref(x, y):
    d = x - y
    return mpmath.sin(mpmath.pi * d) / (mpmath.pi * d)


def airy_ref(x, y):
    return (mpmath.airyai(x) * mpmath.airyai(y, 1) - mpmath.airyai(x, 1) * mpmath.airyai(y)) / (x - y)


def bessel_ref(alpha, x, y):
    sx, sy = mpmath.sqrt(x), mpmath.sqrt(y)
    num = mpmath.besselj(alpha, sx) * sy * mpmath.besselj(alpha, sy, 1) - sx * mpmath.besselj(
        alpha, sx, 1
    ) * mpmath.besselj(alpha, sy)
    return num / (2 * (x - y))


# Kinds


@pytest.mark.parametrize(
    'regime, variant, kind',
    [
        ('bulk', 'complex', KernelKind.SINE),
        ('soft', 'complex', KernelKind.AIRY),
        ('hard', 'complex', KernelKind.BESSEL),
        ('bulk', 'real', KernelKind.SINE_DIFF),
        ('soft', 'real', KernelKind.AIRY_DIFF),
        ('hard', 'real', KernelKind.BESSEL_DIFF),
    ],
)
def test_kind_for_regime(regime, variant, kind):
    assert KernelKind.for_regime(regime, variant) is kind
    assert kind.regime is Regime(regime)
    assert kind.base is KernelKind.for_regime(regime, 'complex')


# Closed forms


@pytest.mark.parametrize('x, y', [('1/3', '5/4'), ('-2', '3/2'), ('7', '1/10')])
def test_sine_kernels(x, y):
    with mpmath.workprec(PREC):
        xb, yb = as_mpf(x), as_mpf(y)
        d = xb - yb
        assert rel(kernel('sine', x, y, prec=PREC), sine_ref(xb, yb)) < 1e-30
        expected = 2 * mpmath.sin(mpmath.pi * d) / (mpmath.pi * d**3) - 2 * mpmath.cos(mpmath.pi * d) / d**2
        assert rel(kernel('sine_diff', x, y, prec=PREC), expected) < 1e-30


@pytest.mark.parametrize('x, y', [('1/2', '-1'), ('-3', '-5/2'), ('2', '4')])
def test_airy_kernel(x, y):
    with mpmath.workprec(PREC):
        assert rel(kernel('airy', x, y, prec=PREC), airy_ref(as_mpf(x), as_mpf(y))) < 1e-30


@pytest.mark.parametrize('alpha', [0, 1, 3])
@pytest.mark.parametrize('x, y', [('1/2', '7/4'), ('3', '10')])
def test_bessel_kernel(alpha, x, y):
    with mpmath.workprec(PREC):
        expected = bessel_ref(alpha, as_mpf(x), as_mpf(y))
        assert rel(kernel('bessel', x, y, alpha=alpha, prec=PREC), expected) < 1e-30


def test_kernels_are_symmetric():
    for kind in KernelKind:
        a = kernel(kind, '3/4', '2', alpha=1, prec=PREC)
        b = kernel(kind, '2', '3/4', alpha=1, prec=PREC)
        assert rel(a, b) < 1e-30, kind


# Differentiated kernels


@pytest.mark.parametrize(
    'regime, x, y, alpha',
    [
        ('bulk', '3/10', '11/10', 0),
        ('bulk', '-1', '1/2', 0),
        ('soft', '-1', '1/2', 0),
        ('soft', '1', '5/2', 0),
        ('hard', '1', '5/2', 0),
        ('hard', '1/2', '3', 2),
    ],
)
def test_differentiated_kernels_match_finite_differences(regime, x, y, alpha):
    kind = KernelKind.for_regime(regime, 'real')
    closed = kernel(kind, x, y, alpha=alpha, prec=PREC)
    numeric = apply_D_numeric(regime, x, y, alpha=alpha, prec=PREC)
    assert abs(closed - numeric) <= 1e-6 * max(1, abs(closed))


@pytest.mark.parametrize(
    'regime, x, y, h, message',
    [
        ('bulk', 0, 1, 0, 'step must be positive'),
        ('soft', 0, 1, '1/2', 'is not small against'),
        ('hard', '1/10000', 1, '1/10000', 'leaves the positive half-line'),
        ('bulk', 0, 1, '1/10', 'estimated truncation error'),
    ],
)
def test_step_size_errors(regime, x, y, h, message):
    with pytest.raises(StepSizeError, match=message):
        apply_D_numeric(regime, x, y, h=h, prec=PREC)


# Diagonal


@pytest.mark.parametrize(
    'kind, x, alpha',
    [
        ('sine', '1/2', 0),
        ('sine_diff', '1/2', 0),
        ('airy', '-1', 0),
        ('airy', '3/2', 0),
        ('airy_diff', '-2', 0),
        ('bessel', '2', 0),
        ('bessel', '5', 2),
        ('bessel_diff', '2', 1),
    ],
)
def test_diagonal_is_continuous(kind, x, alpha):
    value = diagonal_value(kind, x, alpha=alpha, prec=PREC)
    with mpmath.workprec(PREC):
        d = mpmath.mpf(10) ** -5
        nearby = kernel(kind, as_mpf(x) - d, as_mpf(x) + d, alpha=alpha, prec=PREC, near_diag_threshold=1e-6)
    assert rel(value, nearby) < 1e-8
    assert rel(value, kernel(kind, x, x, alpha=alpha, prec=PREC)) < 1e-25


def test_diagonal_closed_forms():
    with mpmath.workprec(PREC):
        assert diagonal_value('sine_diff', 0, prec=PREC) == 2 * mpmath.pi**2 / 3
        x = mpmath.mpf(-1)
        ai, aip = mpmath.airyai(x), mpmath.airyai(x, 1)
        assert rel(diagonal_value('airy', -1, prec=PREC), aip**2 - x * ai**2) < 1e-30


def test_taylor_branch_meets_closed_form_at_threshold():
    threshold = 1e-4
    with mpmath.workprec(PREC):
        inside = kernel('airy', mpmath.mpf(1), 1 + mpmath.mpf(0.99e-4), prec=PREC, near_diag_threshold=threshold)
        outside = kernel('airy', mpmath.mpf(1), 1 + mpmath.mpf(1.01e-4), prec=PREC, near_diag_threshold=threshold)
    assert rel(inside, outside) < 1e-8


@pytest.mark.parametrize('kind, x, y', [('bessel', 0, 1), ('bessel_diff', 1, -2)])
def test_bessel_domain(kind, x, y):
    with pytest.raises(KernelDomainError, match='needs x > 0 and y > 0'):
        kernel(kind, x, y)


def test_bessel_diagonal_domain():
    with pytest.raises(KernelDomainError, match='needs x > 0'):
        diagonal_value('bessel', -1)


# Density and limits


@pytest.mark.parametrize(
    'xi, expected',
    [
        (2, lambda: 1 / (2 * mpmath.pi)),
        (1, lambda: mpmath.sqrt(3) / (2 * mpmath.pi)),
        (3, lambda: mpmath.sqrt(3) / (6 * mpmath.pi)),
    ],
)
def test_mp_density(xi, expected):
    with mpmath.workprec(PREC):
        assert rel(mp_density(xi, PREC), expected()) < 1e-30


@pytest.mark.parametrize('xi', [0, 4, -1, 5])
def test_mp_density_support(xi):
    with pytest.raises(KernelDomainError, match='supported on \\(0, 4\\)'):
        mp_density(xi)


def test_predicted_limit_gaussian_is_the_kernel():
    ensemble = EnsembleSpec.gaussian('complex')
    assert rel(predicted_limit('soft', ensemble, 1, 2, prec=PREC), kernel('airy', 1, 2, prec=PREC)) < 1e-30


def test_predicted_limit_carries_excess_moment():
    ensemble = EnsembleSpec.of('real', 5)
    with mpmath.workprec(PREC):
        expected = mpmath.exp(2) * kernel('sine_diff', 1, 2, prec=PREC)
    assert rel(predicted_limit('bulk', ensemble, 1, 2, prec=PREC), expected) < 1e-30


def test_bulk_unscaled_limit():
    ensemble = EnsembleSpec.of('complex', 2)
    g = mp_density(1, PREC)
    with mpmath.workprec(PREC):
        expected = mpmath.exp(mpmath.mpf(5) / 2) * g * kernel('sine', g, 2 * g, prec=PREC)
    assert rel(bulk_unscaled_limit(ensemble, 1, 1, 2, prec=PREC), expected) < 1e-25


def test_bulk_unscaled_limit_needs_complex():
    with pytest.raises(ValueError, match='complex ensembles'):
        bulk_unscaled_limit(EnsembleSpec.gaussian('real'), 1, 1, 2)
