# test_specfun.py

from fractions import Fraction

import mpmath
import pytest
from pydantic import ValidationError

from pycpc.scm.polycore import BivariatePolynomial
from pycpc.scm.specfun import (
    SeriesConvergenceError,
    SeriesPolicy,
    airy,
    airy_asymptotic,
    airy_series,
    bessel_i,
    bessel_i_asymptotic,
    bessel_i_even,
    bessel_i_series,
    bessel_j,
    laguerre,
)

PREC = 128
POLICY = SeriesPolicy(precision=PREC)


def close(a, b, bits=110, scale=None):
    with mpmath.workprec(PREC):
        reference = max(abs(a), abs(b)) if scale is None else mpmath.mpf(scale)
        return abs(a - b) <= mpmath.ldexp(1, -bits) * max(reference, mpmath.ldexp(1, -PREC))


# Policy


@pytest.mark.parametrize(
    'kwargs, radius',
    [
        ({'precision': 128}, 64.0),
        ({'precision': 64}, 32.0),
        ({'precision': 512}, 256.0),
        ({'precision': 128, 'crossover': 12}, 12.0),
    ],
)
def test_policy_radius(kwargs, radius):
    assert SeriesPolicy(**kwargs).radius == radius


def test_policy_rejects_low_precision():
    with pytest.raises(ValidationError):
        SeriesPolicy(precision=16)


def test_policy_follows_environment(monkeypatch):
    monkeypatch.setenv('PYCPC_PRECISION', '96')
    assert SeriesPolicy().precision == 96
    assert SeriesPolicy.for_precision(200).precision == 200


# Laguerre


@pytest.mark.parametrize(
    'n, alpha, x, expected',
    [
        (0, 3, Fraction(5), Fraction(1)),
        (1, 0, Fraction(2), Fraction(-1)),
        (2, 1, Fraction(1), Fraction(1, 2)),
        (2, 0, Fraction(7, 3), Fraction(-17, 18)),
        (3, -1, Fraction(0), Fraction(0)),
    ],
)
def test_laguerre_exact(n, alpha, x, expected):
    assert laguerre(n, alpha, x) == expected


def test_laguerre_polynomial_argument():
    x = BivariatePolynomial.mu()
    assert laguerre(2, 0, x) == x * x / 2 - 2 * x + 1


def test_laguerre_bigfloat_matches_mpmath():
    with mpmath.workprec(PREC):
        x = mpmath.mpf(13) / 7
        assert close(laguerre(9, 4, x), mpmath.laguerre(9, 4, x))


def test_laguerre_rejects_negative_degree():
    with pytest.raises(ValueError, match='n >= 0 and n \\+ alpha >= 0'):
        laguerre(1, -3, 0)


# Modified Bessel I


@pytest.mark.parametrize('alpha', [0, 1, 2, 5])
@pytest.mark.parametrize('z', ['1/2', 5, 29, 63, 80, 150, -80])
def test_bessel_i_real(alpha, z):
    with mpmath.workprec(PREC):
        zz = mpmath.mpf(Fraction(z).numerator) / Fraction(z).denominator
        assert close(bessel_i(alpha, Fraction(z), POLICY), mpmath.besseli(alpha, zz))


@pytest.mark.parametrize('alpha', [0, 3])
@pytest.mark.parametrize('z', [3 + 4j, 70 + 10j, 40 - 60j, -70 + 5j])
def test_bessel_i_complex(alpha, z):
    with mpmath.workprec(PREC):
        zz = mpmath.mpc(z)
        assert close(bessel_i(alpha, zz, POLICY), mpmath.besseli(alpha, zz), bits=100)


def test_bessel_i_branches_agree_at_crossover():
    with mpmath.workprec(PREC):
        z = mpmath.mpf(70)
        assert close(bessel_i_series(2, z, POLICY), bessel_i_asymptotic(2, z, POLICY), bits=105)


@pytest.mark.parametrize('w', [4, '9/4', -9, 1000, -1000])
def test_bessel_i_even(w):
    with mpmath.workprec(PREC + 40):
        ww = mpmath.mpf(Fraction(w).numerator) / Fraction(w).denominator
        u = mpmath.sqrt(mpmath.mpc(ww))
        expected = mpmath.re(mpmath.besseli(2, 2 * u) / u**2)
    value = bessel_i_even(2, Fraction(w), POLICY)
    assert close(value, expected, bits=100, scale=max(abs(expected), 1))


def test_bessel_i_rejects_negative_order():
    with pytest.raises(ValueError, match='non-negative integer'):
        bessel_i(-1, 1)


def test_bessel_i_asymptotic_rejects_left_half_plane():
    with pytest.raises(ValueError, match='Re z >= 0'):
        bessel_i_asymptotic(0, -50, POLICY)


def test_series_term_budget():
    policy = SeriesPolicy(precision=PREC, max_terms=3)
    with pytest.raises(SeriesConvergenceError, match='did not converge in 3 terms'):
        bessel_i_series(0, 20, policy)


# Bessel J


@pytest.mark.parametrize('alpha', [0, 1, 4])
@pytest.mark.parametrize('x', [0, '1/2', 10, 63, 80, 200])
def test_bessel_j(alpha, x):
    value, derivative = bessel_j(alpha, Fraction(x), POLICY)
    with mpmath.workprec(PREC):
        xx = mpmath.mpf(Fraction(x).numerator) / Fraction(x).denominator
        # oscillatory: compare against the amplitude, not the value
        amplitude = 1 / mpmath.sqrt(max(xx, 1))
        assert close(value, mpmath.besselj(alpha, xx), bits=105, scale=amplitude)
        assert close(derivative, mpmath.besselj(alpha, xx, 1), bits=105, scale=amplitude)


def test_bessel_j_rejects_negative_argument():
    with pytest.raises(ValueError, match='x >= 0 only'):
        bessel_j(0, -1)


# Airy


@pytest.mark.parametrize('x', [-200, -30, -20, '-1/3', 0, '1/2', 5, 20, 30])
def test_airy(x):
    value, derivative = airy(Fraction(x), POLICY)
    with mpmath.workprec(PREC):
        xx = mpmath.mpf(Fraction(x).numerator) / Fraction(x).denominator
        if xx < 0:
            quarter = abs(xx) ** mpmath.mpf(0.25)
            assert close(value, mpmath.airyai(xx), bits=100, scale=1 / quarter)
            assert close(derivative, mpmath.airyai(xx, derivative=1), bits=100, scale=quarter)
        else:
            assert close(value, mpmath.airyai(xx), bits=100)
            assert close(derivative, mpmath.airyai(xx, derivative=1), bits=100)


def test_airy_branches_agree():
    with mpmath.workprec(PREC):
        x = mpmath.mpf(25)
        series, asymptotic = airy_series(x, POLICY), airy_asymptotic(x, POLICY)
        assert close(series[0], asymptotic[0], bits=100)
        assert close(series[1], asymptotic[1], bits=100)


def test_airy_asymptotic_rejects_origin():
    with pytest.raises(ValueError, match='x != 0'):
        airy_asymptotic(0, POLICY)
