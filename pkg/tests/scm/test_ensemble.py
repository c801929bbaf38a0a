# test_ensemble.py

import math
from fractions import Fraction

import numpy as np
import pytest
from pydantic import ValidationError

from pycpc.scm.ensemble import (
    DistributionKind,
    EntryDistribution,
    MCEstimate,
    MCReport,
    SampleConfig,
    StateSpaceError,
    brute_force_expectation,
    brute_force_polynomial,
    chiral_determinants,
    chiral_identity_check,
    mc_first_moment,
    mc_second_moment,
    sample_batch,
    sample_matrix,
    sample_moments,
    state_count,
)
from pycpc.scm.recursion import EnsembleSpec, first_moment_laguerre, second_moment_at, second_moment_auto

# Entry laws


@pytest.mark.parametrize(
    'kind, variant, b',
    [
        ('gaussian', 'complex', Fraction(3, 4)),
        ('gaussian', 'real', Fraction(3)),
        ('rademacher', 'complex', Fraction(1, 4)),
        ('rademacher', 'real', Fraction(1)),
        ('uniform', 'complex', Fraction(9, 20)),
        ('uniform', 'real', Fraction(9, 5)),
    ],
)
def test_distribution_fourth_moment(kind, variant, b):
    distribution = EntryDistribution(kind=kind, variant=variant)
    assert distribution.b == b
    assert distribution.ensemble == EnsembleSpec.of(variant, b)
    assert distribution.is_discrete is (kind == 'rademacher')


@pytest.mark.parametrize('kind, variant', [('gaussian', 'complex'), ('uniform', 'real'), ('uniform', 'complex')])
def test_sample_moments_match_the_law(kind, variant):
    distribution = EntryDistribution(kind=kind, variant=variant)
    moments = sample_moments(distribution, 200_000, seed=11)
    assert moments.second_moment == pytest.approx(1, abs=0.02)
    assert abs(moments.mean) < 0.02
    assert abs(moments.part_fourth_moment - float(distribution.b)) <= 5 * moments.part_fourth_stderr
    if variant == 'complex':
        assert abs(moments.pseudo_second_moment) < 0.02
        assert moments.abs_fourth_moment == pytest.approx(float(distribution.ensemble.fourth_moment), rel=0.05)


def test_rademacher_moments_are_exact():
    moments = sample_moments(EntryDistribution(kind='rademacher', variant='real'), 1000, seed=3)
    assert moments.part_fourth_moment == 1.0
    assert moments.part_fourth_stderr == 0.0
    assert moments.second_moment == 1.0


def test_sample_moments_need_two_draws():
    with pytest.raises(ValueError, match='at least two draws'):
        sample_moments(EntryDistribution(kind='gaussian', variant='real'), 1, seed=0)


# Sampling


def test_sample_config_validation():
    with pytest.raises(ValidationError, match='need n >= m'):
        SampleConfig.of(1, 2, 'real', 'gaussian', sample_count=10, seed=0)
    with pytest.raises(ValidationError, match='distribution is for complex entries'):
        SampleConfig(
            n=2,
            m=1,
            variant='real',
            distribution=EntryDistribution(kind='gaussian', variant='complex'),
            sample_count=10,
            seed=0,
        )


def test_chunks_cover_the_samples():
    cfg = SampleConfig.of(3, 2, 'complex', 'gaussian', sample_count=10, seed=5, chunk_size=4)
    assert cfg.chunk_count == 3
    assert [cfg.chunk_length(c) for c in range(3)] == [4, 4, 2]
    assert sample_batch(cfg, 2).shape == (2, 3, 2)
    with pytest.raises(ValueError, match='chunk must lie in'):
        sample_batch(cfg, 3)


def test_samples_are_reproducible():
    cfg = SampleConfig.of(3, 2, 'real', 'uniform', sample_count=10, seed=5, chunk_size=4)
    assert np.array_equal(sample_matrix(cfg, 6), sample_batch(cfg, 1)[2])
    assert np.array_equal(sample_matrix(cfg, 6), sample_matrix(cfg.model_copy(), 6))
    other = SampleConfig.of(3, 2, 'real', 'uniform', sample_count=10, seed=6, chunk_size=4)
    assert not np.array_equal(sample_matrix(cfg, 6), sample_matrix(other, 6))
    with pytest.raises(ValueError, match='sample index must lie in'):
        sample_matrix(cfg, 10)


def test_rademacher_entries():
    cfg = SampleConfig.of(4, 3, 'complex', 'rademacher', sample_count=8, seed=1)
    batch = sample_batch(cfg, 0)
    assert np.allclose(np.abs(batch.real), math.sqrt(0.5))
    assert np.allclose(np.abs(batch.imag), math.sqrt(0.5))


# Monte Carlo


def test_mc_workers_do_not_change_the_estimate():
    cfg = SampleConfig.of(2, 2, 'complex', 'gaussian', sample_count=2000, seed=9, chunk_size=500)
    serial = mc_second_moment(cfg, 1, 2)
    parallel = mc_second_moment(cfg, 1, 2, workers=2)
    assert serial == parallel
    assert serial.sample_count == 2000


@pytest.mark.parametrize(
    'variant, kind',
    [('complex', 'gaussian'), ('real', 'gaussian'), ('real', 'rademacher'), ('complex', 'uniform')],
)
def test_mc_small_second_moment(variant, kind):
    cfg = SampleConfig.of(2, 1, variant, kind, sample_count=40_000, seed=2024)
    estimate = mc_second_moment(cfg, '1/2', 2)
    exact = second_moment_at(cfg.distribution.ensemble, 2, 1, Fraction(1, 2), 2)
    assert estimate.agrees_with(exact, sigmas=5)


def test_mc_first_moment():
    cfg = SampleConfig.of(3, 2, 'real', 'gaussian', sample_count=40_000, seed=4)
    estimate = mc_first_moment(cfg, 1)
    # E det(X*X - lam) = (-1)^m E det(lam - X*X)
    exact = first_moment_laguerre(3, 2, 1)
    assert estimate.agrees_with(exact, sigmas=5)


@pytest.mark.slow
@pytest.mark.parametrize(
    'variant, kind, n, m',
    [
        ('complex', 'gaussian', 4, 3),
        ('real', 'uniform', 4, 3),
        ('complex', 'rademacher', 3, 3),
        ('real', 'gaussian', 5, 2),
    ],
)
def test_mc_concordance(variant, kind, n, m):
    cfg = SampleConfig.of(n, m, variant, kind, sample_count=200_000, seed=77)
    estimate = mc_second_moment(cfg, 1, 2, workers=2)
    report = MCReport.build(cfg, 1, 2, estimate, second_moment_at(cfg.distribution.ensemble, n, m, 1, 2))
    assert report.passed(sigmas=4)


@pytest.mark.parametrize(
    'mean, stderr, exact, z',
    [
        (10.0, 2.0, 6, 2.0),
        (10.0, 0.5, Fraction(21, 2), -1.0),
        (3.0, 0.0, 3, 0.0),
        (3.0, 0.0, 4, math.inf),
    ],
)
def test_z_score(mean, stderr, exact, z):
    estimate = MCEstimate(mean=mean, stderr=stderr, sample_count=100)
    if math.isinf(z):
        assert math.isinf(estimate.z_score(exact))
    else:
        assert estimate.z_score(exact) == pytest.approx(z)


def test_report_document():
    cfg = SampleConfig.of(2, 1, 'real', 'gaussian', sample_count=100, seed=1)
    estimate = MCEstimate(mean=10.0, stderr=1.0, sample_count=100)
    report = MCReport.build(cfg, '1/2', 2, estimate, exact=Fraction(15))
    doc = report.model_dump(mode='json')
    assert doc['mu'] == '1/2' and doc['nu'] == '2'
    assert doc['exact_value'] == 15.0
    assert doc['z_score'] == -5.0
    assert not report.passed(4)
    assert MCReport.build(cfg, 0, 0, estimate).passed()


# Exact enumeration


@pytest.mark.parametrize(
    'variant, n, m',
    [('real', 1, 1), ('real', 2, 2), ('real', 3, 2), ('real', 4, 3), ('complex', 2, 1), ('complex', 2, 2)],
)
def test_brute_force_matches_recursion(variant, n, m):
    ensemble = EntryDistribution(kind='rademacher', variant=variant).ensemble
    assert brute_force_polynomial(n, m, variant) == second_moment_auto(ensemble, n, m)


def test_brute_force_wide_matrices():
    ensemble = EnsembleSpec.of('real', 1)
    assert brute_force_polynomial(2, 3, 'real') == second_moment_auto(ensemble, 2, 3)


@pytest.mark.slow
def test_brute_force_complex_three_by_two():
    ensemble = EnsembleSpec.of('complex', '1/4')
    assert brute_force_polynomial(3, 2, 'complex') == second_moment_auto(ensemble, 3, 2)


def test_brute_force_expectation():
    value = brute_force_expectation(2, 1, 'real', '1/2', 2)
    assert value == second_moment_at(EnsembleSpec.of('real', 1), 2, 1, Fraction(1, 2), 2)


@pytest.mark.parametrize(
    'n, m, variant, states',
    [(2, 2, 'real', 16), (2, 2, 'complex', 256), (3, 3, 'complex', 2**18)],
)
def test_state_count(n, m, variant, states):
    assert state_count(n, m, variant) == states


def test_state_space_limit():
    with pytest.raises(StateSpaceError, match='limit is 16777216'):
        brute_force_polynomial(5, 5, 'complex')


def test_enumeration_needs_entries():
    with pytest.raises(ValueError, match='n, m >= 1'):
        brute_force_polynomial(0, 2, 'real')


# Chiral block identity


@pytest.mark.parametrize(
    'lam, X',
    [
        ('7/3', [[1, 2], [0, -1], ['1/2', 3]]),
        (2, [[(1, 1), (0, -2)], [(3, 0), ('1/2', '1/3')]]),
        ('-1/2', [[1 + 2j, 3], [0, -1j], [2, 1]]),
        (3, [[1, 2, 3]]),
    ],
)
def test_chiral_identity(lam, X):
    assert chiral_identity_check(len(X), len(X[0]), lam, X)


def test_chiral_determinants_single_entry():
    block, small, large = chiral_determinants(2, [[3]])
    # [[2, 3], [3, 2]]
    assert block == small == large
    assert small.x == -5 and not small.y


@pytest.mark.parametrize(
    'n, m, lam, X, message',
    [
        (1, 1, 0, [[1]], 'lambda != 0'),
        (2, 1, 1, [[1]], 'X must be 2x1'),
    ],
)
def test_chiral_identity_arguments(n, m, lam, X, message):
    with pytest.raises(ValueError, match=message):
        chiral_identity_check(n, m, lam, X)


def test_distribution_kinds():
    assert {k.value for k in DistributionKind} == {'gaussian', 'rademacher', 'uniform'}
