# test_config.py

from fractions import Fraction

import pytest

from pycpc.harness.config import (
    ConfigError,
    ContourConfig,
    ExactConfig,
    IdentitiesConfig,
    KernelsConfig,
    LimitsConfig,
    McConfig,
    RunConfig,
    check_round_trip,
    config_document,
    emit_config,
    load_config,
    parse_config,
    round_trip_diff,
)
from pycpc.scm.kernels import KernelKind, Regime
from pycpc.scm.recursion import EnsembleSpec

FULL_CONFIG = """
precision = 128
workers = 2
log_level = "debug"
out = "results/run-1"

[exact]
ensemble = "real"
b = "5"
n = 4
m = 3

[gf_check]
alpha = 2
m_max = 10
mu = 0.5
nu = "3/2"

[contour]
n = 6
m = 4
mu = 1
nu = 2
radii = "1/4, 1/2, 3/4"

[mc]
distribution = "uniform"
n = 3
m = 2
seed = 10
repetitions = 3

[limits]
regime = "bulk"
xi = 1
mu = 0.3
nu = -0.2
N = [50, 100]
max_relative_error = 0.05

[kernels]
kinds = ["sine", "airy_diff"]
points = 5

[identities]
alphas = [0, 1]
pairs = "1,2;1/2,3/2"
"""

# Parsing


def test_parse_full_config():
    config = parse_config(FULL_CONFIG)
    assert config.precision == 128
    assert config.log_level == 'DEBUG'
    assert config.exact.ensemble_spec() == EnsembleSpec.of('real', 5)
    assert config.gf_check.mu == Fraction(1, 2)
    assert config.contour.radii == [Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)]
    assert config.mc.seeds == [10, 11, 12]
    assert config.limits.regime is Regime.BULK
    assert config.limits.mu == Fraction(3, 10)
    assert config.limits.nu == Fraction(-1, 5)
    assert config.kernels.kinds == [KernelKind.SINE, KernelKind.AIRY_DIFF]
    assert config.identities.pairs == [(Fraction(1), Fraction(2)), (Fraction(1, 2), Fraction(3, 2))]
    assert config.brute is None


def test_defaults():
    record = ExactConfig(n=2, m=1)
    assert record.ensemble_spec() == EnsembleSpec.gaussian('complex')
    assert record.use_cache
    identities = IdentitiesConfig()
    assert identities.alphas == [0, 1, 2]
    assert identities.airy_pairs == [(Fraction(1, 2), Fraction(-1, 2)), (Fraction(1), Fraction(0))]
    assert KernelsConfig().kinds == list(KernelKind)
    assert LimitsConfig(regime='hard', mu=1, nu=2).N == [50, 100, 200, 400]


@pytest.mark.parametrize(
    'text, message',
    [
        ('precision = ', 'invalid TOML'),
        ('colour = "blue"', 'invalid run configuration: colour'),
        ('precision = 32', 'precision'),
        ('log_level = "loud"', 'log_level must be one of'),
        ('[exact]\nn = 1\nm = 1\nb = "1/8"', 'complex ensembles need b >= 1/4'),
        ('[exact]\nn = 1\nm = 1\nmu = 2', 'mu and nu must be given together'),
        ('[contour]\nn = 1\nm = 2\nmu = 1\nnu = 1', 'contour integrals need n >= m'),
        ('[contour]\nn = 2\nm = 1\nmu = 1\nnu = 1\nradii = [1]', 'radii must lie strictly between 0 and 1'),
        ('[mc]\nn = 1\nm = 2', 'need n >= m'),
        ('[limits]\nregime = "bulk"\nmu = 0\nnu = 1', 'bulk scaling needs 0 < xi < 4'),
        ('[limits]\nregime = "hard"\nalpha = 3\nmu = 1\nnu = 2\nN = [2]', 'N >= alpha \\+ 1 = 4'),
        ('[kernels]\nkinds = "sine,cosine"', 'kinds'),
        ('[identities]\nairy_pairs = "1,1"', 'mu != nu'),
        ('[identities]\nlaplace_points = "0,1"', 'a > 0 and t > 0'),
    ],
)
def test_parse_errors(text, message):
    with pytest.raises(ConfigError, match=message):
        parse_config(text)


def test_load_config(tmp_path):
    path = tmp_path / 'run.toml'
    path.write_text(FULL_CONFIG, encoding='utf-8')
    assert load_config(path) == parse_config(FULL_CONFIG)


def test_load_missing_config(tmp_path):
    with pytest.raises(ConfigError, match='cannot read configuration'):
        load_config(tmp_path / 'missing.toml')


# Resolution


def test_resolve_merges_overrides():
    config = parse_config(FULL_CONFIG)
    resolved, record = config.resolve('exact', {'m': 2, 'b': None, 'mu': '1/3', 'nu': '2'})
    assert isinstance(record, ExactConfig)
    assert (record.n, record.m) == (4, 2)
    assert record.b == 5
    assert record.mu == Fraction(1, 3)
    assert resolved.exact == record
    assert config.exact.m == 3


def test_resolve_without_table():
    resolved, record = RunConfig().resolve('gf-check', {'alpha': 1})
    assert record.m_max == 25
    assert resolved.gf_check.alpha == 1


def test_resolve_reports_the_table():
    with pytest.raises(ConfigError, match='invalid \\[contour\\] configuration: n: Field required'):
        RunConfig().resolve('contour', {'m': 1})


def test_resolve_splits_cli_lists():
    _, record = RunConfig().resolve('limits', {'regime': 'soft', 'mu': '0', 'nu': '1', 'N': '25,50'})
    assert record.N == [25, 50]
    _, record = RunConfig().resolve('identities', {'airy_pairs': '1,0;2,1/2'})
    assert record.airy_pairs == [(Fraction(1), Fraction(0)), (Fraction(2), Fraction(1, 2))]


def test_mc_sample_config():
    record = McConfig(ensemble='real', distribution='rademacher', n=3, m=2, seed=4, repetitions=2, samples=100)
    cfg = record.sample_config(1)
    assert cfg.seed == 5
    assert cfg.distribution.b == 1
    assert cfg.sample_count == 100


def test_limits_regime_config():
    record = LimitsConfig(regime='bulk', ensemble='real', b='5', xi='1', mu='3/10', nu='-1/5')
    regime = record.regime_config()
    assert regime.ensemble.bstar == 2
    assert regime.kernel_kind is KernelKind.SINE_DIFF


def test_limits_criteria_follow_the_regime():
    assert LimitsConfig(regime='bulk', xi=1, mu=0, nu=1).criteria() == (0.05, 1.5, 3.0)
    assert LimitsConfig(regime='hard', mu=1, nu=2).criteria() == (0.05, None, None)
    assert LimitsConfig(regime='soft', mu=0, nu=1, min_ratio=1.2).criteria() == (None, 1.2, None)


def test_contour_config_defaults():
    record = ContourConfig(n=3, m=2, mu=1, nu=2)
    assert record.radii == [Fraction(1, 2)]
    assert record.route == 'auto'


# Emission


def test_document_uses_rational_strings():
    config = parse_config(FULL_CONFIG)
    document = config_document(config)
    assert document['gf_check']['mu'] == '1/2'
    assert document['contour']['radii'] == ['1/4', '1/2', '3/4']
    assert document['identities']['pairs'][1] == ['1/2', '3/2']
    assert 'brute' not in document
    assert 'b' not in document['gf_check']


def test_emit_then_parse_is_identity():
    config = parse_config(FULL_CONFIG)
    text = emit_config(config)
    assert 'mu = "1/2"' in text
    assert parse_config(text) == config
    assert not round_trip_diff(config)
    check_round_trip(config)


def test_round_trip_of_defaults():
    config = RunConfig(identities=IdentitiesConfig(), kernels=KernelsConfig())
    assert not round_trip_diff(config)
