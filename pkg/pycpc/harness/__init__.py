"""This module provides the command-line harness of pycpc.

## Description

This module provides the following classes and functions:

- RunConfig: A class for a TOML run configuration with one table per subcommand.
- RunManifest: A class for the JSON record of a run.
- TableCache: A class for the directory of cached exact moment tables.
- parse_config, load_config, emit_config: Reading and writing run configurations.
- write_csv, write_manifest: Writing result files.
- cli: The click command group behind the `pycpc` console script.

"""

from .cli import cli, execute, main
from .config import ConfigError, RunConfig, check_round_trip, emit_config, load_config, parse_config, round_trip_diff
from .persist import CheckFailure, CheckOutcome, RunManifest, TableCache, write_csv, write_manifest

__all__ = [
    'CheckFailure',
    'CheckOutcome',
    'ConfigError',
    'RunConfig',
    'RunManifest',
    'TableCache',
    'check_round_trip',
    'cli',
    'emit_config',
    'execute',
    'load_config',
    'main',
    'parse_config',
    'round_trip_diff',
    'write_csv',
    'write_manifest',
]
