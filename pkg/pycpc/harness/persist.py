"""Result files of a run: CSV tables, the JSON run manifest and the exact-table cache.

File formats are documented in docs/formats.md.
"""

import csv
import json
import logging
import re
from collections.abc import Iterable, Mapping, Sequence
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict

from pycpc.scm.polycore import PolynomialFormatError
from pycpc.scm.recursion import EnsembleSpec, MomentTable, moment_table

logger = logging.getLogger(__name__)

TRACKED_PACKAGES = ('pycpc', 'mpmath', 'numpy', 'sympy', 'pydantic', 'click', 'toml', 'deepdiff')


# Custom Exceptions


class CheckFailure(Exception):
    """Raised when at least one check of a run breaches its tolerance."""

    def __init__(self, manifest: 'RunManifest') -> None:
        self.manifest = manifest
        names = ', '.join(c.name for c in manifest.failures)
        super().__init__(f'{manifest.subcommand}: failed checks: {names}')


# CSV


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Mapping[str, Any]]) -> Path:
    """Write `rows` under a fixed `header`; a row with a key outside the header is an error."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', newline='', encoding='utf-8') as fh:
        writer = csv.DictWriter(fh, fieldnames=list(header), extrasaction='raise')
        writer.writeheader()
        count = 0
        for row in rows:
            writer.writerow(row)
            count += 1
    logger.info(f'wrote {count} rows to {path}')
    return path


# Manifest


class CheckOutcome(BaseModel):
    """One named check with its verdict and the numbers behind it."""

    model_config = ConfigDict(extra='forbid')

    name: str
    passed: bool
    detail: dict[str, Any] = {}


class RunManifest(BaseModel):
    """Everything needed to repeat a run: resolved configuration, versions, seeds and precision.

    Attributes:
        subcommand: The subcommand that ran.
        config: The resolved run configuration in its TOML/JSON form.
        versions: Installed versions of pycpc and its numerical dependencies.
        seeds: Random seeds used, in order.
        precision: Working precision in bits.
        started_at: Start time (UTC).
        finished_at: End time (UTC).
        checks: Outcome of every check.
        artifacts: Files written by the run.
    """

    model_config = ConfigDict(extra='forbid')

    subcommand: str
    config: dict[str, Any]
    versions: dict[str, str] = {}
    seeds: list[int] = []
    precision: int
    started_at: datetime
    finished_at: datetime | None = None
    checks: list[CheckOutcome] = []
    artifacts: list[str] = []

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[CheckOutcome]:
        return [c for c in self.checks if not c.passed]

    def failure_report(self) -> dict[str, Any]:
        """Machine-readable summary of the failed checks."""
        return {
            'subcommand': self.subcommand,
            'passed': self.passed,
            'failures': [c.model_dump(mode='json') for c in self.failures],
            'checks': len(self.checks),
        }


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


def package_versions(packages: Sequence[str] = TRACKED_PACKAGES) -> dict[str, str]:
    versions = {}
    for name in packages:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = 'unknown'
    return versions


def write_manifest(out: Path, manifest: RunManifest) -> Path:
    """Write `<subcommand>.manifest.json` into `out`."""
    out.mkdir(parents=True, exist_ok=True)
    path = out / f'{manifest.subcommand}.manifest.json'
    path.write_text(manifest.model_dump_json(indent=2), encoding='utf-8')
    logger.info(f'wrote run manifest {path}')
    return path


def read_manifest(path: Path) -> RunManifest:
    return RunManifest.model_validate_json(path.read_text(encoding='utf-8'))


# Exact-table cache

_CACHE_NAME = re.compile(r'^(?P<variant>complex|real)_b(?P<num>-?\d+)-(?P<den>\d+)_(?P<n>\d+)x(?P<m>\d+)\.json$')


class TableCache:
    """Directory of moment tables in their JSON document form, keyed by (ensemble, b, n_max, m_max).

    A request is served by any cached table of the same ensemble whose rectangle covers it.
    """

    def __init__(self, root: Path) -> None:
        self.root = root

    @staticmethod
    def file_name(ensemble: EnsembleSpec, n_max: int, m_max: int) -> str:
        b = ensemble.b
        return f'{ensemble.variant.value}_b{b.numerator}-{b.denominator}_{n_max}x{m_max}.json'

    def _candidates(self, ensemble: EnsembleSpec) -> list[tuple[int, int, Path]]:
        if not self.root.is_dir():
            return []
        found = []
        for path in self.root.iterdir():
            match = _CACHE_NAME.match(path.name)
            if match is None:
                continue
            if match['variant'] != ensemble.variant.value:
                continue
            if (int(match['num']), int(match['den'])) != (ensemble.b.numerator, ensemble.b.denominator):
                continue
            found.append((int(match['n']), int(match['m']), path))
        # smallest covering table first
        return sorted(found, key=lambda c: (c[0] * c[1], c[0], c[1]))

    def lookup(self, ensemble: EnsembleSpec, n_max: int, m_max: int) -> MomentTable | None:
        """Return a cached table restricted to [0, n_max] x [0, m_max], or None on a miss."""
        for n, m, path in self._candidates(ensemble):
            if n < n_max or m < m_max:
                continue
            try:
                table = MomentTable.from_document(json.loads(path.read_text(encoding='utf-8')))
            except (OSError, ValueError, PolynomialFormatError) as e:
                logger.warning(f'ignoring unreadable cache file {path}: {e}')
                continue
            if table.ensemble != ensemble or not table.covers(n_max, m_max):
                logger.warning(f'ignoring cache file {path}: contents do not match its name')
                continue
            logger.info(f'cache hit {path.name} for {ensemble.label} up to ({n_max}, {m_max})')
            return table.restrict(n_max, m_max)
        return None

    def store(self, table: MomentTable) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        path = self.root / self.file_name(table.ensemble, table.n_max, table.m_max)
        path.write_text(json.dumps(table.to_document()), encoding='utf-8')
        logger.debug(f'stored {path}')
        return path

    def fetch(self, ensemble: EnsembleSpec, n_max: int, m_max: int) -> tuple[MomentTable, bool]:
        """Return the table and whether it came from the cache; misses are built and stored."""
        cached = self.lookup(ensemble, n_max, m_max)
        if cached is not None:
            return cached, True
        table = moment_table(ensemble, n_max, m_max)
        self.store(table)
        return table, False
