"""Golden-file regression for experiment outputs.

A golden directory holds ``<name>.config.json`` next to the ``<name>.csv``
it is expected to produce, plus an optional ``tolerances.json`` mapping CSV
columns to absolute tolerances. Numeric columns default to 1e-8; text
columns must match exactly.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

from mtlab.exceptions import ConfigError
from mtlab.lab.config import load_config
from mtlab.lab.results import COLUMNS, read_csv, write_csv
from mtlab.lab.runner import run_experiment


logger = logging.getLogger(__name__)

CONFIG_SUFFIX = '.config.json'
NUMERIC_COLUMNS = ('value', 'value_bits', 'bound', 'margin')
DEFAULT_TOLERANCE = 1e-8

PASSED = 'passed'
FAILED = 'failed'
UPDATED = 'updated'
SKIPPED = 'skipped'


@dataclass
class GoldenCase:
    name: str
    status: str
    differences: list[str] = field(default_factory=list)
    reason: str = ''


@dataclass
class GoldenReport:
    cases: list[GoldenCase] = field(default_factory=list)

    @property
    def failed(self) -> list[GoldenCase]:
        return [c for c in self.cases if c.status == FAILED]

    @property
    def skipped(self) -> list[GoldenCase]:
        return [c for c in self.cases if c.status == SKIPPED]

    @property
    def passed(self) -> bool:
        return not self.failed


def load_tolerances(directory: Path) -> dict[str, float]:
    path = directory / 'tolerances.json'
    tolerances = {c: DEFAULT_TOLERANCE for c in NUMERIC_COLUMNS}
    if not path.exists():
        return tolerances
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}: invalid JSON: {e.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: tolerances must be a JSON object")
    for column, tol in data.items():
        if column not in NUMERIC_COLUMNS:
            raise ConfigError(f"{path}: {column!r} is not a numeric column")
        if not isinstance(tol, (int, float)) or tol < 0:
            raise ConfigError(f"{path}: tolerance for {column} must be a non-negative number")
        tolerances[column] = float(tol)
    return tolerances


def _number(text: str) -> float | None:
    return None if text == '' else float(text)


def _close(expected: str, actual: str, tol: float) -> bool:
    a, b = _number(expected), _number(actual)
    if a is None or b is None:
        return a is b
    if math.isnan(a) or math.isnan(b):
        return math.isnan(a) and math.isnan(b)
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= tol


def compare_records(
    expected: list[dict[str, str]],
    actual: list[dict[str, str]],
    tolerances: dict[str, float],
) -> list[str]:
    """Human-readable differences between two CSV record lists."""
    if len(expected) != len(actual):
        return [f"expected {len(expected)} rows, got {len(actual)}"]
    differences = []
    for i, (want, got) in enumerate(zip(expected, actual), 1):
        where = f"row {i} ({want.get('point')} {want.get('quantity')})"
        for column in COLUMNS:
            w, g = want.get(column, ''), got.get(column, '')
            if column in NUMERIC_COLUMNS:
                try:
                    same = _close(w, g, tolerances[column])
                except ValueError:
                    same = w == g
                if not same:
                    differences.append(
                        f"{where}: column {column}: expected {w}, got {g} "
                        f"(tolerance {tolerances[column]:g})"
                    )
            elif w != g:
                differences.append(f"{where}: column {column}: expected {w!r}, got {g!r}")
    return differences


def verify_golden(
    directory: str | Path,
    update: bool = False,
    workers: int | None = None,
) -> GoldenReport:
    """Re-run every configuration in ``directory`` and diff against its golden CSV.

    With ``update`` the goldens are rewritten from the current code instead.
    Configurations without a golden and goldens without a configuration are
    reported as skipped.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise ConfigError(f"{directory}: not a directory")
    tolerances = load_tolerances(directory)
    report = GoldenReport()
    configs = sorted(directory.glob('*' + CONFIG_SUFFIX))
    names = {p.name[:-len(CONFIG_SUFFIX)] for p in configs}

    for path in configs:
        name = path.name[:-len(CONFIG_SUFFIX)]
        golden = directory / f'{name}.csv'
        if not golden.exists() and not update:
            report.cases.append(GoldenCase(name, SKIPPED, reason='missing golden csv'))
            continue
        run = run_experiment(load_config(path), workers)
        records = run.csv_records()
        if update:
            write_csv(golden, records)
            logger.info("rewrote golden %s", golden)
            report.cases.append(GoldenCase(name, UPDATED))
            continue
        differences = compare_records(read_csv(golden), records, tolerances)
        report.cases.append(GoldenCase(name, FAILED if differences else PASSED, differences))

    for golden in sorted(directory.glob('*.csv')):
        if golden.stem not in names:
            report.cases.append(GoldenCase(golden.stem, SKIPPED, reason='no configuration'))
    return report
