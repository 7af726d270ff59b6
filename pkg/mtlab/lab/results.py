"""Result rows and the CSV, JSON and timing files written for a run."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

from mtlab.conf import setting
from mtlab.recovery.ledger import LedgerEntry


COLUMNS = (
    'schema_version', 'experiment', 'config_hash', 'point', 'quantity', 'unit',
    'value', 'value_bits', 'relation', 'bound', 'margin', 'passed',
)

NATS = 'nats'
TRACE_NORM = 'trace-norm'
OP_NORM = 'op-norm'
PROBABILITY = 'probability'
COUNT = 'count'
FLAG = 'flag'
RATIO = 'ratio'
RATE = 'rate'

ADVISORY = 'advisory'


def fmt(value: float | None) -> str:
    """Shortest round-tripping text for a float; empty for missing values."""
    if value is None:
        return ''
    value = float(value)
    if math.isnan(value):
        return 'nan'
    return repr(value)


def clean(value: Any) -> Any:
    """Replace non-finite floats by None so the JSON stays standard."""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [clean(v) for v in value]
    return value


@dataclass(frozen=True)
class ResultRow:
    """A measured quantity, optionally compared against a bound.

    Rows without a relation are pure measurements. ``certified=False`` rows
    record rates that are not guaranteed at this size: they are written
    with ``passed = advisory`` and never fail a run.
    """
    point: str
    quantity: str
    unit: str
    value: float
    relation: str = ''
    bound: float | None = None
    margin: float | None = None
    certified: bool = True

    @classmethod
    def from_entry(cls, point: str, entry: LedgerEntry, unit: str) -> ResultRow:
        return cls(
            point, entry.name, unit, entry.lhs, entry.relation, entry.rhs,
            entry.margin, entry.certified,
        )

    @property
    def value_bits(self) -> float | None:
        if self.unit != NATS:
            return None
        return self.value / math.log(2)

    @property
    def passed(self) -> bool | None:
        if not self.relation:
            return None
        return self.margin is not None and not math.isnan(self.margin) and self.margin >= 0

    @property
    def passed_text(self) -> str:
        if self.passed is None:
            return ''
        if not self.certified:
            return ADVISORY
        return 'true' if self.passed else 'false'

    @property
    def failed(self) -> bool:
        return self.certified and self.passed is False

    def to_json(self) -> dict:
        return clean({
            'quantity': self.quantity,
            'unit': self.unit,
            'value': self.value,
            'value_bits': self.value_bits,
            'relation': self.relation or None,
            'bound': self.bound,
            'margin': self.margin,
            'passed': self.passed_text or None,
        })


def measured(point: str, quantity: str, value: float, unit: str = NATS) -> ResultRow:
    return ResultRow(point, quantity, unit, float(value))


def ledger_rows(point: str, entries: Iterable[LedgerEntry], unit: str) -> list[ResultRow]:
    return [ResultRow.from_entry(point, e, unit) for e in entries]


@dataclass(frozen=True, eq=False)
class PointResult:
    label: str
    params: dict
    rows: list[ResultRow]
    details: dict = field(default_factory=dict)
    seconds: float = 0.0


@dataclass(frozen=True, eq=False)
class RunResult:
    experiment: str
    name: str
    config_hash: str
    config: dict
    points: list[PointResult]

    @property
    def rows(self) -> list[ResultRow]:
        return [r for p in self.points for r in p.rows]

    @property
    def failures(self) -> list[ResultRow]:
        return [r for r in self.rows if r.failed]

    @property
    def passed(self) -> bool:
        return not self.failures

    def csv_records(self) -> list[dict[str, str]]:
        version = str(setting('MTLAB_SCHEMA_VERSION'))
        return [
            {
                'schema_version': version,
                'experiment': self.experiment,
                'config_hash': self.config_hash,
                'point': r.point,
                'quantity': r.quantity,
                'unit': r.unit,
                'value': fmt(r.value),
                'value_bits': fmt(r.value_bits),
                'relation': r.relation,
                'bound': fmt(r.bound),
                'margin': fmt(r.margin),
                'passed': r.passed_text,
            }
            for r in self.rows
        ]

    def to_json(self) -> dict:
        return clean({
            'schema_version': setting('MTLAB_SCHEMA_VERSION'),
            'experiment': self.experiment,
            'name': self.name,
            'config_hash': self.config_hash,
            'config': self.config,
            'passed': self.passed,
            'points': [
                {
                    'point': p.label,
                    'params': p.params,
                    'rows': [r.to_json() for r in p.rows],
                    'details': p.details,
                }
                for p in self.points
            ],
        })

    def write(self, out_dir: str | Path) -> dict[str, Path]:
        """Write ``<name>.csv``, ``<name>.json`` and ``<name>.timings.json``."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            'csv': out / f'{self.name}.csv',
            'json': out / f'{self.name}.json',
            'timings': out / f'{self.name}.timings.json',
        }
        write_csv(paths['csv'], self.csv_records())
        paths['json'].write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + '\n')
        timings = {p.label: round(p.seconds, 6) for p in self.points}
        paths['timings'].write_text(json.dumps(timings, indent=2) + '\n')
        return paths


def write_csv(path: Path, records: list[dict[str, str]]) -> None:
    with open(path, 'w', newline='') as f:
        writer = csv.DictWriter(f, fieldnames=COLUMNS, lineterminator='\n')
        writer.writeheader()
        writer.writerows(records)


def read_csv(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline='') as f:
        return list(csv.DictReader(f))
