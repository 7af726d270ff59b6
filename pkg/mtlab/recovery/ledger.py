"""Inequalities measured along a recovery construction."""

from __future__ import annotations

import math
from dataclasses import dataclass

from mtlab.exceptions import DomainError


LE = '<='
GE = '>='
APPROX = '~='
RELATIONS = (LE, GE, APPROX)


@dataclass(frozen=True)
class LedgerEntry:
    """One inequality ``lhs relation rhs`` with both sides measured.

    ``certified`` entries hold by construction (triangle inequalities,
    contraction of the trace norm, exact identities). Rates borrowed from
    asymptotic statements are recorded with ``certified=False``; a
    violation there is information, not a failure.
    """
    name: str
    lhs: float
    rhs: float
    relation: str = LE
    certified: bool = True
    slack: float = 1e-9

    def __post_init__(self) -> None:
        if self.relation not in RELATIONS:
            raise DomainError(f"relation must be one of {RELATIONS}, not {self.relation!r}")

    @property
    def margin(self) -> float:
        """Positive exactly when the inequality holds; ``~=`` uses the slack as tolerance."""
        if self.relation == LE:
            return self.rhs + self.slack - self.lhs
        if self.relation == APPROX:
            return self.slack - abs(self.lhs - self.rhs)
        return self.lhs + self.slack - self.rhs

    @property
    def satisfied(self) -> bool:
        return not math.isnan(self.margin) and self.margin >= 0

    def to_json(self) -> dict:
        return {
            'name': self.name,
            'lhs': self.lhs,
            'rhs': self.rhs,
            'relation': self.relation,
            'satisfied': self.satisfied,
            'certified': self.certified,
        }


def certified_ok(entries: list[LedgerEntry] | tuple[LedgerEntry, ...]) -> bool:
    return all(e.satisfied for e in entries if e.certified)
