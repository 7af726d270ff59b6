"""Decay of I(A:C|B) as the conditioning region grows."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable

from mtlab.exceptions import DomainError
from mtlab.hilbert.geometry import SiteSet
from mtlab.hilbert.operators import DensityMatrix
from mtlab.info.measures import cmi
from mtlab.recovery.ledger import LedgerEntry
from mtlab.thermal.gibbs import gibbs_state
from mtlab.thermal.hamiltonians import Hamiltonian


logger = logging.getLogger(__name__)

CHAIN_RULE_TOL = 1e-9


@dataclass(frozen=True)
class CMIDecayRow:
    """Values at width l; B_l is every site within distance l of A."""
    l: int
    cmi: float
    mi: float
    increment: float
    conditional: float

    @property
    def chain_rule_residual(self) -> float:
        """|I(A:B_{l+1}) − I(A:B_l) − I(A:b_{l+1}|B_l)|."""
        return abs(self.increment - self.conditional)


@dataclass(frozen=True)
class CMIDecayTable:
    rows: tuple[CMIDecayRow, ...]

    @property
    def chain_rule_ok(self) -> bool:
        return all(r.chain_rule_residual <= CHAIN_RULE_TOL for r in self.rows)

    def _consecutive(self):
        return [(r, s) for r, s in zip(self.rows, self.rows[1:]) if s.l == r.l + 1]

    @property
    def increments_non_increasing(self) -> bool:
        return all(s.conditional <= r.conditional + CHAIN_RULE_TOL for r, s in self._consecutive())

    @property
    def cmi_non_increasing(self) -> bool:
        return all(s.cmi <= r.cmi + CHAIN_RULE_TOL for r, s in zip(self.rows, self.rows[1:]))

    def ledger(self) -> list[LedgerEntry]:
        entries = [
            LedgerEntry(f'l{r.l}.chain_rule', r.chain_rule_residual, 0.0, slack=CHAIN_RULE_TOL)
            for r in self.rows
        ]
        entries += [
            LedgerEntry(f'l{s.l}.increment', s.conditional, r.conditional, certified=False, slack=CHAIN_RULE_TOL)
            for r, s in self._consecutive()
        ]
        return entries


def _layers(a: SiteSet, l: int) -> SiteSet:
    return a.grown(l) - a


def cmi_decay_experiment(
    h: Hamiltonian,
    beta: float,
    a: SiteSet,
    widths: Iterable[int],
    rho: DensityMatrix | None = None,
) -> CMIDecayTable:
    """I(A:C|B_l), I(A:B_l) and I(A:B_{l+1}) − I(A:B_l) for each width l.

    C is everything outside A ∪ B_l. The increment is checked against the
    direct value of I(A:B_{l+1}∖B_l | B_l).
    """
    ls = sorted(set(int(l) for l in widths))
    if not ls or ls[0] < 1:
        raise DomainError("widths must be positive integers")
    if not len(a):
        raise DomainError("A must not be empty")
    if rho is None:
        rho = gibbs_state(h, beta).state
    support = rho.support
    if not a.issubset(support):
        raise DomainError(f"A = {a} is outside the state support {support}")
    empty = a - a
    cache: dict = {}
    rows = []
    for l in ls:
        b = _layers(a, l) & support
        c = support - a - b
        if not len(c):
            raise DomainError(f"width {l} leaves no sites in C")
        grown = _layers(a, l + 1) & support
        mi = cmi(rho, a, empty, b, cache).value
        mi_next = cmi(rho, a, empty, grown, cache).value
        conditional = cmi(rho, a, b, grown - b, cache).value
        value = cmi(rho, a, b, c, cache).value
        rows.append(CMIDecayRow(l, value, mi, mi_next - mi, conditional))
        logger.info("width %d: I(A:C|B) = %.6e nats", l, value)
    return CMIDecayTable(tuple(rows))
