"""Rebuilding a chain state from its middle marginal with two recovery maps.

With A, B = B_1 ∪ B_2 and C arranged so that B_1 separates A from B_2 and
B_2 separates B_1 from C, the state ρ̃′ = Λ_{B_2→B_2C}∘Λ_{B_1→AB_1}(ρ_B)
is approximately Markov whenever ρ is. Mixing in a little of the maximally
mixed state makes it full rank.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from mtlab.exceptions import DomainError
from mtlab.hilbert.geometry import SiteSet, shields
from mtlab.hilbert.operators import DensityMatrix, partial_trace, trace_distance
from mtlab.info.measures import cmi
from mtlab.info.states import full_rank_mix
from mtlab.recovery.ledger import LedgerEntry, certified_ok
from mtlab.recovery.petz import petz_recovery


logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ReconstructedStates:
    rho_prime: DensityMatrix
    rho_tilde: DensityMatrix
    weight: float
    epsilon: float
    ledger: tuple[LedgerEntry, ...]

    @property
    def passed(self) -> bool:
        return certified_ok(self.ledger)

    def to_json(self) -> dict:
        return {
            'weight': self.weight,
            'epsilon_nats': self.epsilon,
            'ledger': [e.to_json() for e in self.ledger],
        }


def _normalized(state) -> DensityMatrix:
    return DensityMatrix(state.support, state.matrix / state.trace().real)


def thm3_states(
    rho: DensityMatrix,
    a: SiteSet,
    b1: SiteSet,
    b2: SiteSet,
    c: SiteSet,
    epsilon: float | None = None,
) -> ReconstructedStates:
    """ρ̃′ from Petz maps and its full-rank mix ρ̃ = (1 − w)ρ̃′ + w·τ with w = 2^{−(N−1)}.

    ε defaults to the larger of I(A:B_2|B_1) and I(B_1:C|B_2). The ledger
    records each step of the argument twice: against the sum of the measured
    recovery errors (always valid) and against the √ε rates that hold for
    optimal recovery maps.
    """
    regions = (a, b1, b2, c)
    for i, r in enumerate(regions):
        if not len(r):
            raise DomainError("A, B1, B2 and C must all be non-empty")
        for s in regions[i + 1:]:
            if not r.isdisjoint(s):
                raise DomainError("A, B1, B2 and C must be disjoint")
    support = a | b1 | b2 | c
    if support != rho.support:
        raise DomainError(f"A ∪ B1 ∪ B2 ∪ C must be the state support {rho.support}")
    if not (shields(a, b1, b2) and shields(b1, b2, c)):
        raise DomainError("B1 must separate A from B2 and B2 must separate B1 from C")
    b = b1 | b2
    if epsilon is None:
        epsilon = max(cmi(rho, a, b1, b2).value, cmi(rho, b1, b2, c).value, 0.0)

    first = petz_recovery(partial_trace(rho, a | b1), b1)
    second = petz_recovery(partial_trace(rho, b2 | c), b2)
    rho_b = partial_trace(rho, b)
    step = _normalized(first.apply(rho_b))
    rho_prime = _normalized(second.apply(step))
    weight = 2.0 / rho.dim
    rho_tilde = full_rank_mix(rho_prime, weight)

    e1 = trace_distance(partial_trace(rho, a | b), step)
    e2 = trace_distance(partial_trace(rho, b | c), _normalized(second.apply(rho_b)))
    ab_err = trace_distance(partial_trace(rho, a | b), partial_trace(rho_prime, a | b))
    rebuilt = second.apply(partial_trace(rho_prime, a | b))
    recoverable = trace_distance(rho_prime, rebuilt)
    mixing = trace_distance(rho_tilde, rho_prime)
    root = math.sqrt(epsilon)
    log_a = a.log_dim
    n_bits = math.log2(rho.dim)
    cmi_prime = cmi(rho_prime, a, b, c).value
    cmi_tilde = cmi(rho_tilde, a, b, c).value
    markov_rate = 6 * math.sqrt(6) * log_a * epsilon ** 0.25

    ledger = (
        LedgerEntry('recover_ab', e1, 2 * root, certified=False),
        LedgerEntry('recover_bc', e2, 2 * root, certified=False),
        LedgerEntry('marginal_ab', ab_err, e1 + e2),
        LedgerEntry('marginal_ab.rate', ab_err, 4 * root, certified=False),
        LedgerEntry('recoverable', recoverable, 2 * e1 + e2),
        LedgerEntry('recoverable.rate', recoverable, 6 * root, certified=False),
        LedgerEntry('full_rank_mix', mixing, 2 * weight),
        LedgerEntry('cmi_prime.rate', cmi_prime, markov_rate, certified=False),
        LedgerEntry(
            'cmi_tilde.rate', cmi_tilde,
            markov_rate + 12 * log_a / math.sqrt(2 ** n_bits), certified=False,
        ),
    )
    logger.debug("reconstruction: ε=%.3e, recoverability %.3e", epsilon, recoverable)
    return ReconstructedStates(rho_prime, rho_tilde, weight, epsilon, ledger)
