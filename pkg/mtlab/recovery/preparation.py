"""Preparing a Gibbs state with a circuit of depth two.

The open chain is cut into A_1B_1C_1 A_2B_2C_2 … A_kB_k. The first layer
replaces each A_iB_i (together with C_i) by the marginal ρ_{A_iB_i}; the
second layer fills every C_i with a recovery map acting on B_iA_{i+1}.
The layers act on disjoint blocks, so each is a single time step.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from mtlab.exceptions import DomainError
from mtlab.hilbert.channels import (
    ChannelReport, QuantumChannel, channel_validate, prepare_channel, trace_channel,
)
from mtlab.hilbert.geometry import ChainGeometry, SiteSet
from mtlab.hilbert.operators import DensityMatrix, partial_trace, trace_distance
from mtlab.recovery.ledger import LedgerEntry, certified_ok
from mtlab.recovery.petz import petz_recovery
from mtlab.thermal.gibbs import gibbs_state
from mtlab.thermal.hamiltonians import Hamiltonian


logger = logging.getLogger(__name__)

PREPARE_TP_TOL = 1e-8


@dataclass(frozen=True)
class DepthTwoLayout:
    a: tuple[SiteSet, ...]
    b: tuple[SiteSet, ...]
    c: tuple[SiteSet, ...]
    l: int
    c_width: int

    @property
    def k(self) -> int:
        return len(self.a)

    def prefix(self, j: int) -> SiteSet:
        """A_1B_1C_1 … A_jB_j (j counted from 1)."""
        sites = self.a[0] | self.b[0]
        for i in range(1, j):
            sites = sites | self.c[i - 1] | self.a[i] | self.b[i]
        return sites


def depth_two_layout(geometry: ChainGeometry, l: int, k: int, c_width: int | None = None) -> DepthTwoLayout:
    """Blocks |A_i| = |B_i| = l and k − 1 separators C_i of equal width.

    Without ``c_width`` the separators take whatever the chain leaves.
    """
    if geometry.closed:
        raise DomainError("depth-two preparation is laid out on open chains")
    if l < 1 or k < 1:
        raise DomainError("block size and block count must be positive")
    n = geometry.n
    if k == 1:
        c_width = 0
    elif c_width is None:
        rest = n - 2 * l * k
        if rest < k - 1 or rest % (k - 1):
            raise DomainError(f"{n} sites cannot hold {k} blocks of 2x{l} with equal separators")
        c_width = rest // (k - 1)
    if c_width < (1 if k > 1 else 0) or 2 * l * k + (k - 1) * c_width != n:
        raise DomainError(
            f"{k} blocks of 2x{l} with separators of {c_width} do not tile {n} sites"
        )
    a, b, c = [], [], []
    pos = 0
    for i in range(k):
        a.append(geometry.interval(pos, pos + l))
        b.append(geometry.interval(pos + l, pos + 2 * l))
        pos += 2 * l
        if i < k - 1:
            c.append(geometry.interval(pos, pos + c_width))
            pos += c_width
    return DepthTwoLayout(tuple(a), tuple(b), tuple(c), l, c_width)


@dataclass(frozen=True, eq=False)
class DepthTwoResult:
    """``terms`` holds (corr_j, rec_j) per separator.

    ``asymptotic_c_width`` is 5ξ·ln(d)·l when a correlation length was given.
    """
    layout: DepthTwoLayout
    channel: QuantumChannel
    report: ChannelReport
    error: float
    terms: tuple[tuple[float, float], ...]
    ledger: tuple[LedgerEntry, ...]
    asymptotic_c_width: float

    @property
    def passed(self) -> bool:
        return self.report.tp_defect <= PREPARE_TP_TOL and certified_ok(self.ledger)

    def to_json(self) -> dict:
        return {
            'l': self.layout.l,
            'k': self.layout.k,
            'c_width': self.layout.c_width,
            'asymptotic_c_width': self.asymptotic_c_width,
            'error': self.error,
            'tp_defect': self.report.tp_defect,
            'correlation_terms': [c for c, _ in self.terms],
            'recovery_terms': [r for _, r in self.terms],
            'ledger': [e.to_json() for e in self.ledger],
        }


def depth_two_prepare(
    h: Hamiltonian,
    beta: float,
    l: int,
    k: int = 2,
    c_width: int | None = None,
    xi: float | None = None,
) -> DepthTwoResult:
    """Build both layers, apply them to the maximally mixed state and compare with ρ^H.

    The error is bounded by Σ_j (corr_j + rec_j): corr_j is the trace
    distance between the true marginal on A_1…B_j A_{j+1}B_{j+1} and the
    product of its two pieces, rec_j the error of the recovery map on C_j
    applied to that marginal.
    """
    layout = depth_two_layout(h.geometry, l, k, c_width)
    rho = gibbs_state(h, beta).state
    support = rho.support
    if support != h.geometry.all_sites():
        raise DomainError("depth-two preparation needs a Hamiltonian on the whole chain")

    first: QuantumChannel | None = None
    for i in range(layout.k):
        ab = layout.a[i] | layout.b[i]
        consumed = ab | layout.c[i] if i < layout.k - 1 else ab
        step = trace_channel(consumed).then(prepare_channel(partial_trace(rho, ab)))
        first = step if first is None else first.then(step)
    assert first is not None

    recoveries = []
    channel = first
    for i in range(layout.k - 1):
        joint = layout.b[i] | layout.a[i + 1]
        recovery = petz_recovery(partial_trace(rho, joint | layout.c[i]), joint)
        recoveries.append(recovery)
        channel = channel.then(recovery)

    report = channel_validate(channel)
    prepared = channel.apply(DensityMatrix.maximally_mixed(support))
    error = trace_distance(rho, prepared)

    terms = []
    for j, recovery in enumerate(recoveries):
        before = layout.prefix(j + 1)
        nxt = layout.a[j + 1] | layout.b[j + 1]
        joined = partial_trace(rho, before | nxt)
        product = DensityMatrix.product(partial_trace(rho, before), partial_trace(rho, nxt))
        corr = trace_distance(joined, product)
        rec = trace_distance(partial_trace(rho, layout.prefix(j + 2)), recovery.apply(joined))
        terms.append((corr, rec))
    ledger = [LedgerEntry('error.telescoped', error, sum(c + r for c, r in terms))]

    local_dim = max(h.geometry.dims)
    asymptotic_width = 5 * xi * math.log(local_dim) * l if xi is not None else math.nan
    logger.info("depth-two preparation l=%d k=%d: error %.3e", l, layout.k, error)
    return DepthTwoResult(layout, channel, report, error, tuple(terms), tuple(ledger), asymptotic_width)
