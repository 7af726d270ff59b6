"""Repeat-until-success recovery.

B is cut into blocks B_l B̄_{l−1} B_{l−1} … B̄_1 B_1, with B_l next to A
and B_1 next to C. Stage i tries the instrument on B_i that rebuilds
everything right of it. On failure the stage output, the buffer B̄_i and
everything right of it are discarded and stage i + 1 tries again one block
further from C. The last stage keeps its failure output.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from mtlab.beliefprop.bounds import BoundConstants
from mtlab.exceptions import DomainError
from mtlab.hilbert.channels import (
    TP, ChannelReport, QuantumChannel, SummedChannel, channel_validate, trace_channel,
)
from mtlab.hilbert.geometry import SiteSet, sites_distance
from mtlab.hilbert.operators import DensityMatrix, partial_trace, trace_distance
from mtlab.recovery.kappa import (
    RecoveryInstrument, bp_recovery_kappa, check_tripartition, normalize_instrument,
)
from mtlab.recovery.ledger import LedgerEntry, certified_ok
from mtlab.thermal.correlation import correlation
from mtlab.thermal.gibbs import gibbs_state
from mtlab.thermal.hamiltonians import Hamiltonian


logger = logging.getLogger(__name__)

RUS_TP_TOL = 1e-8


@dataclass(frozen=True)
class RUSLayout:
    """Blocks and buffers of B, both listed from stage 1 (next to C) upward."""
    blocks: tuple[SiteSet, ...]
    buffers: tuple[SiteSet, ...]
    block_size: int
    buffer_size: int
    relaxed: bool

    @property
    def stages(self) -> int:
        return len(self.blocks)


def rus_layout(
    a: SiteSet,
    b: SiteSet,
    l: int,
    block: int | None = None,
    buffer: int | None = None,
) -> RUSLayout:
    """Cut B into l blocks of ``block`` sites separated by buffers of ``buffer`` sites.

    The unrelaxed sizes are |B_i| = 2l and |B̄_i| = l, so |B| = 3l² − l.
    """
    if l < 1:
        raise DomainError("the number of stages must be at least 1")
    block = 2 * l if block is None else block
    buffer = l if buffer is None else buffer
    if block < 2 or buffer < 0:
        raise DomainError("blocks need at least two sites and buffers cannot be negative")
    needed = l * block + (l - 1) * buffer
    arc = b.arc()
    if arc is None:
        raise DomainError(f"B = {b} is not contiguous")
    if len(arc) != needed:
        raise DomainError(
            f"|B| = {len(arc)} does not fit {l} blocks of {block} and buffers of {buffer} "
            f"({needed} sites)"
        )
    sites = list(arc)
    if len(a) and sites_distance(a, b.geometry.sites([sites[0]])) != 1:
        sites.reverse()
    # sites now run from A towards C
    g = b.geometry
    blocks: list[SiteSet] = []
    buffers: list[SiteSet] = []
    pos = 0
    for i in range(l, 0, -1):
        blocks.append(g.sites(sites[pos:pos + block]))
        pos += block
        if i > 1:
            buffers.append(g.sites(sites[pos:pos + buffer]))
            pos += buffer
    blocks.reverse()
    buffers.reverse()
    relaxed = (block, buffer) != (2 * l, l)
    return RUSLayout(tuple(blocks), tuple(buffers), block, buffer, relaxed)


@dataclass(frozen=True, eq=False)
class RUSPlan:
    layout: RUSLayout
    stages: tuple[RecoveryInstrument, ...]
    channel: QuantumChannel
    report: ChannelReport
    error: float
    single_stage_error: float
    ledger: tuple[LedgerEntry, ...]

    @property
    def cptp(self) -> bool:
        return self.report.cp and self.report.tp_defect <= RUS_TP_TOL

    @property
    def passed(self) -> bool:
        return self.cptp and certified_ok(self.ledger)

    def to_json(self) -> dict:
        return {
            'stages': self.layout.stages,
            'block': self.layout.block_size,
            'buffer': self.layout.buffer_size,
            'relaxed': self.layout.relaxed,
            'error': self.error,
            'single_stage_error': self.single_stage_error,
            'tp_defect': self.report.tp_defect,
            'choi_min_eig': self.report.choi_min_eig,
            'p_success': [s.p_success for s in self.stages],
            'ledger': [e.to_json() for e in self.ledger],
        }


def rus_recovery(
    h: Hamiltonian,
    beta: float,
    a: SiteSet,
    b: SiteSet,
    c: SiteSet,
    l: int,
    block: int | None = None,
    buffer: int | None = None,
    ode_tol: float | None = None,
    constants: BoundConstants | None = None,
) -> RUSPlan:
    """Assemble Λ = Λ̃_1 + (Λ̃_2 + … (Λ̃_l + Ẽ_l)Tr_{l−1}Ẽ_{l−1} …)Tr_1Ẽ_1 and measure it."""
    check_tripartition(h, a, b, c)
    if not len(a):
        raise DomainError("A must not be empty")
    layout = rus_layout(a, b, l, block, buffer)
    if layout.relaxed:
        logger.info(
            "RUS with %d stages uses blocks of %d and buffers of %d instead of %d and %d",
            l, layout.block_size, layout.buffer_size, 2 * l, l,
        )
    support = h.support
    rho = gibbs_state(h, beta).state

    rights: list[SiteSet] = []
    right = c
    for i in range(l):
        rights.append(right)
        right = right | layout.blocks[i]
        if i < l - 1:
            right = right | layout.buffers[i]

    stages = []
    inputs = []
    for i in range(l):
        b_i, r_i = layout.blocks[i], rights[i]
        left = support - b_i - r_i
        km = bp_recovery_kappa(h, beta, left, b_i, r_i, ode_tol)
        stages.append(normalize_instrument(km, rho))
        inputs.append(partial_trace(rho, left | b_i))
        logger.info("RUS stage %d on %s: p = %.4f", i + 1, b_i, stages[-1].p_success)

    # The part of B each stage consumes: its block, its buffer and every later stage's share
    shares: list[SiteSet] = [layout.blocks[l - 1]]
    for i in range(l - 2, -1, -1):
        shares.insert(0, shares[0] | layout.buffers[i] | layout.blocks[i])

    tail: QuantumChannel = SummedChannel([stages[l - 1].success, stages[l - 1].fail], kind=TP)
    for i in range(l - 2, -1, -1):
        discard = trace_channel(layout.buffers[i] | layout.blocks[i] | rights[i])
        retry = stages[i].fail.then(discard).then(tail)
        tail = SummedChannel([stages[i].success.widened(shares[i]), retry], kind=TP)
    channel = tail
    report = channel_validate(channel)

    rho_ab = partial_trace(rho, a | b)
    error = trace_distance(rho, channel.apply(rho_ab))
    ledger = _ledger(rho, layout, stages, inputs, rights, error, constants)
    plan = RUSPlan(
        layout=layout,
        stages=tuple(stages),
        channel=channel,
        report=report,
        error=error,
        single_stage_error=stages[0].normalized_error,
        ledger=tuple(ledger),
    )
    if not plan.cptp:
        logger.warning("RUS channel fails validation: %s", report)
    return plan


def _ledger(
    rho: DensityMatrix,
    layout: RUSLayout,
    stages: list[RecoveryInstrument],
    inputs: list[DensityMatrix],
    rights: list[SiteSet],
    error: float,
    constants: BoundConstants | None,
) -> list[LedgerEntry]:
    """Telescoped bound on the RUS error and the failure-branch correlation checks.

    With q_i = 1 − p_i and W_i = q_1…q_{i−1}, the error is at most
    Σ W_i s_i + Σ_{i<l} W_i q_i c_i + W_l f_l where s_i = ‖p_i ρ − Λ̃_i(ρ_i)‖₁,
    c_i = ‖ρ_X − Tr_i Ẽ_i(ρ_i)/q_i‖₁ and f_l = ‖q_l ρ − Ẽ_l(ρ_l)‖₁.
    With one stage s_1 = p ε_1 for the normalized error ε_1 and f_1 ≤ 2q_1, so
    the error is only as small as ε_1 when p is close to 1.
    """
    l = layout.stages
    entries: list[LedgerEntry] = []
    weight = 1.0
    telescoped = 0.0
    with_correlations = 0.0
    for i in range(l):
        stage, rho_i = stages[i], inputs[i]
        p = stage.p_success
        q = max(1.0 - p, 0.0)
        s = trace_distance(rho.scaled(p), stage.success.apply(rho_i))
        telescoped += weight * s
        with_correlations += weight * s
        if i < l - 1:
            b_i = layout.blocks[i]
            gone = layout.buffers[i] | b_i | rights[i]
            x = rho.support - gone
            failed = stage.fail.then(trace_channel(gone)).apply(rho_i)
            qc = trace_distance(partial_trace(rho, x).scaled(q), failed)
            cor = correlation(rho, x, b_i, restarts=1)
            entries.append(LedgerEntry(f'stage{i + 1}.failure_correlation', qc, cor.cor_upper))
            telescoped += weight * qc
            with_correlations += weight * cor.cor_upper
        else:
            f = trace_distance(rho.scaled(q), stage.fail.apply(rho_i))
            telescoped += weight * f
            with_correlations += weight * f
        weight *= q

    entries.append(LedgerEntry('error.telescoped', error, telescoped))
    entries.append(LedgerEntry('error.stage_plus_correlation', error, with_correlations))
    if l == 1:
        # the kept failure output carries weight 1 − p and lies within 2(1 − p) of (1 − p)ρ
        p = stages[0].p_success
        entries.append(LedgerEntry(
            'error.single_stage', error, p * stages[0].normalized_error + 2 * max(1.0 - p, 0.0),
        ))
    if constants is not None:
        p = min(s.p_success for s in stages)
        bound = constants.theorem4_bound(l, p) if 0 < p <= 1 else math.inf
        entries.append(LedgerEntry('error.asymptotic', error, bound, certified=False))
    return entries
