"""Recovery maps built from the belief-propagation flow.

For a Gibbs state on ABC with B contiguous, the interaction H_{B^M} across
the middle of B is removed by the flow O, which leaves a state that factors
between AB^L and B^RC. Localizing O and its inverse onto B gives a CP map
B → BC that rebuilds the state from its AB marginal. Normalizing that map
turns it into the success branch of an instrument.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from mtlab.beliefprop.bounds import BoundConstants
from mtlab.beliefprop.flow import BPFlow, LocalizedFlow, bp_flow, localize_flow
from mtlab.exceptions import DimensionCapError, DomainError, MTLabError
from mtlab.hilbert import linalg
from mtlab.hilbert.channels import (
    TP, TRACE_NON_INCREASING, ChannelReport, KrausChannel, QuantumChannel,
    SummedChannel, channel_validate, choi_matrix, identity_channel,
    operator_channel, prepare_channel, trace_channel,
)
from mtlab.hilbert.geometry import SiteSet, shields, sites_distance
from mtlab.hilbert.operators import (
    DensityMatrix, GlobalOperator, partial_trace, trace_distance,
)
from mtlab.thermal.gibbs import MiddleSplit, gibbs_state, split_middle_interaction
from mtlab.thermal.hamiltonians import Hamiltonian


logger = logging.getLogger(__name__)


def check_tripartition(h: Hamiltonian, a: SiteSet, b: SiteSet, c: SiteSet) -> None:
    if not (a.isdisjoint(b) and b.isdisjoint(c) and a.isdisjoint(c)):
        raise DomainError("A, B and C must be disjoint")
    if (a | b | c) != h.support:
        raise DomainError(f"A ∪ B ∪ C must cover the Hamiltonian support {h.support}")
    if not len(c):
        raise DomainError("C must not be empty")
    if not b.is_contiguous():
        raise DomainError(f"B = {b} is not contiguous")
    if len(b) < 2:
        raise DomainError("B needs at least two sites")
    if not shields(a, b, c):
        raise DomainError("B does not separate A from C")


@dataclass(frozen=True, eq=False)
class KappaMap:
    """κ: σ_B ↦ O_B[Tr_{B^R}(Õ_B σ_B Õ_B†) ⊗ ρ_{B^RC}]O_B†.

    ``b_near`` is the half of B next to A and ``b_far`` the half next to C.
    """
    h: Hamiltonian
    beta: float
    a: SiteSet
    b: SiteSet
    c: SiteSet
    b_near: SiteSet
    b_far: SiteSet
    kappa: QuantumChannel
    o_b: GlobalOperator
    o_inv_b: GlobalOperator
    rho_far: DensityMatrix
    flow: BPFlow
    localized: LocalizedFlow
    split: MiddleSplit

    @property
    def lambda_max(self) -> float:
        """λ_max(O_B†O_B)·λ_max(Õ_B†Õ_B)."""
        return self.o_b.norm() ** 2 * self.o_inv_b.norm() ** 2

    def error(self, rho: DensityMatrix) -> float:
        """‖ρ − κ(ρ_AB)‖₁ for a state ρ on the whole support."""
        return trace_distance(rho, self.kappa.apply(partial_trace(rho, self.a | self.b)))


def _halves(split: MiddleSplit, a: SiteSet, c: SiteSet) -> tuple[SiteSet, SiteSet]:
    near, far = split.b_left, split.b_right
    if len(c) and sites_distance(c, near) == 1 and (not len(a) or sites_distance(a, far) == 1):
        near, far = far, near
    return near, far


def bp_recovery_kappa(
    h: Hamiltonian,
    beta: float,
    a: SiteSet,
    b: SiteSet,
    c: SiteSet,
    ode_tol: float | None = None,
) -> KappaMap:
    check_tripartition(h, a, b, c)
    split = split_middle_interaction(h, b)
    near, far = _halves(split, a, c)
    crossing = [
        t for t in h.terms
        if not t.support.isdisjoint(split.b_left) and not t.support.isdisjoint(split.b_right)
    ]
    for t in h.terms:
        if t in crossing:
            continue
        if not (t.support.issubset(a | near) or t.support.issubset(far | c)):
            raise DomainError(
                f"term on {t.support} couples A to C past the middle of B; "
                "B is too short for the interaction range"
            )

    h0 = h.without(crossing).operator
    flow = bp_flow(h0, split.h_bm, beta, ode_tol)
    local = localize_flow(flow, region=b)
    rho_far = gibbs_state(h, beta, region=far | c).state

    kappa = (
        operator_channel(local.o_inv)
        .then(trace_channel(far))
        .then(prepare_channel(rho_far))
        .then(operator_channel(local.o))
    )
    logger.debug(
        "recovery map on B=%s: ‖O_B‖=%.4f, ‖Õ_B‖=%.4f, localization error %.3e",
        b, local.o.norm(), local.o_inv.norm(), local.error,
    )
    return KappaMap(
        h=h, beta=flow.beta, a=a, b=b, c=c, b_near=near, b_far=far,
        kappa=kappa, o_b=local.o, o_inv_b=local.o_inv, rho_far=rho_far,
        flow=flow, localized=local, split=split,
    )


@dataclass(frozen=True, eq=False)
class RecoveryInstrument:
    """Success and failure branches of the normalized recovery.

    ``failure_choi_min`` is the smallest Choi eigenvalue of the map
    σ ↦ σ ⊗ τ_C − success(σ), which need not be CP; NaN when the Choi
    matrix is above the cap.
    """
    kappa_map: KappaMap
    success: QuantumChannel
    fail: QuantumChannel
    channel: QuantumChannel
    lambda_max: float
    report: ChannelReport
    failure_choi_min: float
    p_success: float
    kappa_error: float
    normalized_error: float

    @property
    def cptp(self) -> bool:
        return self.report.cp and self.report.trace_preserving

    def to_json(self, constants: BoundConstants | None = None) -> dict:
        data = {
            'lambda_max': self.lambda_max,
            'p_success': self.p_success,
            'kappa_error': self.kappa_error,
            'normalized_error': self.normalized_error,
            'tp_defect': self.report.tp_defect,
            'choi_min_eig': self.report.choi_min_eig,
            'failure_choi_min_eig': self.failure_choi_min,
        }
        if constants is not None:
            data['p_lower_bound'] = constants.p_lower_bound
        return data


def _literal_failure_choi_min(success: QuantumChannel, b: SiteSet, tau_c: DensityMatrix) -> float:
    complement = identity_channel(b).then(prepare_channel(tau_c))
    try:
        j = choi_matrix(complement) - choi_matrix(success)
    except DimensionCapError:
        return math.nan
    return float(np.linalg.eigvalsh(linalg.hermitize(j))[0])


def normalize_instrument(
    kappa_map: KappaMap,
    rho: DensityMatrix | None = None,
    tau_c: DensityMatrix | None = None,
) -> RecoveryInstrument:
    """Scale κ by 1/λ_max and complete it to a CPTP instrument.

    The failure branch is σ ↦ √(1−N) σ √(1−N) ⊗ τ_C with N the effect of
    the success branch. ``rho`` is the reference state on the whole support
    (the Gibbs state by default); the success probability is measured on
    its AB marginal.
    """
    km = kappa_map
    lam = km.lambda_max
    if not lam > 0:
        raise MTLabError(f"recovery map has λ_max = {lam}")
    if tau_c is None:
        tau_c = DensityMatrix.maximally_mixed(km.c)
    elif tau_c.support != km.c:
        raise DomainError(f"τ_C must live on {km.c}")
    if rho is None:
        rho = gibbs_state(km.h, km.beta).state

    success = km.kappa.scaled(1.0 / lam, TRACE_NON_INCREASING)
    w, v = linalg.eigh(linalg.hermitize(success.effect()))
    w = np.clip(w, 0.0, 1.0)
    root = (v * np.sqrt(1.0 - w)) @ v.conj().T
    fail = KrausChannel(km.b, km.b, [root], kind=TRACE_NON_INCREASING).then(prepare_channel(tau_c))
    channel = SummedChannel([success, fail], kind=TP)
    report = channel_validate(channel)
    if not (report.cp and report.trace_preserving):
        logger.warning("recovery instrument on %s fails validation: %s", km.b, report)

    rho_ab = partial_trace(rho, km.a | km.b)
    out = success.apply(rho_ab)
    p = out.trace().real
    kappa_error = km.error(rho)
    normalized = trace_distance(rho, out.scaled(1.0 / p)) if p > 0 else math.inf
    return RecoveryInstrument(
        kappa_map=km,
        success=success,
        fail=fail,
        channel=channel,
        lambda_max=lam,
        report=report,
        failure_choi_min=_literal_failure_choi_min(success, km.b, tau_c),
        p_success=p,
        kappa_error=kappa_error,
        normalized_error=normalized,
    )
