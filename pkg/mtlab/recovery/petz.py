"""The Petz recovery map and its quality on a given state."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from mtlab.exceptions import DomainError
from mtlab.hilbert import linalg
from mtlab.hilbert.channels import TP, TP_TOL, KrausChannel
from mtlab.hilbert.geometry import SiteSet
from mtlab.hilbert.operators import DensityMatrix, partial_trace, state_metrics
from mtlab.info.measures import cmi


logger = logging.getLogger(__name__)

# Eigenvalues of ρ_B at or below this are treated as its kernel
PETZ_CUTOFF = 1e-12


def petz_recovery(
    rho_ref: DensityMatrix,
    b: SiteSet,
    cutoff: float = PETZ_CUTOFF,
) -> KrausChannel:
    """X_B ↦ ρ_BC^{1/2}(ρ_B^{−1/2} X_B ρ_B^{−1/2} ⊗ 1_C)ρ_BC^{1/2}.

    ``rho_ref`` is the reference state on BC. On the kernel of ρ_B the map
    prepares the maximally mixed state of C next to the input, which makes
    the channel trace-preserving on all of B.
    """
    bc = rho_ref.support
    if not len(b) or not b.issubset(bc):
        raise DomainError(f"{b} must be a non-empty subset of the reference support {bc}")
    c = bc - b
    if not len(c):
        raise DomainError("the reference state has no sites to recover")
    rho_ref.validate()

    order = list(b) + list(c)
    dims = [bc.geometry.dims[i] for i in order]
    perm_in = [bc.position(i) for i in order]
    perm_out = [order.index(i) for i in bc]

    rho_bc = linalg.permute_factors(rho_ref.matrix, bc.dims, perm_in)
    rho_b = partial_trace(rho_ref, b).matrix
    sqrt_bc = linalg.sqrtm_psd(rho_bc)
    inv_sqrt_b = linalg.inv_sqrtm_psd(rho_b, cutoff)
    kernel = linalg.kernel_projector(rho_b, cutoff)

    d_c = c.dim
    kraus = []
    for j in range(d_c):
        e_j = np.zeros((d_c, 1))
        e_j[j, 0] = 1.0
        kraus.append(sqrt_bc @ np.kron(inv_sqrt_b, e_j))
        if np.any(kernel):
            kraus.append(np.kron(kernel, e_j) / math.sqrt(d_c))

    effect = sum(k.conj().T @ k for k in kraus)
    defect = linalg.op_norm(effect - np.eye(b.dim))
    if defect > TP_TOL:
        # Eigenvalues close to the cutoff leave a small trace defect
        logger.debug("Petz map trace defect %.3e corrected", defect)
        fix = linalg.inv_sqrtm_psd(effect, 0.0)
        kraus = [k @ fix for k in kraus]
    kraus = [linalg.permute_rows(k, dims, perm_out) for k in kraus]
    return KrausChannel(b, bc, kraus, kind=TP)


@dataclass(frozen=True)
class RecoveryReport:
    """How well the Petz map built from ρ_BC rebuilds ρ_ABC from ρ_AB.

    ``fidelity_gap`` is −2 ln F; it is recorded next to I(A:C|B) without
    asserting an order between them.
    """
    error: float
    fidelity: float
    fidelity_gap: float
    cmi: float

    def to_json(self) -> dict:
        return {
            'recovery_error': self.error,
            'fidelity': self.fidelity,
            'fidelity_gap_nats': self.fidelity_gap,
            'cmi_nats': self.cmi,
        }


def petz_report(rho: DensityMatrix, a: SiteSet, b: SiteSet, c: SiteSet) -> RecoveryReport:
    abc = a | b | c
    if not (a.isdisjoint(b) and b.isdisjoint(c) and a.isdisjoint(c)):
        raise DomainError("regions must be disjoint")
    target = partial_trace(rho, abc)
    channel = petz_recovery(partial_trace(rho, b | c), b)
    out = channel.apply(partial_trace(rho, a | b))
    recovered = DensityMatrix(abc, out.matrix / out.trace().real)
    metrics = state_metrics(target, recovered)
    gap = -2 * math.log(metrics.fidelity) if metrics.fidelity > 0 else math.inf
    return RecoveryReport(metrics.trace_distance, metrics.fidelity, gap, cmi(rho, a, b, c).value)
