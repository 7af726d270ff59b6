"""Gibbs states and the interaction straddling the middle of a region."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg as la

from mtlab.exceptions import DomainError
from mtlab.hilbert import linalg
from mtlab.hilbert.geometry import SiteSet
from mtlab.hilbert.operators import DensityMatrix, GlobalOperator
from mtlab.thermal.hamiltonians import Hamiltonian


logger = logging.getLogger(__name__)

GIBBS_RESIDUAL_TOL = 1e-9
# Cross-check against a Padé exponential only for small supports
RESIDUAL_CHECK_MAX_DIM = 256


@dataclass(frozen=True, eq=False)
class GibbsState:
    hamiltonian: Hamiltonian
    beta: float
    state: DensityMatrix
    log_z: float

    @property
    def support(self) -> SiteSet:
        return self.state.support

    @property
    def free_energy(self) -> float:
        """F = −ln Z / β (undefined at β = 0)."""
        if self.beta == 0:
            return math.nan
        return -self.log_z / self.beta


def gibbs_state(
    h: Hamiltonian,
    beta: float,
    region: SiteSet | None = None,
) -> GibbsState:
    """e^{−βH}/Z on the Hamiltonian's support.

    With ``region`` the Hamiltonian is first restricted to it, giving the
    Gibbs state of H_X on X.
    """
    if beta < 0 or not math.isfinite(beta):
        raise DomainError(f"inverse temperature must be finite and >= 0, not {beta}")
    if region is not None:
        h = h.restrict(region)
    op = h.operator
    w, v = linalg.eigh(op.matrix)
    shifted = np.exp(-beta * (w - w[0]))
    z = float(shifted.sum())
    rho = (v * (shifted / z)) @ v.conj().T
    log_z = math.log(z) - beta * float(w[0])

    if op.dim <= RESIDUAL_CHECK_MAX_DIM:
        expected = la.expm(-beta * (op.matrix - w[0] * np.eye(op.dim))) / z
        residual = linalg.op_norm(rho - expected)
        if residual > GIBBS_RESIDUAL_TOL:
            logger.warning("Gibbs state residual %.3e at beta=%g", residual, beta)
    return GibbsState(h, float(beta), DensityMatrix(op.support, rho), log_z)


@dataclass(frozen=True, eq=False)
class MiddleSplit:
    b_left: SiteSet
    b_right: SiteSet
    h_bm: GlobalOperator
    crossing_terms: int
    norm: float
    bound: float


def split_middle_interaction(h: Hamiltonian, b: SiteSet) -> MiddleSplit:
    """Split contiguous B in two and collect the terms straddling the cut.

    The left half takes the extra site when |B| is odd. H_{B^M} is the sum
    of the terms meeting both halves, supported on the union of their
    supports; ‖H_{B^M}‖ is reported next to the bound J·r.
    """
    arc = b.arc()
    if arc is None:
        raise DomainError(f"{b} is not contiguous")
    if len(arc) < 2:
        raise DomainError("B needs at least two sites to be split")
    half = (len(arc) + 1) // 2
    b_left = b.geometry.sites(arc[:half])
    b_right = b.geometry.sites(arc[half:])

    crossing = [
        t for t in h.terms
        if not t.support.isdisjoint(b_left) and not t.support.isdisjoint(b_right)
    ]
    if crossing:
        h_bm = crossing[0]
        for t in crossing[1:]:
            h_bm = h_bm + t
    else:
        h_bm = GlobalOperator(b, np.zeros((b.dim, b.dim)), hermitian=True)
    return MiddleSplit(
        b_left, b_right, h_bm, len(crossing), h_bm.norm(), h.strength * h.range,
    )
