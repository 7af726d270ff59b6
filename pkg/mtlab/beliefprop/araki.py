"""Araki expansionals and their locality.

E_r(V; H) = e^{−β(H+V)/2} e^{βH/2} conjugates e^{−βH} into e^{−β(H+V)}
exactly, and its inverse is E_l(V; H) = e^{−βH/2} e^{β(H+V)/2}. Restricting
H to l sites around V changes E_r by an amount that decays faster than
exponentially in l.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from mtlab.beliefprop.bounds import BoundConstants
from mtlab.beliefprop.flow import (
    BPFlow, check_beta, check_hermitian, embedded_on, localize_flow,
)
from mtlab.exceptions import DomainError
from mtlab.hilbert import linalg
from mtlab.hilbert.geometry import SiteSet
from mtlab.hilbert.operators import GlobalOperator, embed
from mtlab.thermal.hamiltonians import Hamiltonian


logger = logging.getLogger(__name__)

NOISE_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class ArakiExpansional:
    e_r: GlobalOperator
    e_l: GlobalOperator
    identity_residual: float
    inverse_residual: float


def _expansional(h: np.ndarray, v: np.ndarray, beta: float) -> np.ndarray:
    return linalg.expm_h(h + v, -0.5 * beta) @ linalg.expm_h(h, 0.5 * beta)


def araki_expansional(h: GlobalOperator, v: GlobalOperator, beta: float) -> ArakiExpansional:
    """E_r and E_l by direct exponentials.

    ``identity_residual`` is ‖E_r e^{−βH} E_r† − e^{−β(H+V)}‖₁ relative to
    ‖e^{−β(H+V)}‖₁ and ``inverse_residual`` is ‖E_l E_r − 1‖.
    """
    check_hermitian(h, 'H')
    check_hermitian(v, 'V')
    beta = check_beta(beta)
    hm = h.matrix
    vm = embedded_on(v, h.support, 'V')
    e_r = _expansional(hm, vm, beta)
    e_l = linalg.expm_h(hm, -0.5 * beta) @ linalg.expm_h(hm + vm, 0.5 * beta)

    eye = np.eye(h.dim)
    shift = float(linalg.eigh(hm + vm)[0][0])
    target = linalg.expm_h(hm + vm - shift * eye, -beta)
    conjugated = e_r @ linalg.expm_h(hm - shift * eye, -beta) @ e_r.conj().T
    identity = linalg.trace_norm(conjugated - target) / linalg.trace_norm(target)
    inverse = linalg.op_norm(e_l @ e_r - eye)
    return ArakiExpansional(
        GlobalOperator(h.support, e_r),
        GlobalOperator(h.support, e_l),
        identity,
        inverse,
    )


@dataclass(frozen=True)
class DecayRow:
    l: int
    measured_err: float
    predicted_err: float = math.nan


@dataclass(frozen=True)
class DecayProfile:
    """Truncation error as a function of the distance l kept around V."""
    rows: tuple[DecayRow, ...]
    floor: float = NOISE_FLOOR

    @property
    def errors(self) -> list[float]:
        return [r.measured_err for r in self.rows]

    @property
    def monotone(self) -> bool:
        """Non-increasing in l up to the noise floor."""
        e = self.errors
        return all(b <= a + self.floor for a, b in zip(e, e[1:]))

    @property
    def strictly_decreasing(self) -> bool:
        """Strictly decreasing until the error reaches the noise floor."""
        e = self.errors
        return all(b < a or a <= self.floor for a, b in zip(e, e[1:]))

    @property
    def log_convex(self) -> bool:
        """−ln(err) has non-negative second differences above the noise floor.

        Only consecutive l with errors well above the floor take part.
        """
        points = [(r.l, -math.log(r.measured_err)) for r in self.rows
                  if r.measured_err > 1e3 * self.floor]
        for (l0, a), (l1, b), (l2, c) in zip(points, points[1:], points[2:]):
            if l1 - l0 != 1 or l2 - l1 != 1:
                continue
            if c - 2 * b + a < -1e-9:
                return False
        return True

    def to_rows(self, constants: BoundConstants | None = None) -> list[dict]:
        """Rows of the CSV decay table: l, measured_err, predicted_err, q1, K."""
        q1 = constants.q1 if constants is not None else math.nan
        k = constants.K if constants is not None else math.nan
        return [
            {'l': r.l, 'measured_err': r.measured_err, 'predicted_err': r.predicted_err,
             'q1': q1, 'K': k}
            for r in self.rows
        ]


def _distances(l_range: Iterable[int]) -> list[int]:
    ls = sorted(set(int(l) for l in l_range))
    if not ls or ls[0] < 0:
        raise DomainError("distances must be a non-empty list of non-negative integers")
    return ls


def araki_locality_profile(
    h: Hamiltonian,
    v: GlobalOperator,
    beta: float,
    l_range: Iterable[int],
    region: SiteSet | None = None,
) -> DecayProfile:
    """‖E_r(V; H_X) − E_r(V; H_{X ∩ V_l}) ⊗ 1‖ for each l in ``l_range``.

    X is ``region`` (the Hamiltonian support by default) and V_l the sites
    within distance l of V.
    """
    beta = check_beta(beta)
    x = h.support if region is None else region
    if not v.support.issubset(x):
        raise DomainError(f"V on {v.support} is not inside {x}")
    full = GlobalOperator(x, _expansional(h.restrict(x).operator.matrix, embed(v, x).matrix, beta))
    rows = []
    for l in _distances(l_range):
        y = v.support.grown(l) & x
        local = _expansional(h.restrict(y).operator.matrix, embed(v, y).matrix, beta)
        err = linalg.op_norm(full.matrix - embed(GlobalOperator(y, local), x).matrix)
        rows.append(DecayRow(l, err))
        logger.debug("Araki truncation l=%d: %.3e", l, err)
    return DecayProfile(tuple(rows))


def flow_locality_profile(
    flow: BPFlow,
    l_range: Sequence[int],
    constants: BoundConstants | None = None,
) -> DecayProfile:
    """‖O − O_l‖ for the flow localized to V grown by each l."""
    rows = []
    for l in _distances(l_range):
        local = localize_flow(flow, l=l, constants=constants)
        rows.append(DecayRow(l, local.error, local.predicted_err))
    return DecayProfile(tuple(rows))
