"""Quantum belief propagation.

For H(s) = H0 + sV the derivative of e^{−βH(s)} is generated by the
filtered perturbation Φ_s = Φ_β^{H(s)}(V), and integrating

    dO/ds = −(β/2) Φ_s O,    O(0) = 1

gives e^{−β(H0+V)} = O e^{−βH0} O†. The inverse Õ solves the reversed
equation dÕ/ds = (β/2) Õ Φ_s.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from mtlab.beliefprop.bounds import BoundConstants
from mtlab.conf import setting
from mtlab.exceptions import DomainError
from mtlab.hilbert import linalg
from mtlab.hilbert.geometry import SiteSet
from mtlab.hilbert.operators import (
    HERMITIAN_TOL, GlobalOperator, embed, restrict_normalized,
)


logger = logging.getLogger(__name__)

FIRST_STEPS = 4
MAX_STEPS = 2 ** 20
# Φ_s matrices kept per flow; larger flows recompute them
PHI_CACHE_BYTES = 256 * 2 ** 20


def check_hermitian(op: GlobalOperator, name: str) -> None:
    if op.hermitian:
        return
    scale = max(float(np.linalg.norm(op.matrix)), 1e-300)
    if linalg.hermiticity_defect(op.matrix) > HERMITIAN_TOL * scale:
        raise DomainError(f"{name} must be Hermitian")


def check_beta(beta: float) -> float:
    if beta < 0 or not math.isfinite(beta):
        raise DomainError(f"inverse temperature must be finite and >= 0, not {beta}")
    return float(beta)


def embedded_on(op: GlobalOperator, support: SiteSet, name: str) -> np.ndarray:
    if not op.support.issubset(support):
        raise DomainError(f"{name} on {op.support} is not inside {support}")
    return embed(op, support).matrix


def filter_weights(gaps: np.ndarray, beta: float) -> np.ndarray:
    """f̃_β(ω) = tanh(βω/2)/(βω/2), with f̃_β(0) = 1."""
    x = 0.5 * beta * gaps
    small = np.abs(x) < 1e-6
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 - x * x / 3.0, np.tanh(safe) / safe)


def _filter_matrix(h: np.ndarray, v: np.ndarray, beta: float) -> np.ndarray:
    w, u = linalg.eigh(h)
    vt = u.conj().T @ v @ u
    return u @ (vt * filter_weights(w[:, None] - w[None, :], beta)) @ u.conj().T


def bp_filter(h: GlobalOperator, v: GlobalOperator, beta: float) -> GlobalOperator:
    """Φ_β^H(V): V in the eigenbasis of H, entry (i, j) weighted by f̃_β(E_i − E_j)."""
    check_hermitian(h, 'H')
    beta = check_beta(beta)
    m = _filter_matrix(h.matrix, embedded_on(v, h.support, 'V'), beta)
    if v.hermitian:
        m = linalg.hermitize(m)
    return GlobalOperator(h.support, m, hermitian=v.hermitian)


class FilteredPerturbation:
    """s ↦ Φ_β^{H0+sV}(V) with a bounded cache keyed by s."""

    def __init__(self, h0: np.ndarray, v: np.ndarray, beta: float) -> None:
        self.h0 = h0
        self.v = v
        self.beta = beta
        self.max_entries = max(1, PHI_CACHE_BYTES // (16 * h0.shape[0] ** 2))
        self._cache: dict[float, np.ndarray] = {}

    def __call__(self, s: float) -> np.ndarray:
        phi = self._cache.get(s)
        if phi is None:
            phi = linalg.hermitize(_filter_matrix(self.h0 + s * self.v, self.v, self.beta))
            if len(self._cache) < self.max_entries:
                self._cache[s] = phi
        return phi


def _integrate(
    phi_at: Callable[[float], np.ndarray],
    dim: int,
    beta: float,
    steps: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Classical fourth-order steps for O and Õ on [0, 1]."""
    o = np.eye(dim, dtype=complex)
    o_inv = np.eye(dim, dtype=complex)
    h = 1.0 / steps
    half = 0.5 * beta
    for k in range(steps):
        # s values are dyadic, so they repeat exactly when the step halves
        f0 = phi_at((2 * k) / (2 * steps))
        fm = phi_at((2 * k + 1) / (2 * steps))
        f1 = phi_at((2 * k + 2) / (2 * steps))

        k1 = -half * f0 @ o
        k2 = -half * fm @ (o + 0.5 * h * k1)
        k3 = -half * fm @ (o + 0.5 * h * k2)
        k4 = -half * f1 @ (o + h * k3)
        o = o + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

        j1 = half * o_inv @ f0
        j2 = half * (o_inv + 0.5 * h * j1) @ fm
        j3 = half * (o_inv + 0.5 * h * j2) @ fm
        j4 = half * (o_inv + h * j3) @ f1
        o_inv = o_inv + (h / 6.0) * (j1 + 2 * j2 + 2 * j3 + j4)
    return o, o_inv


@dataclass(frozen=True, eq=False)
class BPFlow:
    """O and Õ for H(s) = H0 + sV at inverse temperature β.

    ``ode_residual`` is the relative defect
    ‖e^{−β(H0+V)} − O e^{−βH0} O†‖₁ / ‖e^{−β(H0+V)}‖₁ and
    ``inverse_residual`` is ‖OÕ − 1‖.
    """
    h0: GlobalOperator
    v: GlobalOperator
    beta: float
    o: GlobalOperator
    o_inv: GlobalOperator
    ode_steps: int
    ode_residual: float
    inverse_residual: float
    converged: bool
    filtered: FilteredPerturbation = field(repr=False)

    @property
    def support(self) -> SiteSet:
        return self.h0.support

    @property
    def norm_bound(self) -> float:
        """e^{β‖V‖/2}, which bounds ‖O‖."""
        return math.exp(0.5 * self.beta * self.v.norm())

    @property
    def norm_ok(self) -> bool:
        return self.o.norm() <= self.norm_bound + 1e-6

    def to_json(self) -> dict:
        return {
            'beta': self.beta,
            'ode_steps': self.ode_steps,
            'ode_residual': self.ode_residual,
            'inverse_residual': self.inverse_residual,
            'o_norm': self.o.norm(),
            'o_norm_bound': self.norm_bound,
            'converged': self.converged,
        }


def _gibbs_defect(
    o: np.ndarray,
    rho0: np.ndarray,
    rho1: np.ndarray,
    scale: float,
) -> float:
    return linalg.trace_norm(rho1 - o @ rho0 @ o.conj().T) / scale


def bp_flow(
    h0: GlobalOperator,
    v: GlobalOperator,
    beta: float,
    ode_tol: float | None = None,
) -> BPFlow:
    """Integrate the flow, doubling the step count until the defect is below ``ode_tol``."""
    check_hermitian(h0, 'H0')
    check_hermitian(v, 'V')
    beta = check_beta(beta)
    ode_tol = setting('MTLAB_ODE_TOL') if ode_tol is None else ode_tol
    if ode_tol <= 0:
        raise DomainError("ODE tolerance must be positive")

    support = h0.support
    h0m = h0.matrix
    vm = embedded_on(v, support, 'V')
    # Both Gibbs operators share one shift, which leaves the relative defect unchanged
    shift = float(linalg.eigh(h0m + vm)[0][0])
    eye = np.eye(support.dim)
    rho0 = linalg.expm_h(h0m - shift * eye, -beta)
    rho1 = linalg.expm_h(h0m + vm - shift * eye, -beta)
    scale = linalg.trace_norm(rho1)

    filtered = FilteredPerturbation(h0m, vm, beta)
    steps = FIRST_STEPS
    best: tuple[float, int, np.ndarray, np.ndarray] | None = None
    while steps <= MAX_STEPS:
        o, o_inv = _integrate(filtered, support.dim, beta, steps)
        defect = _gibbs_defect(o, rho0, rho1, scale)
        logger.debug("flow with %d steps: defect %.3e", steps, defect)
        if best is not None and steps >= 64 and defect > 0.5 * best[0]:
            # Halving the step no longer helps: rounding dominates
            break
        if best is None or defect < best[0]:
            best = (defect, steps, o, o_inv)
        if defect <= ode_tol:
            break
        steps *= 2

    assert best is not None
    defect, steps, o, o_inv = best
    converged = defect <= ode_tol
    if not converged:
        logger.warning(
            "belief-propagation flow stopped at defect %.3e > %.1e after %d steps",
            defect, ode_tol, steps,
        )
    return BPFlow(
        h0=h0,
        v=v,
        beta=beta,
        o=GlobalOperator(support, o),
        o_inv=GlobalOperator(support, o_inv),
        ode_steps=steps,
        ode_residual=defect,
        inverse_residual=linalg.op_norm(o @ o_inv - eye),
        converged=converged,
        filtered=filtered,
    )


@dataclass(frozen=True, eq=False)
class LocalizedFlow:
    """O and Õ re-integrated with Φ_s restricted to ``region``."""
    region: SiteSet
    l: int
    o: GlobalOperator
    o_inv: GlobalOperator
    error: float
    inverse_error: float
    predicted_err: float

    def to_json(self) -> dict:
        return {
            'l': self.l,
            'region': list(self.region.indices),
            'measured_err': self.error,
            'inverse_err': self.inverse_error,
            'predicted_err': self.predicted_err,
        }


def _reach(v_support: SiteSet, region: SiteSet, support: SiteSet) -> int:
    """The largest l whose l-neighbourhood of V (within the support) fits in ``region``."""
    l = 0
    while True:
        grown = v_support.grown(l + 1) & support
        if not grown.issubset(region) or grown == v_support.grown(l) & support:
            return l
        l += 1


def localize_flow(
    flow: BPFlow,
    region: SiteSet | None = None,
    l: int | None = None,
    constants: BoundConstants | None = None,
) -> LocalizedFlow:
    """Localize the flow onto ``region`` (or onto V grown by ``l`` sites).

    The integrand is replaced by Tr_{region^c}(Φ_s)/dim(region^c), which is
    unital. The measured ‖O − O_local ⊗ 1‖ is reported next to the
    Lieb-Robinson prediction when ``constants`` are given.
    """
    support = flow.support
    v_support = flow.v.support
    if region is None:
        if l is None:
            raise DomainError("localize_flow needs a region or a distance l")
        region = v_support.grown(l) & support
    else:
        if not v_support.issubset(region):
            raise DomainError(f"region {region} does not contain the support of V {v_support}")
        if not region.issubset(support):
            raise DomainError(f"region {region} is outside the flow support {support}")
        if l is None:
            l = _reach(v_support, region, support)

    def phi_at(s: float) -> np.ndarray:
        phi = GlobalOperator(support, flow.filtered(s))
        return restrict_normalized(phi, region).matrix

    o_r, o_inv_r = _integrate(phi_at, region.dim, flow.beta, flow.ode_steps)
    o_local = GlobalOperator(region, o_r)
    o_inv_local = GlobalOperator(region, o_inv_r)
    error = linalg.op_norm(flow.o.matrix - embed(o_local, support).matrix)
    inverse_error = linalg.op_norm(flow.o_inv.matrix - embed(o_inv_local, support).matrix)
    predicted = constants.predicted_err(l) if constants is not None else math.nan
    logger.debug("flow localized to %s: error %.3e", region, error)
    return LocalizedFlow(region, l, o_local, o_inv_local, error, inverse_error, predicted)
