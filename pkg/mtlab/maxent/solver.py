"""Maximum-entropy states with prescribed marginals.

The max-ent state is found through its convex dual

    f(λ) = ln Tr exp(Σ_i λ_i) − Σ_i Tr(λ_i ρ_{X_i}),

whose gradient with respect to λ_i is the marginal mismatch σ_{X_i} − ρ_{X_i}.
L-BFGS-B does the bulk of the work; a Newton polish with exact
Hessian-vector products takes the mismatch down to the tolerance, where
the dual itself is too flat to be resolved in floating point.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize
from scipy.sparse.linalg import LinearOperator, cg
from scipy.special import logsumexp

from mtlab.conf import setting
from mtlab.exceptions import DomainError
from mtlab.hilbert import linalg
from mtlab.hilbert.geometry import SiteSet
from mtlab.hilbert.operators import (
    DensityMatrix, GlobalOperator, embed, partial_trace, reduce_matrix,
    restrict_normalized,
)
from mtlab.info.measures import relative_entropy
from mtlab.maxent.family import HermitianBasis, MarginalFamily, embed_sum


logger = logging.getLogger(__name__)

WARM_START_MIX = 1e-10
WARM_START_FLOOR = 1e-12
POLISH_MAX_STEPS = 50
CG_MAX_ITER = 2000


@dataclass(frozen=True, eq=False)
class MaxEntSolution:
    """σ_max = exp(Σ_i λ_i − ln Z) with gauge-fixed multipliers."""
    family: MarginalFamily
    sigma_max: DensityMatrix
    multipliers: tuple[GlobalOperator, ...]
    log_z: float
    dual_value: float
    marginal_residual: float
    iterations: int
    converged: bool
    dual_history: tuple[float, ...] = field(default_factory=tuple)

    @property
    def max_multiplier_norm(self) -> float:
        return max(m.norm() for m in self.multipliers)

    def to_json(self) -> dict:
        return {
            'dual_value': self.dual_value,
            'marginal_residual': self.marginal_residual,
            'iterations': self.iterations,
            'converged': self.converged,
            'max_multiplier_norm': self.max_multiplier_norm,
        }


class _Dual:
    """The dual objective with a one-entry cache keyed by the coordinates."""

    def __init__(self, family: MarginalFamily) -> None:
        self.family = family
        self.support = family.support
        self.basis = HermitianBasis([x.dim for x in family.sets])
        self.targets = [t.matrix for t in family.targets]
        self.history: list[float] = []
        self._key: bytes | None = None

    def evaluate(self, x: np.ndarray) -> None:
        key = x.tobytes()
        if key == self._key:
            return
        k = embed_sum(self.basis.unpack(x), self.family.sets, self.support)
        w, v = linalg.eigh(k)
        log_z = float(logsumexp(w))
        p = np.exp(w - log_z)
        self.w, self.v, self.p, self.log_z = w, v, p, log_z
        self.sigma = linalg.hermitize((v * p) @ v.conj().T)
        mats = self.basis.unpack(x)
        self.value = log_z - sum(
            float(np.trace(lam @ t).real) for lam, t in zip(mats, self.targets)
        )
        self.mismatch = [
            reduce_matrix(self.sigma, self.support, s) - t
            for s, t in zip(self.family.sets, self.targets)
        ]
        self._key = key

    def fun(self, x: np.ndarray) -> float:
        self.evaluate(x)
        return self.value

    def jac(self, x: np.ndarray) -> np.ndarray:
        self.evaluate(x)
        return self.basis.gradient(self.mismatch)

    def residual(self, x: np.ndarray) -> float:
        self.evaluate(x)
        return max(linalg.trace_norm(g) for g in self.mismatch)

    def hessp(self, x: np.ndarray, direction: np.ndarray) -> np.ndarray:
        """Exact Hessian-vector product from the derivative of exp."""
        self.evaluate(x)
        w, v, p = self.w, self.v, self.p
        e = embed_sum(self.basis.unpack(direction), self.family.sets, self.support)
        et = v.conj().T @ e @ v
        d_sigma = v @ (et * _loewner(w, p)) @ v.conj().T
        d_sigma -= self.sigma * float(np.trace(self.sigma @ e).real)
        return self.basis.gradient([
            reduce_matrix(linalg.hermitize(d_sigma), self.support, s) for s in self.family.sets
        ])


def _loewner(w: np.ndarray, p: np.ndarray) -> np.ndarray:
    """First divided differences (p_a − p_b)/(w_a − w_b) of p = e^{w}/Z."""
    dw = w[:, None] - w[None, :]
    pa, pb = p[:, None], p[None, :]
    near = np.abs(dw) < 1.0
    direct = (pa - pb) / np.where(near, 1.0, dw)
    small = np.where(near, dw, 0.0)
    ratio = np.where(small == 0, 1.0, np.expm1(small) / np.where(small == 0, 1.0, small))
    return np.where(near, pb * ratio, direct)


def warm_start(family: MarginalFamily) -> list[np.ndarray]:
    """λ_j = ln ρ̂_{X_j} − ln ρ̂_{X_j ∩ (X_1 ∪ … ∪ X_{j-1})}.

    ρ̂ is the target, mixed with weight 1e-10 towards the identity when it
    is rank deficient. The start is exact for Markov chains covered in
    chain order.
    """
    mats = []
    seen: SiteSet | None = None
    for x, t in zip(family.sets, family.targets):
        mixed = _mixed(t)
        lam = linalg.logm_psd(mixed.matrix)
        if seen is not None:
            overlap = x & seen
            if len(overlap):
                lam = lam - embed(
                    GlobalOperator(overlap, linalg.logm_psd(partial_trace(mixed, overlap).matrix)), x
                ).matrix
        mats.append(linalg.hermitize(lam))
        seen = x if seen is None else seen | x
    return mats


def _mixed(t: DensityMatrix) -> DensityMatrix:
    if t.eigenvalues()[0] > WARM_START_FLOOR:
        return t
    d = t.dim
    return DensityMatrix(t.support, (1 - WARM_START_MIX) * t.matrix + WARM_START_MIX * np.eye(d) / d)


def _polish(dual: _Dual, x: np.ndarray, tol: float) -> tuple[np.ndarray, int]:
    """Damped Newton steps accepted when the marginal mismatch shrinks."""
    steps = 0
    for _ in range(POLISH_MAX_STEPS):
        res = dual.residual(x)
        if res <= tol:
            break
        g = dual.jac(x)
        x0 = x
        op = LinearOperator(
            (x.size, x.size),
            matvec=lambda d: dual.hessp(x0, d) + 1e-12 * d,
            dtype=float,
        )
        step, _ = cg(op, -g, rtol=1e-12, maxiter=min(10 * x.size, CG_MAX_ITER))
        improved = False
        t = 1.0
        for _ in range(30):
            trial = x + t * step
            if dual.residual(trial) < res:
                x = trial
                improved = True
                break
            t *= 0.5
        steps += 1
        dual.history.append(dual.fun(x))
        if not improved:
            logger.debug("Newton polish stalled at residual %.3e", res)
            break
    return x, steps


def _gauge_fix(
    mats: list[np.ndarray],
    sets: Sequence[SiteSet],
) -> tuple[list[GlobalOperator], float]:
    """Traceless multipliers with single-site parts shared evenly.

    Returns the multipliers and the scalar removed, which moves into ln Z.
    """
    ops = []
    removed = 0.0
    for lam, x in zip(mats, sets):
        shift = float(np.trace(lam).real) / x.dim
        removed += shift
        ops.append(GlobalOperator(x, lam - shift * np.eye(x.dim), hermitian=True))

    sites = sorted({i for x in sets for i in x})
    for site in sites:
        members = [k for k, x in enumerate(sets) if site in x]
        if len(members) < 2:
            continue
        s = sets[members[0]].geometry.sites([site])
        parts = {k: restrict_normalized(ops[k], s) for k in members}
        share = sum((p.matrix for p in parts.values()), np.zeros((s.dim, s.dim), dtype=complex))
        share = share / len(members)
        for k in members:
            delta = GlobalOperator(s, share - parts[k].matrix, hermitian=True)
            ops[k] = ops[k] + delta
    return ops, removed


def maxent_state(
    family: MarginalFamily,
    tol: float | None = None,
    max_iter: int | None = None,
) -> MaxEntSolution:
    """The maximum-entropy state whose X_i marginals equal the targets."""
    tol = setting('MTLAB_SOLVER_TOL') if tol is None else tol
    max_iter = setting('MTLAB_SOLVER_MAX_ITER') if max_iter is None else max_iter
    if tol <= 0:
        raise DomainError("solver tolerance must be positive")

    dual = _Dual(family)
    x = dual.basis.pack(warm_start(family))
    dual.history.append(dual.fun(x))
    iterations = 0

    if dual.residual(x) > tol:
        def callback(intermediate_result):
            xk = intermediate_result.x
            dual.history.append(dual.fun(xk))
            if dual.residual(xk) <= tol:
                raise StopIteration

        result = optimize.minimize(
            dual.fun, x, jac=dual.jac, method='L-BFGS-B', callback=callback,
            options={'maxiter': max_iter, 'ftol': 0.0, 'gtol': 0.0, 'maxcor': 30},
        )
        x = result.x
        iterations = int(result.nit)
        if dual.residual(x) > tol:
            x, steps = _polish(dual, x, tol)
            iterations += steps

    residual = dual.residual(x)
    converged = residual <= tol
    if not converged:
        logger.warning(
            "max-ent solver stopped at residual %.3e > %.1e after %d iterations",
            residual, tol, iterations,
        )
    dual.evaluate(x)
    mats = dual.basis.unpack(x)
    multipliers, removed = _gauge_fix(mats, family.sets)
    sigma = DensityMatrix(family.support, dual.sigma / np.trace(dual.sigma).real)
    logger.debug("max-ent fit on %d sets: residual %.3e", len(family), residual)
    return MaxEntSolution(
        family=family,
        sigma_max=sigma,
        multipliers=tuple(multipliers),
        log_z=dual.log_z - removed,
        dual_value=dual.value,
        marginal_residual=residual,
        iterations=iterations,
        converged=converged,
        dual_history=tuple(dual.history),
    )


@dataclass(frozen=True, eq=False)
class FamilyGibbs:
    state: DensityMatrix
    log_z: float


def family_gibbs(multipliers: Sequence[GlobalOperator], support: SiteSet | None = None) -> FamilyGibbs:
    """ω = exp(Σ_i λ_i)/Z for local multipliers λ_i."""
    if not multipliers:
        raise DomainError("family_gibbs needs at least one multiplier")
    if support is None:
        support = multipliers[0].support
        for m in multipliers[1:]:
            support = support | m.support
    k = embed_sum([m.matrix for m in multipliers], [m.support for m in multipliers], support)
    w, v = linalg.eigh(k)
    log_z = float(logsumexp(w))
    rho = (v * np.exp(w - log_z)) @ v.conj().T
    return FamilyGibbs(DensityMatrix(support, rho), log_z)


@dataclass(frozen=True)
class PythagoreanRecord:
    residual: float
    finite: bool


def pythagorean_residual(
    rho: DensityMatrix,
    solution: MaxEntSolution,
    omega: DensityMatrix,
) -> PythagoreanRecord:
    """|S(ρ‖ω) − S(ρ‖σ_max) − S(σ_max‖ω)| for an in-family ω."""
    sigma = solution.sigma_max
    terms = [
        relative_entropy(rho, omega).value,
        relative_entropy(rho, sigma).value,
        relative_entropy(sigma, omega).value,
    ]
    if not all(math.isfinite(t) for t in terms):
        return PythagoreanRecord(math.inf, False)
    return PythagoreanRecord(abs(terms[0] - terms[1] - terms[2]), True)
