"""Certificates tying the Markov gap to local Gibbs approximations.

Each certificate measures the Markov gap of a block chain, fits the
maximum-entropy state of the appropriate local marginal family and checks
the resulting inequality with a slack derived from the solver residual.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from mtlab.conf import setting
from mtlab.exceptions import DomainError
from mtlab.hilbert import linalg
from mtlab.hilbert.geometry import SiteSet, shields
from mtlab.hilbert.operators import DensityMatrix, GlobalOperator, embed, partial_trace
from mtlab.info.measures import (
    CLOSED, MUTUAL_INFO, OPEN, UNIFORM, cmi, entropy, markov_gap_scan,
    relative_entropy,
)
from mtlab.maxent.family import MarginalFamily, pair_family_sets, triple_family_sets
from mtlab.maxent.solver import MaxEntSolution, maxent_state


logger = logging.getLogger(__name__)

IDENTITY_TOL = 1e-6
RANK_CUTOFF = 1e-12


@dataclass(frozen=True, eq=False)
class ChainCertificate:
    """Outcome of an open-chain or closed-chain certificate.

    ``entropy_gap`` is S(σ_max) − S(ρ); ``rel_entropy`` is S(ρ‖σ_max), the
    distance to the solver's in-family Gibbs state. The two agree whenever
    the marginals match.
    """
    kind: str
    epsilon: float
    epsilon_prime: float
    entropy_gap: float
    bound: float
    rel_entropy: float
    total_bound: float
    slack: float
    identity_residual: float
    solution: MaxEntSolution

    @property
    def gap_ok(self) -> bool:
        return self.entropy_gap <= self.bound + self.slack

    @property
    def rel_ok(self) -> bool:
        return self.rel_entropy <= self.total_bound + self.slack

    @property
    def identity_ok(self) -> bool:
        return self.identity_residual <= IDENTITY_TOL

    @property
    def passed(self) -> bool:
        return self.solution.converged and self.gap_ok and self.rel_ok and self.identity_ok

    def to_json(self) -> dict:
        return {
            'kind': self.kind,
            'epsilon_nats': self.epsilon,
            'epsilon_prime_nats': self.epsilon_prime,
            'entropy_gap_nats': self.entropy_gap,
            'bound_nats': self.bound,
            'rel_entropy_to_witness_nats': self.rel_entropy,
            'total_bound_nats': self.total_bound,
            'pass': self.passed,
            'iterations': self.solution.iterations,
            'residual': self.solution.marginal_residual,
        }


def _fit(
    rho: DensityMatrix,
    sets: Sequence[SiteSet],
    tol: float | None,
    max_iter: int | None,
) -> tuple[MaxEntSolution, float, float, float, float]:
    tol = setting('MTLAB_SOLVER_TOL') if tol is None else tol
    solution = maxent_state(MarginalFamily.from_state(rho, sets), tol, max_iter)
    gap = entropy(solution.sigma_max).value - entropy(rho).value
    rel = relative_entropy(rho, solution.sigma_max).value
    slack = 10 * max(tol, solution.marginal_residual)
    return solution, gap, rel, slack, abs(rel - gap)


def thm1_certificate(
    rho: DensityMatrix,
    blocks: Sequence[SiteSet],
    tol: float | None = None,
    max_iter: int | None = None,
) -> ChainCertificate:
    """S(σ_max) − S(ρ) ≤ (n−1)ε on an open chain of n blocks.

    ε is the open-convention Markov gap and σ_max the max-ent state with the
    adjacent-pair marginals of ρ; S(ρ‖σ_max) is checked against n·ε.
    """
    n = len(blocks)
    epsilon = markov_gap_scan(rho, blocks, OPEN).epsilon
    solution, gap, rel, slack, identity = _fit(rho, pair_family_sets(blocks), tol, max_iter)
    cert = ChainCertificate(
        'open', epsilon, 0.0, gap, (n - 1) * epsilon, rel, n * epsilon,
        slack, identity, solution,
    )
    logger.info(
        "open-chain certificate: eps=%.3e gap=%.3e rel=%.3e pass=%s",
        epsilon, gap, rel, cert.passed,
    )
    return cert


THM2_VARIANTS = {'i': MUTUAL_INFO, 'ii': UNIFORM}


def thm2_certificate(
    rho: DensityMatrix,
    blocks: Sequence[SiteSet],
    variant: str = 'i',
    tol: float | None = None,
    max_iter: int | None = None,
) -> ChainCertificate:
    """S(ρ‖ω_fit) ≤ n·max(ε, ε′) on a closed chain of n ≥ 4 blocks.

    ε is the closed-convention gap and ε′ the variant's extra assumption:
    the single-block mutual information for variant ``i``, the largest gap
    after tracing one block for variant ``ii``. The fit uses the cyclic
    triple family.
    """
    if variant not in THM2_VARIANTS:
        raise DomainError(f"variant must be one of {sorted(THM2_VARIANTS)}")
    n = len(blocks)
    if n < 4:
        raise DomainError("the closed-chain certificate needs at least 4 blocks")
    epsilon = markov_gap_scan(rho, blocks, CLOSED).epsilon
    epsilon_prime = markov_gap_scan(rho, blocks, THM2_VARIANTS[variant]).epsilon
    solution, gap, rel, slack, identity = _fit(rho, triple_family_sets(blocks), tol, max_iter)
    scale = max(epsilon, epsilon_prime)
    cert = ChainCertificate(
        f'closed-{variant}', epsilon, epsilon_prime, gap, n * scale, rel, n * scale,
        slack, identity, solution,
    )
    logger.info(
        "closed-chain certificate (%s): eps=%.3e eps'=%.3e rel=%.3e pass=%s",
        variant, epsilon, epsilon_prime, rel, cert.passed,
    )
    return cert


@dataclass(frozen=True, eq=False)
class LocalReconstruction:
    """H_rec and π̃ = e^{−H_rec}/Z built from a state's local marginals."""
    h_rec: GlobalOperator
    pi: DensityMatrix
    log_z: float
    max_term_norm: float


def _log_marginal(rho: DensityMatrix, region: SiteSet, support: SiteSet) -> np.ndarray:
    marginal = partial_trace(rho, region)
    if marginal.eigenvalues()[0] <= RANK_CUTOFF:
        raise DomainError(
            f"marginal on {region} is rank deficient; mix the state with "
            "full_rank_mix() before reconstructing"
        )
    return embed(GlobalOperator(region, linalg.logm_psd(marginal.matrix), hermitian=True), support).matrix


def local_reconstruction(
    rho_tilde: DensityMatrix,
    blocks: Sequence[SiteSet],
    closed: bool = True,
) -> LocalReconstruction:
    """Local Hamiltonian from the logarithms of neighbouring marginals.

    Closed: H_rec = −Σ_i (ln ρ̃_{X_i X_{i+1}} − ln ρ̃_{X_i}) cyclically.
    Open: H_rec = −(Σ_i ln ρ̃_{X_i X_{i+1}} − Σ_{interior} ln ρ̃_{X_i}), which
    reproduces Markov chains exactly.
    """
    n = len(blocks)
    if n < 2:
        raise DomainError("local reconstruction needs at least 2 blocks")
    support = rho_tilde.support
    terms = []
    if closed:
        for i in range(n):
            pair = blocks[i] | blocks[(i + 1) % n]
            terms.append(
                _log_marginal(rho_tilde, pair, support) - _log_marginal(rho_tilde, blocks[i], support)
            )
    else:
        terms.append(_log_marginal(rho_tilde, blocks[0] | blocks[1], support))
        for i in range(1, n - 1):
            terms.append(
                _log_marginal(rho_tilde, blocks[i] | blocks[i + 1], support)
                - _log_marginal(rho_tilde, blocks[i], support)
            )
    h_rec = -sum(terms, np.zeros((support.dim, support.dim), dtype=complex))
    w, v = linalg.eigh(h_rec)
    log_z = float(logsumexp(-w))
    pi = (v * np.exp(-w - log_z)) @ v.conj().T
    return LocalReconstruction(
        GlobalOperator(support, h_rec, hermitian=True),
        DensityMatrix(support, pi),
        log_z,
        max(linalg.op_norm(t) for t in terms),
    )


@dataclass(frozen=True, eq=False)
class FamilyDistance:
    min_rel_entropy: float
    direct_rel_entropy: float
    witness: MaxEntSolution


def gibbs_family_distance(
    rho: DensityMatrix,
    blocks: Sequence[SiteSet],
    closed: bool | None = None,
    tol: float | None = None,
    max_iter: int | None = None,
) -> FamilyDistance:
    """min over nearest-neighbour Gibbs states ω of S(ρ‖ω), as S(σ_max) − S(ρ).

    The family is generated by adjacent block pairs; on a ring (the default
    when the chain is closed) the wrap-around pair is included.
    """
    if closed is None:
        closed = rho.geometry.closed
    sets = pair_family_sets(blocks, closed=closed)
    solution = maxent_state(MarginalFamily.from_state(rho, sets), tol, max_iter)
    min_rel = entropy(solution.sigma_max).value - entropy(rho).value
    direct = relative_entropy(rho, solution.sigma_max).value
    return FamilyDistance(min_rel, direct, solution)


@dataclass(frozen=True, eq=False)
class Thm3Record:
    delta: float
    cmi: float
    min_rel_entropy: float
    epsilon: float
    envelope: float
    fit_constant: float
    precondition_met: bool
    witness: MaxEntSolution

    def to_json(self) -> dict:
        return {
            'delta_nats': self.delta,
            'cmi_nats': self.cmi,
            'min_rel_entropy_nats': self.min_rel_entropy,
            'epsilon_nats': self.epsilon,
            'envelope': self.envelope,
            'fit_constant': self.fit_constant,
            'precondition_met': self.precondition_met,
        }


def thm3_delta(
    rho: DensityMatrix,
    blocks: Sequence[SiteSet],
    a: SiteSet,
    b: SiteSet,
    c: SiteSet,
    epsilon: float | None = None,
    tol: float | None = None,
    max_iter: int | None = None,
) -> Thm3Record:
    """δ = min_ω S(ρ‖ω) − I(A:C|B) with the N^{3/2} ε^{1/32} envelope recorded.

    ε defaults to the measured uniform gap (the largest Markov gap after
    tracing any single block); ``precondition_met`` reports whether the
    measured gap is within the caller's ε.
    """
    if not shields(a, b, c):
        raise DomainError("B must shield A from C")
    measured = markov_gap_scan(rho, blocks, UNIFORM).epsilon
    eps = measured if epsilon is None else epsilon
    value = cmi(rho, a, b, c).value
    distance = gibbs_family_distance(rho, blocks, tol=tol, max_iter=max_iter)
    delta = distance.min_rel_entropy - value
    n_sites = len(rho.support)
    envelope = n_sites ** 1.5 * eps ** (1 / 32) if eps > 0 else 0.0
    fit_constant = abs(delta) / envelope if envelope > 0 else math.nan
    return Thm3Record(
        delta, value, distance.min_rel_entropy, eps, envelope, fit_constant,
        measured <= eps + 1e-12, distance.witness,
    )
