"""Reference states with known entropic structure."""

from __future__ import annotations

import numpy as np

from mtlab.exceptions import DomainError
from mtlab.hilbert import linalg
from mtlab.hilbert.geometry import ChainGeometry, SiteSet
from mtlab.hilbert.operators import DensityMatrix


def random_state(sites: SiteSet, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    return DensityMatrix(sites, linalg.random_density(sites.dim, rng, rank))


def canonical_markov_state(
    geometry: ChainGeometry,
    label: int,
    rng: np.random.Generator,
) -> DensityMatrix:
    """Σ_j p_j ρ^j_left ⊗ |j⟩⟨j|_label ⊗ ρ^j_right on an open chain.

    Sites left and right of ``label`` are conditionally independent given
    any region containing ``label``, so every such cut has zero CMI.
    """
    if not 0 < label < geometry.n - 1:
        raise DomainError("the label site must have neighbours on both sides")
    left = geometry.sites(range(label))
    right = geometry.sites(range(label + 1, geometry.n))
    d = geometry.dims[label]
    p = rng.dirichlet(np.ones(d))
    total = np.zeros((geometry.total_dim,) * 2, dtype=complex)
    for j in range(d):
        proj = np.zeros((d, d))
        proj[j, j] = 1.0
        total += p[j] * linalg.kron_all([
            linalg.random_density(left.dim, rng),
            proj,
            linalg.random_density(right.dim, rng),
        ])
    return DensityMatrix(geometry.all_sites(), total)


def full_rank_mix(rho: DensityMatrix, weight: float | None = None) -> DensityMatrix:
    """(1 − w)ρ + w·1/d with w = 2^{-(N-1)} for N = log₂ d by default."""
    d = rho.dim
    if weight is None:
        weight = 2.0 / d
    if not 0 <= weight <= 1:
        raise DomainError("mixing weight must lie in [0, 1]")
    return DensityMatrix(rho.support, (1 - weight) * rho.matrix + weight * np.eye(d) / d)
