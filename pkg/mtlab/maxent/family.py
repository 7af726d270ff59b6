"""Families of prescribed marginals and their Hermitian parametrisation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from mtlab.exceptions import DomainError
from mtlab.hilbert import linalg
from mtlab.hilbert.geometry import SiteSet
from mtlab.hilbert.operators import DensityMatrix, GlobalOperator, embed, partial_trace


CONSISTENCY_TOL = 1e-8


def _union(sets: Sequence[SiteSet]) -> SiteSet:
    out = sets[0]
    for s in sets[1:]:
        out = out | s
    return out


@dataclass(frozen=True, eq=False)
class MarginalFamily:
    """Site sets X_i with target states ρ_{X_i} that agree on overlaps."""
    sets: tuple[SiteSet, ...]
    targets: tuple[DensityMatrix, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, 'sets', tuple(self.sets))
        object.__setattr__(self, 'targets', tuple(self.targets))
        if not self.sets:
            raise DomainError("a marginal family needs at least one set")
        if len(self.sets) != len(self.targets):
            raise DomainError("every set needs exactly one target marginal")
        for x, t in zip(self.sets, self.targets):
            if t.support != x:
                raise DomainError(f"target on {t.support} does not match set {x}")
            t.validate()
        for i, (x, s) in enumerate(zip(self.sets, self.targets)):
            for y, t in zip(self.sets[i + 1:], self.targets[i + 1:]):
                overlap = x & y
                if not len(overlap):
                    continue
                gap = linalg.trace_norm(
                    partial_trace(s, overlap).matrix - partial_trace(t, overlap).matrix
                )
                if gap > CONSISTENCY_TOL:
                    raise DomainError(
                        f"targets on {x} and {y} disagree on {overlap} by {gap:.3e}"
                    )

    @classmethod
    def from_state(cls, rho: DensityMatrix, sets: Sequence[SiteSet]) -> MarginalFamily:
        return cls(tuple(sets), tuple(partial_trace(rho, x) for x in sets))

    @property
    def support(self) -> SiteSet:
        return _union(self.sets)

    def __len__(self) -> int:
        return len(self.sets)


def pair_family_sets(blocks: Sequence[SiteSet], closed: bool = False) -> list[SiteSet]:
    """{A_i A_{i+1}}, with the wrap-around pair on a ring."""
    n = len(blocks)
    sets = [blocks[i] | blocks[i + 1] for i in range(n - 1)]
    if closed and n > 2:
        sets.append(blocks[-1] | blocks[0])
    return sets


def triple_family_sets(blocks: Sequence[SiteSet]) -> list[SiteSet]:
    """{A_{i-1} A_i A_{i+1}} taken cyclically."""
    n = len(blocks)
    return [blocks[(i - 1) % n] | blocks[i] | blocks[(i + 1) % n] for i in range(n)]


class HermitianBasis:
    """Real coordinates for a list of Hermitian matrices.

    Each d×d block uses d diagonal entries, then the real parts and the
    imaginary parts of the strict upper triangle.
    """

    def __init__(self, dims: Sequence[int]) -> None:
        self.dims = tuple(dims)
        self._upper = [np.triu_indices(d, 1) for d in self.dims]
        self.sizes = [d * d for d in self.dims]
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)]).astype(int)

    @property
    def size(self) -> int:
        return int(self.offsets[-1])

    def unpack(self, x: np.ndarray) -> list[np.ndarray]:
        out = []
        for k, d in enumerate(self.dims):
            chunk = x[self.offsets[k]:self.offsets[k + 1]]
            iu = self._upper[k]
            m = len(iu[0])
            lam = np.diag(chunk[:d].astype(complex))
            lam[iu] = chunk[d:d + m] + 1j * chunk[d + m:]
            lam[(iu[1], iu[0])] = chunk[d:d + m] - 1j * chunk[d + m:]
            out.append(lam)
        return out

    def pack(self, mats: Sequence[np.ndarray]) -> np.ndarray:
        x = np.zeros(self.size)
        for k, (d, lam) in enumerate(zip(self.dims, mats)):
            iu = self._upper[k]
            m = len(iu[0])
            chunk = x[self.offsets[k]:self.offsets[k + 1]]
            chunk[:d] = np.diag(lam).real
            chunk[d:d + m] = lam[iu].real
            chunk[d + m:] = lam[iu].imag
        return x

    def gradient(self, mats: Sequence[np.ndarray]) -> np.ndarray:
        """Coordinates of the derivative of Σ Tr(G_k λ_k) with respect to x."""
        g = self.pack(mats)
        for k, d in enumerate(self.dims):
            m = len(self._upper[k][0])
            start = self.offsets[k] + d
            g[start:start + 2 * m] *= 2
        return g


def embed_sum(mats: Sequence[np.ndarray], sets: Sequence[SiteSet], support: SiteSet) -> np.ndarray:
    """Σ_k λ_k ⊗ 1 on ``support``."""
    total = np.zeros((support.dim, support.dim), dtype=complex)
    for lam, x in zip(mats, sets):
        total += embed(GlobalOperator(x, lam), support).matrix
    return total
