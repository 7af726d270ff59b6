"""Entropic quantities in nats.

Every function returns values in nats; :class:`EntropyValue` carries the
conversion to bits for reporting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from mtlab.conf import setting
from mtlab.exceptions import DomainError
from mtlab.hilbert import linalg
from mtlab.hilbert.geometry import SiteSet
from mtlab.hilbert.operators import PSD_TOL, DensityMatrix, partial_trace


LN2 = math.log(2)
SUPPORT_TOL = 1e-10

OPEN = 'open'
CLOSED = 'closed'
MUTUAL_INFO = 'mutual-info'
UNIFORM = 'uniform'
CONVENTIONS = (OPEN, CLOSED, MUTUAL_INFO, UNIFORM)


@dataclass(frozen=True, order=True)
class EntropyValue:
    """An entropic quantity in nats (possibly +inf)."""
    value: float

    @property
    def bits(self) -> float:
        return self.value / LN2

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)

    def __float__(self) -> float:
        return self.value


def _spectrum(rho: DensityMatrix) -> np.ndarray:
    w = np.linalg.eigvalsh(rho.matrix)
    if w.size and w[0] < -PSD_TOL:
        raise DomainError(f"state has eigenvalue {w[0]:.3e}; not positive semidefinite")
    return w


def entropy(rho: DensityMatrix) -> EntropyValue:
    """von Neumann entropy −Σ λ ln λ over eigenvalues above the cutoff."""
    w = _spectrum(rho)
    w = w[w > setting('MTLAB_EIG_CUTOFF')]
    return EntropyValue(float(-np.sum(w * np.log(w))))


def relative_entropy(rho: DensityMatrix, sigma: DensityMatrix) -> EntropyValue:
    """S(ρ‖σ) = Tr ρ(ln ρ − ln σ); +inf when supp ρ ⊄ supp σ."""
    if rho.support != sigma.support:
        raise DomainError(f"supports differ: {rho.support} vs {sigma.support}")
    cutoff = setting('MTLAB_EIG_CUTOFF')
    _spectrum(rho)
    ws, vs = linalg.eigh(sigma.matrix)
    if ws.size and ws[0] < -PSD_TOL:
        raise DomainError(f"reference state has eigenvalue {ws[0]:.3e}")
    kernel = vs[:, ws <= cutoff]
    if kernel.size:
        leak = float(np.trace(kernel.conj().T @ rho.matrix @ kernel).real)
        if leak > SUPPORT_TOL:
            return EntropyValue(math.inf)
    log_sigma = linalg.logm_psd(sigma.matrix, pseudo_inverse=True, cutoff=cutoff)
    cross = float(np.trace(rho.matrix @ log_sigma).real)
    return EntropyValue(-entropy(rho).value - cross)


def _marginal_entropy(rho: DensityMatrix, region: SiteSet, cache: dict) -> float:
    key = region.indices
    if key not in cache:
        cache[key] = entropy(partial_trace(rho, region)).value if key else 0.0
    return cache[key]


def _check_regions(rho: DensityMatrix, *regions: SiteSet) -> None:
    seen: set[int] = set()
    for r in regions:
        if seen & set(r.indices):
            raise DomainError("regions overlap")
        seen |= set(r.indices)
    if not seen <= set(rho.support.indices):
        raise DomainError(f"regions are not inside the state support {rho.support}")


def cmi(
    rho: DensityMatrix,
    a: SiteSet,
    b: SiteSet,
    c: SiteSet,
    _cache: dict | None = None,
) -> EntropyValue:
    """I(A:C|B) = S(AB) + S(BC) − S(ABC) − S(B); sites outside ABC are traced."""
    _check_regions(rho, a, b, c)
    cache = {} if _cache is None else _cache
    s = lambda region: _marginal_entropy(rho, region, cache)  # noqa: E731
    return EntropyValue(s(a | b) + s(b | c) - s(a | b | c) - s(b))


def mutual_information(rho: DensityMatrix, a: SiteSet, c: SiteSet) -> EntropyValue:
    return cmi(rho, a, a - a, c)


def conditional_entropy(rho: DensityMatrix, a: SiteSet, b: SiteSet) -> EntropyValue:
    """S(A|B) = S(AB) − S(B)."""
    _check_regions(rho, a, b)
    cache: dict = {}
    return EntropyValue(
        _marginal_entropy(rho, a | b, cache) - _marginal_entropy(rho, b, cache)
    )


@dataclass(frozen=True)
class CutValue:
    cut_index: int
    cmi: float


@dataclass(frozen=True)
class MarkovGapReport:
    convention: str
    per_cut: tuple[CutValue, ...] = field(default_factory=tuple)

    @property
    def epsilon(self) -> float:
        return max((c.cmi for c in self.per_cut), default=0.0)

    def to_json(self) -> dict:
        return {
            'convention': self.convention,
            'per_cut': [
                {'cut_index': c.cut_index, 'cmi_nats': c.cmi} for c in self.per_cut
            ],
            'epsilon_nats': self.epsilon,
        }


def _union(blocks: Sequence[SiteSet]) -> SiteSet:
    out = blocks[0] - blocks[0]
    for b in blocks:
        out = out | b
    return out


def _open_scan(rho: DensityMatrix, blocks: Sequence[SiteSet], cache: dict) -> list[CutValue]:
    cuts = []
    for i in range(1, len(blocks) - 1):
        left = _union(blocks[:i])
        right = _union(blocks[i + 1:])
        cuts.append(CutValue(i, cmi(rho, left, blocks[i], right, cache).value))
    return cuts


def markov_gap_scan(
    rho: DensityMatrix,
    blocks: Sequence[SiteSet],
    convention: str = OPEN,
) -> MarkovGapReport:
    """Per-cut conditional mutual informations of a block chain.

    ``open`` scans I(A_1..A_{i-1} : A_{i+1}..A_n | A_i); ``closed`` scans
    I(A_i : rest | A_{i-1} A_{i+1}) cyclically; ``mutual-info`` scans
    I(A_i : rest); ``uniform`` takes, for each i, the open scan of the chain
    left after tracing A_i (read from A_{i+1} round to A_{i-1}).
    """
    if convention not in CONVENTIONS:
        raise DomainError(f"convention must be one of {CONVENTIONS}")
    n = len(blocks)
    if n < 3:
        raise DomainError("a Markov gap scan needs at least 3 blocks")
    whole = _union(blocks)
    if sum(len(b) for b in blocks) != len(whole) or whole != rho.support:
        raise DomainError("blocks must partition the state support")

    cache: dict = {}
    if convention == OPEN:
        return MarkovGapReport(convention, tuple(_open_scan(rho, blocks, cache)))

    cuts = []
    for i in range(n):
        a = blocks[i]
        if convention == UNIFORM:
            rest = [blocks[(i + k) % n] for k in range(1, n)]
            reduced = partial_trace(rho, _union(rest))
            inner = _open_scan(reduced, rest, {}) if len(rest) >= 3 else []
            cuts.append(CutValue(i, max((c.cmi for c in inner), default=0.0)))
            continue
        neighbours = blocks[(i - 1) % n] | blocks[(i + 1) % n]
        rest = whole - a - neighbours
        if convention == CLOSED:
            value = cmi(rho, a, neighbours, rest, cache).value
        else:
            value = cmi(rho, a, rest - rest, rest, cache).value
        cuts.append(CutValue(i, value))
    return MarkovGapReport(convention, tuple(cuts))


def binary_entropy(p: float) -> float:
    if p <= 0 or p >= 1:
        return 0.0
    return -p * math.log(p) - (1 - p) * math.log(1 - p)


def fannes_bound(delta: float, region_log_dim: float) -> float:
    """6·sqrt(δ)·|A|, the simplified continuity bound for S(A|B)."""
    if not 0 <= delta <= 1:
        raise DomainError("delta must lie in [0, 1]")
    return 6 * math.sqrt(delta) * region_log_dim


def fannes_sharp(delta: float, region_log_dim: float) -> float:
    """4·δ·|A| + 2·h₂(δ), valid for δ ≤ 1/2."""
    if not 0 <= delta <= 0.5:
        raise DomainError("delta must lie in [0, 1/2]")
    return 4 * delta * region_log_dim + 2 * binary_entropy(delta)


def pinsker_bound(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """½‖ρ − σ‖₁², a lower bound on S(ρ‖σ)."""
    return 0.5 * linalg.trace_norm(rho.matrix - sigma.matrix) ** 2
