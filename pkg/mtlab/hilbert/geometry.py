"""Chain geometry and labelled site sets.

Site 0 is the slowest-varying tensor index everywhere in mtlab.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator

from mtlab.conf import setting
from mtlab.exceptions import DimensionCapError, DomainError


OPEN = 'open'
CLOSED = 'closed'
BOUNDARIES = (OPEN, CLOSED)


def check_dimension(dim: int) -> int:
    """Raise DimensionCapError if a dense matrix of size ``dim`` is too big."""
    cap = setting('MTLAB_MAX_DIM')
    if dim > cap:
        raise DimensionCapError(
            f"dimension {dim} exceeds MTLAB_MAX_DIM={cap}"
        )
    return dim


@dataclass(frozen=True)
class ChainGeometry:
    """A 1D chain of ``n`` sites with local dimensions and a boundary."""
    dims: tuple[int, ...]
    boundary: str = OPEN

    def __post_init__(self) -> None:
        object.__setattr__(self, 'dims', tuple(int(d) for d in self.dims))
        if not self.dims:
            raise DomainError("a chain needs at least one site")
        if any(d < 2 for d in self.dims):
            raise DomainError(f"every local dimension must be >= 2: {self.dims}")
        if self.boundary not in BOUNDARIES:
            raise DomainError(f"boundary must be one of {BOUNDARIES}")

    @classmethod
    def qubits(cls, n: int, boundary: str = OPEN) -> ChainGeometry:
        return cls((2,) * n, boundary)

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def closed(self) -> bool:
        return self.boundary == CLOSED

    @property
    def total_dim(self) -> int:
        return math.prod(self.dims)

    def sites(self, indices: Iterable[int]) -> SiteSet:
        return SiteSet(self, tuple(indices))

    def all_sites(self) -> SiteSet:
        return SiteSet(self, tuple(range(self.n)))

    def interval(self, start: int, stop: int) -> SiteSet:
        """Sites ``start .. stop-1``, wrapping around on a closed chain."""
        if self.closed:
            return SiteSet(self, tuple(i % self.n for i in range(start, stop)))
        return SiteSet(self, tuple(range(start, stop)))

    def neighbours(self, site: int) -> list[int]:
        out = []
        for j in (site - 1, site + 1):
            if self.closed:
                j %= self.n
            if 0 <= j < self.n and j != site:
                out.append(j)
        return sorted(set(out))

    def distance(self, i: int, j: int) -> int:
        d = abs(i - j)
        if self.closed:
            d = min(d, self.n - d)
        return d

    def to_json(self) -> dict:
        return {'n': self.n, 'dims': list(self.dims), 'boundary': self.boundary}

    @classmethod
    def from_json(cls, data: dict) -> ChainGeometry:
        dims = data.get('dims')
        if dims is None:
            dims = [2] * int(data['n'])
        elif isinstance(dims, int):
            dims = [dims] * int(data['n'])
        return cls(tuple(dims), data.get('boundary', OPEN))


@dataclass(frozen=True)
class SiteSet:
    """A sorted set of sites of a chain."""
    geometry: ChainGeometry
    indices: tuple[int, ...]

    def __post_init__(self) -> None:
        idx = tuple(int(i) for i in self.indices)
        if len(set(idx)) != len(idx):
            raise DomainError(f"duplicate sites in {idx}")
        if any(not 0 <= i < self.geometry.n for i in idx):
            raise DomainError(
                f"sites {idx} outside chain of {self.geometry.n} sites"
            )
        object.__setattr__(self, 'indices', tuple(sorted(idx)))

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices)

    def __len__(self) -> int:
        return len(self.indices)

    def __contains__(self, site: object) -> bool:
        return site in self.indices

    def __repr__(self) -> str:
        return f"SiteSet{list(self.indices)}"

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(self.geometry.dims[i] for i in self.indices)

    @property
    def dim(self) -> int:
        return math.prod(self.dims)

    @property
    def log_dim(self) -> float:
        """ln dim H of the region, written |X| in the bounds."""
        return math.log(self.dim) if self.indices else 0.0

    def _coerce(self, other: SiteSet | Iterable[int]) -> tuple[int, ...]:
        if isinstance(other, SiteSet):
            if other.geometry != self.geometry:
                raise DomainError("site sets belong to different chains")
            return other.indices
        return tuple(other)

    def __or__(self, other: SiteSet | Iterable[int]) -> SiteSet:
        return SiteSet(self.geometry, tuple(set(self.indices) | set(self._coerce(other))))

    def __and__(self, other: SiteSet | Iterable[int]) -> SiteSet:
        return SiteSet(self.geometry, tuple(set(self.indices) & set(self._coerce(other))))

    def __sub__(self, other: SiteSet | Iterable[int]) -> SiteSet:
        return SiteSet(self.geometry, tuple(set(self.indices) - set(self._coerce(other))))

    def issubset(self, other: SiteSet) -> bool:
        return set(self.indices) <= set(self._coerce(other))

    def isdisjoint(self, other: SiteSet) -> bool:
        return not set(self.indices) & set(self._coerce(other))

    def complement(self) -> SiteSet:
        return self.geometry.all_sites() - self

    def position(self, site: int) -> int:
        """Index of ``site`` within this set's tensor factors."""
        return self.indices.index(site)

    def arc(self) -> tuple[int, ...] | None:
        """Sites in chain order if the set is contiguous, else None.

        On a closed chain an arc may wrap around, e.g. (6, 7, 0, 1).
        """
        idx = self.indices
        if not idx:
            return ()
        n = self.geometry.n
        if all(b == a + 1 for a, b in zip(idx, idx[1:])):
            return idx
        if self.geometry.closed:
            # A wrapping arc has exactly one gap
            gaps = [k for k, (a, b) in enumerate(zip(idx, idx[1:])) if b != a + 1]
            if len(gaps) == 1 and idx[0] == 0 and idx[-1] == n - 1:
                k = gaps[0] + 1
                return idx[k:] + idx[:k]
        return None

    def is_contiguous(self) -> bool:
        return self.arc() is not None

    def grown(self, l: int) -> SiteSet:
        """Sites within distance ``l`` of the set."""
        if l < 0:
            raise DomainError("cannot grow a region by a negative distance")
        g = self.geometry
        return SiteSet(g, tuple(
            j for j in range(g.n) if any(g.distance(i, j) <= l for i in self.indices)
        ))

    def diameter(self) -> int:
        """Number of bonds spanned by the set along the chain."""
        arc = self.arc()
        if arc is not None:
            return max(len(arc) - 1, 0)
        return max(
            self.geometry.distance(i, j) for i in self.indices for j in self.indices
        )


def sites_distance(x: SiteSet, y: SiteSet) -> int:
    """Graph distance between two site sets."""
    if not len(x) or not len(y):
        raise DomainError("distance to an empty region is undefined")
    geometry = x.geometry
    return min(geometry.distance(i, j) for i in x for j in y)


def shields(a: SiteSet, b: SiteSet, c: SiteSet) -> bool:
    """True if every path from A to C in the chain graph passes through B."""
    if not (a.isdisjoint(b) and b.isdisjoint(c) and a.isdisjoint(c)):
        raise DomainError("regions must be disjoint")
    geometry = a.geometry
    blocked = set(b.indices)
    targets = set(c.indices)
    seen = set(a.indices)
    queue = deque(a.indices)
    while queue:
        site = queue.popleft()
        if site in targets:
            return False
        for j in geometry.neighbours(site):
            if j not in seen and j not in blocked:
                seen.add(j)
                queue.append(j)
    return True
