"""Short-range Hamiltonians on spin chains and the preset models."""

from __future__ import annotations

import logging
from collections import OrderedDict
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Callable

import numpy as np

from mtlab.exceptions import DomainError
from mtlab.hilbert import linalg, serialization
from mtlab.hilbert.geometry import ChainGeometry, SiteSet
from mtlab.hilbert.operators import GlobalOperator, embed


logger = logging.getLogger(__name__)

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    """H = Σ_i h_i with Hermitian terms on contiguous supports.

    ``region`` is the set of sites the Hamiltonian acts on; it is the whole
    chain unless the Hamiltonian was obtained by :meth:`restrict`.
    ``preset`` records how a preset model was built, for the JSON schema.
    """
    geometry: ChainGeometry
    terms: tuple[GlobalOperator, ...]
    region: SiteSet | None = None
    preset: dict | None = None

    def __post_init__(self) -> None:
        region = self.region if self.region is not None else self.geometry.all_sites()
        object.__setattr__(self, 'region', region)
        object.__setattr__(self, 'terms', tuple(self.terms))
        for term in self.terms:
            if term.geometry != self.geometry:
                raise DomainError("Hamiltonian term lives on a different chain")
            if not term.hermitian:
                raise DomainError(f"term on {term.support} is not flagged Hermitian")
            if not term.support.is_contiguous():
                raise DomainError(f"term support {term.support} is not contiguous")
            if not term.support.issubset(region):
                raise DomainError(f"term support {term.support} is outside {region}")

    @property
    def support(self) -> SiteSet:
        assert self.region is not None
        return self.region

    @property
    def range(self) -> int:
        """r: the largest support diameter of a term."""
        return max((t.support.diameter() for t in self.terms), default=0)

    @property
    def strength(self) -> float:
        """J: the largest operator norm of a term."""
        return max((t.norm() for t in self.terms), default=0.0)

    @cached_property
    def operator(self) -> GlobalOperator:
        """The assembled Hermitian operator on :attr:`support`."""
        support = self.support
        total = np.zeros((support.dim, support.dim), dtype=complex)
        for term in self.terms:
            total += embed(term, support).matrix
        return GlobalOperator(support, total, hermitian=True)

    def restrict(self, sites: SiteSet) -> Hamiltonian:
        """H_X: the terms supported entirely inside ``sites``."""
        if not sites.issubset(self.support):
            raise DomainError(f"{sites} is not inside the Hamiltonian support {self.support}")
        kept = tuple(t for t in self.terms if t.support.issubset(sites))
        return Hamiltonian(self.geometry, kept, sites, self.preset)

    def without(self, terms: list[GlobalOperator]) -> Hamiltonian:
        """The Hamiltonian with the given terms (by identity) removed."""
        drop = {id(t) for t in terms}
        kept = tuple(t for t in self.terms if id(t) not in drop)
        return Hamiltonian(self.geometry, kept, self.region, self.preset)

    def to_json(self) -> dict:
        data: dict[str, Any] = dict(self.geometry.to_json())
        data['terms'] = [
            {'sites': list(t.support.indices), 'matrix': serialization.to_json(t.matrix)}
            for t in self.terms
        ]
        if self.region != self.geometry.all_sites():
            data['region'] = list(self.support.indices)
        if self.preset is not None:
            data['preset'] = self.preset
        return data

    @classmethod
    def from_json(cls, data: dict) -> Hamiltonian:
        geometry = ChainGeometry.from_json(data)
        terms = tuple(
            GlobalOperator(
                geometry.sites(t['sites']),
                serialization.from_json(t['matrix']),
                hermitian=True,
            )
            for t in data.get('terms', [])
        )
        region = geometry.sites(data['region']) if 'region' in data else None
        return cls(geometry, terms, region, data.get('preset'))


def restrict_hamiltonian(h: Hamiltonian, sites: SiteSet) -> Hamiltonian:
    return h.restrict(sites)


def local_term(geometry: ChainGeometry, sites: list[int], matrix: np.ndarray) -> GlobalOperator:
    return GlobalOperator(geometry.sites(sites), matrix, hermitian=True)


def bonds(geometry: ChainGeometry) -> list[tuple[int, int]]:
    """Nearest-neighbour pairs, including the wrap-around bond on a ring."""
    out = [(i, i + 1) for i in range(geometry.n - 1)]
    if geometry.closed and geometry.n > 2:
        out.append((0, geometry.n - 1))
    return out


PRESETS: OrderedDict[str, Callable[..., list[GlobalOperator]]] = OrderedDict()


def preset(name: str, description: str) -> Callable:
    """Decorator to register a preset model."""
    def dec(f):
        PRESETS[name] = f
        f.preset_name = name
        f.description = description
        return f
    return dec


def _require_qubits(geometry: ChainGeometry, name: str) -> None:
    if any(d != 2 for d in geometry.dims):
        raise DomainError(f"the {name} preset is defined for qubit chains")


@preset('tfim', "Transverse-field Ising: -J Z_i Z_{i+1} bonds and -g X_i fields.")
def tfim(geometry: ChainGeometry, rng: np.random.Generator, g: float = 1.0, J: float = 1.0):
    _require_qubits(geometry, 'tfim')
    zz = np.kron(PAULI_Z, PAULI_Z)
    terms = [local_term(geometry, [i, j], -J * zz) for i, j in bonds(geometry)]
    if g:
        terms += [local_term(geometry, [i], -g * PAULI_X) for i in range(geometry.n)]
    return terms


@preset('heisenberg', "XXZ Heisenberg bonds J(XX + YY + delta ZZ) with an optional Z field.")
def heisenberg(
    geometry: ChainGeometry,
    rng: np.random.Generator,
    J: float = 1.0,
    delta: float = 1.0,
    field: float = 0.0,
):
    _require_qubits(geometry, 'heisenberg')
    bond = J * (np.kron(PAULI_X, PAULI_X) + np.kron(PAULI_Y, PAULI_Y)
                + delta * np.kron(PAULI_Z, PAULI_Z))
    terms = [local_term(geometry, [i, j], bond) for i, j in bonds(geometry)]
    if field:
        terms += [local_term(geometry, [i], field * PAULI_Z) for i in range(geometry.n)]
    return terms


@preset('random-nn', "Seeded random nearest-neighbour bonds with operator norm scale <= 1.")
def random_nn(geometry: ChainGeometry, rng: np.random.Generator, scale: float = 1.0):
    if not 0 < scale <= 1:
        raise DomainError("random-nn scale must lie in (0, 1]")
    return [
        local_term(
            geometry, [i, j],
            linalg.random_hermitian(geometry.dims[i] * geometry.dims[j], rng, scale),
        )
        for i, j in bonds(geometry)
    ]


@preset('classical-ising', "Commuting Ising chain: -J Z_i Z_{i+1} bonds and -h Z_i fields.")
def classical_ising(
    geometry: ChainGeometry,
    rng: np.random.Generator,
    J: float = 1.0,
    h: float = 0.5,
):
    _require_qubits(geometry, 'classical-ising')
    zz = np.kron(PAULI_Z, PAULI_Z)
    terms = [local_term(geometry, [i, j], -J * zz) for i, j in bonds(geometry)]
    if h:
        terms += [local_term(geometry, [i], -h * PAULI_Z) for i in range(geometry.n)]
    return terms


@preset('decoupled', "Seeded random on-site fields and no interactions.")
def decoupled(geometry: ChainGeometry, rng: np.random.Generator, scale: float = 1.0):
    return [
        local_term(geometry, [i], linalg.random_hermitian(geometry.dims[i], rng, scale))
        for i in range(geometry.n)
    ]


def build_preset(
    name: str,
    geometry: ChainGeometry,
    params: dict | None = None,
    seed: int = 0,
) -> Hamiltonian:
    """Instantiate a registered preset model."""
    try:
        factory = PRESETS[name]
    except KeyError:
        raise DomainError(
            f"unknown preset {name!r}; choose one of {', '.join(PRESETS)}"
        ) from None
    params = dict(params or {})
    try:
        terms = factory(geometry, np.random.default_rng(seed), **params)
    except TypeError as e:
        raise DomainError(f"bad parameters for preset {name!r}: {e}") from None
    logger.debug("built preset %s on %d sites with %d terms", name, geometry.n, len(terms))
    return Hamiltonian(
        geometry, tuple(terms),
        preset={'name': name, 'params': params, 'seed': seed},
    )
