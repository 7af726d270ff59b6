"""Operators and density matrices tagged with the sites they act on."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from mtlab.exceptions import DomainError
from mtlab.hilbert import linalg
from mtlab.hilbert.geometry import ChainGeometry, SiteSet, check_dimension


HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-10

MATRIX_FUNCTIONS = ('exp', 'log', 'sqrt', 'sign', 'inv_sqrt')


@dataclass(frozen=True, eq=False)
class GlobalOperator:
    """A dense operator acting on ``support`` (identity elsewhere)."""
    support: SiteSet
    matrix: np.ndarray
    hermitian: bool = False

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        d = self.support.dim
        if m.shape != (d, d):
            raise DomainError(
                f"matrix of shape {m.shape} does not match support "
                f"{self.support} of dimension {d}"
            )
        check_dimension(d)
        if self.hermitian:
            scale = float(np.linalg.norm(m))
            if linalg.hermiticity_defect(m) > HERMITIAN_TOL * max(scale, 1e-300):
                raise DomainError("operator flagged Hermitian is not Hermitian")
            m = linalg.hermitize(m)
        m.setflags(write=False)
        object.__setattr__(self, 'matrix', m)

    @property
    def geometry(self) -> ChainGeometry:
        return self.support.geometry

    @property
    def dim(self) -> int:
        return self.support.dim

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def norm(self) -> float:
        """Operator norm."""
        return linalg.op_norm(self.matrix)

    def dagger(self) -> GlobalOperator:
        return GlobalOperator(self.support, self.matrix.conj().T, self.hermitian)

    def __add__(self, other: GlobalOperator) -> GlobalOperator:
        support = self.support | other.support
        a, b = embed(self, support), embed(other, support)
        return GlobalOperator(
            support, a.matrix + b.matrix, self.hermitian and other.hermitian
        )

    def __sub__(self, other: GlobalOperator) -> GlobalOperator:
        return self + other.scaled(-1.0)

    def __matmul__(self, other: GlobalOperator) -> GlobalOperator:
        support = self.support | other.support
        a, b = embed(self, support), embed(other, support)
        return GlobalOperator(support, a.matrix @ b.matrix)

    def scaled(self, factor: complex) -> GlobalOperator:
        hermitian = self.hermitian and complex(factor).imag == 0
        return GlobalOperator(self.support, factor * self.matrix, hermitian)


class DensityMatrix(GlobalOperator):
    """A PSD operator of unit trace.

    ``normalized=False`` admits sub-normalised outputs of trace-non-increasing
    maps; the trace check is then skipped.
    """

    def __init__(
        self,
        support: SiteSet,
        matrix: np.ndarray,
        normalized: bool = True,
    ) -> None:
        super().__init__(support, matrix, hermitian=True)
        object.__setattr__(self, 'normalized', normalized)
        if normalized:
            tr = self.trace().real
            if abs(tr - 1.0) > TRACE_TOL:
                raise DomainError(f"density matrix has trace {tr!r}")

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def validate(self) -> DensityMatrix:
        """Check positivity; returns self so it can be chained."""
        lowest = self.eigenvalues()[0]
        if lowest < -PSD_TOL:
            raise DomainError(f"density matrix has eigenvalue {lowest:.3e}")
        return self

    def normalize(self) -> DensityMatrix:
        return DensityMatrix(self.support, self.matrix / self.trace().real)

    @classmethod
    def maximally_mixed(cls, support: SiteSet) -> DensityMatrix:
        d = support.dim
        return cls(support, np.eye(d) / d)

    @classmethod
    def pure(cls, support: SiteSet, vector: np.ndarray) -> DensityMatrix:
        psi = np.asarray(vector, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(support, np.outer(psi, psi.conj()))

    @classmethod
    def product(cls, *states: DensityMatrix) -> DensityMatrix:
        """Tensor product of states on disjoint supports."""
        support = states[0].support
        for s in states[1:]:
            if not support.isdisjoint(s.support):
                raise DomainError("product of states with overlapping supports")
            support = support | s.support
        order = [i for s in states for i in s.support]
        dims = [support.geometry.dims[i] for i in order]
        m = linalg.kron_all([s.matrix for s in states])
        perm = [order.index(i) for i in support]
        return cls(support, linalg.permute_factors(m, dims, perm))


def embed(op: GlobalOperator, onto: SiteSet) -> GlobalOperator:
    """Extend ``op`` by the identity to the larger support ``onto``."""
    if op.support.geometry != onto.geometry:
        raise DomainError("operator and target live on different chains")
    if not op.support.issubset(onto):
        raise DomainError(f"support {op.support} is not a subset of {onto}")
    if op.support.indices == onto.indices:
        return op
    check_dimension(onto.dim)
    rest = onto - op.support
    order = list(op.support) + list(rest)
    dims = [onto.geometry.dims[i] for i in order]
    m = np.kron(op.matrix, np.eye(rest.dim))
    perm = [order.index(i) for i in onto]
    return GlobalOperator(
        onto, linalg.permute_factors(m, dims, perm), op.hermitian
    )


def tensor_embed(op: GlobalOperator, target: ChainGeometry) -> GlobalOperator:
    """Embed ``op`` into the full chain ``target``."""
    return embed(op, target.all_sites())


def reduce_matrix(m: np.ndarray, support: SiteSet, keep: SiteSet) -> np.ndarray:
    """Partial trace of a matrix on ``support`` down to ``keep``."""
    if not keep.issubset(support):
        raise DomainError(f"{keep} is not a subset of {support}")
    if keep.indices == support.indices:
        return m
    traced = support - keep
    order = list(keep) + list(traced)
    dims = [support.geometry.dims[i] for i in support]
    perm = [support.position(i) for i in order]
    t = linalg.permute_factors(m, dims, perm)
    return linalg.trace_out_last(t, keep.dim, traced.dim)


def reduce_operator(op: GlobalOperator, keep: SiteSet) -> GlobalOperator:
    """Partial trace of an arbitrary operator (no normalisation)."""
    return GlobalOperator(
        keep, reduce_matrix(op.matrix, op.support, keep), op.hermitian
    )


def partial_trace(state: DensityMatrix, keep: SiteSet) -> DensityMatrix:
    """Reduced state of ``state`` on ``keep``."""
    m = reduce_matrix(state.matrix, state.support, keep)
    return DensityMatrix(keep, m, normalized=state.normalized)


def restrict_normalized(op: GlobalOperator, region: SiteSet) -> GlobalOperator:
    """Tr_{region^c}(op) / dim(region^c): the unital restriction to ``region``."""
    reduced = reduce_operator(op, region)
    factor = op.support.dim // max(region.dim, 1)
    return reduced.scaled(1.0 / factor)


def hermitian_fn(
    op: GlobalOperator,
    fn: str,
    scale: float = 1.0,
    pseudo_inverse: bool = False,
    cutoff: float | None = None,
) -> GlobalOperator:
    """Apply ``fn`` to the eigenvalues of ``scale * op``.

    ``fn`` is one of exp, log, sqrt, sign or inv_sqrt. For log the
    pseudo-inverse flag takes the logarithm on the support; inv_sqrt is
    always taken on the support.
    """
    if fn not in MATRIX_FUNCTIONS:
        raise DomainError(f"unknown matrix function {fn!r}")
    if not op.hermitian and linalg.hermiticity_defect(op.matrix) > HERMITIAN_TOL * max(
        float(np.linalg.norm(op.matrix)), 1e-300
    ):
        raise DomainError(f"{fn} needs a Hermitian operator")
    m = scale * op.matrix
    if fn == 'exp':
        out = linalg.expm_h(m)
    elif fn == 'log':
        out = linalg.logm_psd(m, pseudo_inverse=pseudo_inverse, cutoff=cutoff)
    elif fn == 'sqrt':
        out = linalg.sqrtm_psd(m)
    elif fn == 'inv_sqrt':
        out = linalg.inv_sqrtm_psd(m, cutoff=cutoff)
    else:
        out = linalg.sign_h(m)
    return GlobalOperator(op.support, out, hermitian=True)


class StateMetrics(NamedTuple):
    trace_distance: float
    fidelity: float


def state_metrics(a: DensityMatrix, b: DensityMatrix) -> StateMetrics:
    """Unhalved trace distance and fidelity of two states on one support."""
    if a.support != b.support:
        raise DomainError(f"supports differ: {a.support} vs {b.support}")
    return StateMetrics(
        trace_distance=linalg.trace_norm(a.matrix - b.matrix),
        fidelity=linalg.fidelity(a.matrix, b.matrix),
    )


def trace_distance(a: GlobalOperator, b: GlobalOperator) -> float:
    """‖a − b‖₁ after embedding both on the union of supports."""
    support = a.support | b.support
    return linalg.trace_norm(embed(a, support).matrix - embed(b, support).matrix)


def ghz_state(geometry: ChainGeometry) -> DensityMatrix:
    """(|0…0⟩ + |1…1⟩)/√2 for qubit chains."""
    d = geometry.total_dim
    psi = np.zeros(d, dtype=complex)
    psi[0] = psi[-1] = 1.0
    return DensityMatrix.pure(geometry.all_sites(), psi)

