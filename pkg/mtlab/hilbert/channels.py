"""Completely positive maps between labelled site sets.

A channel consumes the sites in ``input`` and produces the sites in
``output``; every other site of the state it is applied to is carried
through by the identity. Leaves hold Kraus operators; sums, compositions,
scalings and identity extensions are kept factored so large recovery maps
never need a flat Kraus list. The flat list and the Choi matrix are
derived on demand for small channels.
"""

from __future__ import annotations

import math
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from mtlab.conf import setting
from mtlab.exceptions import DimensionCapError, DomainError
from mtlab.hilbert import linalg
from mtlab.hilbert.geometry import SiteSet
from mtlab.hilbert.operators import (
    TRACE_TOL, DensityMatrix, GlobalOperator, embed,
)


TP = 'tp'
TRACE_NON_INCREASING = 'tni'
CP = 'cp'
KINDS = (TP, TRACE_NON_INCREASING, CP)

TP_TOL = 1e-9
CHOI_TOL = 1e-10


def _reorder(
    m: np.ndarray,
    support: SiteSet,
    front: SiteSet,
    back: SiteSet,
) -> np.ndarray:
    """Permute ``m`` on ``support`` into (front, back) factor order."""
    dims = support.dims
    order = list(front) + list(back)
    return linalg.permute_factors(m, dims, [support.position(i) for i in order])


def _restore(
    m: np.ndarray,
    front: SiteSet,
    back: SiteSet,
) -> tuple[np.ndarray, SiteSet]:
    """Inverse of :func:`_reorder` for a (front, back) ordered matrix."""
    support = front | back
    order = list(front) + list(back)
    dims = [support.geometry.dims[i] for i in order]
    perm = [order.index(i) for i in support]
    return linalg.permute_factors(m, dims, perm), support


class QuantumChannel:
    """Base class: a CP map from ``input`` sites to ``output`` sites."""

    input: SiteSet
    output: SiteSet
    kind: str = CP

    def _apply(self, m: np.ndarray, support: SiteSet) -> tuple[np.ndarray, SiteSet]:
        raise NotImplementedError

    def _adjoint(self, m: np.ndarray, support: SiteSet) -> tuple[np.ndarray, SiteSet]:
        raise NotImplementedError

    def _check_kind(self, kind: str) -> str:
        if kind not in KINDS:
            raise DomainError(f"channel kind must be one of {KINDS}")
        return kind

    @property
    def d_in(self) -> int:
        return self.input.dim

    @property
    def d_out(self) -> int:
        return self.output.dim

    def apply(self, state: GlobalOperator) -> GlobalOperator:
        """Schrödinger picture; sites outside ``input`` are carried along."""
        if not self.input.issubset(state.support):
            raise DomainError(
                f"channel input {self.input} not in state support {state.support}"
            )
        m, support = self._apply(state.matrix, state.support)
        if isinstance(state, DensityMatrix):
            tr = float(np.trace(m).real)
            return DensityMatrix(support, m, normalized=abs(tr - 1.0) <= TRACE_TOL)
        return GlobalOperator(support, m)

    def adjoint(self, op: GlobalOperator) -> GlobalOperator:
        """Heisenberg picture: Σ K† X K."""
        if not self.output.issubset(op.support):
            op = embed(op, op.support | self.output)
        m, support = self._adjoint(op.matrix, op.support)
        return GlobalOperator(support, m)

    def effect(self) -> np.ndarray:
        """Σ K†K as a matrix on ``input``."""
        identity = GlobalOperator(self.output, np.eye(self.d_out))
        out = self.adjoint(identity)
        return embed(out, self.input).matrix if out.support != self.input else out.matrix

    def then(self, other: QuantumChannel) -> ComposedChannel:
        """``other`` after ``self``."""
        return ComposedChannel(self, other)

    def __add__(self, other: QuantumChannel) -> SummedChannel:
        return SummedChannel([self, other])

    def scaled(self, factor: float, kind: str = CP) -> ScaledChannel:
        return ScaledChannel(self, factor, kind)

    def widened(self, sites: SiteSet) -> QuantumChannel:
        """Extend by the identity on ``sites`` (which may overlap the input)."""
        extra = sites - self.input - self.output
        if not len(extra):
            return self
        return ExtendedChannel(self, extra)

    @property
    def kraus(self) -> list[np.ndarray]:
        return kraus_from_choi(choi_matrix(self), self.d_in, self.d_out)

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.input} -> {self.output} ({self.kind})>"


class KrausChannel(QuantumChannel):
    """Leaf channel given by Kraus operators of shape (d_out, d_in)."""

    def __init__(
        self,
        input: SiteSet,
        output: SiteSet,
        kraus: Iterable[np.ndarray],
        kind: str = TP,
    ) -> None:
        self.input = input
        self.output = output
        self.kind = self._check_kind(kind)
        ops = [np.asarray(k, dtype=complex) for k in kraus]
        if not ops:
            raise DomainError("a channel needs at least one Kraus operator")
        for k in ops:
            if k.shape != (output.dim, input.dim):
                raise DomainError(
                    f"Kraus operator of shape {k.shape} does not map "
                    f"{input} (dim {input.dim}) to {output} (dim {output.dim})"
                )
        self._kraus = ops
        self._verify_effect()

    def _verify_effect(self) -> None:
        if self.kind == CP:
            return
        e = sum(k.conj().T @ k for k in self._kraus)
        if self.kind == TP:
            defect = linalg.op_norm(e - np.eye(self.d_in))
            if defect > TP_TOL:
                raise DomainError(f"channel flagged trace-preserving has defect {defect:.3e}")
        else:
            top = float(np.linalg.eigvalsh(linalg.hermitize(e))[-1])
            if top > 1 + TP_TOL:
                raise DomainError(f"channel flagged trace-non-increasing has ‖ΣK†K‖ = {top}")

    @property
    def kraus(self) -> list[np.ndarray]:
        return list(self._kraus)

    def _apply(self, m: np.ndarray, support: SiteSet) -> tuple[np.ndarray, SiteSet]:
        rest = support - self.input
        if not rest.isdisjoint(self.output):
            raise DomainError(
                f"channel output {self.output} collides with carried sites {rest}"
            )
        dr, di, do = rest.dim, self.d_in, self.d_out
        t = _reorder(m, support, rest, self.input).reshape(dr, di, dr, di)
        out = np.zeros((dr, do, dr, do), dtype=complex)
        for k in self._kraus:
            out += np.einsum('oi,aibj,pj->aobp', k, t, k.conj(), optimize=True)
        return _restore(out.reshape(dr * do, dr * do), rest, self.output)

    def _adjoint(self, m: np.ndarray, support: SiteSet) -> tuple[np.ndarray, SiteSet]:
        rest = support - self.output
        if not rest.isdisjoint(self.input):
            raise DomainError(
                f"channel input {self.input} collides with carried sites {rest}"
            )
        dr, di, do = rest.dim, self.d_in, self.d_out
        t = _reorder(m, support, rest, self.output).reshape(dr, do, dr, do)
        out = np.zeros((dr, di, dr, di), dtype=complex)
        for k in self._kraus:
            out += np.einsum('oi,aobp,pj->aibj', k.conj(), t, k, optimize=True)
        return _restore(out.reshape(dr * di, dr * di), rest, self.input)


class ComposedChannel(QuantumChannel):
    """``second`` applied after ``first``."""

    def __init__(self, first: QuantumChannel, second: QuantumChannel) -> None:
        extra_in = second.input - first.output
        if not extra_in.isdisjoint(first.input):
            raise DomainError(
                f"{second} consumes sites {extra_in & first.input} already consumed"
            )
        left_over = first.output - second.input
        if not left_over.isdisjoint(second.output):
            raise DomainError(
                f"{second} produces sites {left_over & second.output} that already exist"
            )
        self.first = first
        self.second = second
        self.input = first.input | extra_in
        self.output = left_over | second.output
        if first.kind == TP and second.kind == TP:
            self.kind = TP
        elif CP in (first.kind, second.kind):
            self.kind = CP
        else:
            self.kind = TRACE_NON_INCREASING

    def _apply(self, m: np.ndarray, support: SiteSet) -> tuple[np.ndarray, SiteSet]:
        m, support = self.first._apply(m, support)
        return self.second._apply(m, support)

    def _adjoint(self, m: np.ndarray, support: SiteSet) -> tuple[np.ndarray, SiteSet]:
        if not self.second.output.issubset(support):
            raise DomainError("adjoint needs the full output support")
        m, support = self.second._adjoint(m, support)
        return self.first._adjoint(m, support)


class SummedChannel(QuantumChannel):
    """Sum of channels with identical input and output sites."""

    def __init__(self, terms: Sequence[QuantumChannel], kind: str = CP) -> None:
        flat: list[QuantumChannel] = []
        for t in terms:
            flat.extend(t.terms if isinstance(t, SummedChannel) else [t])
        first = flat[0]
        for t in flat[1:]:
            if t.input != first.input or t.output != first.output:
                raise DomainError(
                    f"cannot add {t} to {first}: supports differ"
                )
        self.terms = flat
        self.input = first.input
        self.output = first.output
        self.kind = self._check_kind(kind)

    def _apply(self, m: np.ndarray, support: SiteSet) -> tuple[np.ndarray, SiteSet]:
        total = None
        out_support = support
        for t in self.terms:
            out, out_support = t._apply(m, support)
            total = out if total is None else total + out
        return total, out_support

    def _adjoint(self, m: np.ndarray, support: SiteSet) -> tuple[np.ndarray, SiteSet]:
        total = None
        out_support = support
        for t in self.terms:
            out, out_support = t._adjoint(m, support)
            total = out if total is None else total + out
        return total, out_support


class ScaledChannel(QuantumChannel):
    """A channel multiplied by a non-negative constant."""

    def __init__(self, channel: QuantumChannel, factor: float, kind: str = CP) -> None:
        if factor < 0:
            raise DomainError("a CP map can only be scaled by a non-negative factor")
        self.channel = channel
        self.factor = float(factor)
        self.input = channel.input
        self.output = channel.output
        self.kind = self._check_kind(kind)

    def _apply(self, m: np.ndarray, support: SiteSet) -> tuple[np.ndarray, SiteSet]:
        out, support = self.channel._apply(m, support)
        return self.factor * out, support

    def _adjoint(self, m: np.ndarray, support: SiteSet) -> tuple[np.ndarray, SiteSet]:
        out, support = self.channel._adjoint(m, support)
        return self.factor * out, support


class ExtendedChannel(QuantumChannel):
    """A channel acting as the identity on some additional sites."""

    def __init__(self, channel: QuantumChannel, sites: SiteSet) -> None:
        if not (sites.isdisjoint(channel.input) and sites.isdisjoint(channel.output)):
            raise DomainError("extension sites overlap the channel")
        self.channel = channel
        self.sites = sites
        self.input = channel.input | sites
        self.output = channel.output | sites
        self.kind = channel.kind

    def _apply(self, m: np.ndarray, support: SiteSet) -> tuple[np.ndarray, SiteSet]:
        return self.channel._apply(m, support)

    def _adjoint(self, m: np.ndarray, support: SiteSet) -> tuple[np.ndarray, SiteSet]:
        return self.channel._adjoint(m, support)


def identity_channel(sites: SiteSet) -> KrausChannel:
    return KrausChannel(sites, sites, [np.eye(sites.dim)])


def unitary_channel(u: GlobalOperator) -> KrausChannel:
    return KrausChannel(u.support, u.support, [u.matrix])


def operator_channel(op: GlobalOperator, kind: str = CP) -> KrausChannel:
    """X ↦ op X op† on the support of ``op``."""
    return KrausChannel(op.support, op.support, [op.matrix], kind=kind)


def trace_channel(sites: SiteSet) -> KrausChannel:
    """Discard ``sites``."""
    empty = sites - sites
    eye = np.eye(sites.dim)
    return KrausChannel(sites, empty, [eye[j:j + 1, :] for j in range(sites.dim)])


def prepare_channel(state: DensityMatrix) -> KrausChannel:
    """Append ``state`` on its (new) sites."""
    empty = state.support - state.support
    w, v = linalg.eigh(state.matrix)
    w = np.clip(w, 0.0, None)
    kraus = [math.sqrt(p) * v[:, j:j + 1] for j, p in enumerate(w) if p > 0]
    return KrausChannel(empty, state.support, kraus, kind=TP if state.normalized else CP)


def replace_channel(sites: SiteSet, state: DensityMatrix) -> ComposedChannel:
    """Discard ``sites`` and prepare ``state`` instead."""
    return trace_channel(sites).then(prepare_channel(state))


def depolarizing_channel(sites: SiteSet, p: float) -> KrausChannel:
    """ρ ↦ (1 − p) ρ + p Tr(ρ) 1/d."""
    if not 0 <= p <= 1:
        raise DomainError("depolarizing probability must lie in [0, 1]")
    d = sites.dim
    kraus = [math.sqrt(1 - p) * np.eye(d)] if p < 1 else []
    for a in range(d):
        for b in range(d):
            k = np.zeros((d, d))
            k[a, b] = math.sqrt(p / d)
            kraus.append(k)
    return KrausChannel(sites, sites, kraus)


def choi_matrix(ch: QuantumChannel) -> np.ndarray:
    """Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|) with the input factor first."""
    d_in, d_out = ch.d_in, ch.d_out
    cap = setting('MTLAB_CHOI_MAX_DIM')
    if d_in * d_out > cap:
        raise DimensionCapError(
            f"Choi matrix of dimension {d_in * d_out} exceeds MTLAB_CHOI_MAX_DIM={cap}"
        )
    if isinstance(ch, KrausChannel):
        ks = np.stack(ch.kraus)
        j = np.einsum('koi,kpj->iojp', ks, ks.conj())
        return j.reshape(d_in * d_out, d_in * d_out)
    j = np.zeros((d_in, d_out, d_in, d_out), dtype=complex)
    for a in range(d_in):
        for b in range(d_in):
            e = np.zeros((d_in, d_in), dtype=complex)
            e[a, b] = 1.0
            out, support = ch._apply(e, ch.input)
            if support != ch.output:
                out = embed(GlobalOperator(support, out), ch.output).matrix
            j[a, :, b, :] = out
    return j.reshape(d_in * d_out, d_in * d_out)


def kraus_from_choi(
    choi: np.ndarray,
    d_in: int,
    d_out: int,
    tol: float = 1e-12,
) -> list[np.ndarray]:
    """Kraus operators from the eigenvectors of a PSD Choi matrix."""
    w, v = linalg.eigh(choi)
    ops = []
    for p, vec in zip(w, v.T):
        if p > tol:
            ops.append(math.sqrt(p) * vec.reshape(d_in, d_out).T)
    return ops


class ChannelReport(NamedTuple):
    cp: bool
    tp_defect: float
    choi_min_eig: float
    effect_max_eig: float
    choi_checked: bool

    @property
    def trace_preserving(self) -> bool:
        return self.tp_defect <= TP_TOL

    @property
    def trace_non_increasing(self) -> bool:
        return self.effect_max_eig <= 1 + TP_TOL


def channel_apply(ch: QuantumChannel, state: DensityMatrix) -> DensityMatrix:
    """Apply ``ch`` to ``state``; see :meth:`QuantumChannel.apply`."""
    return ch.apply(state)


def channel_validate(ch: QuantumChannel) -> ChannelReport:
    """Choi spectrum and trace defect of a channel.

    Channels whose Choi matrix exceeds MTLAB_CHOI_MAX_DIM are checked in the
    Heisenberg picture only; CP then follows from the Kraus construction.
    """
    e = ch.effect()
    tp_defect = linalg.op_norm(e - np.eye(ch.d_in))
    effect_max = float(np.linalg.eigvalsh(linalg.hermitize(e))[-1])
    try:
        j = choi_matrix(ch)
    except DimensionCapError:
        return ChannelReport(True, tp_defect, float('nan'), effect_max, False)
    lowest = float(np.linalg.eigvalsh(linalg.hermitize(j))[0])
    return ChannelReport(lowest >= -CHOI_TOL, tp_defect, lowest, effect_max, True)
