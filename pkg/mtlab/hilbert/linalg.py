"""Array-level linear algebra shared by every module.

These helpers take and return plain numpy arrays. The typed wrappers in
:mod:`mtlab.hilbert.operators` are built on top of them.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np
from scipy import linalg as la

from mtlab.conf import setting
from mtlab.exceptions import NumericDomainError


# Tolerance below which a negative eigenvalue is treated as rounding
NEGATIVE_EIG_TOL = 1e-10


def hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def hermiticity_defect(m: np.ndarray) -> float:
    return float(np.linalg.norm(m - m.conj().T))


def eigh(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix (ascending eigenvalues)."""
    return la.eigh(hermitize(m))


def spectral_apply(
    m: np.ndarray,
    fn: Callable[[np.ndarray], np.ndarray],
) -> np.ndarray:
    """Apply ``fn`` to the eigenvalues of Hermitian ``m``."""
    w, v = eigh(m)
    return hermitize((v * fn(w)) @ v.conj().T)


def _checked_spectrum(w: np.ndarray, name: str) -> None:
    if w.size and w[0] < -NEGATIVE_EIG_TOL:
        raise NumericDomainError(
            f"{name} of a matrix with eigenvalue {w[0]:.3e} < -{NEGATIVE_EIG_TOL}"
        )


def expm_h(m: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """e^{scale * m} for Hermitian m."""
    return spectral_apply(m, lambda w: np.exp(scale * w))


def logm_psd(
    m: np.ndarray,
    pseudo_inverse: bool = False,
    cutoff: float | None = None,
) -> np.ndarray:
    """Natural log of a PSD matrix.

    With ``pseudo_inverse`` eigenvalues at or below ``cutoff`` contribute 0,
    i.e. the logarithm is taken on the support.
    """
    cutoff = setting('MTLAB_EIG_CUTOFF') if cutoff is None else cutoff
    w, v = eigh(m)
    _checked_spectrum(w, 'log')
    keep = w > cutoff
    if not pseudo_inverse and not keep.all():
        raise NumericDomainError(
            f"log of a matrix with eigenvalue {w.min():.3e} <= cutoff {cutoff}; "
            "pass pseudo_inverse=True to take it on the support"
        )
    lw = np.zeros_like(w)
    lw[keep] = np.log(w[keep])
    return hermitize((v * lw) @ v.conj().T)


def sqrtm_psd(m: np.ndarray) -> np.ndarray:
    w, v = eigh(m)
    _checked_spectrum(w, 'sqrt')
    return hermitize((v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T)


def inv_sqrtm_psd(m: np.ndarray, cutoff: float | None = None) -> np.ndarray:
    """m^{-1/2} on the support of a PSD matrix."""
    cutoff = setting('MTLAB_EIG_CUTOFF') if cutoff is None else cutoff
    w, v = eigh(m)
    _checked_spectrum(w, 'inverse sqrt')
    out = np.zeros_like(w)
    keep = w > cutoff
    out[keep] = 1.0 / np.sqrt(w[keep])
    return hermitize((v * out) @ v.conj().T)


def kernel_projector(m: np.ndarray, cutoff: float | None = None) -> np.ndarray:
    cutoff = setting('MTLAB_EIG_CUTOFF') if cutoff is None else cutoff
    w, v = eigh(m)
    k = v[:, w <= cutoff]
    return k @ k.conj().T


def sign_h(m: np.ndarray) -> np.ndarray:
    """Matrix sign with sign(0) = +1, so the result is a Hermitian unitary."""
    return spectral_apply(m, lambda w: np.where(w >= 0, 1.0, -1.0))


def trace_norm(m: np.ndarray) -> float:
    """Sum of singular values (the unhalved trace norm)."""
    if m.size == 0:
        return 0.0
    if hermiticity_defect(m) <= 1e-12 * max(1.0, float(np.abs(m).max())):
        return float(np.abs(la.eigvalsh(hermitize(m))).sum())
    return float(la.svdvals(m).sum())


def op_norm(m: np.ndarray) -> float:
    """Largest singular value."""
    if m.size == 0:
        return 0.0
    return float(la.svdvals(m)[0])


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Tr sqrt(sqrt(sigma) rho sqrt(sigma)), computed as ||sqrt(rho) sqrt(sigma)||_1."""
    value = float(la.svdvals(sqrtm_psd(rho) @ sqrtm_psd(sigma)).sum())
    return min(max(value, 0.0), 1.0)


def kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def permute_factors(
    m: np.ndarray,
    dims: Sequence[int],
    perm: Sequence[int],
) -> np.ndarray:
    """Reorder the tensor factors of a square operator.

    ``dims`` are the factor dimensions in the current order; factor ``k`` of
    the result is factor ``perm[k]`` of the input.
    """
    n = len(dims)
    if list(perm) == list(range(n)):
        return m
    d = math.prod(dims)
    t = m.reshape(tuple(dims) * 2)
    axes = list(perm) + [p + n for p in perm]
    return t.transpose(axes).reshape(d, d)


def permute_rows(
    m: np.ndarray,
    dims: Sequence[int],
    perm: Sequence[int],
) -> np.ndarray:
    """Reorder the tensor factors of the row space of a rectangular matrix."""
    if list(perm) == list(range(len(dims))):
        return m
    cols = m.shape[1]
    t = m.reshape(tuple(dims) + (cols,))
    axes = list(perm) + [len(dims)]
    return t.transpose(axes).reshape(math.prod(dims), cols)


def trace_out_last(m: np.ndarray, keep_dim: int, traced_dim: int) -> np.ndarray:
    """Partial trace over the trailing factor of a (keep ⊗ traced) operator."""
    t = m.reshape(keep_dim, traced_dim, keep_dim, traced_dim)
    return np.einsum('ajbj->ab', t)


def random_hermitian(
    dim: int,
    rng: np.random.Generator,
    scale: float = 1.0,
) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = hermitize(g)
    return scale * h / op_norm(h)


def random_density(
    dim: int,
    rng: np.random.Generator,
    rank: int | None = None,
) -> np.ndarray:
    """Random density matrix from a Ginibre ensemble."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return hermitize(rho / np.trace(rho).real)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))
