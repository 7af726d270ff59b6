"""Matrix serialisation for golden files.

Binary block: little-endian uint64 rank, uint64 shape entries, then the
entries as row-major little-endian complex128. JSON: nested lists of
[re, im] pairs.
"""

import numpy as np

from mtlab.exceptions import DomainError


def to_bytes(m: np.ndarray) -> bytes:
    m = np.asarray(m, dtype=complex)
    header = np.array((m.ndim,) + m.shape, dtype='<u8').tobytes()
    return header + np.ascontiguousarray(m, dtype='<c16').tobytes()


def from_bytes(data: bytes) -> np.ndarray:
    if len(data) < 8:
        raise DomainError("truncated matrix block")
    ndim = int(np.frombuffer(data[:8], dtype='<u8')[0])
    end = 8 * (ndim + 1)
    shape = tuple(int(s) for s in np.frombuffer(data[8:end], dtype='<u8'))
    body = np.frombuffer(data[end:], dtype='<c16')
    if body.size != int(np.prod(shape)):
        raise DomainError(f"matrix block holds {body.size} entries, expected shape {shape}")
    return body.reshape(shape).astype(complex)


def to_json(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    return np.stack([m.real, m.imag], axis=-1).tolist()


def from_json(data: list) -> np.ndarray:
    a = np.asarray(data, dtype=float)
    if a.shape[-1:] != (2,):
        raise DomainError("JSON matrices are nested lists of [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]
