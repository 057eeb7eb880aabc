"""Dense N-way tensor primitives: unfoldings, norms, and SVD.

Every flattening in this package is little-endian: the first index varies
fastest, so a multi-index (i_1, ..., i_N) with 1-based indices maps to the
flat offset sum((i_k - 1) * prod(I_1..I_{k-1})).  That is numpy's Fortran
order, and all reshapes below use order="F".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError

# Singular values below this fraction of the largest one are clamped to
# zero so rank counting is stable.
SV_CLAMP = 1e-12


@dataclass(frozen=True)
class DenseTensor:
    """An N-way array of 32-bit reals stored flat, first index fastest."""

    dims: tuple[int, ...]
    data: np.ndarray

    def __post_init__(self):
        if len(self.dims) == 0:
            raise ValueError("dims must be non-empty")
        if any(d < 1 for d in self.dims):
            raise ValueError(f"every dim must be >= 1, got {self.dims}")
        if self.data.ndim != 1 or self.data.size != int(np.prod(self.dims)):
            raise ValueError("data length must equal the product of dims")

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "DenseTensor":
        arr = np.asarray(arr)
        return cls(tuple(int(d) for d in arr.shape),
                   arr.astype(np.float32).flatten(order="F"))

    def to_array(self) -> np.ndarray:
        return self.data.reshape(self.dims, order="F")

    def at(self, *indices: int) -> float:
        """Element access with 1-based indices."""
        if len(indices) != len(self.dims):
            raise ValueError("index arity must match tensor order")
        offset = 0
        stride = 1
        for i, d in zip(indices, self.dims):
            if not 1 <= i <= d:
                raise IndexError(f"index {i} out of range for dim {d}")
            offset += (i - 1) * stride
            stride *= d
        return float(self.data[offset])


def as_array(t) -> np.ndarray:
    """Accept either a DenseTensor or a plain ndarray."""
    if isinstance(t, DenseTensor):
        return t.to_array()
    return np.asarray(t)


def k_unfold(t, k: int) -> np.ndarray:
    """Mode-k unfolding: rows indexed by i_k, columns by the little-endian
    multi-index over the remaining modes in ascending order.  k is 1-based."""
    a = as_array(t)
    if not 1 <= k <= a.ndim:
        raise ValueError(f"mode {k} out of range for order-{a.ndim} tensor")
    return np.moveaxis(a, k - 1, 0).reshape((a.shape[k - 1], -1), order="F")


def fold_k(mat: np.ndarray, dims, k: int) -> np.ndarray:
    """Inverse of k_unfold for the given full dimension vector."""
    dims = tuple(dims)
    if not 1 <= k <= len(dims):
        raise ValueError(f"mode {k} out of range for order-{len(dims)} tensor")
    rest = dims[:k - 1] + dims[k:]
    a = np.asarray(mat).reshape((dims[k - 1],) + rest, order="F")
    return np.moveaxis(a, 0, k - 1)


def mn_unfold(t, m: int, n: int) -> np.ndarray:
    """(m, n)-unfolding: an I_m x I_n x C stack of frontal slices, C running
    over the little-endian multi-index of the remaining modes (ascending)."""
    a = as_array(t)
    if not (1 <= m < n <= a.ndim):
        raise ValueError(f"need 1 <= m < n <= {a.ndim}, got ({m}, {n})")
    rest = [i for i in range(a.ndim) if i not in (m - 1, n - 1)]
    a = np.transpose(a, [m - 1, n - 1] + rest)
    return a.reshape((a.shape[0], a.shape[1], -1), order="F")


def frobenius_norm(t) -> float:
    a = as_array(t)
    return float(np.linalg.norm(a.astype(np.float64).ravel()))


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD with input = u @ diag(s) @ v.T and s non-increasing."""

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray


def svd(mat: np.ndarray) -> SvdResult:
    """Thin SVD with tiny singular values clamped to zero."""
    mat = np.asarray(mat, dtype=np.float64)
    if not np.all(np.isfinite(mat)):
        raise NumericError("SVD input contains non-finite entries")
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    if s.size and s[0] > 0:
        s = np.where(s < SV_CLAMP * s[0], 0.0, s)
    return SvdResult(u, s, vh.T)


def singular_values(mat: np.ndarray) -> np.ndarray:
    """Singular values only (descending), with the same clamping as svd()."""
    mat = np.asarray(mat, dtype=np.float64)
    if not np.all(np.isfinite(mat)):
        raise NumericError("SVD input contains non-finite entries")
    s = np.linalg.svd(mat, compute_uv=False)
    if s.size and s[0] > 0:
        s = np.where(s < SV_CLAMP * s[0], 0.0, s)
    return s
