"""Stage-indexed matrix and vector families and their block-Toeplitz algebra.

A matrix family ``M[0..L-1]`` stands for the first block row of an upper
triangular block-Toeplitz matrix; products of such matrices correspond to
truncated convolutions of their families. Vector families are indexed by the
number of stages left, ``k = 1..L``, and stored at position ``k - 1``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import ShapeMismatch, SingularSystem


@dataclass(frozen=True, eq=False)
class StageMatrixFamily:
    blocks: np.ndarray
    row_set: str = "+"
    col_set: str = "-"

    def __post_init__(self):
        b = np.asarray(self.blocks, dtype=float)
        if b.ndim != 3:
            raise ShapeMismatch(f"family blocks must be a 3-d array, got shape {b.shape}")
        object.__setattr__(self, "blocks", b)

    def __len__(self):
        return self.blocks.shape[0]

    def __getitem__(self, k):
        return self.blocks[k]

    @property
    def L(self) -> int:
        return self.blocks.shape[0]

    def assemble(self) -> np.ndarray:
        return block_toeplitz(self.blocks)

    def row_sums(self) -> np.ndarray:
        """``sum_k M[k] 1``."""
        return self.blocks.sum(axis=(0, 2))


@dataclass(frozen=True, eq=False)
class StageVectorFamily:
    vectors: np.ndarray
    phase_set: str = "+"

    def __post_init__(self):
        object.__setattr__(self, "vectors", np.asarray(self.vectors, dtype=float))

    def __call__(self, k: int) -> np.ndarray:
        """Vector for ``k`` stages left."""
        return self.vectors[k - 1]

    @property
    def L(self) -> int:
        return self.vectors.shape[0]


def block_toeplitz(blocks) -> np.ndarray:
    blocks = np.asarray(blocks)
    L, r, c = blocks.shape
    out = np.zeros((L * r, L * c), dtype=blocks.dtype)
    for i in range(L):
        for j in range(i, L):
            out[i * r:(i + 1) * r, j * c:(j + 1) * c] = blocks[j - i]
    return out


def first_block_row(M, L: int, cols: int) -> np.ndarray:
    M = np.asarray(M)
    rows = M.shape[0] // L
    return np.stack([M[:rows, j * cols:(j + 1) * cols] for j in range(L)])


def block_conv(A, B, L: int | None = None) -> np.ndarray:
    """Truncated convolution ``C[j] = sum_{m+n=j} A[m] @ B[n]``."""
    A = np.asarray(A)
    B = np.asarray(B)
    if L is None:
        L = min(len(A), len(B))
    out = np.zeros((L, A.shape[1], B.shape[2]), dtype=np.result_type(A, B))
    for j in range(L):
        for m in range(max(0, j - len(B) + 1), min(j, len(A) - 1) + 1):
            out[j] += A[m] @ B[j - m]
    return out


def stage_conv(blocks, vecs) -> np.ndarray:
    """``out[k-1] = sum_{n=0}^{k-1} blocks[n] @ vecs[k-n-1]`` for ``k = 1..L``.

    ``vecs`` may carry extra trailing axes (several vectors at once).
    """
    blocks = np.asarray(blocks)
    vecs = np.asarray(vecs)
    L = vecs.shape[0]
    out = np.zeros((L, blocks.shape[1]) + vecs.shape[2:])
    for k in range(1, L + 1):
        for n in range(min(k, len(blocks))):
            out[k - 1] += np.tensordot(blocks[n], vecs[k - n - 1], axes=(1, 0))
    return out


def toeplitz_solve(B, f) -> np.ndarray:
    """Solve ``v(k) = f(k) + sum_{j=0}^{k-1} B[j] v(k-j)`` for ``k = 1..L``.

    The ``j = 0`` term is moved to the left, so each stage needs one solve
    with ``I - B[0]``.
    """
    B = np.asarray(B, float)
    f = np.asarray(f, float)
    L = f.shape[0]
    n = B.shape[1]
    lhs = np.eye(n) - B[0]
    try:
        lu = _lu(lhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem("I - B[0] is singular") from exc
    v = np.zeros_like(f)
    for k in range(1, L + 1):
        rhs = f[k - 1].copy()
        for j in range(1, min(k, len(B))):
            rhs += np.tensordot(B[j], v[k - j - 1], axes=(1, 0))
        v[k - 1] = _lu_solve(lu, rhs)
    return v


def _lu(M):
    if M.size == 0:
        return None
    if not np.isfinite(M).all() or np.linalg.cond(M) > 1e14:
        raise np.linalg.LinAlgError("ill-conditioned")
    return sla.lu_factor(M)


def _lu_solve(lu, rhs):
    if lu is None:
        return rhs
    return sla.lu_solve(lu, rhs)
