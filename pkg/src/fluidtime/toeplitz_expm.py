"""First block row of the exponential of a block-triangular block-Toeplitz generator.

Three routes are offered:

``direct``
    assemble the ``Lm x Lm`` matrix and call a Padé scaling-and-squaring
    ``expm``.
``epsilon_circulant``
    complete the triangle into a block epsilon-circulant matrix. A diagonal
    similarity turns it into a plain block circulant, which FFTs diagonalise
    into ``L`` independent ``m x m`` exponentials. The bias is O(epsilon).
``embedding``
    zero-pad the blocks into a ``K``-block circulant, ``K >= L``, and read
    the leading blocks of its exponential.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .errors import InvalidEmbedding, NegativeDisplacement, NegativeEntries, QueryError
from .families import StageMatrixFamily, block_toeplitz

CLAMP_TOL = 1e-10
DIRECT_MAX_ORDER = 512
METHODS = ("direct", "epsilon_circulant", "embedding")
_ALIASES = {"eps-circulant": "epsilon_circulant", "epsilon-circulant": "epsilon_circulant",
            "circulant": "epsilon_circulant"}


def _blocks(fam):
    return fam.blocks if isinstance(fam, StageMatrixFamily) else np.asarray(fam, float)


def _check_x(x):
    if not x >= 0:
        raise NegativeDisplacement(f"displacement must be >= 0, got {x}")


def _clamp(W):
    W = np.real(W).copy()
    low = W.min() if W.size else 0.0
    if low < -CLAMP_TOL:
        raise NegativeEntries(f"approximation produced entry {low:.3g} below -{CLAMP_TOL:g}")
    W[W < 0] = 0.0
    return W


def w_blocks_direct(fam, x: float) -> np.ndarray:
    """Blocks ``W[0..L-1]`` of ``exp(U x)`` from the full assembled matrix."""
    _check_x(x)
    B = _blocks(fam)
    L, m, _ = B.shape
    E = sla.expm(block_toeplitz(B) * x)
    W = np.stack([E[:m, j * m:(j + 1) * m] for j in range(L)])
    return _clamp(W)


def _circulant_expm(C, x):
    """First-row blocks of ``exp(C x)`` for the block circulant with first row ``C``."""
    F = np.fft.fft(C, axis=0)
    E = np.stack([sla.expm(Fj * x) for Fj in F])
    return np.fft.ifft(E, axis=0)


def w_blocks_epsilon_circulant(fam, x: float, epsilon: float = 1e-8, return_error: bool = False):
    """Blocks of ``exp(V_eps x)``; optionally with an a-posteriori error estimate.

    The estimate adds the first-order bias, measured by re-running with
    ``epsilon / 2`` (twice the difference, padded by a factor 1.5 against
    higher-order terms), to the round-off amplified by the diagonal
    similarity (largest scale factor ``epsilon**(-(L-1)/L)``).
    """
    _check_x(x)
    if not 0 < epsilon <= 1:
        raise QueryError(f"epsilon must lie in (0, 1], got {epsilon}")
    B = _blocks(fam)
    L = B.shape[0]

    def run(eps):
        d = eps ** (np.arange(L) / L)
        E = _circulant_expm(B * d[:, None, None], x)
        return E / d[:, None, None]

    W = _clamp(run(epsilon))
    if not return_error:
        return W
    bias = 3.0 * np.abs(W - _clamp(run(epsilon / 2))).max()
    roundoff = np.finfo(float).eps * L * epsilon ** (-(L - 1) / L)
    return W, bias + roundoff


def w_blocks_embedding(fam, x: float, K: int | None = None) -> np.ndarray:
    """Blocks from a zero-padded ``K``-block circulant (``K`` rounded up to a power of two)."""
    _check_x(x)
    B = _blocks(fam)
    L, m, _ = B.shape
    if K is None:
        K = 4 * L
    if K < L:
        raise InvalidEmbedding(f"embedding size K={K} is smaller than L={L}")
    size = 1 << (int(K) - 1).bit_length()
    S = np.zeros((size, m, m))
    S[:L] = B
    return _clamp(_circulant_expm(S, x)[:L])


def default_method(fam) -> str:
    B = _blocks(fam)
    return "direct" if B.shape[0] * B.shape[1] <= DIRECT_MAX_ORDER else "embedding"


def w_blocks(fam, x: float, method: str | None = None, epsilon: float = 1e-8,
             embed_k: int | None = None) -> np.ndarray:
    method = _ALIASES.get(method, method) or default_method(fam)
    if method == "direct":
        return w_blocks_direct(fam, x)
    if method == "epsilon_circulant":
        return w_blocks_epsilon_circulant(fam, x, epsilon)
    if method == "embedding":
        return w_blocks_embedding(fam, x, embed_k)
    raise QueryError(f"unknown exponential method {method!r}; choose from {METHODS}")
