"""Cache-blocked evaluation of sums over all sample pairs ``i < j``.

The conceptual ``n x n`` upper triangle of pair values is cut into ``k x k``
tiles.  Tile ``(l, q)`` pairs chunk ``q`` (rows, ``i``) with chunk ``l``
(columns, ``j``), ``q <= l``.  Tiles are numbered column by column::

    bx:   0 | 1 2 | 3 4 5 | 6 7 8 9 | ...
    l:    0 | 1 1 | 2 2 2 | 3 3 3 3 |
    q:    0 | 0 1 | 0 1 2 | 0 1 2 3 |

Each tile is summed with the pairwise tree over its ``k*k`` slots (masked
and padding slots hold exactly zero), and the per-tile partials are then
tree-reduced in ``bx`` order, so results do not depend on the execution
mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dataset import Dataset
from .errors import DimensionMismatchError, InsufficientSamplesError, MemoryBudgetError
from .reduce import (
    ExecMode,
    ReductionPlan,
    compute_dtype,
    reduce_sum,
    split_range,
    thread_pool,
    tree_sum,
)

DEFAULT_MEMORY_BUDGET = 2 * 1024 ** 3

# pair slots per vectorized batch
_BATCH_PAIRS = 1 << 16


@dataclass(frozen=True)
class TileGeometry:
    k: int = 16

    def __post_init__(self):
        if self.k < 1 or self.k & (self.k - 1):
            raise ValueError(f"tile edge must be a power of two, got {self.k}")

    def n_chunks(self, n: int) -> int:
        return -(-n // self.k)

    def n_tiles(self, n: int) -> int:
        c = self.n_chunks(n)
        return c * (c + 1) // 2


@dataclass(frozen=True, eq=False)
class TriangularBuffer:
    """Values for all pairs ``i < j``, stored row by row: (0,1), (0,2), ..., (1,2), ..."""

    n: int
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.n * (self.n - 1) // 2,):
            raise ValueError("buffer length must be n(n-1)/2")

    def index(self, i: int, j: int) -> int:
        return pair_index(i, j, self.n)

    def __getitem__(self, ij):
        i, j = ij
        return self.values[pair_index(i, j, self.n)]

    def __len__(self):
        return self.values.size


def pair_index(i: int, j: int, n: int) -> int:
    """Position of pair ``(i, j)``, ``i < j``, in the row-major triangle."""
    if not 0 <= i < j < n:
        raise IndexError(f"need 0 <= i < j < n, got ({i}, {j}) with n={n}")
    return i * n - i * (i + 1) // 2 + (j - i - 1)


def tri_block_position(bx: int) -> tuple[int, int]:
    """Column ``l`` and row ``q`` of tile number ``bx`` in the upper-triangular grid."""
    if bx < 0:
        raise ValueError("block index must be non-negative")
    l = math.ceil((math.sqrt(8 * bx + 9) - 3) / 2)
    q = bx - l * (l + 1) // 2
    return l, q


def tri_block_positions(bx) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`tri_block_position`."""
    bx = np.asarray(bx, dtype=np.int64)
    l = np.ceil((np.sqrt(8.0 * bx + 9.0) - 3.0) / 2.0).astype(np.int64)
    q = bx - l * (l + 1) // 2
    return l, q


def _check_memory(n: int, itemsize: int, budget: int | None) -> None:
    budget = DEFAULT_MEMORY_BUDGET if budget is None else budget
    need = n * (n - 1) // 2 * itemsize
    if need > budget:
        raise MemoryBudgetError(
            f"triangular buffer for n={n} needs {need} bytes, over the {budget}-byte budget; "
            "use fused_quadratic_map_sum instead"
        )


# -- tiled driver -----------------------------------------------------------

def _tile_batches(lo: int, hi: int, mode: ExecMode, k: int):
    """Yield ``(b0, b1)`` tile ranges processed as one numpy batch."""
    if mode.kind == "sequential":
        # one tile column (or the part of it inside [lo, hi)) at a time
        bx = lo
        while bx < hi:
            l, q = tri_block_position(bx)
            end = min(hi, (l + 1) * (l + 2) // 2)
            yield bx, end
            bx = end
    else:
        step = max(1, _BATCH_PAIRS // (k * k))
        for b0 in range(lo, hi, step):
            yield b0, min(hi, b0 + step)


def _tile_partials(n, k, tile_values, lo, hi, mode, dtype) -> np.ndarray:
    out = np.empty(hi - lo, dtype=dtype)
    offs = np.arange(k, dtype=np.int64)
    for b0, b1 in _tile_batches(lo, hi, mode, k):
        l, q = tri_block_positions(np.arange(b0, b1))
        I = (q[:, None] * k + offs)[:, :, None]      # (T, k, 1) row sample
        J = (l[:, None] * k + offs)[:, None, :]      # (T, 1, k) column sample
        vals = tile_values(np.minimum(I, n - 1), np.minimum(J, n - 1))
        vals = np.asarray(vals, dtype=dtype)
        if vals.shape != (b1 - b0, k, k):
            vals = np.broadcast_to(vals, (b1 - b0, k, k))
        # only diagonal tiles and tiles of the last, padded chunk need masking
        edge = np.flatnonzero((l == q) | ((l + 1) * k > n))
        if edge.size:
            valid = (I[edge] < J[edge]) & (J[edge] < n)
            if not (vals.flags.writeable and vals.flags.owndata):
                vals = vals.copy()
            vals[edge] = np.where(valid, vals[edge], 0.0)
        out[b0 - lo:b1 - lo] = tree_sum(vals.reshape(b1 - b0, k * k))
    return out


def _tiled_sum(n: int, k: int, tile_values, mode: ExecMode, dtype) -> float:
    geom = TileGeometry(k)
    n_tiles = geom.n_tiles(n)
    if mode.kind == "threaded" and mode.threads > 1 and n_tiles > 1:
        ranges = split_range(n_tiles, mode.threads)
        pool = thread_pool(mode.threads)
        inner = ExecMode.vectorized()
        parts = list(pool.map(
            lambda r: _tile_partials(n, k, tile_values, r[0], r[1], inner, dtype), ranges))
        partials = np.concatenate(parts)
    else:
        partials = _tile_partials(n, k, tile_values, 0, n_tiles, mode, dtype)
    precision = "single" if dtype == np.float32 else "double"
    return reduce_sum(partials, ReductionPlan(precision=precision))


# -- public operations ------------------------------------------------------

def pairwise_map_sum(A, fun: Callable[[np.ndarray], np.ndarray],
                     geom: TileGeometry | None = None,
                     mode: ExecMode | None = None,
                     precision: str | None = None) -> float:
    """Sum of ``fun(A[i] - A[j])`` over all ``i < j``.

    ``fun`` must be elementwise and vectorized.  ``n = 1`` gives 0.
    """
    geom = geom or TileGeometry()
    mode = mode or ExecMode.sequential()
    dtype = compute_dtype(precision)
    A = np.ascontiguousarray(np.asarray(A, dtype=dtype).ravel())
    n = A.size
    if n < 2:
        return 0.0

    def tile_values(I, J):
        return fun(A[I] - A[J])

    return _tiled_sum(n, geom.k, tile_values, mode, dtype)


def _check_qf_args(X: Dataset, M) -> np.ndarray:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape != (X.d, X.d):
        raise DimensionMismatchError(f"matrix shape {M.shape} does not match d={X.d}")
    if X.n < 2:
        raise InsufficientSamplesError("need at least two samples")
    return M


def quadratic_rows(E: np.ndarray, F: np.ndarray, M: np.ndarray) -> np.ndarray:
    """``(e_r - f_p)^T M (e_r - f_p)`` for every column ``r`` of ``E`` and ``p`` of ``F``.

    ``E`` and ``F`` are ``(d, ...)`` blocks whose trailing shapes broadcast
    against each other.  Rows of the result are built one dimension at a
    time from contiguous chunk rows, accumulating ``sum_c m[c,a] (e_c - f_c)``
    and then multiplying by ``(e_a - f_a)``.
    """
    d = E.shape[0]
    diffs = [E[c] - F[c] for c in range(d)]
    Y = None
    for a in range(d):
        part = M[0, a] * diffs[0]
        for c in range(1, d):
            part = part + M[c, a] * diffs[c]
        term = part * diffs[a]
        Y = term if Y is None else Y + term
    return Y


def precompute_quadratic_forms(X: Dataset, M, geom: TileGeometry | None = None,
                               mode: ExecMode | None = None,
                               precision: str | None = None,
                               memory_budget: int | None = None) -> TriangularBuffer:
    """All quadratic forms ``(X_i - X_j)^T M (X_i - X_j)``, ``i < j``.

    Work proceeds one row of tiles at a time: chunk ``q`` of samples against
    every sample from ``q*k`` on, so the entries of each strip land in one
    contiguous run of the row-major buffer.
    """
    geom = geom or TileGeometry()
    mode = mode or ExecMode.sequential()
    dtype = compute_dtype(precision)
    M = _check_qf_args(X, M).astype(dtype)
    n, k = X.n, geom.k
    _check_memory(n, np.dtype(dtype).itemsize, memory_budget)
    data = X.data.astype(dtype)
    out = np.empty(n * (n - 1) // 2, dtype=dtype)
    n_strips = geom.n_chunks(n)

    def strip(q):
        i0, i1 = q * k, min(n, (q + 1) * k)
        E = data[:, i0:i1, None]
        F = data[:, None, i0:]
        Y = quadratic_rows(E, F, M)
        rows = np.arange(i0, i1)[:, None]
        cols = np.arange(i0, n)[None, :]
        start = pair_index(i0, i0 + 1, n) if i0 + 1 < n else out.size
        vals = Y[cols > rows]
        out[start:start + vals.size] = vals

    if mode.kind == "threaded" and mode.threads > 1 and n_strips > 1:
        pool = thread_pool(mode.threads)
        list(pool.map(strip, range(n_strips)))
    else:
        for q in range(n_strips):
            strip(q)
    return TriangularBuffer(n, out)


def fused_quadratic_map_sum(X: Dataset, M, fun1: Callable[[np.ndarray], np.ndarray],
                            geom: TileGeometry | None = None,
                            mode: ExecMode | None = None,
                            precision: str | None = None) -> float:
    """Sum of ``fun1((X_i - X_j)^T M (X_i - X_j))`` over ``i < j``.

    Quadratic forms are computed per tile and consumed immediately; the
    triangular buffer is never built.
    """
    geom = geom or TileGeometry()
    mode = mode or ExecMode.sequential()
    dtype = compute_dtype(precision)
    M = _check_qf_args(X, M).astype(dtype)
    data = X.data.astype(dtype)

    def tile_values(I, J):
        return fun1(quadratic_rows(data[:, I], data[:, J], M))

    return _tiled_sum(X.n, geom.k, tile_values, mode, dtype)
