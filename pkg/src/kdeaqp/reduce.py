"""Pairwise (tree-shaped) summation of arrays and of mapped values.

The reduction tree depends only on the array length and the chunk size:
the array is cut into consecutive chunks of ``chunk_size`` elements, each
chunk is summed by repeatedly adding neighbouring pairs (an element whose
partner falls past the end is carried up unchanged), and the per-chunk
partial sums are combined by the same pairwise scheme.  Execution modes
only change who evaluates which chunk, so every mode returns bit-identical
results.
"""

from __future__ import annotations

import contextlib
import functools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import EmptyArrayError

_DTYPES = {"double": np.float64, "single": np.float32}
_precision = "double"

# elements handled per vectorized batch; bounds temporary memory
_BATCH_ELEMENTS = 1 << 18


def set_precision(name: str) -> None:
    """Select the engine-wide compute precision: ``"double"`` or ``"single"``."""
    global _precision
    if name not in _DTYPES:
        raise ValueError(f"precision must be one of {sorted(_DTYPES)}, got {name!r}")
    _precision = name


def get_precision() -> str:
    return _precision


@contextlib.contextmanager
def precision(name: str):
    """Temporarily switch the engine precision."""
    old = _precision
    set_precision(name)
    try:
        yield
    finally:
        set_precision(old)


def compute_dtype(name: str | None = None):
    return _DTYPES[name or _precision]


@dataclass(frozen=True)
class ExecMode:
    """How chunks or tiles are evaluated: one at a time, batched, or on threads."""

    kind: str = "sequential"
    threads: int = 1

    def __post_init__(self):
        if self.kind not in ("sequential", "vectorized", "threaded"):
            raise ValueError(f"unknown execution mode {self.kind!r}")
        if self.threads < 1:
            raise ValueError("thread count must be >= 1")

    @classmethod
    def sequential(cls) -> "ExecMode":
        return cls("sequential")

    @classmethod
    def vectorized(cls) -> "ExecMode":
        return cls("vectorized")

    @classmethod
    def threaded(cls, threads: int | None = None) -> "ExecMode":
        return cls("threaded", threads if threads is not None else (os.cpu_count() or 1))

    @classmethod
    def parse(cls, text: str) -> "ExecMode":
        """Parse ``seq``, ``vec``, ``thr`` or ``thr:K``."""
        name, _, count = text.partition(":")
        if name in ("seq", "sequential"):
            return cls.sequential()
        if name in ("vec", "vectorized"):
            return cls.vectorized()
        if name in ("thr", "threaded"):
            return cls.threaded(int(count) if count else None)
        raise ValueError(f"unknown mode {text!r} (expected seq, vec or thr[:K])")

    @property
    def short(self) -> str:
        return {"sequential": "seq", "vectorized": "vec", "threaded": "thr"}[self.kind]


SEQUENTIAL = ExecMode.sequential()


def _is_pow2(x: int) -> bool:
    return x > 0 and x & (x - 1) == 0


@dataclass(frozen=True)
class ReductionPlan:
    chunk_size: int = 1024
    mode: ExecMode = field(default_factory=ExecMode.sequential)
    precision: str | None = None

    def __post_init__(self):
        if not _is_pow2(self.chunk_size) or self.chunk_size < 4:
            raise ValueError(f"chunk_size must be a power of two >= 4, got {self.chunk_size}")

    @property
    def dtype(self):
        return compute_dtype(self.precision)


@functools.lru_cache(maxsize=None)
def thread_pool(threads: int) -> ThreadPoolExecutor:
    return ThreadPoolExecutor(max_workers=threads, thread_name_prefix="kdeaqp")


def split_range(count: int, parts: int) -> list[tuple[int, int]]:
    """Cut ``range(count)`` into at most ``parts`` contiguous, near-equal pieces."""
    parts = max(1, min(parts, count))
    bounds = [count * i // parts for i in range(parts + 1)]
    return [(bounds[i], bounds[i + 1]) for i in range(parts) if bounds[i] < bounds[i + 1]]


def tree_sum(a: np.ndarray) -> np.ndarray:
    """Pairwise-sum along the last axis by adding neighbouring elements.

    Returns an array with the last axis removed (a scalar array for 1-d
    input).  The last axis must be non-empty.
    """
    a = np.asarray(a)
    while a.shape[-1] > 1:
        m = a.shape[-1]
        half = m // 2
        s = a[..., 0:2 * half:2] + a[..., 1:2 * half:2]
        if m % 2:
            s = np.concatenate([s, a[..., m - 1:m]], axis=-1)
        a = s
    return a[..., 0]


def chunked_tree_sum(a: np.ndarray, chunk_size: int = 1024) -> np.ndarray:
    """Row-wise equivalent of :func:`reduce_sum` for a 2-d array."""
    a = np.asarray(a)
    m = a.shape[-1]
    full = m // chunk_size
    parts = []
    if full:
        head = a[..., :full * chunk_size].reshape(a.shape[:-1] + (full, chunk_size))
        parts.append(tree_sum(head))
    if m % chunk_size:
        parts.append(tree_sum(a[..., full * chunk_size:])[..., None])
    return tree_sum(np.concatenate(parts, axis=-1))


def _chunk_partials(A: np.ndarray, fun, cs: int, lo: int, hi: int, batched: bool) -> np.ndarray:
    """Partial sums of full chunks ``lo..hi-1``."""
    dtype = A.dtype
    out = np.empty(hi - lo, dtype=dtype)
    step = max(1, _BATCH_ELEMENTS // cs) if batched else 1
    for c0 in range(lo, hi, step):
        c1 = min(hi, c0 + step)
        block = A[c0 * cs:c1 * cs]
        if fun is not None:
            block = np.asarray(fun(block), dtype=dtype)
        out[c0 - lo:c1 - lo] = tree_sum(block.reshape(c1 - c0, cs))
    return out


def _reduce(A, fun, plan: ReductionPlan | None) -> float:
    plan = plan or ReductionPlan()
    dtype = plan.dtype
    A = np.ascontiguousarray(np.asarray(A, dtype=dtype).ravel())
    n = A.size
    if n == 0:
        raise EmptyArrayError("cannot reduce an empty array")
    cs = plan.chunk_size
    full = n // cs
    mode = plan.mode

    if mode.kind == "threaded" and mode.threads > 1 and full > 1:
        ranges = split_range(full, mode.threads)
        pool = thread_pool(mode.threads)
        pieces = list(pool.map(lambda r: _chunk_partials(A, fun, cs, r[0], r[1], True), ranges))
        partials = np.concatenate(pieces) if pieces else np.empty(0, dtype=dtype)
    else:
        partials = _chunk_partials(A, fun, cs, 0, full, mode.kind != "sequential")

    if n % cs:
        tail = A[full * cs:]
        if fun is not None:
            tail = np.asarray(fun(tail), dtype=dtype)
        partials = np.concatenate([partials, tree_sum(tail)[None]])
    return float(tree_sum(partials.astype(dtype, copy=False)))


def reduce_sum(A, plan: ReductionPlan | None = None) -> float:
    """Pairwise-tree sum of a non-empty array.

    Examples
    --------
    >>> reduce_sum([1, 2, 3, 4, 5, 6, 7, 8])
    36.0
    """
    return _reduce(A, None, plan)


def reduce_map_sum(A, fun: Callable[[np.ndarray], np.ndarray], plan: ReductionPlan | None = None) -> float:
    """Sum of ``fun(A[i])`` with ``fun`` applied chunk by chunk.

    ``fun`` must be an elementwise, vectorized callable.  The mapped array
    is never materialized as a whole; the result is bit-identical to
    ``reduce_sum(fun(A), plan)``.
    """
    return _reduce(A, fun, plan)
