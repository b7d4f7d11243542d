"""Gaussian kernel density estimates with a scalar or matrix bandwidth."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bandwidth import MatrixBandwidth, ScalarBandwidth
from .dataset import Dataset
from .errors import DimensionMismatchError
from .linalg import determinant, inverse
from .reduce import ExecMode, chunked_tree_sum, split_range, thread_pool

# kernel values per evaluation block
_BLOCK_ELEMENTS = 1 << 18
_SEQ_BLOCK_ELEMENTS = 1 << 12


@dataclass(frozen=True, eq=False)
class KdeModel:
    """A dataset together with the bandwidth used to smooth it.

    For a scalar bandwidth ``h`` the kernel is the isotropic standard normal
    scaled by ``h``; for a matrix ``H`` it is the normal density with
    covariance ``H``.
    """

    data: Dataset
    bandwidth: ScalarBandwidth | MatrixBandwidth
    mode: ExecMode = field(default_factory=ExecMode.sequential)
    chunk_size: int = 1024
    _h_inv: np.ndarray = field(init=False, repr=False)
    _norm: float = field(init=False, repr=False)

    def __post_init__(self):
        d = self.data.d
        bw = self.bandwidth
        if isinstance(bw, MatrixBandwidth):
            if bw.d != d:
                raise DimensionMismatchError(f"bandwidth matrix is {bw.d}x{bw.d}, data has d={d}")
            h_inv = inverse(bw.H)
            norm = (2.0 * math.pi) ** (-d / 2) * determinant(bw.H) ** -0.5
        else:
            h_inv = np.eye(d) / (bw.h * bw.h)
            norm = (2.0 * math.pi) ** (-d / 2) * bw.h ** -d
        object.__setattr__(self, "_h_inv", h_inv)
        object.__setattr__(self, "_norm", norm)

    @classmethod
    def with_h(cls, data: Dataset, h: float, **kw) -> "KdeModel":
        return cls(data, ScalarBandwidth(float(h)), **kw)

    @classmethod
    def with_H(cls, data: Dataset, H, **kw) -> "KdeModel":
        return cls(data, MatrixBandwidth(np.asarray(H, dtype=np.float64)), **kw)

    @property
    def d(self) -> int:
        return self.data.d

    @property
    def n(self) -> int:
        return self.data.n

    def axis_scale(self) -> np.ndarray:
        """Per-dimension kernel standard deviation (``h`` or ``sqrt(H_ii)``)."""
        bw = self.bandwidth
        if isinstance(bw, MatrixBandwidth):
            return np.sqrt(np.diag(bw.H))
        return np.full(self.d, bw.h)

    def _exponents(self, points: np.ndarray) -> np.ndarray:
        # (m, n) matrix of (x - X_i)^T H^-1 (x - X_i)
        X = self.data.data
        diffs = [points[:, c, None] - X[c][None, :] for c in range(self.d)]
        bw = self.bandwidth
        if isinstance(bw, ScalarBandwidth):
            q = diffs[0] * diffs[0]
            for c in range(1, self.d):
                q = q + diffs[c] * diffs[c]
            return q * self._h_inv[0, 0]
        q = None
        for a in range(self.d):
            part = self._h_inv[0, a] * diffs[0]
            for c in range(1, self.d):
                part = part + self._h_inv[c, a] * diffs[c]
            term = part * diffs[a]
            q = term if q is None else q + term
        return q

    def _eval_block(self, points: np.ndarray) -> np.ndarray:
        k = np.exp(-0.5 * self._exponents(points))
        return chunked_tree_sum(k, self.chunk_size) * (self._norm / self.n)


def _as_points(model: KdeModel, points) -> np.ndarray:
    P = np.asarray(points, dtype=np.float64)
    if P.ndim == 1 and model.d == 1:
        P = P.reshape(-1, 1)
    elif P.ndim == 1:
        P = P.reshape(1, -1) if P.size == model.d else P
    if P.ndim != 2 or P.shape[1] != model.d:
        raise DimensionMismatchError(f"points must have dimension {model.d}, got shape {P.shape}")
    return P


def kde_eval(model: KdeModel, x) -> float:
    """Density estimate at a single point."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.shape != (model.d,):
        raise DimensionMismatchError(f"point has shape {x.shape}, model has d={model.d}")
    return float(model._eval_block(x[None, :])[0])


def kde_eval_batch(model: KdeModel, points, mode: ExecMode | None = None) -> np.ndarray:
    """Density estimates at many points; elementwise equal to :func:`kde_eval`."""
    mode = mode or model.mode
    if isinstance(points, (list, tuple)) and len(points) == 0:
        return np.empty(0)
    P = _as_points(model, points)
    m = P.shape[0]
    out = np.empty(m)
    if m == 0:
        return out
    block = _BLOCK_ELEMENTS if mode.kind != "sequential" else _SEQ_BLOCK_ELEMENTS
    step = max(1, block // model.n)

    def run(rng):
        lo, hi = rng
        for p0 in range(lo, hi, step):
            p1 = min(hi, p0 + step)
            out[p0:p1] = model._eval_block(P[p0:p1])

    if mode.kind == "threaded" and mode.threads > 1 and m > 1:
        list(thread_pool(mode.threads).map(run, split_range(m, mode.threads)))
    else:
        run((0, m))
    return out
