"""Approximate COUNT / SUM / AVG range aggregates from a density estimate.

``COUNT = n * integral of f over the range`` and ``SUM = n * integral of
x f(x)``; AVG is their ratio.  Integrals use composite Simpson quadrature.
Infinite bounds are truncated to the data range widened by
``TRUNCATE_UNITS`` kernel standard deviations on each side, which is also
where finite bounds are clipped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, DimensionMismatchError, EmptyRangeEstimateError, InvalidRangeError
from .bandwidth import MatrixBandwidth
from .kde import KdeModel, kde_eval_batch

TRUNCATE_UNITS = 8.0
DEFAULT_RESOLUTION = 2048
MIN_RESOLUTION = 16
AGGREGATES = ("count", "sum", "avg")


@dataclass(frozen=True)
class RangeQuery:
    """Range predicate ``a <= x_col <= b`` (and ``c <= x_col2 <= d`` in 2-d).

    ``column``/``column2`` index dimensions of the model.  For SUM and AVG
    over a 2-d range, ``sum_column`` picks the summed dimension (default
    ``column``).  ``resolution`` is the number of Simpson intervals per axis.
    """

    aggregate: str = "count"
    column: int = 0
    bounds: tuple[float, float] = (-math.inf, math.inf)
    column2: int | None = None
    bounds2: tuple[float, float] | None = None
    resolution: int = DEFAULT_RESOLUTION
    sum_column: int | None = None

    def __post_init__(self):
        if self.aggregate not in AGGREGATES:
            raise DataError(f"aggregate must be one of {AGGREGATES}, got {self.aggregate!r}")
        if self.resolution < MIN_RESOLUTION:
            raise DataError(f"resolution must be >= {MIN_RESOLUTION}")
        _check_bounds(*self.bounds)
        if (self.column2 is None) != (self.bounds2 is None):
            raise DataError("column2 and bounds2 must be given together")
        if self.bounds2 is not None:
            _check_bounds(*self.bounds2)

    @property
    def is_2d(self) -> bool:
        return self.column2 is not None


def _check_bounds(a, b):
    if math.isnan(a) or math.isnan(b) or a > b:
        raise InvalidRangeError(f"invalid range [{a}, {b}]")


def simpson_weights(a: float, b: float, intervals: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of composite Simpson's rule; ``intervals`` is made even."""
    m = intervals + (intervals % 2)
    x = np.linspace(a, b, m + 1)
    w = np.full(m + 1, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return x, w * ((b - a) / m / 3.0)


def support(model: KdeModel, axis: int, units: float = TRUNCATE_UNITS) -> tuple[float, float]:
    """Truncated integration domain of one model dimension."""
    col = model.data.data[axis]
    s = float(model.axis_scale()[axis])
    return float(col.min()) - units * s, float(col.max()) + units * s


def _clip(model: KdeModel, axis: int, a: float, b: float):
    _check_bounds(a, b)
    lo, hi = support(model, axis)
    return max(a, lo), min(b, hi)


def _check_axis(model: KdeModel, axis: int):
    if not 0 <= axis < model.d:
        raise DimensionMismatchError(f"column {axis} out of range for a {model.d}-d model")


def integrate_1d(model: KdeModel, a: float, b: float, weight: str = "one",
                 resolution: int = DEFAULT_RESOLUTION) -> float:
    """Simpson approximation of ``int_a^b w(x) f(x) dx`` for a 1-d model.

    ``weight`` is ``"one"`` or ``"x"``.
    """
    if model.d != 1:
        raise DimensionMismatchError(f"1-d integration needs a 1-d model, got d={model.d}")
    a, b = float(a), float(b)
    _check_bounds(a, b)
    a, b = _clip(model, 0, a, b)
    if a >= b:
        return 0.0
    x, w = simpson_weights(a, b, resolution)
    f = kde_eval_batch(model, x)
    if weight == "x":
        f = f * x
    elif weight != "one":
        raise DataError(f"weight must be 'one' or 'x', got {weight!r}")
    return float(np.dot(w, f))


def _separable(model: KdeModel, axes) -> np.ndarray | None:
    # per-axis kernel variances when the kernel factorises over the two axes
    bw = model.bandwidth
    if isinstance(bw, MatrixBandwidth):
        ax, ay = axes
        if bw.H[ax, ay] != 0.0:
            return None
        return np.array([bw.H[ax, ax], bw.H[ay, ay]])
    return np.array([bw.h * bw.h, bw.h * bw.h])


def _axis_kernel(col: np.ndarray, nodes: np.ndarray, var: float) -> np.ndarray:
    u = nodes[None, :] - col[:, None]
    return np.exp(-0.5 * u * u / var) / math.sqrt(2.0 * math.pi * var)


def moments_2d(model: KdeModel, xb, yb, axes=(0, 1),
               resolution: int = DEFAULT_RESOLUTION) -> tuple[float, float, float]:
    """Tensor-product Simpson integrals of ``f``, ``x f`` and ``y f`` over a rectangle.

    When the kernel factorises over the two axes (scalar ``h`` or a
    bandwidth matrix with a zero cross term) the double sum is evaluated
    axis by axis in ``O(n * resolution)``; otherwise the density is
    evaluated on the full node grid.
    """
    if model.d != 2:
        raise DimensionMismatchError(f"2-d integration needs a 2-d model, got d={model.d}")
    ax, ay = axes
    for axis in axes:
        _check_axis(model, axis)
    if ax == ay:
        raise DataError("the two range columns must differ")
    a, b = _clip(model, ax, *map(float, xb))
    c, d = _clip(model, ay, *map(float, yb))
    if a >= b or c >= d:
        return 0.0, 0.0, 0.0
    x, wx = simpson_weights(a, b, resolution)
    y, wy = simpson_weights(c, d, resolution)
    var = _separable(model, axes)
    if var is not None:
        Kx = _axis_kernel(model.data.data[ax], x, var[0])
        Ky = _axis_kernel(model.data.data[ay], y, var[1])
        px, pxx = Kx @ wx, Kx @ (wx * x)
        py, pyy = Ky @ wy, Ky @ (wy * y)
        n = model.n
        return (float(px @ py) / n, float(pxx @ py) / n, float(px @ pyy) / n)
    pts = np.empty((x.size * y.size, 2))
    pts[:, ax] = np.repeat(x, y.size)
    pts[:, ay] = np.tile(y, x.size)
    f = kde_eval_batch(model, pts).reshape(x.size, y.size)
    fy = f @ wy
    return float(wx @ fy), float((wx * x) @ fy), float(wx @ (f @ (wy * y)))


def integrate_2d(model: KdeModel, xb, yb, weight: str = "one", axes=(0, 1),
                 resolution: int = DEFAULT_RESOLUTION) -> float:
    """Tensor-product Simpson integral over a rectangle of a 2-d model.

    ``axes`` names the model dimensions playing ``x`` and ``y``; ``weight``
    is ``"one"``, ``"x"`` or ``"y"``.
    """
    if weight not in ("one", "x", "y"):
        raise DataError(f"weight must be 'one', 'x' or 'y', got {weight!r}")
    m = moments_2d(model, xb, yb, axes, resolution)
    return m[("one", "x", "y").index(weight)]


def _sum_weight(query: RangeQuery) -> str:
    target = query.column if query.sum_column is None else query.sum_column
    if target == query.column:
        return "x"
    if target == query.column2:
        return "y"
    raise DataError("sum_column must be one of the range columns")


def _integral(model: KdeModel, query: RangeQuery, weighted: bool) -> float:
    _check_axis(model, query.column)
    if not query.is_2d:
        if model.d != 1:
            raise DimensionMismatchError("1-d range queries need a 1-d model")
        return integrate_1d(model, *query.bounds, weight="x" if weighted else "one",
                            resolution=query.resolution)
    weight = _sum_weight(query) if weighted else "one"
    return integrate_2d(model, query.bounds, query.bounds2, weight,
                        axes=(query.column, query.column2), resolution=query.resolution)


def aqp_count(model: KdeModel, query: RangeQuery) -> float:
    """Estimated number of records inside the range."""
    return model.n * _integral(model, query, weighted=False)


def aqp_sum(model: KdeModel, query: RangeQuery) -> float:
    """Estimated sum of the summed column over records inside the range."""
    return model.n * _integral(model, query, weighted=True)


def aqp_avg(model: KdeModel, query: RangeQuery) -> float:
    """Estimated average; raises :class:`EmptyRangeEstimateError` on a near-empty range."""
    if query.is_2d:
        weight = _sum_weight(query)
        m = moments_2d(model, query.bounds, query.bounds2, (query.column, query.column2),
                       query.resolution)
        count, total = model.n * m[0], model.n * m[1 if weight == "x" else 2]
    else:
        count, total = aqp_count(model, query), None
    if count < 1e-9 * model.n:
        raise EmptyRangeEstimateError(f"estimated count {count} is too small for an average")
    if total is None:
        total = aqp_sum(model, query)
    return total / count


def run_query(model: KdeModel, query: RangeQuery) -> float:
    return {"count": aqp_count, "sum": aqp_sum, "avg": aqp_avg}[query.aggregate](model, query)
