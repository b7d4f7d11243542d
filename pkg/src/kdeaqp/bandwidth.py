"""Bandwidth selectors: univariate plug-in, scalar LSCV and full-matrix LSCV.

All three share the Gaussian kernel.  The heavy sums go through the
pairwise and reduction kernels, so every selector honours the execution
mode and the engine precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import neldermead
from .dataset import Dataset
from .errors import (
    DegenerateDataError,
    DimensionMismatchError,
    InsufficientSamplesError,
    NoFeasiblePointError,
    NonPositiveBandwidthError,
    NotUnivariateError,
    SingularCovarianceError,
)
from .linalg import (
    CovarianceSummary,
    check_dimension,
    covariance,
    determinant,
    inverse,
    is_positive_definite,
    sqrt_spd,
    unvech,
    vech,
)
from .pairwise import (
    TileGeometry,
    TriangularBuffer,
    fused_quadratic_map_sum,
    pairwise_map_sum,
    precompute_quadratic_forms,
)
from .reduce import ExecMode, ReductionPlan, reduce_map_sum, reduce_sum, split_range, thread_pool

SQRT_PI = math.sqrt(math.pi)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# Gaussian kernel functionals
K4_AT_0 = 3.0 * INV_SQRT_2PI
K6_AT_0 = -15.0 * INV_SQRT_2PI
R_K = 1.0 / (2.0 * SQRT_PI)
MU2_K = 1.0

DEFAULT_PENALTY = 1e300


def _as_dataset(X) -> Dataset:
    return X if isinstance(X, Dataset) else Dataset(np.asarray(X, dtype=np.float64))


# -- result types -----------------------------------------------------------

@dataclass(frozen=True)
class PluginTrace:
    V_hat: float
    sigma_hat: float
    psi8_NS: float
    g1: float
    psi6: float
    g2: float
    psi4: float
    h: float


@dataclass(frozen=True, eq=False)
class LscvTrace:
    h0: float
    grid: np.ndarray
    objective: np.ndarray
    det_sigma: float


@dataclass(frozen=True)
class ScalarBandwidth:
    h: float
    trace: object = None

    def __post_init__(self):
        if not self.h > 0:
            raise NonPositiveBandwidthError(f"bandwidth must be positive, got {self.h}")


@dataclass(frozen=True, eq=False)
class MatrixBandwidth:
    H: np.ndarray
    objective: float = math.nan
    iterations: int = 0
    evaluations: int = 0

    def __post_init__(self):
        H = np.asarray(self.H, dtype=np.float64)
        if H.ndim != 2 or not np.array_equal(H, H.T) or not is_positive_definite(H):
            raise NonPositiveBandwidthError("bandwidth matrix must be symmetric positive-definite")
        object.__setattr__(self, "H", H)

    @property
    def d(self) -> int:
        return self.H.shape[0]


@dataclass
class OperationProbe:
    """Counts work done by the LSCV_h pipeline.

    ``quadratic_form_passes`` counts calls that build the triangular buffer
    and ``quadratic_form_flops`` their multiply-adds (``d*d`` per pair).
    ``objective_elements`` counts buffer entries consumed by objective
    evaluations; it carries no factor of ``d``.
    """

    quadratic_form_passes: int = 0
    quadratic_form_flops: int = 0
    objective_evaluations: int = 0
    objective_elements: int = 0


# -- plug-in ------------------------------------------------------------------

def k4(x):
    """Fourth derivative of the standard normal density (Horner form)."""
    t = x * x
    return ((t - 6.0) * t + 3.0) * np.exp(-0.5 * t) * INV_SQRT_2PI


def k6(x):
    """Sixth derivative of the standard normal density (Horner form)."""
    t = x * x
    return (((t - 15.0) * t + 45.0) * t - 15.0) * np.exp(-0.5 * t) * INV_SQRT_2PI


def plugin_bandwidth(X, mode: ExecMode | None = None, geom: TileGeometry | None = None) -> ScalarBandwidth:
    """Two-stage plug-in bandwidth for univariate data.

    Estimates the density functionals psi_6 and psi_4 with pilot bandwidths
    ``g1`` and ``g2`` derived from a normal-scale psi_8, then returns
    ``h = (R(K) / (mu_2(K)^2 psi_4 n))^(1/5)``.  Each functional estimate is
    ``(2 * sum_{i<j} K^(r)((X_i - X_j)/g) + n K^(r)(0)) / (n^2 g^(r+1))``.
    The returned :class:`ScalarBandwidth` carries a :class:`PluginTrace`.
    """
    X = _as_dataset(X)
    mode = mode or ExecMode.sequential()
    if X.d != 1:
        raise NotUnivariateError(f"plug-in selector needs d = 1, got d = {X.d}")
    n = X.n
    if n < 2:
        raise InsufficientSamplesError(f"plug-in selector needs n >= 2, got {n}")
    x = X.data[0]
    if np.ptp(x) == 0.0:
        raise DegenerateDataError("all samples are equal")

    plan = ReductionPlan(mode=mode)
    s1 = reduce_sum(x, plan)
    s2 = reduce_map_sum(x, np.square, plan)
    V = s2 / (n - 1) - s1 * s1 / (n * (n - 1))
    if not V > 0:
        raise DegenerateDataError(f"variance estimate {V} is not positive")
    sigma = math.sqrt(V)
    psi8 = 105.0 / (32.0 * SQRT_PI * sigma ** 9)
    g1 = (-2.0 * K6_AT_0 / (MU2_K * psi8 * n)) ** (1.0 / 9.0)

    inv_g1 = 1.0 / g1
    s6 = pairwise_map_sum(x, lambda u: k6(u * inv_g1), geom, mode)
    psi6 = (2.0 * s6 + n * K6_AT_0) / (n * n * g1 ** 7)
    if not psi6 < 0:
        raise DegenerateDataError(f"psi_6 estimate {psi6} is not negative")
    g2 = (-2.0 * K4_AT_0 / (MU2_K * psi6 * n)) ** (1.0 / 7.0)

    inv_g2 = 1.0 / g2
    s4 = pairwise_map_sum(x, lambda u: k4(u * inv_g2), geom, mode)
    psi4 = (2.0 * s4 + n * K4_AT_0) / (n * n * g2 ** 5)
    if not psi4 > 0:
        raise DegenerateDataError(f"psi_4 estimate {psi4} is not positive")
    h = (R_K / (MU2_K ** 2 * psi4 * n)) ** 0.2

    trace = PluginTrace(V, sigma, psi8, g1, psi6, g2, psi4, h)
    return ScalarBandwidth(h, trace)


# -- LSCV with a scalar bandwidth ---------------------------------------------

@dataclass(frozen=True)
class LscvHConfig:
    n_grid: int = 150
    range_factor: float = 4.0
    exec: ExecMode = field(default_factory=ExecMode.sequential)
    geom: TileGeometry = field(default_factory=TileGeometry)

    def __post_init__(self):
        if self.n_grid < 2:
            raise ValueError("n_grid must be >= 2")
        if not self.range_factor > 1:
            raise ValueError("range_factor must be > 1")


def lscv_h_reference_bandwidth(n: int, d: int) -> float:
    """Normal-reference starting bandwidth that centres the LSCV_h search."""
    rk_over_mu2 = 1.0 / (2.0 ** d * math.pi ** (d / 2) * d ** 2)
    r_f2 = d * (d + 2) / (2.0 ** (d + 2) * math.pi ** (d / 2))
    return (rk_over_mu2 / (r_f2 * n)) ** (1.0 / (d + 4))


def lscv_h_grid(h0: float, n_grid: int = 150, range_factor: float = 4.0) -> np.ndarray:
    """Equally spaced candidates on ``[h0/range_factor, h0*range_factor]``."""
    return np.linspace(h0 / range_factor, h0 * range_factor, n_grid)


def _lscv_h_constants(det_sigma: float, d: int) -> tuple[float, float]:
    root = det_sigma ** -0.5
    return (4.0 * math.pi) ** (-d / 2) * root, (2.0 * math.pi) ** (-d / 2) * root


def lscv_h_objective(h: float, sv, det_sigma: float, n: int, d: int,
                     plan: ReductionPlan | None = None,
                     probe: OperationProbe | None = None) -> float:
    """LSCV score ``g(h)`` computed from precomputed quadratic forms ``sv``.

    ``sv`` holds ``S = (X_i - X_j)^T Sigma^-1 (X_i - X_j)`` for all ``i < j``
    (a :class:`TriangularBuffer` or a plain array), so each evaluation only
    maps ``exp(-S/(4h^2))`` and ``exp(-S/(2h^2))`` over the buffer.
    """
    if not h > 0:
        raise NonPositiveBandwidthError(f"bandwidth must be positive, got {h}")
    if not det_sigma > 0:
        raise SingularCovarianceError(f"covariance determinant {det_sigma} is not positive")
    values = sv.values if isinstance(sv, TriangularBuffer) else np.asarray(sv)
    c_kk, c_k = _lscv_h_constants(det_sigma, d)
    a_kk = -1.0 / (4.0 * h * h)
    a_k = -1.0 / (2.0 * h * h)

    def t_tilde(s):
        return c_kk * np.exp(a_kk * s) - 2.0 * c_k * np.exp(a_k * s)

    total = reduce_map_sum(values, t_tilde, plan) if values.size else 0.0
    if probe is not None:
        probe.objective_evaluations += 1
        probe.objective_elements += int(values.size)
    return h ** -d * (2.0 * total / (n * n) + c_kk / n)


def lscv_h_bandwidth(X, cfg: LscvHConfig | None = None,
                     probe: OperationProbe | None = None) -> ScalarBandwidth:
    """Grid-search LSCV bandwidth for a scalar ``h`` in any dimension.

    The quadratic forms are computed once; each of the ``cfg.n_grid``
    candidates then costs one pass over them.  Ties go to the smaller ``h``.
    """
    X = _as_dataset(X)
    cfg = cfg or LscvHConfig()
    check_dimension(X.d)
    n, d = X.n, X.d
    if n < 2:
        raise InsufficientSamplesError(f"LSCV needs n >= 2, got {n}")
    cov = CovarianceSummary.of(X)
    h0 = lscv_h_reference_bandwidth(n, d)
    grid = lscv_h_grid(h0, cfg.n_grid, cfg.range_factor)

    sv = precompute_quadratic_forms(X, cov.inv, cfg.geom, cfg.exec)
    if probe is not None:
        probe.quadratic_form_passes += 1
        probe.quadratic_form_flops += len(sv) * d * d

    mode = cfg.exec
    scores = np.empty(grid.size)
    if mode.kind == "threaded" and mode.threads > 1:
        inner = ReductionPlan(mode=ExecMode.vectorized())

        def run(rng):
            local = OperationProbe()
            for i in range(*rng):
                scores[i] = lscv_h_objective(grid[i], sv, cov.det, n, d, inner, local)
            return local

        for local in thread_pool(mode.threads).map(run, split_range(grid.size, mode.threads)):
            if probe is not None:
                probe.objective_evaluations += local.objective_evaluations
                probe.objective_elements += local.objective_elements
    else:
        plan = ReductionPlan(mode=mode)
        for i, h in enumerate(grid):
            scores[i] = lscv_h_objective(h, sv, cov.det, n, d, plan, probe)

    best = int(np.argmin(scores))
    return ScalarBandwidth(float(grid[best]), LscvTrace(h0, grid, scores, cov.det))


# -- LSCV with a full bandwidth matrix ---------------------------------------

@dataclass(frozen=True)
class LscvHMatrixConfig:
    max_iterations: int = 500
    tolerance: float = 1e-7
    initial_scale: float = 0.1
    penalty: float = DEFAULT_PENALTY
    exec: ExecMode = field(default_factory=ExecMode.sequential)
    geom: TileGeometry = field(default_factory=TileGeometry)

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


def rule_of_thumb_matrix(sigma, n: int) -> np.ndarray:
    """``(4/(d+2))^(1/(d+4)) n^(-1/(d+4)) Sigma^(1/2)``."""
    sigma = np.asarray(sigma, dtype=np.float64)
    d = sigma.shape[0]
    factor = (4.0 / (d + 2)) ** (1.0 / (d + 4)) * n ** (-1.0 / (d + 4))
    return factor * sqrt_spd(sigma)


def lscv_H_start(X) -> np.ndarray:
    """Rule-of-thumb starting matrix for the full-matrix LSCV search."""
    X = _as_dataset(X)
    sigma = covariance(X)
    if not is_positive_definite(sigma):
        raise SingularCovarianceError("covariance matrix is not positive-definite")
    return rule_of_thumb_matrix(sigma, X.n)


def lscv_H_objective(H, X, mode: ExecMode | None = None, geom: TileGeometry | None = None,
                     penalty: float = DEFAULT_PENALTY) -> float:
    """LSCV score ``g(H)`` for a bandwidth matrix.

    Returns ``penalty`` without touching the data when ``H`` is not
    positive-definite.
    """
    X = _as_dataset(X)
    H = np.asarray(H, dtype=np.float64)
    if H.ndim == 0:
        H = H.reshape(1, 1)
    d, n = X.d, X.n
    if H.shape != (d, d):
        raise DimensionMismatchError(f"H has shape {H.shape}, data has d={d}")
    if n < 2:
        raise InsufficientSamplesError("LSCV needs n >= 2")
    if not is_positive_definite(H):
        return penalty
    det_h = determinant(H)
    h_inv = inverse(H)
    root = det_h ** -0.5
    c_kk = (4.0 * math.pi) ** (-d / 2) * root
    c_k = (2.0 * math.pi) ** (-d / 2) * root

    def t_h(s):
        return c_kk * np.exp(-0.25 * s) - 2.0 * c_k * np.exp(-0.5 * s)

    total = fused_quadratic_map_sum(X, h_inv, t_h, geom, mode)
    r_k = 2.0 ** -d * math.pi ** (-d / 2) * root
    return 2.0 * total / (n * n) + r_k / n


def lscv_H_bandwidth(X, cfg: LscvHMatrixConfig | None = None) -> MatrixBandwidth:
    """Nelder-Mead search for the LSCV-optimal bandwidth matrix.

    The simplex lives in ``vech(H)`` coordinates and starts at the
    rule-of-thumb matrix; non-positive-definite candidates score
    ``cfg.penalty``.
    """
    X = _as_dataset(X)
    cfg = cfg or LscvHMatrixConfig()
    check_dimension(X.d)
    if X.n < 2:
        raise InsufficientSamplesError("LSCV needs n >= 2")
    d = X.d
    start = lscv_H_start(X)

    def objective(v):
        return lscv_H_objective(unvech(v, d), X, cfg.exec, cfg.geom, cfg.penalty)

    res = neldermead.minimize(objective, vech(start), max_iterations=cfg.max_iterations,
                              ftol=cfg.tolerance, scale=cfg.initial_scale)
    H = unvech(res.x, d)
    if not res.fun < cfg.penalty or not is_positive_definite(H):
        raise NoFeasiblePointError("no positive-definite bandwidth matrix was found")
    return MatrixBandwidth(H, res.fun, res.iterations, res.evaluations)
