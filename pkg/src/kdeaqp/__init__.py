"""Kernel density estimation, bandwidth selection and approximate range queries."""

from .aqp import RangeQuery, aqp_avg, aqp_count, aqp_sum, run_query
from .bandwidth import (
    LscvHConfig,
    LscvHMatrixConfig,
    MatrixBandwidth,
    ScalarBandwidth,
    lscv_H_bandwidth,
    lscv_H_objective,
    lscv_h_bandwidth,
    plugin_bandwidth,
)
from .dataset import Dataset, load_csv, write_csv
from .errors import KdeError
from .kde import KdeModel, kde_eval, kde_eval_batch
from .pairwise import TileGeometry
from .reduce import ExecMode, ReductionPlan, reduce_map_sum, reduce_sum

__version__ = "0.1.0"

__all__ = [
    "Dataset", "load_csv", "write_csv", "KdeError", "ExecMode", "ReductionPlan",
    "reduce_sum", "reduce_map_sum", "TileGeometry", "ScalarBandwidth", "MatrixBandwidth",
    "LscvHConfig", "LscvHMatrixConfig", "plugin_bandwidth", "lscv_h_bandwidth",
    "lscv_H_bandwidth", "lscv_H_objective", "KdeModel", "kde_eval", "kde_eval_batch",
    "RangeQuery", "aqp_count", "aqp_sum", "aqp_avg", "run_query",
]
