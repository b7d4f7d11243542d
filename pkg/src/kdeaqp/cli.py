"""Command-line front end.

Exit status: 0 on success, 1 on a data or numeric error (message on
stderr), 2 on a usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import statistics
import sys
import time

import numpy as np

from . import __version__
from .aqp import DEFAULT_RESOLUTION, RangeQuery, run_query
from .bandwidth import (
    LscvHConfig,
    LscvHMatrixConfig,
    MatrixBandwidth,
    ScalarBandwidth,
    lscv_H_bandwidth,
    lscv_H_objective,
    lscv_H_start,
    lscv_h_bandwidth,
    plugin_bandwidth,
)
from .dataset import load_csv
from .errors import KdeError
from .kde import KdeModel, kde_eval_batch
from .linalg import vech
from .reduce import ExecMode
from .synthetic import gaussian_dataset

BENCH_DEFAULTS = {
    "plugin": {"n": [1024, 2048, 4096, 8192, 16384, 32768], "d": [1]},
    "lscv-h": {"n": [64, 128, 256, 512, 1024], "d": list(range(1, 17))},
    "lscv-matrix": {"n": [1024, 2048, 4096, 8192, 16384], "d": list(range(1, 17))},
}
MATRIX_BENCH_EVALS = 100


class _Timer:
    def __init__(self):
        self.phases = {}

    def __call__(self, name):
        timer = self

        class _Phase:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                timer.phases[name] = (time.perf_counter() - self.t0) * 1e3

        return _Phase()


def _mode(text):
    try:
        return ExecMode.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _range(text):
    lo, sep, hi = text.partition(":")
    if not sep:
        raise argparse.ArgumentTypeError(f"range must look like A:B, got {text!r}")
    try:
        a = float(lo) if lo.strip() else -math.inf
        b = float(hi) if hi.strip() else math.inf
    except ValueError:
        raise argparse.ArgumentTypeError(f"range bounds must be numbers, got {text!r}") from None
    return a, b


def _range_text(bounds):
    # strict JSON has no infinities; echo unbounded sides as empty, like the input syntax
    return ":".join("" if math.isinf(v) else repr(v) for v in bounds)


def _add_input(p):
    p.add_argument("--input", required=True, help="CSV file, one sample per row")
    p.add_argument("--header", action="store_true", help="skip the first CSV row")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--mode", type=_mode, default=ExecMode.sequential(),
                   help="seq, vec or thr[:K] (default seq)")
    p.add_argument("--json", action="store_true", help="emit one JSON object")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kdeaqp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    bw = sub.add_parser("bandwidth", help="select a bandwidth")
    bw_sub = bw.add_subparsers(dest="method", required=True)
    p = bw_sub.add_parser("plugin", help="univariate plug-in selector")
    _add_input(p)
    p = bw_sub.add_parser("lscv-h", help="LSCV grid search for a scalar h")
    _add_input(p)
    p.add_argument("--grid", type=int, default=150)
    p = bw_sub.add_parser("lscv-matrix", help="LSCV Nelder-Mead search for a matrix H")
    _add_input(p)
    p.add_argument("--max-iter", type=int, default=500)

    kde = sub.add_parser("kde", help="evaluate a density estimate")
    kde_sub = kde.add_subparsers(dest="action", required=True)
    p = kde_sub.add_parser("eval")
    _add_input(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--h", type=float, help="scalar bandwidth")
    g.add_argument("--H-file", dest="H_file", help="CSV file holding the d x d bandwidth matrix")
    p.add_argument("--points", required=True, help="CSV file of evaluation points")

    aqp = sub.add_parser("aqp", help="approximate range aggregate")
    aqp.add_argument("aggregate", choices=["count", "sum", "avg"])
    _add_input(aqp)
    aqp.add_argument("--col", type=int, required=True, help="0-based CSV column")
    aqp.add_argument("--range", dest="range_", type=_range, required=True, metavar="A:B",
                     help="bounds; empty side means unbounded (use --range=-1:2 for negatives)")
    aqp.add_argument("--col2", type=int)
    aqp.add_argument("--range2", type=_range, metavar="C:D")
    aqp.add_argument("--resolution", type=int, default=DEFAULT_RESOLUTION,
                     help="Simpson intervals per axis")
    g = aqp.add_mutually_exclusive_group()
    g.add_argument("--h", type=float)
    g.add_argument("--select", choices=["plugin", "lscv-h", "lscv-matrix"])

    bench = sub.add_parser("bench", help="time a selector against the sequential mode")
    bench.add_argument("--algo", required=True, choices=sorted(BENCH_DEFAULTS))
    bench.add_argument("--n", type=int, action="append", help="sample count (repeatable)")
    bench.add_argument("--d", type=int, action="append", help="dimension (repeatable)")
    bench.add_argument("--mode", type=_mode, default=ExecMode.threaded())
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--repeat", type=int, default=3)
    bench.add_argument("--json", action="store_true")
    return parser


# -- result helpers -----------------------------------------------------------

def _bandwidth_result(bw) -> dict:
    if isinstance(bw, MatrixBandwidth):
        return {"d": bw.d, "vech_H": vech(bw.H).tolist(), "objective": bw.objective,
                "iterations": bw.iterations}
    out = {"h": bw.h}
    trace = bw.trace
    if trace is not None and hasattr(trace, "psi4"):
        out["trace"] = {k: getattr(trace, k) for k in
                        ("V_hat", "sigma_hat", "psi8_NS", "g1", "psi6", "g2", "psi4")}
    elif trace is not None:
        out["h0"] = trace.h0
    return out


def _select(method: str, data, mode: ExecMode, grid: int = 150, max_iter: int = 500):
    if method == "plugin":
        return plugin_bandwidth(data, mode)
    if method == "lscv-h":
        return lscv_h_bandwidth(data, LscvHConfig(n_grid=grid, exec=mode))
    return lscv_H_bandwidth(data, LscvHMatrixConfig(max_iterations=max_iter, exec=mode))


def _emit(record: dict, as_json: bool, out) -> None:
    if as_json:
        json.dump(record, out, sort_keys=True)
        out.write("\n")
        return

    def walk(prefix, value):
        if isinstance(value, dict):
            for k in sorted(value):
                walk(f"{prefix}.{k}" if prefix else k, value[k])
        elif isinstance(value, list) and value and isinstance(value[0], dict):
            for i, item in enumerate(value):
                walk(f"{prefix}[{i}]", item)
        elif isinstance(value, list):
            out.write(f"{prefix}: {' '.join(repr(v) for v in value)}\n")
        else:
            out.write(f"{prefix}: {value!r}\n" if isinstance(value, float) else f"{prefix}: {value}\n")

    walk("", record)


# -- commands -------------------------------------------------------------------

def _cmd_bandwidth(args, timer):
    with timer("load"):
        data = load_csv(args.input, args.header, args.delimiter)
    with timer("select"):
        bw = _select(args.method, data, args.mode, getattr(args, "grid", 150),
                     getattr(args, "max_iter", 500))
    params = {"input": args.input, "n": data.n, "d": data.d, "mode": args.mode.short}
    if args.method == "lscv-h":
        params["grid"] = args.grid
    if args.method == "lscv-matrix":
        params["max_iter"] = args.max_iter
    return f"bandwidth {args.method}", params, _bandwidth_result(bw)


def _cmd_kde(args, timer):
    with timer("load"):
        data = load_csv(args.input, args.header, args.delimiter)
        points = load_csv(args.points, args.header, args.delimiter)
        H = None
        if args.H_file:
            H = load_csv(args.H_file, False, args.delimiter).samples()
    with timer("eval"):
        model = (KdeModel.with_h(data, args.h, mode=args.mode) if H is None
                 else KdeModel.with_H(data, H, mode=args.mode))
        values = kde_eval_batch(model, points.samples())
    params = {"input": args.input, "points": args.points, "n": data.n, "d": data.d,
              "mode": args.mode.short}
    if H is None:
        params["h"] = args.h
    else:
        params["vech_H"] = vech(H).tolist()
    return "kde eval", params, {"density": values.tolist()}


def _cmd_aqp(args, timer):
    if (args.col2 is None) != (args.range2 is None):
        raise KdeError("--col2 and --range2 must be given together")
    with timer("load"):
        full = load_csv(args.input, args.header, args.delimiter)
        cols = [args.col] if args.col2 is None else [args.col, args.col2]
        data = full.select(cols)
    with timer("select"):
        if args.h is not None:
            bw = ScalarBandwidth(args.h)
            method = "fixed"
        else:
            method = args.select or ("plugin" if data.d == 1 else "lscv-h")
            bw = _select(method, data, args.mode)
        model = KdeModel(data, bw, mode=args.mode)
    with timer("query"):
        if data.d == 1:
            query = RangeQuery(args.aggregate, 0, args.range_, resolution=args.resolution)
        else:
            query = RangeQuery(args.aggregate, 0, args.range_, 1, args.range2,
                               resolution=args.resolution)
        value = run_query(model, query)
    params = {"input": args.input, "n": data.n, "col": args.col, "range": _range_text(args.range_),
              "bandwidth_method": method, "resolution": args.resolution, "mode": args.mode.short}
    if args.col2 is not None:
        params.update(col2=args.col2, range2=_range_text(args.range2))
    result = {"aggregate": args.aggregate, "value": value, "bandwidth": _bandwidth_result(bw)}
    return f"aqp {args.aggregate}", params, result


def _bench_once(algo, data, mode):
    if algo == "plugin":
        return plugin_bandwidth(data, mode).h
    if algo == "lscv-h":
        return lscv_h_bandwidth(data, LscvHConfig(exec=mode)).h
    H = lscv_H_start(data)
    value = math.nan
    for _ in range(MATRIX_BENCH_EVALS):
        value = lscv_H_objective(H, data, mode)
    return value


def _time(algo, data, mode, repeat):
    times, value = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        value = _bench_once(algo, data, mode)
        times.append((time.perf_counter() - t0) * 1e3)
    return statistics.median(times), value


def _cmd_bench(args, timer):
    ns = args.n or BENCH_DEFAULTS[args.algo]["n"]
    ds = args.d or BENCH_DEFAULTS[args.algo]["d"]
    if args.algo == "plugin" and any(d != 1 for d in ds):
        raise KdeError("plugin benchmarks are univariate (--d 1)")
    seq = ExecMode.sequential()
    rows = []
    with timer("bench"):
        for d in ds:
            for n in ns:
                data = gaussian_dataset(n, d, args.seed)
                seq_ms, seq_val = _time(args.algo, data, seq, args.repeat)
                if args.mode == seq:
                    mode_ms, mode_val = seq_ms, seq_val
                else:
                    mode_ms, mode_val = _time(args.algo, data, args.mode, args.repeat)
                rows.append({"n": n, "d": d, "seq_ms": seq_ms, "mode_ms": mode_ms,
                             "speedup": seq_ms / mode_ms if mode_ms > 0 else math.nan,
                             "value_seq": seq_val, "value_mode": mode_val})
    params = {"algo": args.algo, "mode": args.mode.short, "threads": args.mode.threads,
              "seed": args.seed, "repeat": args.repeat}
    if args.algo == "lscv-matrix":
        params["objective_evaluations"] = MATRIX_BENCH_EVALS
    return "bench", params, {"rows": rows}


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    timer = _Timer()
    handler = {"bandwidth": _cmd_bandwidth, "kde": _cmd_kde, "aqp": _cmd_aqp,
               "bench": _cmd_bench}[args.command]
    try:
        command, params, result = handler(args, timer)
    except (KdeError, FileNotFoundError, ValueError, ArithmeticError) as exc:
        print(f"kdeaqp: error: {exc}", file=stderr)
        return 1
    record = {"command": command, "params": params, "result": result,
              "timings_ms": timer.phases}
    _emit(record, args.json, stdout)
    return 0


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
