"""Derivative-free Nelder-Mead simplex minimizer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

REFLECT = 1.0
EXPAND = 2.0
CONTRACT = 0.5
SHRINK = 0.5


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    iterations: int
    evaluations: int
    converged: bool


def initial_simplex(x0, scale: float = 0.1) -> np.ndarray:
    """Start point plus one vertex per coordinate, offset by ``scale * x0[i]``.

    Coordinates that are zero are offset by ``scale`` times the largest
    absolute coordinate instead (or by ``scale`` if all are zero).
    """
    x0 = np.asarray(x0, dtype=np.float64)
    m = x0.size
    fallback = scale * (float(np.max(np.abs(x0))) or 1.0)
    sim = np.tile(x0, (m + 1, 1))
    for i in range(m):
        step = scale * x0[i]
        sim[i + 1, i] += step if step != 0.0 else fallback
    return sim


def minimize(fun, x0, *, max_iterations: int = 500, ftol: float = 1e-7,
             scale: float = 0.1, simplex=None) -> SimplexResult:
    """Minimize ``fun`` starting from ``x0``.

    Stops once ``f_worst - f_best <= ftol * max(|f_best|, tiny)`` or after
    ``max_iterations`` iterations.  The best vertex never gets worse, so the
    returned value is at most ``fun(x0)``.
    """
    sim = np.array(simplex if simplex is not None else initial_simplex(x0, scale), dtype=np.float64)
    fvals = np.array([fun(v) for v in sim], dtype=np.float64)
    nfev = len(sim)
    it = 0
    converged = False
    tiny = np.finfo(float).tiny

    while True:
        order = np.argsort(fvals, kind="stable")
        sim, fvals = sim[order], fvals[order]
        if fvals[-1] - fvals[0] <= ftol * max(abs(fvals[0]), tiny):
            converged = True
            break
        if it >= max_iterations:
            break
        it += 1

        centroid = sim[:-1].mean(axis=0)
        worst = sim[-1]
        xr = centroid + REFLECT * (centroid - worst)
        fr = fun(xr)
        nfev += 1

        if fr < fvals[0]:
            xe = centroid + EXPAND * (xr - centroid)
            fe = fun(xe)
            nfev += 1
            if fe < fr:
                sim[-1], fvals[-1] = xe, fe
            else:
                sim[-1], fvals[-1] = xr, fr
        elif fr < fvals[-2]:
            sim[-1], fvals[-1] = xr, fr
        else:
            if fr < fvals[-1]:
                xc = centroid + CONTRACT * (xr - centroid)
                fc = fun(xc)
                nfev += 1
                accept = fc <= fr
            else:
                xc = centroid + CONTRACT * (worst - centroid)
                fc = fun(xc)
                nfev += 1
                accept = fc < fvals[-1]
            if accept:
                sim[-1], fvals[-1] = xc, fc
            else:
                best = sim[0].copy()
                for i in range(1, len(sim)):
                    sim[i] = best + SHRINK * (sim[i] - best)
                    fvals[i] = fun(sim[i])
                    nfev += 1

    return SimplexResult(sim[0].copy(), float(fvals[0]), it, nfev, converged)
