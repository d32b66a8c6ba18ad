"""Edge-scaling experiments: rescaled kernels against the Airy limit.

The finite-n reproducing kernel, zoomed at the right arc endpoint on the
n^{-2/3} scale, is compared pointwise with the scaled Airy kernel.  The
finite-n kernel is complex Hermitian with a gauge (pure-phase) freedom that
cancels in all determinants, so pointwise comparisons use the modulus,
which is gauge invariant and reduces to the kernel itself on the diagonal.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass

import numpy as np

from .airy import airy_kernel
from .cmv import truncation_size
from .equilibrium import edge_constants, solve_support
from .opuc import KernelEvaluator, WeightSpec, build_vseq, kernel_matrix


@dataclass
class ConvergenceTable:
    rows: list                  # dicts: n, x, y, kn_value, limit_value, abs_err
    sup_errors: dict            # n -> sup over grid
    fitted_exponent: float

    def write_csv(self, path):
        tmp = path + ".tmp"
        with open(tmp, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["n", "x", "y", "kn_value", "limit_value", "abs_err"])
            for r in self.rows:
                wr.writerow([r["n"], f"{r['x']:.17g}", f"{r['y']:.17g}",
                             f"{r['kn_value']:.17g}", f"{r['limit_value']:.17g}",
                             f"{r['abs_err']:.17g}"])
        os.replace(tmp, path)

    def write_summary(self, path):
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            json.dump({"fitted_exponent": self.fitted_exponent,
                       "sup_errors": {str(k): v for k, v in
                                      sorted(self.sup_errors.items())}},
                      fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)


def make_kernel_evaluator(pot, n, precision_bits=0, cache_dir=None,
                          extra: int = 0) -> KernelEvaluator:
    """Weight + Verblunsky data sized for edge work at matrix size n."""
    m = truncation_size(n) + extra + 1
    vseq = build_vseq(pot, n, m, precision_bits=precision_bits,
                      directory=cache_dir)
    return KernelEvaluator(weight=WeightSpec(pot=pot, n=n,
                                             precision_bits=vseq.precision_bits),
                           vseq=vseq, m=n)


def rescaled_kernel(ke: KernelEvaluator, eq, x, y, n: int,
                    window_frac: float = 0.1):
    """|K_n(theta + x n^{-2/3}, theta + y n^{-2/3})| n^{-2/3} (gauge-fixed
    by modulus; real and nonnegative, equal to the kernel on the diagonal)."""
    cap = window_frac * eq.theta * n ** (2.0 / 3.0)
    if abs(x) > cap or abs(y) > cap:
        raise ValueError("arguments outside the edge-scaling window")
    h = n ** (-2.0 / 3.0)
    M = kernel_matrix(ke, [eq.theta + x * h, eq.theta + y * h])
    return float(np.abs(M[0, 1])) * h if x != y else float(M[0, 0].real) * h


def limit_kernel(ec, x, y) -> float:
    """Scaled Airy limit a^{-2} b^{-4} Q_Ai(a^{-1}b^{-2} x, a^{-1}b^{-2} y)."""
    g = 1.0 / (ec.a * ec.b * ec.b)
    return float(g * g * airy_kernel(g * x, g * y))


def rescaled_kernel_grid(ke: KernelEvaluator, eq, grid, n: int) -> np.ndarray:
    """|K_n| on a grid x grid mesh of edge coordinates, in one Gram pass."""
    h = n ** (-2.0 / 3.0)
    lams = eq.theta + np.asarray(grid) * h
    return np.abs(kernel_matrix(ke, lams)) * h


def correlation_determinants(ke: KernelEvaluator, eq, ec, points, n: int):
    """Rescaled l-point correlation determinant at edge offsets t_1..t_l
    (the gamma n^{2/3} units of the marginal-density normalization), and
    the Airy-limit determinant it converges to."""
    points = np.asarray(points, dtype=float)
    if len(points) > 4:
        raise ValueError("desk scale handles l <= 4")
    if len(np.unique(points)) != len(points):
        raise ValueError("points must be distinct")
    scale = ec.gamma * n ** (2.0 / 3.0)
    lams = eq.theta + points / scale
    M = kernel_matrix(ke, lams) / scale
    det_n = float(np.linalg.det(M).real)
    g = 1.0 / (ec.a * ec.b * ec.b)
    X = points[:, None]
    Y = points[None, :]
    limit = float(np.linalg.det(g * g * airy_kernel(g * X, g * Y)))
    return det_n, limit


def convergence_study(pot, n_list, grid, precision_bits=0,
                      cache_dir=None) -> ConvergenceTable:
    """Sup-grid error of the edge-rescaled kernel against the Airy limit,
    with a log-log decay-exponent fit across n."""
    n_list = sorted(n_list)
    grid = np.asarray(grid, dtype=float)
    eq = solve_support(pot)
    ec = edge_constants(eq, pot)
    lim = np.empty((len(grid), len(grid)))
    for i, x in enumerate(grid):
        for j, y in enumerate(grid):
            lim[i, j] = limit_kernel(ec, x, y)
    rows = []
    sup_errors = {}
    for n in n_list:
        ke = make_kernel_evaluator(pot, n, precision_bits, cache_dir)
        vals = rescaled_kernel_grid(ke, eq, grid, n)
        err = np.abs(vals - np.abs(lim))
        sup_errors[n] = float(err.max())
        for i, x in enumerate(grid):
            for j, y in enumerate(grid):
                rows.append({"n": n, "x": float(x), "y": float(y),
                             "kn_value": float(vals[i, j]),
                             "limit_value": float(lim[i, j]),
                             "abs_err": float(err[i, j])})
    ns = np.array(n_list, dtype=float)
    sups = np.array([sup_errors[n] for n in n_list])
    slope = np.polyfit(np.log(ns), np.log(sups), 1)[0]
    return ConvergenceTable(rows=rows, sup_errors=sup_errors,
                            fitted_exponent=float(-slope))
