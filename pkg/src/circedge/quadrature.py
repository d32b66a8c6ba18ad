"""Shared quadrature helpers built on Gauss-Legendre and Chebyshev nodes."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


class QuadratureError(RuntimeError):
    """Raised when an adaptive rule fails to reach its target accuracy."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


@lru_cache(maxsize=64)
def leggauss(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def gl_panel(f, a, b, order=16):
    x, w = leggauss(order)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return half * np.sum(w * f(mid + half * x))


def composite_gl(f, edges, order=16):
    """Sum of Gauss-Legendre panels over consecutive edge pairs."""
    return sum(gl_panel(f, a, b, order) for a, b in zip(edges[:-1], edges[1:]))


def graded_edges(a, b, toward, n_panels=12, ratio=0.35):
    """Panel edges on [a, b] geometrically refined toward one endpoint.

    Geometric grading resolves endpoint branch singularities (sqrt, log)
    with spectral-per-panel accuracy.
    """
    if toward not in (a, b):
        raise ValueError("grading endpoint must be an interval end")
    lengths = ratio ** np.arange(n_panels)
    lengths = lengths / lengths.sum() * (b - a)
    if toward == a:
        widths = lengths[::-1]      # smallest panels first
    else:
        widths = lengths            # smallest panels last
    edges = a + np.concatenate(([0.0], np.cumsum(widths)))
    edges[-1] = b
    return edges


def adaptive_graded(f, a, b, toward, target=1e-10, order=16, max_panels=40):
    if b <= a:
        return 0.0
    prev = None
    for n_panels in (8, 12, 18, 26, max_panels):
        val = composite_gl(f, graded_edges(a, b, toward, n_panels), order)
        if prev is not None and abs(val - prev) <= target * max(1.0, abs(val)):
            return val
        prev = val
    raise QuadratureError("graded panel refinement stalled", estimate=abs(val - prev))


def chebyshev_t_nodes(m):
    """Nodes of the m-point Gauss-Chebyshev rule (weight 1/sqrt(1-s^2))."""
    i = np.arange(1, m + 1)
    return np.cos((2 * i - 1) * np.pi / (2 * m))


def chebyshev_u_rule(m):
    """Nodes/weights for the weight sqrt(1-t^2) on [-1, 1]."""
    i = np.arange(1, m + 1)
    th = i * np.pi / (m + 1)
    return np.cos(th), np.pi / (m + 1) * np.sin(th) ** 2
