"""Fredholm determinants of symmetric integral operators by Nystrom quadrature.

Gauss-Legendre nodes with symmetric square-root weighting keep the
discretized operator symmetric (Hermitian for complex kernels), so gap
probabilities come out as real determinants of I - W^{1/2} K W^{1/2}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quadrature import leggauss


class RefinementError(RuntimeError):
    """Doubling the rule moved the determinant more than the tolerance."""


@dataclass(frozen=True)
class QuadratureRule:
    intervals: tuple            # ((a, b), ...) disjoint and bounded
    order: int
    nodes: np.ndarray
    weights: np.ndarray

    @classmethod
    def build(cls, intervals, order):
        ivs = tuple((float(a), float(b)) for a, b in intervals)
        for a, b in ivs:
            if not (np.isfinite(a) and np.isfinite(b) and a < b):
                raise ValueError("intervals must be bounded with a < b")
        for (a1, b1), (a2, b2) in zip(sorted(ivs), sorted(ivs)[1:]):
            if b1 > a2:
                raise ValueError("intervals must be disjoint")
        if order < 1:
            raise ValueError("order must be positive")
        xg, wg = leggauss(order)
        nodes, weights = [], []
        for a, b in ivs:
            mid, half = 0.5 * (a + b), 0.5 * (b - a)
            nodes.append(mid + half * xg)
            weights.append(half * wg)
        return cls(intervals=ivs, order=order,
                   nodes=np.concatenate(nodes), weights=np.concatenate(weights))


@dataclass(frozen=True)
class GapProbability:
    value: float
    order: int
    refinement_delta: float

    def __post_init__(self):
        if not -1e-10 <= self.value <= 1.0 + 1e-10:
            raise ValueError(f"gap probability {self.value} outside [0, 1]")


def nystrom_det(kernel, intervals, order) -> float:
    """det(I - W^{1/2} K W^{1/2}) for a symmetric kernel on an interval union.

    `kernel` maps broadcastable arrays (x, y) to kernel values; an empty
    interval set gives the empty product 1.
    """
    intervals = tuple(intervals)
    if not intervals:
        return 1.0
    rule = QuadratureRule.build(intervals, order)
    X = rule.nodes[:, None]
    Y = rule.nodes[None, :]
    K = np.asarray(kernel(X, Y))
    if not np.all(np.isfinite(K.real)) or not np.all(np.isfinite(np.imag(K))):
        raise ValueError("kernel produced non-finite samples")
    root = np.sqrt(rule.weights)
    A = root[:, None] * K * root[None, :]
    det = np.linalg.det(np.eye(len(rule.nodes)) - A)
    if np.iscomplexobj(A):
        if abs(det.imag) > 1e-8 * max(1.0, abs(det.real)):
            raise ValueError("Hermitian discretization produced complex det")
        det = det.real
    return float(det)


def tracy_widom(s: float, tail: float = 12.0, order: int = 48,
                refine_tol: float = 1e-8) -> GapProbability:
    """F2(s) = det(I - Q_Ai on (s, infinity)), domain truncated at s + tail.

    Doubling both the order and the tail must move the value by less than
    the tolerance, otherwise the refinement error is raised.
    """
    from .airy import airy_kernel
    if tail < 8.0:
        raise ValueError("tail must be at least 8")
    if order < 32:
        raise ValueError("order must be at least 32")
    coarse = nystrom_det(airy_kernel, [(s, s + tail)], order)
    fine = nystrom_det(airy_kernel, [(s, s + 2.0 * tail)], 2 * order)
    delta = abs(fine - coarse)
    if delta > refine_tol:
        raise RefinementError(
            f"Tracy-Widom refinement moved by {delta:.2e} > {refine_tol:.0e}")
    return GapProbability(value=float(np.clip(fine, 0.0, 1.0)),
                          order=2 * order, refinement_delta=float(delta))


def finite_n_hole(ke, eq, ec, intervals, n: int, order: int = 40) -> GapProbability:
    """E_n for the edge window theta + Delta/(gamma n^{2/3}).

    Nodes t in Delta map to angles lam = theta + t/(gamma n^{2/3}); the
    change of variables divides the reproducing kernel by gamma n^{2/3}.
    """
    from .opuc import kernel_matrix
    intervals = tuple(intervals)
    if not intervals:
        return GapProbability(value=1.0, order=order, refinement_delta=0.0)
    scale = ec.gamma * n ** (2.0 / 3.0)

    def determinant(m):
        rule = QuadratureRule.build(intervals, m)
        lams = eq.theta + rule.nodes / scale
        if np.any(np.abs(lams) >= np.pi):
            raise ValueError("rescaled window leaves (-pi, pi)")
        K = kernel_matrix(ke, lams) / scale
        root = np.sqrt(rule.weights)
        A = root[:, None] * K * root[None, :]
        det = np.linalg.det(np.eye(len(lams)) - A)
        return float(det.real)

    coarse = determinant(order)
    fine = determinant(2 * order)
    return GapProbability(value=float(np.clip(fine, 0.0, 1.0)), order=2 * order,
                          refinement_delta=abs(fine - coarse))
