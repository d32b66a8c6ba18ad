"""Equilibrium measure of the one-cut symmetric unitary matrix model.

The density on the support arc [-theta, theta] is assembled from the edge
factor chi(lam) = sqrt(cos lam - cos theta) and the smooth part

    P(lam) = int_{-theta}^{theta} [ (V(cos mu))' - (V(cos lam))' ]
             / sin((mu - lam)/2) * dmu / chi(mu),

and all edge constants of the n^{-2/3} scaling limit derive from theta and
P(theta).  The inverse-square-root endpoint behaviour of 1/chi is removed
exactly by the substitution sin(mu/2) = sin(theta/2) s, which turns the
integral into a Chebyshev-weight integral in s.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.optimize import brentq

from .potentials import Potential
from .quadrature import (QuadratureError, adaptive_graded, chebyshev_t_nodes,
                         chebyshev_u_rule, composite_gl, graded_edges)

_DQ_CUTOFF = 1e-8     # |mu - lam| below which the difference quotient is replaced
_C2_GRID = 257        # interior positivity check resolution


class SupportBracketError(RuntimeError):
    """No theta in (0, pi) carries unit mass: the model violates C1."""


class DensityPositivityError(RuntimeError):
    """The candidate density dips <= 0 inside the support (C2 failure)."""


@dataclass(frozen=True)
class EquilibriumData:
    pot: Potential
    theta: float
    normalization_residual: float

    def density(self, lam):
        return density(self.pot, self.theta, lam)

    def edge_constants(self):
        return edge_constants(self, self.pot)


@dataclass(frozen=True)
class EdgeConstants:
    P_at_edge: float
    p_theta: float
    gamma: float
    a: float
    b: float


def _difference_quotient(pot, mu, lam):
    """[(V(cos mu))' - (V(cos lam))'] / sin((mu-lam)/2), elementwise in mu."""
    mu = np.asarray(mu, dtype=float)
    d = mu - lam
    out = np.empty_like(mu)
    near = np.abs(d) < _DQ_CUTOFF
    far = ~near
    out[far] = (pot.angle_derivative(mu[far]) - pot.angle_derivative(lam)) \
        / np.sin(0.5 * d[far])
    if np.any(near):
        # second-order symmetric limit: 2 (V(cos .))'' at the midpoint
        out[near] = 2.0 * pot.angle_second_derivative(0.5 * (mu[near] + lam))
    return out


def p_function_batch(pot, theta, lams, m):
    """P(lam) for an array of angles using one m-point Chebyshev rule."""
    s = chebyshev_t_nodes(m)
    half = np.arcsin(np.sin(0.5 * theta) * s)
    mu = 2.0 * half
    pref = np.sqrt(2.0) / np.cos(half)          # sqrt(2) / cos(mu/2)
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    vals = np.empty_like(lams)
    for i, lam in enumerate(lams):
        vals[i] = (np.pi / m) * np.sum(pref * _difference_quotient(pot, mu, lam))
    return vals


def p_function(pot: Potential, theta: float, lam: float,
               target: float = 1e-12) -> float:
    """Smooth density factor P(lam) on |lam| <= theta."""
    if not 0.0 < theta < np.pi:
        raise ValueError("theta must lie in (0, pi)")
    if abs(lam) > theta + 1e-12:
        raise ValueError("p_function requires |lam| <= theta")
    prev = None
    for m in (64, 128, 256, 512, 1024, 2048):
        val = float(p_function_batch(pot, theta, [lam], m)[0])
        if prev is not None and abs(val - prev) <= target * max(1.0, abs(val)):
            return val
        prev = val
    raise QuadratureError("P(lam) quadrature did not converge",
                          estimate=abs(val - prev))


def density(pot: Potential, theta: float, lam):
    """Equilibrium density chi * P / (4 pi^2) on the arc, 0 outside."""
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    out = np.zeros_like(lam_arr)
    inside = np.abs(lam_arr) < theta
    if np.any(inside):
        li = lam_arr[inside]
        chi = np.sqrt(np.abs(np.cos(li) - np.cos(theta)))
        out[inside] = chi * p_function_batch(pot, theta, li, 512) / (4 * np.pi ** 2)
    return out if np.ndim(lam) else float(out[0])


def support_mass(pot: Potential, theta: float, m: int = 128) -> float:
    """int rho over [-theta, theta] with the sqrt edge factor absorbed
    into a Chebyshev-U weight."""
    t, w = chebyshev_u_rule(m)
    st = np.sin(0.5 * theta)
    half = np.arcsin(st * t)
    lam = 2.0 * half
    p_vals = p_function_batch(pot, theta, lam, 256)
    f = 2.0 * np.sqrt(2.0) * st * st * p_vals / np.cos(half) / (4 * np.pi ** 2)
    return float(np.sum(w * f))


def solve_support(pot: Potential, tol: float = 1e-10) -> EquilibriumData:
    """Find the arc half-width theta with unit equilibrium mass, then verify C2."""

    def residual(theta):
        return support_mass(pot, theta) - 1.0

    grid = np.arange(0.05, np.pi - 0.049, 0.05)
    vals = [residual(th) for th in grid]
    bracket = None
    for (a, fa), (b, fb) in zip(zip(grid, vals), zip(grid[1:], vals[1:])):
        if fa == 0.0:
            bracket = (a, a)
            break
        if fa * fb < 0.0:
            bracket = (a, b)
            break
    if bracket is None:
        raise SupportBracketError(
            f"no unit-mass support found for {pot} over theta in (0, pi)")
    if bracket[0] == bracket[1]:
        theta = bracket[0]
    else:
        theta = brentq(residual, *bracket, xtol=tol, rtol=4e-15)

    # refined mass at a finer inner rule for the recorded residual
    res = abs(support_mass(pot, theta, m=256) - 1.0)

    lam_grid = np.linspace(-theta, theta, _C2_GRID)[1:-1]
    rho = density(pot, theta, lam_grid)
    if np.any(rho <= 0.0):
        raise DensityPositivityError(
            f"density dips to {rho.min():.3e} inside the support for {pot}")
    if p_function(pot, theta, theta) <= 0.0:
        raise DensityPositivityError(f"P(theta) <= 0 for {pot}")
    return EquilibriumData(pot=pot, theta=theta, normalization_residual=res)


def integral_equation_residual(eq: EquilibriumData, pot: Potential,
                               lam: float) -> float:
    """(V(cos lam))' minus the principal-value convolution of cot with rho.

    The principal value is handled by symmetric node pairing around lam on
    the largest symmetric subinterval; the leftover piece carries no
    singularity and only needs edge-aware panels at the arc endpoint.
    """
    theta = eq.theta
    if abs(lam) >= theta:
        raise ValueError("residual is defined strictly inside the support")
    rho = lambda m: density(pot, theta, m)
    d = min(theta - lam, theta + lam)

    def paired(t):
        t = np.asarray(t, dtype=float)
        out = np.empty_like(t)
        small = t < 1e-7
        big = ~small
        out[big] = (rho(lam - t[big]) - rho(lam + t[big])) / np.tan(0.5 * t[big])
        if np.any(small):
            # odd part of rho expanded: -2 rho'(lam) t * cot(t/2) -> -4 rho'(lam)
            h = 1e-6
            drho = (rho(lam + h) - rho(lam - h)) / (2 * h)
            out[small] = -4.0 * drho
        return out

    pv = composite_gl(paired, graded_edges(0.0, d, toward=d, n_panels=16), order=24)

    if d < theta - abs(lam) + 1e-15:
        pass
    lo, hi = (-theta, lam - d) if lam > 0 else (lam + d, theta)
    if hi - lo > 1e-14:
        if lam > 0:
            # substitute mu = -theta + v^2 to absorb the sqrt edge of rho
            def leftover(v):
                mu = lo + v * v
                return 2.0 * v * rho(mu) / np.tan(0.5 * (lam - mu))
            pv += composite_gl(leftover, graded_edges(0.0, np.sqrt(hi - lo),
                                                      toward=0.0, n_panels=14),
                               order=24)
        else:
            def leftover(v):
                mu = hi - v * v
                return 2.0 * v * rho(mu) / np.tan(0.5 * (lam - mu))
            pv += composite_gl(leftover, graded_edges(0.0, np.sqrt(hi - lo),
                                                      toward=0.0, n_panels=14),
                               order=24)
    return float(pot.angle_derivative(lam) - pv)


def _clausen2(x: float) -> float:
    return float(mpmath.clsin(2, x))


def log_energy_integral(eq: EquilibriumData, pot: Potential, lam: float) -> float:
    """int log|e^{i lam} - e^{i mu}| rho(mu) dmu over the support."""
    theta = eq.theta
    rho = lambda m: density(pot, theta, m)

    if abs(lam) < theta:
        rho_lam = float(rho(lam))
        # subtracted part: (rho(mu) - rho(lam)) log|2 sin((lam-mu)/2)|
        def piece(a, b, sing_at):
            def f(mu):
                mu = np.asarray(mu, dtype=float)
                val = (rho(mu) - rho_lam) * np.log(
                    np.abs(2.0 * np.sin(0.5 * (lam - mu))))
                return np.where(np.abs(mu - lam) < 1e-14, 0.0, val)
            return composite_gl(f, graded_edges(a, b, toward=sing_at, n_panels=18),
                                order=24)

        sub = 0.0
        if lam - (-theta) > 1e-13:
            sub += piece(-theta, lam, sing_at=lam)
        if theta - lam > 1e-13:
            sub += piece(lam, theta, sing_at=lam)
        closed = rho_lam * (_clausen2(lam - theta) - _clausen2(lam + theta))
        return sub + closed

    def f(mu):
        return rho(mu) * np.log(np.abs(2.0 * np.sin(0.5 * (lam - mu))))
    left = composite_gl(f, graded_edges(-theta, 0.0, toward=-theta, n_panels=14),
                        order=24)
    right = composite_gl(f, graded_edges(0.0, theta, toward=theta, n_panels=14),
                         order=24)
    return left + right


def effective_potential(eq: EquilibriumData, pot: Potential, lam: float) -> float:
    """u(lam) = V(cos lam) - 2 int log|e^{i lam} - e^{i mu}| rho(mu) dmu."""
    return float(pot.angle_value(lam)) - 2.0 * log_energy_integral(eq, pot, lam)


def edge_constants(eq: EquilibriumData, pot: Potential) -> EdgeConstants:
    theta = eq.theta
    p_edge = p_function(pot, theta, theta)
    if p_edge <= 0.0:
        raise DensityPositivityError("P(theta) <= 0: edge constants undefined")
    p_theta = np.pi * np.sqrt(2.0) / p_edge
    gamma = np.tan(0.5 * theta) ** (1.0 / 3.0) * (p_edge / (4 * np.pi)) ** (2.0 / 3.0)
    a = np.sin(theta) ** (1.0 / 3.0)
    b = (2.0 * p_theta / np.sin(0.5 * theta)) ** (1.0 / 3.0)
    if abs(gamma * a * b * b - 1.0) > 1e-12:
        raise RuntimeError(
            f"edge-constant identity gamma*a*b^2 = 1 violated: "
            f"{gamma * a * b * b - 1.0:.3e}")
    return EdgeConstants(P_at_edge=float(p_edge), p_theta=float(p_theta),
                         gamma=float(gamma), a=float(a), b=float(b))
