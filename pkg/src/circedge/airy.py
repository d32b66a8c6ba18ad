"""Airy functions, the half-line solutions psi_pm, the Airy-operator
resolvent in two representations, and the Airy kernel.

The differential operator is L[f](x) = a^3 f'' - b^3 x f.  Its resolvent
kernel has a product representation through psi_pm and a spectral-integral
representation over the (purely absolutely continuous) spectrum.  The
spectral integral cannot be truncated naively: toward the bottom of the
spectrum the eigenfunction product only decays like |t|^{-1/2} with slow
oscillation, so the evaluator reduces the integral exactly (Fourier form of
Ai, then a Fresnel integral in the internal frequency) to a single
contour-rotated integral with super-exponential decay.  A literal
truncated-panel evaluator is kept for trend tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import mpmath as mp
import numpy as np
from scipy.special import airy as _scipy_airy

from .quadrature import composite_gl, leggauss

_DOMAIN_CUTOFF = 50.0


class AiryValues(NamedTuple):
    ai: complex
    aip: complex
    bi: complex
    bip: complex
    ci: complex      # i Ai - Bi
    cip: complex


def airy_values(x, prec_bits: int = 0) -> AiryValues:
    """Ai, Bi, Ci = iAi - Bi and derivatives at a (possibly complex) point.

    Double precision by default; pass prec_bits for an mpmath evaluation.
    The desk-scale domain is Re x <= 50 (Bi overflows in double precision
    beyond that); the oscillatory side is uncritical and allowed out to
    |x| = 2000 for tail integrals.
    """
    if np.real(x) > _DOMAIN_CUTOFF or abs(x) > 2000.0:
        raise ValueError(f"x = {x} beyond the supported domain")
    if prec_bits:
        with mp.workprec(prec_bits):
            z = mp.mpc(x)
            ai, aip = mp.airyai(z), mp.airyai(z, 1)
            bi, bip = mp.airybi(z), mp.airybi(z, 1)
            return AiryValues(ai, aip, bi, bip, 1j * ai - bi, 1j * aip - bip)
    ai, aip, bi, bip = _scipy_airy(x)
    return AiryValues(ai, aip, bi, bip, 1j * ai - bi, 1j * aip - bip)


@dataclass(frozen=True)
class AiryConstants:
    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValueError("scaling constants must be positive")

    @classmethod
    def from_edge(cls, ec):
        return cls(a=ec.a, b=ec.b)

    def argument(self, x, zeta):
        """X_{x, zeta} = b/a * x + zeta / (a b^2)."""
        return (self.b / self.a) * x + zeta / (self.a * self.b ** 2)


def psi(x, zeta, c: AiryConstants = AiryConstants(), side: str = "plus",
        prec_bits: int = 0):
    """psi_plus = Ai(X), psi_minus = Ci(X): the square-integrable solutions
    of a^3 psi'' = (b^3 x + zeta) psi on the right/left half axis."""
    if np.imag(zeta) == 0:
        raise ValueError("zeta must have nonzero imaginary part")
    vals = airy_values(c.argument(x, zeta), prec_bits)
    if side == "plus":
        return vals.ai
    if side == "minus":
        return vals.ci
    raise ValueError("side must be 'plus' or 'minus'")


def psi_deriv(x, zeta, c: AiryConstants = AiryConstants(), side: str = "plus",
              prec_bits: int = 0):
    """d/dx of psi_pm through the analytic Airy derivatives."""
    if np.imag(zeta) == 0:
        raise ValueError("zeta must have nonzero imaginary part")
    vals = airy_values(c.argument(x, zeta), prec_bits)
    scale = c.b / c.a
    if side == "plus":
        return scale * vals.aip
    if side == "minus":
        return scale * vals.cip
    raise ValueError("side must be 'plus' or 'minus'")


def resolvent_product(x, y, zeta, c: AiryConstants = AiryConstants()):
    """Product representation pi a^{-2} b^{-1} psi_-(min) psi_+(max).

    The prefactor is the one forced by the jump condition (the Wronskian of
    psi_pm is b/(pi a), and the second-derivative coefficient is a^3), which
    also matches the spectral-integral representation; at the GWW anchor
    a = b = 1 it coincides with the product form as printed.
    Complex x, y are accepted, ordered by real part.
    """
    if np.real(x) > np.real(y):
        x, y = y, x
    lo = psi(x, zeta, c, "minus")
    hi = psi(y, zeta, c, "plus")
    return np.pi / (c.a ** 2 * c.b) * lo * hi


def resolvent_integral(x, y, zeta, c: AiryConstants = AiryConstants(),
                       n_panels: int = 30, order: int = 16):
    """Spectral-integral representation
    a^{-2} b^{-1} int_R (t - zeta)^{-1} Ai(X_{x,t}) Ai(X_{y,t}) dt
    for real x, y, reduced exactly to a contour-rotated single integral.

    Reduction: write (t - zeta)^{-1} = i int_0^inf e^{-i(t - zeta)u} du
    (Im zeta > 0), carry out the t-integral with the Fourier form of Ai
    (a Fresnel/Gaussian integral), substitute u = beta c, c = v^2, and
    rotate v onto the ray arg v = pi/12 where the integrand decays like
    exp(-r^6/12) at infinity and exp(-Re(iD e^{-i pi/6})/r^2) at zero.
    """
    if np.imag(zeta) < 0.5:
        raise ValueError("integral representation requires Im zeta >= 0.5")
    x, y = float(x), float(y)
    alpha = c.b / c.a
    beta = 1.0 / (c.a * c.b ** 2)
    K = beta * zeta + 0.5 * alpha * (x + y)
    D = 0.25 * (alpha * (x - y)) ** 2
    rot = np.exp(1j * np.pi / 12)

    R = 3.5
    while R ** 6 / 12.0 - abs(K) * R * R < 45.0:
        R += 0.5

    def f(r):
        v = rot * r
        v2 = v * v
        expo = 1j * (v2 * v2 * v2 / 12.0 + K * v2)
        if D > 0:
            expo = expo - 1j * D / v2
        return np.exp(expo)

    edges = np.linspace(0.0, R, n_panels + 1)
    if D > 0:
        # refine near r = 0 where the 1/v^2 phase turns on
        edges = np.concatenate((np.linspace(0, edges[1], 8)[:-1], edges[1:]))
        edges[0] = 1e-8
    J = 2.0 * rot * composite_gl(f, edges, order=order)
    pref = 1j * np.exp(1j * np.pi / 4) / (2.0 * np.sqrt(np.pi))
    return pref * J / (c.a ** 2 * c.b)


def resolvent_integral_truncated(x, y, zeta, c: AiryConstants,
                                 t_lo: float, product_floor: float = 1e-30):
    """Literal panel quadrature of the spectral integrand on [t_lo, T].

    The upper end T is chosen where the Ai product falls below the floor;
    the lower end must be supplied since the integrand has no decay there
    beyond |t|^{-3/2}.  Used to validate the reduced evaluator.
    """
    alpha = c.b / c.a
    beta = 1.0 / (c.a * c.b ** 2)

    def integrand(t):
        ax = _scipy_airy(alpha * x + beta * t)[0]
        ay = _scipy_airy(alpha * y + beta * t)[0]
        return ax * ay / (t - zeta)

    t = max(abs(x), abs(y), 1.0) / beta
    while True:
        ax = _scipy_airy(alpha * x + beta * t)[0]
        ay = _scipy_airy(alpha * y + beta * t)[0]
        if abs(ax * ay) < product_floor:
            break
        t += 1.0
    # panel width tracks the local oscillation rate ~ 2 sqrt(|X|) on the
    # negative side so the Gauss panels stay resolved
    edges = [t_lo]
    while edges[-1] < t:
        xloc = abs(min(alpha * x, alpha * y) + beta * edges[-1])
        edges.append(edges[-1] + min(1.0, 1.5 / np.sqrt(1.0 + xloc)))
    edges[-1] = t
    return composite_gl(integrand, np.array(edges), order=20) / (c.a ** 2 * c.b)


@dataclass(frozen=True)
class AiryResolvent:
    constants: AiryConstants
    zeta: complex

    def __post_init__(self):
        if np.imag(self.zeta) == 0:
            raise ValueError("resolvent requires Im zeta != 0")

    def kernel(self, x, y):
        return resolvent_product(x, y, self.zeta, self.constants)

    def kernel_integral(self, x, y):
        return resolvent_integral(x, y, self.zeta, self.constants)


# -- Airy kernel ---------------------------------------------------------------

_NEAR_DIAG = 1e-4


def airy_kernel(x, y):
    """Q(x, y) = (Ai(x) Ai'(y) - Ai'(x) Ai(y)) / (x - y), with the diagonal
    and near-diagonal evaluated through the midpoint expansion
    Q = (Ai'^2 - m Ai^2) + d^2 (Ai Ai' + 2 m Ai'^2 - 2 m^2 Ai^2)/3 + O(d^4),
    m = (x+y)/2, d = (x-y)/2, which is cancellation-free."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    out = np.empty(x.shape)
    diff = x - y
    near = np.abs(diff) < _NEAR_DIAG
    far = ~near
    if np.any(far):
        ax, axp, _, _ = _scipy_airy(x[far])
        ay, ayp, _, _ = _scipy_airy(y[far])
        out[far] = (ax * ayp - axp * ay) / diff[far]
    if np.any(near):
        m = 0.5 * (x[near] + y[near])
        d = 0.5 * diff[near]
        u, up, _, _ = _scipy_airy(m)
        out[near] = (up * up - m * u * u) \
            + d * d * (u * up + 2.0 * m * up * up - 2.0 * m * m * u * u) / 3.0
    return out if out.shape else float(out)


def airy_kernel_integral(x, y, product_floor: float = 1e-30, order: int = 20):
    """Q(x, y) = int_0^inf Ai(x + t) Ai(y + t) dt by unit panels, truncated
    once the integrand is below the floor past the oscillatory region."""
    def integrand(t):
        return _scipy_airy(x + t)[0] * _scipy_airy(y + t)[0]

    total = 0.0
    t = 0.0
    floor_from = max(0.0, -min(x, y)) + 2.0
    while True:
        total += gl_unit_panel(integrand, t, t + 1.0, order)
        t += 1.0
        if t >= floor_from and abs(integrand(t)) < product_floor:
            break
        if t > 200:
            raise RuntimeError("airy kernel integral failed to truncate")
    return total


def gl_unit_panel(f, a, b, order):
    xg, wg = leggauss(order)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return half * float(np.sum(wg * f(mid + half * xg)))
