"""Polynomial confining potentials evaluated along x = cos(lambda).

Every model in this package is driven by a potential V acting on the
spectral variable x = cos(lambda).  The induced function V(cos(lambda)) is
automatically even in lambda, so the associated weight exp(-n V(cos lambda))
is an even weight on the unit circle.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

FAMILIES = ("linear", "quadratic", "quartic", "polynomial")


class AngleValues(NamedTuple):
    value: float        # V(cos lambda)
    derivative: float   # d/dlambda V(cos lambda)


@dataclass(frozen=True)
class Potential:
    """V(x) = sum_k coeffs[k] * x**k on [-1 - eps, 1 + eps].

    Polynomials are smooth, so the smoothness order is only recorded to
    document that the model has at least the four bounded derivatives the
    edge analysis requires.
    """

    coeffs: tuple
    family: str = "polynomial"
    smoothness_order: int = 99

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown potential family {self.family!r}")
        coeffs = tuple(float(c) for c in self.coeffs)
        if not coeffs:
            coeffs = (0.0,)
        if not all(np.isfinite(coeffs)):
            raise ValueError("potential coefficients must be finite")
        if self.smoothness_order < 4:
            raise ValueError("potential must have at least four bounded derivatives")
        object.__setattr__(self, "coeffs", coeffs)

    # -- evaluation on the spectral variable x ------------------------------

    def v(self, x):
        return np.polynomial.polynomial.polyval(x, self.coeffs)

    def dv(self, x):
        return np.polynomial.polynomial.polyval(
            x, np.polynomial.polynomial.polyder(self.coeffs))

    def d2v(self, x):
        return np.polynomial.polynomial.polyval(
            x, np.polynomial.polynomial.polyder(self.coeffs, 2))

    # -- evaluation along the circle ----------------------------------------

    def angle_value(self, lam):
        return self.v(np.cos(lam))

    def angle_derivative(self, lam):
        """d/dlambda V(cos lambda) = -sin(lambda) V'(cos lambda)."""
        return -np.sin(lam) * self.dv(np.cos(lam))

    def angle_second_derivative(self, lam):
        c = np.cos(lam)
        s = np.sin(lam)
        return -c * self.dv(c) + s * s * self.d2v(c)

    def osc(self):
        """max - min of V over [-1, 1] (drives the weight's dynamic range)."""
        der = np.polynomial.polynomial.polyder(self.coeffs)
        pts = [-1.0, 1.0]
        if len(der) > 1:
            roots = np.polynomial.polynomial.polyroots(der)
            pts.extend(float(r.real) for r in roots
                       if abs(r.imag) < 1e-12 and -1.0 <= r.real <= 1.0)
        vals = self.v(np.asarray(pts))
        return float(np.max(vals) - np.min(vals))

    # -- identity / serialization -------------------------------------------

    def config(self):
        return {"family": self.family, "coeffs": list(self.coeffs)}

    def key(self):
        payload = json.dumps(self.config(), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def __str__(self):
        terms = [f"{c:+g}x^{k}" for k, c in enumerate(self.coeffs) if c != 0.0]
        return "V(x)=" + ("".join(terms) if terms else "0")


def eval_potential(pot: Potential, lam: float) -> AngleValues:
    """Value and angular derivative of V(cos lambda) at one angle."""
    if not np.isfinite(lam):
        raise ValueError("lambda must be finite")
    return AngleValues(float(pot.angle_value(lam)), float(pot.angle_derivative(lam)))


def from_config(cfg: dict) -> Potential:
    if "coeffs" not in cfg:
        raise ValueError("potential config requires a 'coeffs' list")
    family = cfg.get("family", "polynomial")
    return Potential(tuple(cfg["coeffs"]), family=family)


def gww() -> Potential:
    """The Gross-Witten-Wadia anchor model V(x) = -2x."""
    return Potential((0.0, -2.0), family="linear")
