"""Monte Carlo cross-check: Metropolis sampling of the joint eigenvalue law.

Single-site circular random-walk Metropolis on the angles, with the step
width auto-tuned during burn-in and frozen afterwards.  Double precision
is all this needs: only ratios of the unnormalized density enter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _chains
from .equilibrium import EquilibriumData, density
from .potentials import Potential
from .quadrature import leggauss

_TUNE_LOW = 0.2
_TUNE_HIGH = 0.5


@dataclass(frozen=True)
class ChainConfig:
    pot: Potential
    n: int
    steps: int                  # production sweeps (after burn-in)
    burn_in: int                # burn-in sweeps (width tuning happens here)
    seed: int
    proposal_width: float = 0.5
    thin: int = 0               # 0 -> thin by n

    def __post_init__(self):
        if self.steps <= 0 or self.burn_in < 0:
            raise ValueError("steps > burn_in >= 0 required")
        if not 0.0 < self.proposal_width < np.pi:
            raise ValueError("proposal width must lie in (0, pi)")
        if self.n < 2:
            raise ValueError("need at least two angles")
        object.__setattr__(self, "thin", self.thin or self.n)


@dataclass
class EigenvalueSample:
    configs: np.ndarray         # (kept, n), each row sorted ascending
    acceptance_rate: float
    width: float                # frozen production width
    seed: int


def log_density(pot: Potential, n: int, lam) -> float:
    """log of the unnormalized joint density; -inf on exact collisions."""
    lam = np.asarray(lam, dtype=float)
    i, j = np.triu_indices(len(lam), k=1)
    gaps = np.abs(np.sin(0.5 * (lam[i] - lam[j])))
    if np.any(gaps == 0.0):
        return -np.inf
    return float(2.0 * np.sum(np.log(2.0 * gaps))
                 - n * np.sum(pot.v(np.cos(lam))))


def metropolis_run(cfg: ChainConfig) -> EigenvalueSample:
    """Deterministic given (seed, backend); stores every thin-th sweep."""
    n = cfg.n
    coeffs = np.asarray(cfg.pot.coeffs, dtype=float)
    seed = np.uint64(cfg.seed & ((1 << 64) - 1))
    # evenly spread start keeps the initial Vandermonde factor nonzero
    lam = (2.0 * np.pi * (np.arange(n) + 0.5) / n - np.pi).astype(float)
    width = float(cfg.proposal_width)
    offset = 0
    dummy = np.empty((1, n))

    epochs = 10
    epoch_sweeps = max(1, cfg.burn_in // epochs)
    done = 0
    while done < cfg.burn_in:
        chunk = min(epoch_sweeps, cfg.burn_in - done)
        acc, offset = _chains.run_sweeps(lam, coeffs, float(n), width,
                                         chunk, 0, dummy, seed, offset)
        rate = acc / (chunk * n)
        if rate < _TUNE_LOW:
            width = max(1e-4, width * 0.7)
        elif rate > _TUNE_HIGH:
            width = min(0.9 * np.pi, width * 1.3)
        done += chunk

    kept = cfg.steps // cfg.thin
    if kept < 1:
        raise ValueError("steps too small for the thinning interval")
    out = np.empty((kept, n))
    acc, offset = _chains.run_sweeps(lam, coeffs, float(n), width,
                                     kept * cfg.thin, cfg.thin, out, seed,
                                     offset)
    out.sort(axis=1)
    return EigenvalueSample(configs=out,
                            acceptance_rate=acc / (kept * cfg.thin * n),
                            width=width, seed=int(seed))


def ncm_compare(sample: EigenvalueSample, eq: EquilibriumData,
                bins: int = 40) -> dict:
    """Sup relative deviation of the angle histogram from the equilibrium
    mass over bins inside the support.

    Near the endpoints the finite-n law deviates from the limiting density
    over the whole Airy zone of width ~ 2.5/(gamma n^{2/3}), so "inside"
    means bins clear of that margin (at least one bin width); the margin
    shrinks as n grows and the comparison tightens automatically.
    """
    if sample.configs.shape[0] < 1000:
        raise ValueError("need at least 1000 retained configurations")
    n = sample.configs.shape[1]
    ec = eq.edge_constants()
    angles = sample.configs.ravel()
    counts, edges = np.histogram(angles, bins=bins, range=(-np.pi, np.pi))
    emp = counts / counts.sum()
    width = edges[1] - edges[0]
    margin = max(width, 2.5 / (ec.gamma * n ** (2.0 / 3.0)))
    xg, wg = leggauss(24)
    theta = eq.theta
    sup_dev = 0.0
    outside_mass = 0.0
    per_bin = []
    for a, b, mass in zip(edges[:-1], edges[1:], emp):
        if b <= -theta or a >= theta:
            outside_mass += mass
            continue
        interior = (a >= -theta + margin) and (b <= theta - margin)
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        expected = half * float(np.sum(wg * density(eq.pot, theta,
                                                    mid + half * xg)))
        row = {"lo": float(a), "hi": float(b), "empirical": float(mass),
               "expected": expected, "interior": interior}
        per_bin.append(row)
        if interior and expected > 0:
            sup_dev = max(sup_dev, abs(mass - expected) / expected)
    return {"sup_relative_deviation": float(sup_dev),
            "outside_mass": float(outside_mass), "bins": per_bin}


def edge_fluctuation(sample: EigenvalueSample, eq: EquilibriumData, ec) -> dict:
    """Empirical law of gamma n^{2/3} (lam_max - theta) as a sorted array
    plus an ECDF callable on arbitrary thresholds."""
    n = sample.configs.shape[1]
    lam_max = sample.configs[:, -1]
    vals = np.sort(ec.gamma * n ** (2.0 / 3.0) * (lam_max - eq.theta))

    def ecdf(s):
        return np.searchsorted(vals, s, side="right") / len(vals)

    return {"values": vals, "ecdf": ecdf, "median": float(np.median(vals))}


def kolmogorov_distance_to_limit(fluct: dict, s_grid=None,
                                 limit_cdf=None) -> float:
    """sup_s |ECDF(s) - F(s)| on a grid; F defaults to the Airy gap law."""
    from .fredholm import tracy_widom
    if s_grid is None:
        s_grid = np.arange(-4.5, 2.51, 0.25)
    if limit_cdf is None:
        limit_cdf = lambda s: tracy_widom(float(s)).value
    emp = fluct["ecdf"](np.asarray(s_grid))
    ref = np.array([limit_cdf(s) for s in s_grid])
    return float(np.max(np.abs(emp - ref)))
