"""Metropolis chain kernels: numba-jitted hot loop with a numpy fallback.

The backend is chosen at import time: numba unless it is missing or the
environment variable CIRCEDGE_DISABLE_NUMBA is set to 1/true/yes.  Both
backends draw from the same counter-based splitmix64 stream, so a seed
identifies one chain regardless of backend; within a backend runs are
byte-for-byte reproducible.
"""

from __future__ import annotations

import math
import os

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def numba_disabled_by_env() -> bool:
    return os.environ.get("CIRCEDGE_DISABLE_NUMBA", "").strip().lower() in (
        "1", "true", "yes")


def _pick_backend():
    if numba_disabled_by_env():
        return None
    try:
        from numba import njit
    except ImportError:
        return None
    return njit


def splitmix64_py(seed, index) -> float:
    """Uniform in [0, 1) from draw counter `index` of stream `seed`."""
    z = (int(seed) + int(index) * _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    z = z ^ (z >> 31)
    return (z >> 11) * 2.0 ** -53


def _run_sweeps_py(lam, coeffs, nscale, width, n_sweeps, thin, out, seed,
                   draw_offset):
    """Reference implementation: scalar RNG/accept logic, vectorized pair sums."""
    n = lam.shape[0]
    two_pi = 2.0 * math.pi
    accepted = 0
    stored = 0
    idx = np.arange(n)
    for sweep in range(n_sweeps):
        for site in range(n):
            t = draw_offset + 2 * (sweep * n + site)
            u1 = splitmix64_py(seed, t)
            u2 = splitmix64_py(seed, t + 1)
            old = lam[site]
            prop = old + width * (2.0 * u1 - 1.0)
            prop -= two_pi * math.floor((prop + math.pi) / two_pi)
            others = lam[idx != site]
            with np.errstate(divide="ignore"):
                dlog = 2.0 * float(
                    np.sum(np.log(np.abs(np.sin(0.5 * (prop - others)))))
                    - np.sum(np.log(np.abs(np.sin(0.5 * (old - others))))))
            xo = math.cos(old)
            xp = math.cos(prop)
            vo = 0.0
            vp = 0.0
            for c in coeffs[::-1]:
                vo = vo * xo + c
                vp = vp * xp + c
            dlog -= nscale * (vp - vo)
            if dlog >= 0.0 or u2 < math.exp(dlog):
                lam[site] = prop
                accepted += 1
        if thin > 0 and (sweep + 1) % thin == 0:
            out[stored, :] = lam
            stored += 1
    return accepted, draw_offset + 2 * n_sweeps * n


def _kernel_source():
    """Single numeric kernel, compilable by numba; mirrors the fallback."""

    def run_sweeps(lam, coeffs, nscale, width, n_sweeps, thin, out, seed,
                   draw_offset):
        n = lam.shape[0]
        ncoef = coeffs.shape[0]
        two_pi = 2.0 * np.pi
        accepted = 0
        stored = 0
        for sweep in range(n_sweeps):
            for site in range(n):
                t = np.uint64(draw_offset + 2 * (sweep * n + site))
                z = np.uint64(seed) + t * np.uint64(_GOLDEN)
                z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
                z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
                z = z ^ (z >> np.uint64(31))
                u1 = (z >> np.uint64(11)) * 2.0 ** -53
                t2 = t + np.uint64(1)
                z = np.uint64(seed) + t2 * np.uint64(_GOLDEN)
                z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
                z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
                z = z ^ (z >> np.uint64(31))
                u2 = (z >> np.uint64(11)) * 2.0 ** -53

                old = lam[site]
                prop = old + width * (2.0 * u1 - 1.0)
                prop -= two_pi * np.floor((prop + np.pi) / two_pi)
                dlog = 0.0
                for j in range(n):
                    if j != site:
                        sp = abs(np.sin(0.5 * (prop - lam[j])))
                        so = abs(np.sin(0.5 * (old - lam[j])))
                        if sp == 0.0:
                            dlog = -np.inf
                            break
                        dlog += 2.0 * (np.log(sp) - np.log(so))
                if dlog > -np.inf:
                    xo = np.cos(old)
                    xp = np.cos(prop)
                    vo = 0.0
                    vp = 0.0
                    for c in range(ncoef - 1, -1, -1):
                        vo = vo * xo + coeffs[c]
                        vp = vp * xp + coeffs[c]
                    dlog -= nscale * (vp - vo)
                if dlog >= 0.0 or u2 < np.exp(dlog):
                    lam[site] = prop
                    accepted += 1
            if thin > 0 and (sweep + 1) % thin == 0:
                for j in range(n):
                    out[stored, j] = lam[j]
                stored += 1
        return accepted, draw_offset + 2 * n_sweeps * n

    return run_sweeps


_njit = _pick_backend()
USING_NUMBA = _njit is not None
if USING_NUMBA:
    run_sweeps = _njit(cache=True)(_kernel_source())
else:
    run_sweeps = _run_sweeps_py


def make_run_sweeps(use_numba: bool):
    """Explicit backend constructor (used by the backend benchmark)."""
    if use_numba:
        from numba import njit
        return njit(cache=True)(_kernel_source())
    return _run_sweeps_py
