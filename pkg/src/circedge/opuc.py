"""Orthogonal polynomials on the unit circle for the varying weight.

All quantities here live at extended precision (mpmath): the weight
exp(-n V(cos lambda)) spans a dynamic range of exp(n * osc(V)) and the
Toeplitz recursion for the Verblunsky coefficients loses digits linearly
in the recursion depth.  The working precision follows the dynamic-range
rule ceil(n * osc(V) * log2 e) + 128 bits, floored at 128.

Conventions (fixed, and checked against an independent Gram-Schmidt
oracle in the tests): monic Szego recurrence

    Phi_{k+1}(z) = z Phi_k(z) - alpha_k Phi*_k(z),

with real alpha_k for the even weights handled here, rho_k^2 = 1 -
alpha_k^2, and trigonometric moments c_j = int exp(-i j lam) w(lam) dlam.
In this convention c_1 = + alpha_0 c_0 for even weights.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import mpmath as mp
import numpy as np

from .potentials import Potential, from_config

CACHE_SCHEMA = 1
CACHE_ENV = "CIRCEDGE_CACHE_DIR"


class PrecisionExhaustedError(RuntimeError):
    """1 - alpha_k^2 lost all significance; raise precision_bits."""


class MomentConvergenceError(RuntimeError):
    """Trapezoid doubling hit its cap before the moments settled."""


def required_bits(pot: Potential, n: int) -> int:
    return max(128, int(np.ceil(n * pot.osc() * np.log2(np.e))) + 128)


@dataclass(frozen=True)
class WeightSpec:
    pot: Potential
    n: int
    precision_bits: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        bits = self.precision_bits or required_bits(self.pot, self.n)
        if bits < required_bits(self.pot, self.n):
            raise ValueError(
                f"precision_bits={bits} below the dynamic-range rule "
                f"({required_bits(self.pot, self.n)})")
        object.__setattr__(self, "precision_bits", bits)


def weight_eval(w: WeightSpec, lam) -> mp.mpf:
    """w_n(lam) = exp(-n V(cos lam)), evaluated in the log domain."""
    with mp.workprec(w.precision_bits):
        x = mp.cos(mp.mpf(lam))
        expo = mp.mpf(0)
        for c in reversed(w.pot.coeffs):
            expo = expo * x + mp.mpf(c)
        return mp.exp(-w.n * expo)


@dataclass
class MomentTable:
    c: list                     # c_0 .. c_K, mpf
    K: int
    nodes_used: int
    error_estimate: float
    precision_bits: int


def moments(w: WeightSpec, K: int, max_doublings: int = 12) -> MomentTable:
    """c_j = int exp(-i j lam) w(lam) dlam, j = 0..K, by trapezoid doubling.

    The integrand is smooth and 2pi-periodic, so the uniform trapezoid rule
    converges spectrally; for even weights only cos(j lam) survives and only
    half the circle has to be visited.  Doubling reuses all previous nodes.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    bits = w.precision_bits
    with mp.workprec(bits + 32):
        n_half = 1 << max(6, int(np.ceil(np.log2(max(64, w.n + K)))))
        pi = mp.pi
        coeffs = [mp.mpf(c) for c in reversed(w.pot.coeffs)]

        def local_weight(lam):
            x = mp.cos(lam)
            expo = mp.mpf(0)
            for c in coeffs:
                expo = expo * x + c
            return mp.exp(-w.n * expo)

        def node_sums(half_indices, denom):
            # accumulate sum_i w(lam_i) cos(j lam_i) for lam_i = pi*i/denom
            sums = [mp.mpf(0)] * (K + 1)
            for i in half_indices:
                lam = pi * i / denom
                wt = local_weight(lam)
                c1 = mp.cos(lam)
                t_prev, t_cur = mp.mpf(1), c1
                sums[0] += wt
                if K >= 1:
                    sums[1] += wt * c1
                for j in range(2, K + 1):
                    t_prev, t_cur = t_cur, 2 * c1 * t_cur - t_prev
                    sums[j] += wt * t_cur
            return sums

        # endpoints lam = 0 and lam = pi enter once each
        w0 = local_weight(mp.mpf(0))
        wpi = local_weight(pi)
        interior = node_sums(range(1, n_half), n_half)

        target = mp.mpf(2) ** (-(bits - 8))
        prev = None
        for _ in range(max_doublings + 1):
            cs = []
            for j in range(K + 1):
                endpoint = w0 + (wpi if j % 2 == 0 else -wpi)
                cs.append((pi / n_half) * (endpoint + 2 * interior[j]))
            if prev is not None:
                delta = max(abs(a - b) for a, b in zip(cs, prev))
                if delta <= target * cs[0]:
                    return MomentTable(c=cs, K=K, nodes_used=2 * n_half,
                                       error_estimate=float(delta / cs[0]),
                                       precision_bits=bits)
            prev = cs
            new = node_sums(range(1, 2 * n_half, 2), 2 * n_half)
            interior = [a + b for a, b in zip(interior, new)]
            n_half *= 2
        raise MomentConvergenceError(
            f"moments not settled after {max_doublings} doublings")


@dataclass
class VerblunskySequence:
    alphas: list                # mpf, length m
    c0: object                  # mpf, zeroth moment
    precision_bits: int
    rhos: list = field(init=False)

    def __post_init__(self):
        with mp.workprec(self.precision_bits):
            self.rhos = [mp.sqrt(1 - a * a) for a in self.alphas]

    def __len__(self):
        return len(self.alphas)

    def alphas_float(self):
        return np.array([float(a) for a in self.alphas])

    def rhos_float(self):
        return np.array([float(r) for r in self.rhos])


def levinson(mom: MomentTable, m: int) -> VerblunskySequence:
    """Verblunsky coefficients alpha_0..alpha_{m-1} by Levinson recursion.

    Maintains the monic polynomial Phi_k; alpha_k = <z Phi_k, 1> / ||Phi_k||^2
    and the coefficient update is the Szego step with the reversed polynomial.
    """
    if m > mom.K:
        raise ValueError("levinson needs moments up to index m")
    bits = mom.precision_bits
    with mp.workprec(bits):
        c = mom.c
        phi = [mp.mpf(1)]
        energy = c[0]
        alphas = []
        for k in range(m):
            num = mp.fsum(phi[j] * c[j + 1] for j in range(k + 1))
            alpha = num / energy
            one_minus = 1 - alpha * alpha
            if one_minus <= 0:
                raise PrecisionExhaustedError(
                    f"|alpha_{k}| >= 1 at {bits} bits; raise precision_bits")
            new_phi = [mp.mpf(0)] * (k + 2)
            for i in range(k + 2):
                prev = phi[i - 1] if i >= 1 else mp.mpf(0)
                rev = phi[k - i] if 0 <= k - i <= k else mp.mpf(0)
                new_phi[i] = prev - alpha * rev
            phi = new_phi
            energy = energy * one_minus
            alphas.append(alpha)
        return VerblunskySequence(alphas=alphas, c0=c[0], precision_bits=bits)


def szego_eval(vseq: VerblunskySequence, lam, upto: int):
    """Orthonormal (phi_k, phi*_k) values at e^{i lam} for k = 0..upto."""
    if upto > len(vseq):
        raise ValueError("upto exceeds the coefficient supply")
    with mp.workprec(vseq.precision_bits):
        z = mp.expjpi(mp.mpf(lam) / mp.pi)
        phi = mp.mpc(1) / mp.sqrt(vseq.c0)
        phis = mp.mpc(1) / mp.sqrt(vseq.c0)
        out = [(phi, phis)]
        for k in range(upto):
            a = vseq.alphas[k]
            r = vseq.rhos[k]
            phi, phis = (z * phi - a * phis) / r, (phis - a * z * phi) / r
            out.append((phi, phis))
        return out


def chi_eval(vseq: VerblunskySequence, lam, upto: int):
    """CMV Laurent basis chi_k: even entries from the reversed polynomial,
    odd entries from the polynomial itself, phase-twisted by e^{-i k lam/2-ish
    powers} so the system is orthonormal in the full Laurent span."""
    pairs = szego_eval(vseq, lam, upto)
    with mp.workprec(vseq.precision_bits):
        z = mp.expjpi(mp.mpf(lam) / mp.pi)
        zinv = 1 / z
        out = []
        zpow = mp.mpc(1)          # z^{-floor(k/2)}
        for k in range(upto + 1):
            phi, phis = pairs[k]
            if k % 2 == 0:
                out.append(zpow * phis)
            else:
                out.append(zpow * phi)
                zpow = zpow * zinv
        return out


@dataclass(frozen=True)
class KernelEvaluator:
    weight: WeightSpec
    vseq: VerblunskySequence
    m: int                      # truncation: sum over k < m

    def __post_init__(self):
        if self.m > len(self.vseq):
            raise ValueError("kernel truncation exceeds coefficient supply")

    def weighted_chi(self, lam):
        """chi_k(lam) sqrt(w(lam)) for k < m, as complex128 (O(1)-sized)."""
        chis = chi_eval(self.vseq, lam, self.m - 1)
        with mp.workprec(self.vseq.precision_bits):
            root = mp.sqrt(weight_eval(self.weight, lam))
            return np.array([complex(c * root) for c in chis[:self.m]])

    def weighted_chi_mp(self, lam):
        chis = chi_eval(self.vseq, lam, self.m - 1)
        with mp.workprec(self.vseq.precision_bits):
            root = mp.sqrt(weight_eval(self.weight, lam))
            return [c * root for c in chis[:self.m]]


def kernel(ke: KernelEvaluator, lam, mu):
    """Reproducing kernel K_m(lam, mu) at working precision (mpc)."""
    with mp.workprec(ke.vseq.precision_bits):
        a = ke.weighted_chi_mp(lam)
        b = ke.weighted_chi_mp(mu)
        return mp.fsum((x * mp.conj(y) for x, y in zip(a, b)))


def kernel_matrix(ke: KernelEvaluator, lams):
    """Hermitian PSD Gram matrix K_m(lam_i, lam_j) as complex128.

    Assembled from the weighted chi vectors so Hermitian positive
    semidefiniteness is exact by construction.
    """
    vecs = np.array([ke.weighted_chi(lam) for lam in lams])   # rows: lam_i
    return vecs @ vecs.conj().T


@dataclass
class AsymptoticReport:
    sign: int                   # detected global sign s^(n)
    ks: np.ndarray
    alpha_dev: np.ndarray       # (-1)^k s alpha_{n+k} - (cos th/2 - p_theta k/n)
    rho_dev: np.ndarray         # rho_{n+k} - (sin th/2 + cot th/2 p_theta k/n)
    rows: list


def detect_edge_sign(vseq: VerblunskySequence, n: int, k_max: int = 0) -> int:
    """Global alternation sign from the majority vote of (-1)^k alpha_{n+k};
    a vote closer than 60/40 raises, since no coherent alternation exists."""
    if k_max <= 0:
        k_max = int(np.ceil(n ** (1.0 / 3.0)))
    if len(vseq) < n + k_max + 2:
        raise ValueError("coefficient supply too short for the edge window")
    alph = vseq.alphas_float()
    votes = np.array([np.sign((-1) ** int(k) * alph[n + k])
                      for k in range(-k_max, k_max + 1)])
    frac = max(np.sum(votes > 0), np.sum(votes < 0)) / len(votes)
    if frac < 0.6:
        raise RuntimeError("ambiguous alternation sign in the edge window")
    return 1 if np.sum(votes) > 0 else -1


def verblunsky_asymptotic_report(vseq: VerblunskySequence, ec, theta: float,
                                 n: int, k_max: int = 0) -> AsymptoticReport:
    """Deviation table of the computed coefficients from the edge expansion."""
    if k_max <= 0:
        k_max = int(np.ceil(n ** (1.0 / 3.0)))
    if len(vseq) < n + k_max + 2:
        raise ValueError("coefficient supply too short for the report window")
    ks = np.arange(-k_max, k_max + 1)
    alph = vseq.alphas_float()
    signed = np.array([(-1) ** int(k) * alph[n + k] for k in ks])
    s = detect_edge_sign(vseq, n, k_max)
    cos_half = np.cos(0.5 * theta)
    sin_half = np.sin(0.5 * theta)
    cot_half = cos_half / sin_half
    alpha_pred = cos_half - ec.p_theta * ks / n
    rho_pred = sin_half + cot_half * ec.p_theta * ks / n
    rho = vseq.rhos_float()
    alpha_dev = s * signed - alpha_pred
    rho_dev = np.array([rho[n + k] for k in ks]) - rho_pred
    rows = [{"k": int(k), "alpha": alph[n + k], "predicted": float(alpha_pred[i]),
             "deviation": float(alpha_dev[i])} for i, k in enumerate(ks)]
    return AsymptoticReport(sign=s, ks=ks, alpha_dev=alpha_dev,
                            rho_dev=rho_dev, rows=rows)


# -- persistence --------------------------------------------------------------

def _mpf_str(x, bits):
    return mp.nstr(x, int(bits * 0.30103) + 12)


def cache_dir(override=None):
    d = override or os.environ.get(CACHE_ENV) or os.path.join(
        os.path.expanduser("~"), ".cache", "circedge")
    os.makedirs(d, exist_ok=True)
    return d


def cache_path(pot: Potential, n: int, bits: int, directory=None):
    return os.path.join(cache_dir(directory),
                        f"vseq_{pot.key()}_n{n}_p{bits}.json")


def save_vseq(vseq: VerblunskySequence, pot: Potential, n: int, path: str):
    bits = vseq.precision_bits
    payload = {
        "schema_version": CACHE_SCHEMA,
        "potential": pot.config(),
        "n": n,
        "precision_bits": bits,
        "c0": _mpf_str(vseq.c0, bits),
        "alphas": [_mpf_str(a, bits) for a in vseq.alphas],
    }
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(payload, fh)
    os.replace(tmp, path)


def load_vseq(path: str) -> VerblunskySequence:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("schema_version") != CACHE_SCHEMA:
        raise ValueError("unknown cache schema")
    bits = payload["precision_bits"]
    with mp.workprec(bits):
        alphas = [mp.mpf(s) for s in payload["alphas"]]
        c0 = mp.mpf(payload["c0"])
    return VerblunskySequence(alphas=alphas, c0=c0, precision_bits=bits)


def build_vseq(pot: Potential, n: int, m: int, precision_bits: int = 0,
               directory=None, use_cache: bool = True) -> VerblunskySequence:
    """Moments + Levinson with a read-through disk cache.

    A cached sequence is reused when it is at least as long as requested and
    carries the same precision; after a cold computation the cache file is
    re-read so warm and cold paths serve bit-identical values downstream.
    """
    w = WeightSpec(pot=pot, n=n, precision_bits=precision_bits)
    path = cache_path(pot, n, w.precision_bits, directory)
    if use_cache and os.path.exists(path):
        vseq = load_vseq(path)
        if len(vseq) >= m:
            return vseq
    mom = moments(w, m)
    vseq = levinson(mom, m)
    if use_cache:
        save_vseq(vseq, pot, n, path)
        return load_vseq(path)
    return vseq
