"""Five-diagonal CMV operator, its resolvent, and the rotated edge operator.

The operator is assembled as C = M L from the 2x2 rotation blocks of the
Verblunsky coefficients.  A finite section is made exactly unitary by
closing the dangling scalar of the cut block with a unimodular entry
(the standard finite CMV truncation), so the resolvent identities of the
semi-infinite operator hold for the section up to rounding, and truncation
artifacts are confined to the final rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath as mp
import numpy as np
from scipy.linalg import lu_factor, lu_solve, solve_banded

from .opuc import VerblunskySequence, chi_eval


class NearSingularResolventError(RuntimeError):
    def __init__(self, message, cond_estimate):
        super().__init__(message)
        self.cond_estimate = cond_estimate


def truncation_size(n: int) -> int:
    """Section size keeping boundary pollution away from edge windows."""
    return n + int(np.ceil(4.0 * n ** (1.0 / 3.0) * np.log(n))) + 16


@dataclass
class CMVBand:
    N: int
    precision_bits: int
    diags: dict                 # d -> list of C[i, i+d], d in -2..2, mpf
    m_diags: dict               # factor M, d in -1..1
    l_diags: dict               # factor L, d in -1..1

    def entry(self, i, j):
        d = j - i
        if abs(d) > 2 or not (0 <= i < self.N) or not (0 <= j < self.N):
            return mp.mpf(0)
        return self.diags[d][min(i, i + d) if d < 0 else i]

    def to_dense(self):
        out = np.zeros((self.N, self.N))
        for d, vals in self.diags.items():
            idx = np.arange(len(vals))
            rows = idx if d >= 0 else idx - d
            cols = idx + d if d >= 0 else idx
            out[rows, cols] = [float(v) for v in vals]
        return out

    def to_banded(self):
        """ab[u + i - j, j] = C[i, j] layout for scipy.linalg.solve_banded."""
        dense = self.to_dense()
        ab = np.zeros((5, self.N))
        for d in range(-2, 3):
            diag = np.diagonal(dense, d)
            if d >= 0:
                ab[2 - d, d:] = diag
            else:
                ab[2 - d, :self.N + d] = diag
        return ab


def _tridiag_factor(alphas, rhos, N, start_parity):
    """Direct sum of blocks B_k = [[a_k, r_k], [r_k, -a_k]] with k of one
    parity, plus a leading 1x1 identity for the even factor; the dangling
    scalar of a cut block is replaced by 1 (exact unitarization)."""
    diag = [mp.mpf(0)] * N
    off = [mp.mpf(0)] * (N - 1)   # off[i] couples i, i+1
    pos = 0
    if start_parity == 1:         # factor M: E_1 then blocks 1, 3, 5, ...
        diag[0] = mp.mpf(1)
        pos = 1
    k = start_parity if start_parity == 0 else 1
    while pos < N:
        if pos == N - 1:
            diag[pos] = mp.mpf(1)     # unimodular closure of the cut block
            pos += 1
            break
        diag[pos] = mp.mpf(alphas[k])
        diag[pos + 1] = -mp.mpf(alphas[k])
        off[pos] = mp.mpf(rhos[k])
        pos += 2
        k += 2
    return diag, off


def assemble(vseq: VerblunskySequence, N: int) -> CMVBand:
    """C = M L at working precision, bandwidth two on each side."""
    if N > len(vseq) - 1:
        raise ValueError("section size exceeds coefficient supply")
    bits = vseq.precision_bits
    with mp.workprec(bits):
        l_diag, l_off = _tridiag_factor(vseq.alphas, vseq.rhos, N, 0)
        m_diag, m_off = _tridiag_factor(vseq.alphas, vseq.rhos, N, 1)

        def m_entry(i, j):
            if i == j:
                return m_diag[i]
            if abs(i - j) == 1:
                return m_off[min(i, j)]
            return mp.mpf(0)

        def l_entry(i, j):
            if i == j:
                return l_diag[i]
            if abs(i - j) == 1:
                return l_off[min(i, j)]
            return mp.mpf(0)

        diags = {}
        for d in range(-2, 3):
            vals = []
            for i in range(max(0, -d), min(N, N - d)):
                j = i + d
                s = mp.fsum(m_entry(i, t) * l_entry(t, j)
                            for t in range(max(0, i - 1, j - 1),
                                           min(N, i + 2, j + 2)))
                vals.append(s)
            diags[d] = vals
        return CMVBand(N=N, precision_bits=bits, diags=diags,
                       m_diags={-1: m_off, 0: m_diag, 1: m_off},
                       l_diags={-1: l_off, 0: l_diag, 1: l_off})


def unitarity_residual(band: CMVBand, rows) -> float:
    """max over requested rows i of max_j |(C C^T - I)_{ij}| at working
    precision (entries are real for even weights)."""
    with mp.workprec(band.precision_bits):
        worst = mp.mpf(0)
        for i in rows:
            for j in range(max(0, i - 4), min(band.N, i + 5)):
                s = mp.fsum(band.entry(i, t) * band.entry(j, t)
                            for t in range(max(0, min(i, j) - 2),
                                           min(band.N, max(i, j) + 3)))
                tgt = 1 if i == j else 0
                worst = max(worst, abs(s - tgt))
        return float(worst)


def multiplication_residual(band: CMVBand, vseq: VerblunskySequence,
                            lam: float, rows) -> float:
    """max over rows k of |e^{i lam} chi_k - sum_j C_kj chi_j|."""
    hi = max(rows)
    if hi + 2 >= band.N - 2:
        raise ValueError("rows must stay >= 3 away from the truncation edge")
    chis = chi_eval(vseq, lam, hi + 2)
    with mp.workprec(band.precision_bits):
        z = mp.expjpi(mp.mpf(lam) / mp.pi)
        worst = mp.mpf(0)
        for k in rows:
            acc = mp.fsum(band.entry(k, j) * chis[j]
                          for j in range(max(0, k - 2), k + 3))
            worst = max(worst, abs(z * chis[k] - acc))
        return float(worst)


@dataclass
class ResolventSlab:
    z: complex
    window: tuple               # (lo, hi) inclusive row/col range
    g: np.ndarray               # window block of (C + e^{iz})(C - e^{iz})^{-1}
    G: np.ndarray               # window block of (g(z) - g(zbar))/2
    cond_estimate: float


def _g_columns(dense, z, cols):
    N = dense.shape[0]
    w = np.exp(1j * z)
    ab = np.zeros((5, N), dtype=complex)
    for d in range(-2, 3):
        diag = np.diagonal(dense, d).astype(complex).copy()
        if d == 0:
            diag -= w
        if d >= 0:
            ab[2 - d, d:] = diag
        else:
            ab[2 - d, :N + d] = diag
    rhs = np.zeros((N, len(cols)), dtype=complex)
    for idx, j in enumerate(cols):
        rhs[j, idx] = 1.0
    x = solve_banded((2, 2), ab, rhs)
    g_cols = 2.0 * w * x
    g_cols[cols, np.arange(len(cols))] += 1.0
    return g_cols


def resolvent(band: CMVBand, z: complex, window=None) -> ResolventSlab:
    """Banded solves for the window columns of g(z) and G(z).

    Requires Im z > 0 so e^{iz} lies strictly inside the unit circle.
    """
    if np.imag(z) <= 0:
        raise ValueError("resolvent requires Im z > 0")
    gap = abs(1.0 - abs(np.exp(1j * z)))
    if gap < 1e-13:
        raise NearSingularResolventError(
            "spectral point touches the unit circle", cond_estimate=2.0 / gap)
    if window is None:
        window = (0, band.N - 1)
    lo, hi = window
    cols = np.arange(lo, hi + 1)
    dense = band.to_dense()
    g_cols = _g_columns(dense, z, cols)[lo:hi + 1, :]
    g_cols_bar = _g_columns(dense, np.conj(z), cols)[lo:hi + 1, :]
    return ResolventSlab(z=z, window=window, g=g_cols,
                         G=0.5 * (g_cols - g_cols_bar),
                         cond_estimate=2.0 / gap)


def resolvent_dense(band: CMVBand, z: complex) -> np.ndarray:
    """Full g(z) by dense LU: the oracle path for the identity tests."""
    N = band.N
    w = np.exp(1j * z)
    A = band.to_dense().astype(complex) - w * np.eye(N)
    lu = lu_factor(A)
    R = lu_solve(lu, np.eye(N, dtype=complex))
    return np.eye(N) + 2.0 * w * R


def identity_residuals(band: CMVBand, z: complex, window) -> dict:
    """Residuals of the unitary-resolvent identities on a window block:

    pair:  g(z)^dagger + g(zbar) = 0
    coth:  g g^dagger = -I + 2 coth(Im z) G(z)
    """
    lo, hi = window
    g = resolvent_dense(band, z)
    gbar = resolvent_dense(band, np.conj(z))
    G = 0.5 * (g - gbar)
    pair = np.max(np.abs((g.conj().T + gbar)[lo:hi + 1, lo:hi + 1]))
    lhs = g @ g.conj().T
    rhs = -np.eye(band.N) + 2.0 / np.tanh(np.imag(z)) * G
    coth_res = np.max(np.abs((lhs - rhs)[lo:hi + 1, lo:hi + 1]))
    cot_rhs = -np.eye(band.N) + 2.0 / np.tan(np.imag(z)) * G
    cot_res = np.max(np.abs((lhs - cot_rhs)[lo:hi + 1, lo:hi + 1]))
    return {"pair": float(pair), "coth": float(coth_res), "cot": float(cot_res)}


@dataclass
class RotatedEdgeOperator:
    """Symmetric tridiagonal window of C_r-(theta + zeta n^{-2/3}).

    Rows are indexed by the offset j below the edge index n (matrix row
    n - j), j in [-W, W].  couple[i] is the entry linking offsets
    j = i - W and j + 1; diag[i] the diagonal at offset j = i - W.
    """
    n: int
    theta: float
    zeta: complex
    W: int
    sign: int                   # detected global alternation sign
    h: float                    # n^{-1/3}
    delta: float                # tan(theta/2) / 2
    diag: np.ndarray
    couple: np.ndarray

    def offsets(self):
        return np.arange(-self.W, self.W + 1)

    def y(self, k):
        return (k - 0.5) * self.h

    def delta_shift(self, k):
        return 1j * ((-1) ** ((self.n + k + 1) % 2)) * self.delta

    def tridiagonal(self):
        T = np.zeros((2 * self.W + 1, 2 * self.W + 1), dtype=complex)
        idx = np.arange(2 * self.W + 1)
        T[idx, idx] = self.diag
        T[idx[:-1], idx[:-1] + 1] = self.couple
        T[idx[:-1] + 1, idx[:-1]] = self.couple
        return T


def _e_factor(m, z):
    """e_m(z) = cos(z/2) - i (-1)^m sin(z/2) = exp(-i (-1)^m z / 2)."""
    return np.exp(-1j * ((-1) ** (m % 2)) * z / 2.0)


def rotated_minus(vseq: VerblunskySequence, ec, theta: float, n: int,
                  zeta: complex, W: int, sign: int = 0) -> RotatedEdgeOperator:
    """Edge window of the rotated difference operator C_r- at
    z = theta + zeta n^{-2/3}, built entrywise from the computed
    coefficients (the rotation phases never appear explicitly)."""
    from .opuc import detect_edge_sign
    if W > n // 2:
        raise ValueError("window exceeds half the matrix")
    if len(vseq) < n + W + 2:
        raise ValueError("window exceeds available coefficients")
    if sign == 0:
        sign = detect_edge_sign(vseq, n)
    h = n ** (-1.0 / 3.0)
    z = theta + zeta * h * h
    alph = vseq.alphas_float()
    rho = vseq.rhos_float()
    s_n = (-1) ** (n % 2)
    offs = np.arange(-W, W + 1)
    diag = np.empty(2 * W + 1, dtype=complex)
    couple = np.empty(2 * W, dtype=complex)
    for i, j in enumerate(offs):
        m = n - j
        diag[i] = 1j * sign * s_n * (alph[m - 1] * _e_factor(m, z)
                                     + alph[m] * _e_factor(m + 1, z))
    for i, j in enumerate(offs[:-1]):
        # entry between offsets j and j+1, i.e. rows n-j and n-j-1
        m = n - j
        couple[i] = rho[m - 1] * _e_factor(m, z)
    return RotatedEdgeOperator(n=n, theta=theta, zeta=zeta, W=W, sign=sign,
                               h=h, delta=0.5 * np.tan(0.5 * theta),
                               diag=diag, couple=couple)


def rotated_entry_expansion(rot: RotatedEdgeOperator, ec) -> dict:
    """Leading-order predictions for the window entries and their residuals.

    Predictions follow the n^{-2/3} expansion of the entries around the
    edge with the zeta coefficients carried at half the printed strength:
    e_m(z) = exp(-i (-1)^m z/2) exactly, so the linear term in zeta is
    -(i/2) (-1)^m e_m(theta) zeta n^{-2/3}.
    """
    n, theta, zeta = rot.n, rot.theta, rot.zeta
    h2 = rot.h ** 2
    p = ec.p_theta
    sin_h, cos_h = np.sin(0.5 * theta), np.cos(0.5 * theta)
    cot_h = cos_h / sin_h
    offs = rot.offsets()
    diag_pred = np.empty_like(rot.diag)
    couple_pred = np.empty(2 * rot.W, dtype=complex)
    for i, j in enumerate(offs):
        # matrix row n - j; the below-edge coordinate is y_j = (j - 1/2) h
        y = rot.y(j)
        beta = (-1) ** ((n - j) % 2)
        diag_pred[i] = (-np.sin(theta) - 2.0 * sin_h * p * y * h2
                        - cos_h * cos_h * zeta * h2
                        - 1j * beta * p * cos_h / n)
    for i, j in enumerate(offs[:-1]):
        y = rot.y(j)
        beta = (-1) ** ((n - j) % 2)
        e_th = _e_factor(n - j, theta)
        couple_pred[i] = e_th * (sin_h - cot_h * p * (y + 0.5 * rot.h) * h2
                                 - 0.5j * beta * sin_h * zeta * h2)
    return {
        "diag_pred": diag_pred,
        "couple_pred": couple_pred,
        "diag_residual": np.abs(rot.diag - diag_pred),
        "couple_residual": np.abs(rot.couple - couple_pred),
    }


@dataclass
class ResidualSummary:
    max_norm: float
    row_norms: np.ndarray
    offsets: np.ndarray
    matrix: np.ndarray


def approx_resolvent_residual(rot: RotatedEdgeOperator, airy_res,
                              report_halfwidth: int = 0) -> ResidualSummary:
    """D = C_r- R* - I on the window, with R* the shifted-argument sampling
    of the continuum resolvent kernel at grid scale h."""
    if abs(complex(airy_res.zeta) - complex(rot.zeta)) > 1e-12:
        raise ValueError("airy resolvent and window must share zeta")
    W = rot.W
    h = rot.h
    offs = rot.offsets()
    ys = np.array([rot.y(j) for j in offs])             # row n-j samples y_j
    shifts = np.array([rot.delta_shift(j) for j in offs])
    pts = ys + shifts * h
    m = 2 * W + 1
    Rstar = np.empty((m, m), dtype=complex)
    for i in range(m):
        for j in range(m):
            Rstar[i, j] = airy_res.kernel(pts[i], pts[j]) / h
    T = rot.tridiagonal()
    D = T @ Rstar - np.eye(m)
    if report_halfwidth <= 0:
        report_halfwidth = W - 1
    keep = np.abs(offs) <= report_halfwidth
    Dwin = D[np.ix_(keep, keep)]
    row_norms = np.max(np.abs(Dwin), axis=1)
    return ResidualSummary(max_norm=float(np.max(np.abs(Dwin))),
                           row_norms=row_norms, offsets=offs[keep],
                           matrix=Dwin)
