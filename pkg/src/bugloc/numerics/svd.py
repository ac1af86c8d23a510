"""Truncated SVD by seeded orthogonal subspace iteration.

The iteration runs on an oversampled block with two QR re-orthonormalizations
per sweep and stops when the singular-value estimates move by less than a
relative tolerance; a final Rayleigh-Ritz step with a one-sided Jacobi SVD of
the small projected matrix extracts the factors. Everything is deterministic
given the seed, including the null-space columns that appear when the
requested rank exceeds the matrix rank.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConvergenceFailure


@dataclass
class SvdFactors:
    u: np.ndarray  # rows x k, orthonormal columns
    s: np.ndarray  # k singular values, non-increasing
    v: np.ndarray  # cols x k, orthonormal columns

    @property
    def k(self) -> int:
        return len(self.s)


def _jacobi_svd(b: np.ndarray, tol: float = 1e-15, max_sweeps: int = 60):
    """One-sided Jacobi SVD of a small dense matrix: b = p @ diag(s) @ q.T."""
    a = np.array(b, dtype=float, copy=True)
    n = a.shape[1]
    q = np.eye(n)
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.eye(a.shape[0], n), np.zeros(n), q
    for _ in range(max_sweeps):
        rotated = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                aii = a[:, i] @ a[:, i]
                ajj = a[:, j] @ a[:, j]
                aij = a[:, i] @ a[:, j]
                if abs(aij) <= tol * scale * scale:
                    continue
                rotated = True
                tau = (ajj - aii) / (2.0 * aij)
                t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                gi = c * a[:, i] - s * a[:, j]
                gj = s * a[:, i] + c * a[:, j]
                a[:, i], a[:, j] = gi, gj
                qi = c * q[:, i] - s * q[:, j]
                qj = s * q[:, i] + c * q[:, j]
                q[:, i], q[:, j] = qi, qj
        if not rotated:
            break
    s = np.linalg.norm(a, axis=0)
    p = np.zeros_like(a)
    nonzero = s > tol * scale
    p[:, nonzero] = a[:, nonzero] / s[nonzero]
    s[~nonzero] = 0.0
    # complete the left factor to orthonormal columns for null directions
    for idx in np.flatnonzero(~nonzero):
        for basis in range(a.shape[0]):
            cand = np.zeros(a.shape[0])
            cand[basis] = 1.0
            cand -= p @ (p.T @ cand)
            norm = np.linalg.norm(cand)
            if norm > 0.5:
                p[:, idx] = cand / norm
                break
    return p, s, q


def truncated_svd(m, k: int, seed: int = 0, tol: float = 1e-10,
                  max_sweeps: int = 1000, oversample: int = 10) -> SvdFactors:
    """Top-k singular factors of a (sparse or dense) rows x cols matrix."""
    rows, cols = m.shape
    if not 1 <= k <= min(rows, cols):
        raise ValueError(f"k={k} outside [1, {min(rows, cols)}]")
    block = min(k + oversample, min(rows, cols))
    rng = np.random.default_rng(seed)
    v = np.linalg.qr(rng.standard_normal((cols, block)))[0]
    mt = m.T
    prev = None
    delta = math.inf
    for _ in range(max_sweeps):
        u = np.linalg.qr(np.asarray(m @ v))[0]
        v, r = np.linalg.qr(np.asarray(mt @ u))
        s_est = np.sort(np.abs(np.diag(r)))[::-1]
        if prev is not None:
            denom = max(s_est[0], prev[0], 1e-300)
            delta = float(np.max(np.abs(s_est - prev)) / denom)
            if delta < tol:
                break
        prev = s_est
    else:
        raise ConvergenceFailure(
            f"subspace iteration did not converge in {max_sweeps} sweeps "
            f"(last relative change {delta:.3e})", residual=delta)

    b_small = u.T @ np.asarray(m @ v)
    p, s, q = _jacobi_svd(b_small)
    order = np.argsort(-s, kind="stable")
    u_full = u @ p[:, order]
    v_full = v @ q[:, order]
    s = s[order]
    u_k, s_k, v_k = u_full[:, :k], s[:k], v_full[:, :k]
    # canonical sign: largest-magnitude component of each left vector positive
    for i in range(k):
        pivot = np.argmax(np.abs(u_k[:, i]))
        if u_k[pivot, i] < 0:
            u_k[:, i] = -u_k[:, i]
            v_k[:, i] = -v_k[:, i]
    return SvdFactors(u=np.ascontiguousarray(u_k), s=s_k, v=np.ascontiguousarray(v_k))
