"""Collapsed Gibbs sampling for latent Dirichlet allocation.

Topic-word and document-topic distributions come from the smoothed
assignment counts:

    phi[z][w]   = (n_zw + beta) / (n_z + T*beta)
    theta[d][z] = (n_dz + alpha) / (n_d + K*alpha)

Sampling stops once the relative change of the corpus log-likelihood over a
10-iteration window drops below 1e-4, or at the iteration cap. With the same
seed and corpus the result is bit-identical across runs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

_LL_WINDOW = 10
_LL_RELTOL = 1e-4


@dataclass
class LdaModel:
    k: int
    alpha: float
    beta: float
    phi: np.ndarray    # K x T topic-word rows, each summing to 1
    theta: np.ndarray  # D x K document-topic rows, each summing to 1
    seed: int
    iterations_run: int
    corpus_hash: str | None = None


def _token_stream(counts) -> tuple[np.ndarray, np.ndarray, int, int]:
    """Flatten a T x D count matrix into (word, doc) token arrays, doc-major."""
    n_terms, n_docs = counts.shape
    coo = sp.coo_matrix(counts)
    order = np.lexsort((coo.row, coo.col))
    ws, ds, cs = coo.row[order], coo.col[order], coo.data[order]
    if np.any(cs < 0) or np.any(cs != np.floor(cs)):
        raise ValueError("corpus counts must be non-negative integers")
    reps = cs.astype(np.int64)
    return np.repeat(ws, reps), np.repeat(ds, reps), n_terms, n_docs


def gibbs_lda(counts, k: int, alpha: float | None = None, beta: float = 0.01,
              max_iterations: int = 1000, seed: int = 0,
              corpus_hash: str | None = None) -> LdaModel:
    """Fit an LDA model on a term-document count matrix by collapsed Gibbs.

    alpha defaults to 50/k. Empty corpora are legal and return the smoothed
    uniform model without sampling.
    """
    if k < 2:
        raise ValueError(f"topic count must be >= 2, got {k}")
    if alpha is None:
        alpha = 50.0 / k
    if alpha <= 0 or beta <= 0:
        raise ValueError("alpha and beta must be positive")

    ws, ds, n_terms, n_docs = _token_stream(counts)
    n_tokens = len(ws)
    rng = np.random.default_rng(seed)

    n_wz = np.zeros((n_terms, k))
    n_dz = np.zeros((n_docs, k))
    n_z = np.zeros(k)
    z = rng.integers(0, k, size=n_tokens)
    for i in range(n_tokens):
        n_wz[ws[i], z[i]] += 1.0
        n_dz[ds[i], z[i]] += 1.0
        n_z[z[i]] += 1.0

    def distributions():
        phi = (n_wz.T + beta)
        phi /= (n_z + n_terms * beta)[:, None] if n_terms else 1.0
        theta = n_dz + alpha
        theta /= theta.sum(axis=1, keepdims=True)
        return phi, theta

    if n_tokens == 0:
        phi, theta = distributions()
        return LdaModel(k=k, alpha=alpha, beta=beta, phi=phi, theta=theta,
                        seed=seed, iterations_run=0, corpus_hash=corpus_hash)

    t_beta = n_terms * beta
    ll_history: list[float] = []
    iterations = 0
    for iteration in range(max_iterations):
        unif = rng.random(n_tokens)
        for i in range(n_tokens):
            w, d, old = ws[i], ds[i], z[i]
            n_wz[w, old] -= 1.0
            n_dz[d, old] -= 1.0
            n_z[old] -= 1.0
            p = (n_wz[w] + beta) / (n_z + t_beta) * (n_dz[d] + alpha)
            cumulative = np.cumsum(p)
            new = int(np.searchsorted(cumulative, unif[i] * cumulative[-1], side="right"))
            if new >= k:
                new = k - 1
            z[i] = new
            n_wz[w, new] += 1.0
            n_dz[d, new] += 1.0
            n_z[new] += 1.0
        iterations = iteration + 1
        phi, theta = distributions()
        token_prob = np.einsum("ij,ji->i", theta[ds], phi[:, ws])
        ll = float(np.sum(np.log(token_prob)))
        ll_history.append(ll)
        if len(ll_history) > _LL_WINDOW:
            past = ll_history[-_LL_WINDOW - 1]
            if abs(ll - past) / max(abs(past), 1e-12) < _LL_RELTOL:
                break

    phi, theta = distributions()
    return LdaModel(k=k, alpha=alpha, beta=beta, phi=phi, theta=theta,
                    seed=seed, iterations_run=iterations, corpus_hash=corpus_hash)
