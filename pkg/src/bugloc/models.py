"""The four classifier families: each maps a query document to a ranked list
over every entity of the snapshot corpus.

Rankings are total orders: scores are sorted non-increasing with ties broken
by entity id, so identical inputs always give identical lists.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .corpus import Corpus, weight_matrix, weight_query
from .entities import EntityHistoryMetrics, SourceEntity
from .errors import ModelMismatch, TopicClampWarning
from .numerics import LdaModel, SvdFactors, gibbs_lda, truncated_svd
from .textprep import Document


@dataclass
class RankedList:
    query_id: str
    produced_by: str
    items: list[tuple[str, float]]  # (entity id, score), scores non-increasing

    def rank_of(self, entity_id: str) -> int | None:
        """1-based rank, None when the entity is absent."""
        for i, (eid, _) in enumerate(self.items):
            if eid == entity_id:
                return i + 1
        return None


def rank_from_scores(entity_ids: Sequence[str], scores, query_id: str,
                     produced_by: str) -> RankedList:
    scores = np.asarray(scores, dtype=float)
    order = sorted(range(len(entity_ids)), key=lambda i: (-scores[i], entity_ids[i]))
    return RankedList(query_id=query_id, produced_by=produced_by,
                      items=[(entity_ids[i], float(scores[i])) for i in order])


# ---------------------------------------------------------------------------
# VSM


def _cosine_scores(query_vec: np.ndarray, weights) -> np.ndarray:
    qnorm = float(np.sqrt(query_vec @ query_vec))
    if qnorm == 0.0:
        return np.zeros(weights.shape[1])
    dots = np.asarray((query_vec @ weights)).ravel()
    norms = np.sqrt(np.asarray(weights.multiply(weights).sum(axis=0)).ravel())
    scores = np.zeros_like(dots)
    nonzero = norms > 0
    scores[nonzero] = dots[nonzero] / (qnorm * norms[nonzero])
    return scores


def _overlap_scores(query: Document, corpus: Corpus) -> np.ndarray:
    """Distinct common terms over the size of the smaller distinct-term set."""
    query_idx = {corpus.dictionary.index[t] for t in query.terms if t in corpus.dictionary}
    scores = np.zeros(corpus.num_documents)
    if not query_idx:
        return scores
    csc = corpus.counts
    for d in range(corpus.num_documents):
        doc_terms = csc.indices[csc.indptr[d]:csc.indptr[d + 1]]
        smallest = min(len(query_idx), len(doc_terms))
        if smallest == 0:
            continue
        common = sum(1 for t in doc_terms if t in query_idx)
        scores[d] = common / smallest
    return scores


def vsm_rank(query: Document, corpus: Corpus, weight: int, similarity: int,
             idf_mode: str = "log", produced_by: str = "") -> RankedList:
    """Rank by cosine (similarity=1) or overlap (similarity=2) in term space."""
    if similarity == 2:
        scores = _overlap_scores(query, corpus)
    else:
        query_vec = weight_query(query, corpus, weight, idf_mode)
        scores = _cosine_scores(query_vec, weight_matrix(corpus, weight, idf_mode))
    return rank_from_scores(corpus.entity_ids, scores, query.source_id, produced_by)


# ---------------------------------------------------------------------------
# LSI


@dataclass
class LsiModel:
    factors: SvdFactors | None   # None when the corpus has no terms
    doc_latent: np.ndarray       # documents x k, rows are diag(S) @ v_d
    requested_topics: int
    effective_topics: int
    weight_scheme: int
    idf_mode: str
    corpus_hash: str


def train_lsi(corpus: Corpus, weight: int, k_topics: int,
              idf_mode: str = "log", seed: int = 0) -> LsiModel:
    """Factor the weighted matrix; topic counts above min(T, D) are clamped."""
    limit = min(corpus.num_terms, corpus.num_documents)
    effective = min(k_topics, limit)
    if effective < k_topics:
        warnings.warn(
            f"corpus {corpus.content_hash[:8]}: clamping {k_topics} topics to {effective}",
            TopicClampWarning)
    if effective == 0:
        return LsiModel(factors=None, doc_latent=np.zeros((corpus.num_documents, 0)),
                        requested_topics=k_topics, effective_topics=0,
                        weight_scheme=weight, idf_mode=idf_mode,
                        corpus_hash=corpus.content_hash)
    factors = truncated_svd(weight_matrix(corpus, weight, idf_mode), effective, seed=seed)
    doc_latent = factors.v * factors.s[None, :]
    return LsiModel(factors=factors, doc_latent=doc_latent,
                    requested_topics=k_topics, effective_topics=effective,
                    weight_scheme=weight, idf_mode=idf_mode,
                    corpus_hash=corpus.content_hash)


def lsi_rank(query: Document, corpus: Corpus, weight: int, k_topics: int,
             idf_mode: str = "log", model: LsiModel | None = None,
             seed: int = 0, produced_by: str = "") -> RankedList:
    """Cosine ranking in the latent space; the query is folded in as U' q."""
    if model is None:
        model = train_lsi(corpus, weight, k_topics, idf_mode, seed)
    if model.corpus_hash != corpus.content_hash:
        raise ModelMismatch("LSI model was trained on a different corpus")
    if model.factors is None:
        scores = np.zeros(corpus.num_documents)
    else:
        query_vec = weight_query(query, corpus, model.weight_scheme, model.idf_mode)
        folded = model.factors.u.T @ query_vec
        qnorm = float(np.sqrt(folded @ folded))
        if qnorm == 0.0:
            scores = np.zeros(corpus.num_documents)
        else:
            norms = np.sqrt(np.sum(model.doc_latent ** 2, axis=1))
            scores = np.zeros(corpus.num_documents)
            nonzero = norms > 0
            scores[nonzero] = (model.doc_latent[nonzero] @ folded) / (qnorm * norms[nonzero])
    return rank_from_scores(corpus.entity_ids, scores, query.source_id, produced_by)


# ---------------------------------------------------------------------------
# LDA


def train_lda(corpus: Corpus, k_topics: int, alpha: float | None = None,
              beta: float = 0.01, max_iterations: int = 1000, seed: int = 0) -> LdaModel:
    return gibbs_lda(corpus.counts, k_topics, alpha=alpha, beta=beta,
                     max_iterations=max_iterations, seed=seed,
                     corpus_hash=corpus.content_hash)


def lda_rank(query: Document, corpus: Corpus, k_topics: int, model: LdaModel,
             produced_by: str = "") -> RankedList:
    """Conditional-probability scoring: sum over query tokens of
    log p(token | document) under the trained topic model."""
    if model.corpus_hash is not None and model.corpus_hash != corpus.content_hash:
        raise ModelMismatch("LDA model was trained on a different corpus")
    if model.k != k_topics:
        raise ModelMismatch(f"model has {model.k} topics, configuration wants {k_topics}")
    term_idx: list[int] = []
    term_count: list[float] = []
    for term, count in sorted(query.terms.items()):
        idx = corpus.dictionary.index.get(term)
        if idx is not None:
            term_idx.append(idx)
            term_count.append(float(count))
    if not term_idx:
        scores = np.zeros(corpus.num_documents)
    else:
        # documents x query-terms matrix of p(w|d)
        probs = model.theta @ model.phi[:, term_idx]
        scores = np.log(probs) @ np.asarray(term_count)
    return rank_from_scores(corpus.entity_ids, scores, query.source_id, produced_by)


# ---------------------------------------------------------------------------
# EM


def em_rank(metric: int, entities: Sequence[SourceEntity],
            metrics: Mapping[str, EntityHistoryMetrics], query_id: str,
            produced_by: str = "") -> RankedList:
    """Rank by one history metric, larger meaning more bug-prone."""
    fields = {1: "loc", 2: "churn", 3: "new_bug_count", 4: "cumulative_bug_count"}
    if metric not in fields:
        raise ValueError(f"unknown entity metric M{metric}")
    entity_ids = sorted(e.id for e in entities)
    scores = [float(getattr(metrics[eid], fields[metric])) for eid in entity_ids]
    return rank_from_scores(entity_ids, scores, query_id, produced_by)
