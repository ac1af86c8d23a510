"""Snapshot corpora: entity documents, the term-document count matrix and
the three term-weighting schemes shared by VSM and LSI.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from datetime import datetime
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from .entities import BugReport, FixLinkSet, Snapshot
from .textprep import Dictionary, Document, EntityRepSpec, PreprocessSpec, build_entity_doc

IDF_MODES = ("log", "raw")


@dataclass
class Corpus:
    snapshot_id: str
    as_of: datetime
    entity_ids: list[str]       # column order, sorted
    dictionary: Dictionary
    counts: sp.csc_matrix       # terms x documents, raw term counts
    content_hash: str

    @property
    def num_terms(self) -> int:
        return len(self.dictionary)

    @property
    def num_documents(self) -> int:
        return len(self.entity_ids)


def build_corpus(snapshot: Snapshot, rep: EntityRepSpec, spec: PreprocessSpec,
                 history: FixLinkSet | None = None,
                 bugs: Mapping[int, BugReport] | None = None,
                 stopwords=None) -> Corpus:
    """Build the document corpus of one snapshot under representation B and
    preprocessing C. PBR history is cut off at the snapshot timestamp."""
    entity_ids = snapshot.sorted_ids()
    documents = [
        build_entity_doc(snapshot.entities[eid], rep, spec,
                         history=history, bugs=bugs, as_of=snapshot.timestamp,
                         stopwords=stopwords)
        for eid in entity_ids
    ]
    dictionary = Dictionary(documents)
    rows, cols, data = [], [], []
    for col, doc in enumerate(documents):
        for term, count in doc.terms.items():
            rows.append(dictionary.index[term])
            cols.append(col)
            data.append(count)
    counts = sp.csc_matrix((data, (rows, cols)),
                           shape=(len(dictionary), len(entity_ids)), dtype=np.float64)
    digest = hashlib.sha256()
    digest.update(json.dumps({
        "snapshot": snapshot.id,
        "entities": entity_ids,
        "terms": dictionary.terms,
        "cells": sorted(zip(map(int, rows), map(int, cols), map(int, data))),
    }, sort_keys=True).encode("utf-8"))
    return Corpus(snapshot_id=snapshot.id, as_of=snapshot.timestamp,
                  entity_ids=entity_ids, dictionary=dictionary, counts=counts,
                  content_hash=digest.hexdigest())


def idf_vector(corpus: Corpus, mode: str = "log") -> np.ndarray:
    """Per-term idf: ln(N/df) by default, the literal 1/df under mode="raw"."""
    if mode not in IDF_MODES:
        raise ValueError(f"unknown idf mode {mode!r}")
    df = np.asarray(corpus.dictionary.df, dtype=float)
    if len(df) == 0:
        return df
    n = float(corpus.dictionary.num_documents)
    return np.log(n / df) if mode == "log" else 1.0 / df


def weight_matrix(corpus: Corpus, scheme: int, idf_mode: str = "log") -> sp.csc_matrix:
    """Term-document weights: 1 tf-idf, 2 sublinear tf-idf, 3 boolean."""
    w = corpus.counts.copy()
    if scheme == 3:
        w.data = np.ones_like(w.data)
        return w
    idf = idf_vector(corpus, idf_mode)
    term_rows = w.indices  # csc: row index per stored value
    tf = w.data
    if scheme == 1:
        w.data = tf * idf[term_rows]
    elif scheme == 2:
        w.data = (1.0 + np.log(tf)) * idf[term_rows]
    else:
        raise ValueError(f"unknown weighting scheme {scheme}")
    return w


def weight_query(query: Document, corpus: Corpus, scheme: int,
                 idf_mode: str = "log") -> np.ndarray:
    """Dense weighted query vector over the corpus vocabulary (OOV terms ignored)."""
    vec = np.zeros(corpus.num_terms)
    if scheme == 3:
        for term in query.terms:
            idx = corpus.dictionary.index.get(term)
            if idx is not None:
                vec[idx] = 1.0
        return vec
    idf = idf_vector(corpus, idf_mode)
    for term, tf in query.terms.items():
        idx = corpus.dictionary.index.get(term)
        if idx is None:
            continue
        vec[idx] = (tf if scheme == 1 else 1.0 + np.log(tf)) * idf[idx]
    return vec
