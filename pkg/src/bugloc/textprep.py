"""Text preparation: tokenization, identifier splitting, stop removal, stemming,
and the construction of query and entity bag-of-terms documents.

Representation codes follow the experiment grid: A picks the bug-report
fields, B picks the entity text source, C picks which of the three
preprocessing steps run. The step order is fixed: split, then stop, then stem.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime
from importlib import resources
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

from .errors import EmptyQuery
from .porter import stem as porter_stem

if TYPE_CHECKING:
    from .entities import BugReport, FixLinkSet, SourceEntity

_TOKEN_RE = re.compile(r"[A-Za-z0-9_]+")
_SPLIT_RE = re.compile(r"[A-Z]+(?![a-z])|[A-Z][a-z]+|[a-z]+|[0-9]+")

_QUERY_CODES = (1, 2, 3)
_ENTITY_CODES = (1, 2, 3, 4, 5, 6)
_PBR_WINDOW = 10


@dataclass(frozen=True)
class PreprocessSpec:
    """One of the eight preprocessing settings C0..C7.

    The code is a bijection onto the (split, stop, stem) flag triple:
    bit 0 of a 3-bit reading would not match the published grid, so the
    mapping is enumerated explicitly.
    """

    split: bool
    stop: bool
    stem: bool

    _BY_CODE = {
        0: (False, False, False),
        1: (True, False, False),
        2: (False, True, False),
        3: (False, False, True),
        4: (True, True, False),
        5: (True, False, True),
        6: (False, True, True),
        7: (True, True, True),
    }

    @classmethod
    def from_code(cls, code: int) -> "PreprocessSpec":
        if code not in cls._BY_CODE:
            raise ValueError(f"unknown preprocessing code C{code}")
        return cls(*cls._BY_CODE[code])

    @property
    def code(self) -> int:
        for code, flags in self._BY_CODE.items():
            if flags == (self.split, self.stop, self.stem):
                return code
        raise AssertionError("unreachable: flag triple not in table")


@dataclass(frozen=True)
class QueryRepSpec:
    """Bug-report representation: A1 title, A2 description, A3 both."""

    code: int

    def __post_init__(self):
        if self.code not in _QUERY_CODES:
            raise ValueError(f"unknown query representation A{self.code}")


@dataclass(frozen=True)
class EntityRepSpec:
    """Entity representation: B1 identifiers, B2 comments, B3 both,
    B4 all past bug reports, B5 the 10 most recent, B6 everything."""

    code: int

    def __post_init__(self):
        if self.code not in _ENTITY_CODES:
            raise ValueError(f"unknown entity representation B{self.code}")

    @property
    def uses_pbr(self) -> bool:
        return self.code in (4, 5, 6)


@dataclass
class Document:
    """Bag of terms with counts; source_id names the originating bug or entity."""

    source_id: str
    terms: dict[str, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return sum(self.terms.values())

    @property
    def is_empty(self) -> bool:
        return not self.terms


class Dictionary:
    """Dense term index plus document frequencies over a corpus."""

    def __init__(self, documents: Sequence[Document]):
        self.num_documents = len(documents)
        dfs: Counter[str] = Counter()
        for doc in documents:
            dfs.update(doc.terms.keys())
        self.terms: list[str] = sorted(dfs)
        self.index: dict[str, int] = {t: i for i, t in enumerate(self.terms)}
        self.df = [dfs[t] for t in self.terms]

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self.index


def load_stopwords(path=None) -> frozenset[str]:
    """Load the stop list (bundled 127-word English list unless a path is given)."""
    if path is None:
        text = resources.files("bugloc").joinpath("data/stopwords.txt").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip())


_DEFAULT_STOPWORDS: frozenset[str] | None = None


def _default_stopwords() -> frozenset[str]:
    global _DEFAULT_STOPWORDS
    if _DEFAULT_STOPWORDS is None:
        _DEFAULT_STOPWORDS = load_stopwords()
    return _DEFAULT_STOPWORDS


def tokenize(text: str) -> list[str]:
    """Raw tokens: maximal alphanumeric+underscore runs, case preserved.

    Purely numeric tokens and single-character tokens are dropped.
    """
    return [t for t in _TOKEN_RE.findall(text) if len(t) > 1 and not t.isdigit()]


def split_identifier(token: str) -> list[str]:
    """Split at camel-case humps, digit boundaries and underscores.

    Runs of capitals stay together until a lowercase letter follows, so
    "XMLParser" gives ["XML", "Parser"].
    """
    return _SPLIT_RE.findall(token)


def preprocess(tokens: Iterable[str], spec: PreprocessSpec,
               stopwords: frozenset[str] | None = None) -> list[str]:
    """Apply split/stop/stem per `spec` and lowercase; returns final terms.

    Numeric and single-character fragments produced by splitting are dropped,
    mirroring the tokenizer's own rule.
    """
    stops = stopwords if stopwords is not None else _default_stopwords()
    out: list[str] = []
    for token in tokens:
        fragments = split_identifier(token) if spec.split else [token]
        for fragment in fragments:
            term = fragment.lower()
            if len(term) <= 1 or term.isdigit():
                continue
            if spec.stop and term in stops:
                continue
            if spec.stem:
                term = porter_stem(term)
                if len(term) <= 1:
                    continue
            out.append(term)
    return out


def _to_document(source_id: str, terms: Iterable[str]) -> Document:
    return Document(source_id=source_id, terms=dict(Counter(terms)))


def build_query(bug: "BugReport", rep: QueryRepSpec, spec: PreprocessSpec,
                stopwords: frozenset[str] | None = None) -> Document:
    """Build the query document for a bug report; raises EmptyQuery if no terms survive."""
    parts: list[str] = []
    if rep.code in (1, 3):
        parts.append(bug.title)
    if rep.code in (2, 3):
        parts.append(bug.description)
    terms: list[str] = []
    for part in parts:
        terms.extend(preprocess(tokenize(part), spec, stopwords))
    if not terms:
        raise EmptyQuery(f"bug {bug.id} has no terms under A{rep.code}.C{spec.code}")
    return _to_document(str(bug.id), terms)


def past_bug_reports(entity_id: str, history: "FixLinkSet",
                     bugs: Mapping[int, "BugReport"], as_of: datetime,
                     window: int | None = None) -> list["BugReport"]:
    """Bug reports fixed in `entity_id` strictly before `as_of`.

    Ordered by creation time (bug id breaks ties); `window` keeps only the
    most recent that many. Uses the link's fix timestamp, i.e. the commit
    time at which the entity actually changed.
    """
    linked = [
        bugs[bug_id]
        for bug_id, fixed_at in history.links_for_entity(entity_id)
        if fixed_at < as_of and bug_id in bugs
    ]
    linked.sort(key=lambda b: (b.created, b.id))
    if window is not None:
        linked = linked[-window:]
    return linked


def build_entity_doc(entity: "SourceEntity", rep: EntityRepSpec, spec: PreprocessSpec,
                     history: "FixLinkSet" = None, bugs: Mapping[int, "BugReport"] = None,
                     as_of: datetime = None,
                     stopwords: frozenset[str] | None = None) -> Document:
    """Build an entity's corpus document under representation B.

    PBR-based representations (B4/B5/B6) require history, bugs and as_of;
    entities with no prior fixes yield an empty document, which stays in
    the corpus but can never be matched.
    """
    terms: list[str] = []
    if rep.code in (1, 3, 6):
        terms.extend(preprocess(tokenize(entity.identifier_text), spec, stopwords))
    if rep.code in (2, 3, 6):
        terms.extend(preprocess(tokenize(entity.comment_text), spec, stopwords))
    if rep.uses_pbr:
        if history is None or bugs is None or as_of is None:
            raise ValueError(f"B{rep.code} needs fix history, a bug store and as_of")
        window = _PBR_WINDOW if rep.code == 5 else None
        for bug in past_bug_reports(entity.id, history, bugs, as_of, window):
            terms.extend(preprocess(tokenize(bug.title), spec, stopwords))
            terms.extend(preprocess(tokenize(bug.description), spec, stopwords))
    return _to_document(entity.id, terms)
