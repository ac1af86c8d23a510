"""The factorial classifier-configuration space and its canonical id strings.

Ids are dot-joined parameter codes in grid letter order, e.g. the VSM
configuration "A1.B4.C5.D1.E1". LSI ids carry F and G (similarity is fixed at
cosine), LDA ids carry J and the literal K1 (iterations, smoothing and
similarity are fixed), EM ids are "M1".."M4".
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import product

from .errors import ConfigParseError
from .textprep import EntityRepSpec, PreprocessSpec, QueryRepSpec

FAMILIES = ("vsm", "lsi", "lda", "em")

QUERY_REPS = (1, 2, 3)            # A
ENTITY_REPS = (1, 2, 3, 4, 5, 6)  # B
PREPROCESS = tuple(range(8))      # C
TERM_WEIGHTS = (1, 2, 3)          # D (VSM) / F (LSI): tf-idf, sublinear tf-idf, boolean
SIMILARITIES = (1, 2)             # E (VSM): cosine, overlap
TOPIC_COUNTS = (32, 64, 128, 256)  # G (LSI) / J (LDA)
EM_METRICS = (1, 2, 3, 4)         # M: loc, churn, new bug count, cumulative bug count

EM_METRIC_NAMES = {1: "loc", 2: "churn", 3: "new_bug_count", 4: "cumulative_bug_count"}


@dataclass(frozen=True)
class Configuration:
    family: str
    a: int | None = None          # bug report representation
    b: int | None = None          # entity representation
    c: int | None = None          # preprocessing steps
    weight: int | None = None     # term weighting (D or F)
    similarity: int | None = None  # VSM only (E); LSI/LDA similarities are fixed
    topics: int | None = None     # LSI G / LDA J
    em_metric: int | None = None  # EM only (M)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        checks = {
            "vsm": (self.a, self.b, self.c, self.weight, self.similarity),
            "lsi": (self.a, self.b, self.c, self.weight, self.topics),
            "lda": (self.a, self.b, self.c, self.topics),
            "em": (self.em_metric,),
        }
        if any(v is None for v in checks[self.family]):
            raise ValueError(f"incomplete {self.family} configuration: {self}")

    @property
    def query_rep(self) -> QueryRepSpec:
        return QueryRepSpec(self.a)

    @property
    def entity_rep(self) -> EntityRepSpec:
        return EntityRepSpec(self.b)

    @property
    def preprocess_spec(self) -> PreprocessSpec:
        return PreprocessSpec.from_code(self.c)


def config_id(cfg: Configuration) -> str:
    if cfg.family == "vsm":
        return f"A{cfg.a}.B{cfg.b}.C{cfg.c}.D{cfg.weight}.E{cfg.similarity}"
    if cfg.family == "lsi":
        return f"A{cfg.a}.B{cfg.b}.C{cfg.c}.F{cfg.weight}.G{cfg.topics}"
    if cfg.family == "lda":
        return f"A{cfg.a}.B{cfg.b}.C{cfg.c}.J{cfg.topics}.K1"
    return f"M{cfg.em_metric}"


_PART_RE = re.compile(r"^([A-Z])(\d+)$")

_ALLOWED = {
    "A": set(QUERY_REPS),
    "B": set(ENTITY_REPS),
    "C": set(PREPROCESS),
    "D": set(TERM_WEIGHTS),
    "E": set(SIMILARITIES),
    "F": set(TERM_WEIGHTS),
    "G": set(TOPIC_COUNTS),
    "J": set(TOPIC_COUNTS),
    "K": {1},
    "M": set(EM_METRICS),
}


def parse_config_id(s: str) -> Configuration:
    parts = s.split(".")
    values: dict[str, int] = {}
    letters: list[str] = []
    for part in parts:
        m = _PART_RE.match(part)
        if m is None:
            raise ConfigParseError(s, part)
        letter, value = m.group(1), int(m.group(2))
        if letter not in _ALLOWED or value not in _ALLOWED[letter] or letter in values:
            raise ConfigParseError(s, part)
        values[letter] = value
        letters.append(letter)
    shape = "".join(letters)
    if shape == "M":
        return Configuration(family="em", em_metric=values["M"])
    if shape == "ABCDE":
        return Configuration(family="vsm", a=values["A"], b=values["B"], c=values["C"],
                             weight=values["D"], similarity=values["E"])
    if shape == "ABCFG":
        return Configuration(family="lsi", a=values["A"], b=values["B"], c=values["C"],
                             weight=values["F"], topics=values["G"])
    if shape == "ABCJK":
        return Configuration(family="lda", a=values["A"], b=values["B"], c=values["C"],
                             topics=values["J"])
    raise ConfigParseError(s, s)


def enumerate_configs(families=FAMILIES) -> list[Configuration]:
    """Full factorial grid in deterministic (family, letter-code) order."""
    out: list[Configuration] = []
    for family in families:
        if family == "vsm":
            for a, b, c, d, e in product(QUERY_REPS, ENTITY_REPS, PREPROCESS,
                                         TERM_WEIGHTS, SIMILARITIES):
                out.append(Configuration("vsm", a=a, b=b, c=c, weight=d, similarity=e))
        elif family == "lsi":
            for a, b, c, f, g in product(QUERY_REPS, ENTITY_REPS, PREPROCESS,
                                         TERM_WEIGHTS, TOPIC_COUNTS):
                out.append(Configuration("lsi", a=a, b=b, c=c, weight=f, topics=g))
        elif family == "lda":
            for a, b, c, j in product(QUERY_REPS, ENTITY_REPS, PREPROCESS, TOPIC_COUNTS):
                out.append(Configuration("lda", a=a, b=b, c=c, topics=j))
        elif family == "em":
            for m in EM_METRICS:
                out.append(Configuration("em", em_metric=m))
        else:
            raise ValueError(f"unknown family {family!r}")
    return out
