"""Evaluation metrics: top-k, effort-to-first-relevant (LOC), top-k_LOC,
likelihood-within-X% tables, configuration rank tables and lift-chart data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import DegenerateInput
from .models import RankedList

DEFAULT_K = 20
DEFAULT_K_LOC = 10_000
DEFAULT_EFFORT_CAP = 50_000

LIKELIHOOD_PCTS = (1, 5, 10, 15, 20)


@dataclass
class QueryEval:
    query_id: int
    snapshot: str
    first_rank: int | None        # rank of the first relevant entity
    first_cum_loc: int | None     # uncapped cumulative LOC through that rank
    effort: int                   # capped
    localized_at_k: bool


@dataclass
class EvalOutcome:
    config: str
    family: str
    per_query: list[QueryEval] = field(default_factory=list)
    excluded_queries: int = 0     # queries with no resolvable ground truth
    top_k: float = 0.0
    median_effort: int = 0
    top_k_loc: float = 0.0


def first_relevant(ranked: RankedList, relevant: Iterable[str]) -> int | None:
    rel = set(relevant)
    for i, (entity_id, _) in enumerate(ranked.items):
        if entity_id in rel:
            return i + 1
    return None


def cumulative_loc_through(ranked: RankedList, rank: int, loc: Mapping[str, int]) -> int:
    return sum(loc[eid] for eid, _ in ranked.items[:rank])


def top_k(ranked_lists: Sequence[RankedList], truth: Mapping[str, Iterable[str]],
          k: int) -> tuple[dict[str, int], float, int]:
    """Per-query indicators and their mean; queries without ground truth are
    excluded from the denominator and returned as a count."""
    if k < 1:
        raise ValueError("k must be positive")
    indicators: dict[str, int] = {}
    excluded = 0
    for ranked in ranked_lists:
        rel = set(truth.get(ranked.query_id, ()))
        if not rel:
            excluded += 1
            continue
        rank = first_relevant(ranked, rel)
        indicators[ranked.query_id] = int(rank is not None and rank <= k)
    aggregate = sum(indicators.values()) / len(indicators) if indicators else 0.0
    return indicators, aggregate, excluded


def effort_to_first(ranked: RankedList, relevant: Iterable[str],
                    loc: Mapping[str, int], cap: int = DEFAULT_EFFORT_CAP) -> int:
    """Cumulative LOC read through the first relevant entity, capped.

    Exceeding the cap or finding nothing relevant both return the cap.
    """
    rank = first_relevant(ranked, relevant)
    if rank is None:
        return cap
    return min(cumulative_loc_through(ranked, rank, loc), cap)


def top_k_loc(ranked_lists: Sequence[RankedList], truth: Mapping[str, Iterable[str]],
              loc: Mapping[str, int], k_loc: int) -> tuple[dict[str, int], float, int]:
    """Share of queries whose first relevant entity is reachable within a
    cumulative LOC budget of k_loc (inclusive)."""
    if k_loc < 1:
        raise ValueError("k_loc must be positive")
    indicators: dict[str, int] = {}
    excluded = 0
    for ranked in ranked_lists:
        rel = set(truth.get(ranked.query_id, ()))
        if not rel:
            excluded += 1
            continue
        rank = first_relevant(ranked, rel)
        if rank is None:
            indicators[ranked.query_id] = 0
        else:
            indicators[ranked.query_id] = int(
                cumulative_loc_through(ranked, rank, loc) <= k_loc)
    aggregate = sum(indicators.values()) / len(indicators) if indicators else 0.0
    return indicators, aggregate, excluded


def lower_median(values: Sequence[int]) -> int:
    """Deterministic median for integer LOC: the lower of the two middles."""
    ordered = sorted(values)
    if not ordered:
        return 0
    return ordered[(len(ordered) - 1) // 2]


def summarize(config: str, family: str, per_query: Sequence[QueryEval],
              excluded: int, k: int, k_loc: int, cap: int) -> EvalOutcome:
    """Aggregate per-query facts into an outcome at the given thresholds."""
    outcome = EvalOutcome(config=config, family=family, per_query=list(per_query),
                          excluded_queries=excluded)
    if per_query:
        localized = [int(q.first_rank is not None and q.first_rank <= k) for q in per_query]
        outcome.top_k = sum(localized) / len(localized)
        efforts = [cap if q.first_cum_loc is None else min(q.first_cum_loc, cap)
                   for q in per_query]
        outcome.median_effort = lower_median(efforts)
        within = [int(q.first_cum_loc is not None and q.first_cum_loc <= k_loc)
                  for q in per_query]
        outcome.top_k_loc = sum(within) / len(within)
    return outcome


def likelihood_within(perfs: Sequence[float], pct: int, mode: str = "top_k") -> float:
    """Fraction of configurations within pct percent of the best value.

    top_k mode: perf >= (1 - pct/100) * best; effort mode: value <=
    (1 + pct/100) * least.
    """
    if not perfs:
        raise ValueError("empty performance vector")
    if mode == "top_k":
        best = max(perfs)
        if best == 0:
            raise DegenerateInput("best top-k performance is zero")
        threshold = (1.0 - pct / 100.0) * best
        return sum(1 for p in perfs if p >= threshold) / len(perfs)
    if mode == "effort":
        least = min(perfs)
        threshold = (1.0 + pct / 100.0) * least
        return sum(1 for p in perfs if p <= threshold) / len(perfs)
    raise ValueError(f"unknown mode {mode!r}")


@dataclass
class RankRow:
    rank: int
    config: str
    top_k: float
    median_effort: int
    section: str  # "best" | "worst"


def rank_table(outcomes: Sequence[EvalOutcome], by: str = "top_k",
               head: int = 4, tail: int = 4) -> list[RankRow]:
    """Best-`head` and worst-`tail` configurations of one family."""
    families = {o.family for o in outcomes}
    if len(families) > 1:
        raise ValueError(f"outcomes span several families: {sorted(families)}")
    if by == "top_k":
        key = lambda o: (-o.top_k, o.config)
    elif by == "effort":
        key = lambda o: (o.median_effort, o.config)
    else:
        raise ValueError(f"unknown sort key {by!r}")
    ordered = sorted(outcomes, key=key)
    rows = [RankRow(rank=i + 1, config=o.config, top_k=o.top_k,
                    median_effort=o.median_effort, section="best")
            for i, o in enumerate(ordered)]
    if len(rows) <= head + tail:
        return rows
    for row in rows[-tail:]:
        row.section = "worst"
    return rows[:head] + rows[-tail:]


@dataclass
class LiftCurve:
    config: str
    points: list[tuple[int, float]]  # (k_loc, top_k_loc), non-decreasing


def lift_curve(outcome: EvalOutcome, k_max: int = DEFAULT_K_LOC,
               step: int = 1000) -> LiftCurve:
    """top_k_loc of one configuration on a LOC-budget grid."""
    if step < 1 or k_max % step != 0:
        raise ValueError("step must be positive and divide k_max")
    points = []
    n = len(outcome.per_query)
    for budget in range(step, k_max + 1, step):
        if n == 0:
            points.append((budget, 0.0))
            continue
        hits = sum(1 for q in outcome.per_query
                   if q.first_cum_loc is not None and q.first_cum_loc <= budget)
        points.append((budget, hits / n))
    return LiftCurve(config=outcome.config, points=points)
