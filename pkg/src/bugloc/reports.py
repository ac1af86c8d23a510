"""CSV persistence for the results store and the paper-shaped report tables.

Every emitted file starts with a provenance comment line carrying the tool
version, the seed and the input hash, so equal (version, seed, inputs)
triples reproduce byte-identical files.
"""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import __version__
from .errors import DegenerateInput, MissingResults
from .evaluation import (
    LIKELIHOOD_PCTS,
    EvalOutcome,
    QueryEval,
    lift_curve,
    likelihood_within,
    rank_table,
    summarize,
)
from .numerics import spearman
from .sensitivity import SensitivityReport

TOOL = f"bugloc/{__version__}"

DETAIL_FIELDS = ("config", "family", "query_id", "snapshot", "n_entities",
                 "first_rank", "first_cum_loc")


def provenance_line(seed, inputs_hash: str) -> str:
    seed_text = "none" if seed is None else str(seed)
    return f"# tool={TOOL} seed={seed_text} inputs=sha256:{inputs_hash}"


def write_csv(path: Path, fieldnames: Sequence[str], rows: Iterable[Mapping],
              seed, inputs_hash: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    buf.write(provenance_line(seed, inputs_hash) + "\n")
    writer = csv.DictWriter(buf, fieldnames=list(fieldnames), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    path.write_text(buf.getvalue(), encoding="utf-8")


def read_csv(path: Path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(lines))


def append_csv(path: Path, fieldnames: Sequence[str], rows: Iterable[Mapping],
               seed, inputs_hash: str) -> None:
    """Append rows, creating the file with its provenance header if needed."""
    path.parent.mkdir(parents=True, exist_ok=True)
    new = not path.exists()
    with open(path, "a", encoding="utf-8", newline="") as fh:
        if new:
            fh.write(provenance_line(seed, inputs_hash) + "\n")
        writer = csv.DictWriter(fh, fieldnames=list(fieldnames), lineterminator="\n")
        if new:
            writer.writeheader()
        for row in rows:
            writer.writerow(row)


def fmt(value: float) -> str:
    return f"{value:.6f}"


# ---------------------------------------------------------------------------
# store details -> outcomes


def detail_row(config: str, family: str, query_id: int, snapshot: str,
               n_entities: int, first_rank: int | None,
               first_cum_loc: int | None) -> dict:
    return {
        "config": config, "family": family, "query_id": query_id,
        "snapshot": snapshot, "n_entities": n_entities,
        "first_rank": "" if first_rank is None else first_rank,
        "first_cum_loc": "" if first_cum_loc is None else first_cum_loc,
    }


def outcomes_from_details(rows: Iterable[Mapping], k: int, k_loc: int, cap: int,
                          excluded_queries: int = 0) -> list[EvalOutcome]:
    """Aggregate stored per-query facts; the last row per (config, query) wins."""
    latest: dict[tuple[str, str], Mapping] = {}
    families: dict[str, str] = {}
    for row in rows:
        latest[(row["config"], row["query_id"])] = row
        families[row["config"]] = row["family"]
    per_config: dict[str, list[QueryEval]] = defaultdict(list)
    for (config, _), row in sorted(latest.items()):
        first_rank = int(row["first_rank"]) if row["first_rank"] != "" else None
        cum = int(row["first_cum_loc"]) if row["first_cum_loc"] != "" else None
        per_config[config].append(QueryEval(
            query_id=int(row["query_id"]), snapshot=row["snapshot"],
            first_rank=first_rank, first_cum_loc=cum,
            effort=cap if cum is None else min(cum, cap),
            localized_at_k=first_rank is not None and first_rank <= k,
        ))
    return [
        summarize(config, families[config], evals, excluded_queries, k, k_loc, cap)
        for config, evals in sorted(per_config.items())
    ]


def write_aggregates(path: Path, outcomes: Sequence[EvalOutcome], seed, inputs_hash: str) -> None:
    rows = []
    for o in sorted(outcomes, key=lambda o: o.config):
        rows.append({"config": o.config, "metric": "top_k", "value": fmt(o.top_k)})
        rows.append({"config": o.config, "metric": "median_effort", "value": o.median_effort})
        rows.append({"config": o.config, "metric": "top_k_loc", "value": fmt(o.top_k_loc)})
    write_csv(path, ("config", "metric", "value"), rows, seed, inputs_hash)


def write_per_query(path: Path, outcomes: Sequence[EvalOutcome], seed, inputs_hash: str) -> None:
    rows = []
    for o in sorted(outcomes, key=lambda o: o.config):
        for q in sorted(o.per_query, key=lambda q: q.query_id):
            rows.append({
                "config": o.config, "query_id": q.query_id,
                "first_relevant_rank": "" if q.first_rank is None else q.first_rank,
                "effort": q.effort,
            })
    write_csv(path, ("config", "query_id", "first_relevant_rank", "effort"),
              rows, seed, inputs_hash)


# ---------------------------------------------------------------------------
# report tables


def by_family(outcomes: Sequence[EvalOutcome]) -> dict[str, list[EvalOutcome]]:
    grouped: dict[str, list[EvalOutcome]] = defaultdict(list)
    for o in outcomes:
        grouped[o.family].append(o)
    return grouped


def write_rank_tables(out_dir: Path, outcomes: Sequence[EvalOutcome],
                      head: int, tail: int, seed, inputs_hash: str) -> None:
    for family, group in sorted(by_family(outcomes).items()):
        rows = [
            {"rank": r.rank, "config": r.config, "top_k": fmt(r.top_k),
             "median_effort": r.median_effort, "section": r.section}
            for r in rank_table(group, by="top_k", head=head, tail=tail)
        ]
        write_csv(out_dir / f"rank_table_{family}.csv",
                  ("rank", "config", "top_k", "median_effort", "section"),
                  rows, seed, inputs_hash)


def write_likelihood(path: Path, outcomes: Sequence[EvalOutcome], mode: str,
                     seed, inputs_hash: str) -> None:
    """Likelihood of landing within X% of the best configuration, per family.

    Families with a single configuration (EM) get zeros, mirroring the
    published tables which skip the computation for EM."""
    rows = []
    for family, group in sorted(by_family(outcomes).items()):
        values = ([o.top_k for o in group] if mode == "top_k"
                  else [float(o.median_effort) for o in group])
        row = {"family": family, "n_configs": len(group)}
        for pct in LIKELIHOOD_PCTS:
            if family == "em":
                row[f"{pct}%"] = fmt(0.0)
                continue
            try:
                row[f"{pct}%"] = fmt(likelihood_within(values, pct, mode))
            except DegenerateInput:
                row[f"{pct}%"] = "NA"
        rows.append(row)
    fieldnames = ["family", "n_configs"] + [f"{p}%" for p in LIKELIHOOD_PCTS]
    write_csv(path, fieldnames, rows, seed, inputs_hash)


def write_spearman(path: Path, outcomes: Sequence[EvalOutcome], seed, inputs_hash: str) -> None:
    """Rank correlation between ordering-by-top-k and effort, per family.

    Positive values mean configurations that localize well also need little
    effort. Families where either vector is constant report NA."""
    rows = []
    for family, group in sorted(by_family(outcomes).items()):
        top = [-o.top_k for o in group]
        eff = [float(o.median_effort) for o in group]
        try:
            rho = fmt(spearman(top, eff))
        except DegenerateInput:
            rho = "NA"
        rows.append({"family": family, "n_configs": len(group), "spearman": rho})
    write_csv(path, ("family", "n_configs", "spearman"), rows, seed, inputs_hash)


def write_lift_curves(out_dir: Path, outcomes: Sequence[EvalOutcome], k_max: int,
                      step: int, seed, inputs_hash: str) -> None:
    """Lift-chart data for the best (by top-k, then least effort) configuration
    of each family."""
    for family, group in sorted(by_family(outcomes).items()):
        best = min(group, key=lambda o: (-o.top_k, o.median_effort, o.config))
        curve = lift_curve(best, k_max=k_max, step=step)
        rows = [{"config": curve.config, "k_loc": k, "top_k_loc": fmt(v)}
                for k, v in curve.points]
        write_csv(out_dir / f"lift_{family}.csv", ("config", "k_loc", "top_k_loc"),
                  rows, seed, inputs_hash)


def write_sensitivity(path: Path, reports: Sequence[tuple[str, SensitivityReport]],
                      seed, inputs_hash: str) -> None:
    """One row per (family, response, parameter); `reports` pairs a system
    name with each analysis."""
    rows = []
    for system, report in reports:
        for p in report.parameters:
            rows.append({
                "family": report.family, "system": system, "response": report.response,
                "parameter": p.parameter, "df": p.df,
                "median_chi2": fmt(p.median_chi2),
                "ci_low": fmt(p.ci_low), "ci_high": fmt(p.ci_high),
                "corrected_adj_r2": fmt(report.corrected_adj_r2),
                "skipped_resamples": report.skipped_resamples,
            })
    write_csv(path, ("family", "system", "response", "parameter", "df", "median_chi2",
                     "ci_low", "ci_high", "corrected_adj_r2", "skipped_resamples"),
              rows, seed, inputs_hash)


def require_rows(rows: list, family_filter: Sequence[str] | None) -> None:
    if not rows:
        raise MissingResults("the results store has no detail rows")
    if family_filter:
        present = {row["family"] for row in rows}
        missing = [f for f in family_filter if f not in present]
        if missing:
            raise MissingResults(f"no results for families: {missing}")
