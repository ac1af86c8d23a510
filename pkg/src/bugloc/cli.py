"""Command-line harness: extract, link, run, evaluate, sensitivity, report."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .entities import SCHEMA_VERSION, read_bugs, write_entities, write_links
from .errors import BuglocError
from .evaluation import DEFAULT_EFFORT_CAP, DEFAULT_K, DEFAULT_K_LOC
from .extraction import extract_entities, link_bug_fixes
from .reports import (
    TOOL,
    by_family,
    outcomes_from_details,
    read_csv,
    require_rows,
    write_aggregates,
    write_lift_curves,
    write_likelihood,
    write_per_query,
    write_rank_tables,
    write_sensitivity,
    write_spearman,
)
from .runner import hash_inputs, load_manifest, run_experiment
from .sensitivity import build_design_matrix, sensitivity_analysis


def _jsonl_header(seed, inputs_hash: str) -> str:
    return json.dumps({"schema_version": SCHEMA_VERSION, "kind": "header",
                       "tool": TOOL, "seed": seed, "inputs": f"sha256:{inputs_hash}"},
                      sort_keys=True)


def cmd_extract(args) -> int:
    snapshot_dir = Path(args.snapshot_dir)
    if not snapshot_dir.is_dir():
        print(f"error: {snapshot_dir} is not a readable directory", file=sys.stderr)
        return 2
    files = [p for p in sorted(snapshot_dir.rglob("*")) if p.is_file()]
    if not files:
        print(f"warning: {snapshot_dir} contains no files", file=sys.stderr)
    entities = []
    fallbacks = 0
    import warnings as _warnings
    from .errors import ParseFallbackWarning
    for file in files:
        rel = file.relative_to(snapshot_dir).as_posix()
        with _warnings.catch_warnings(record=True) as captured:
            _warnings.simplefilter("always")
            entities.extend(extract_entities(rel, file.read_text(encoding="utf-8"),
                                             language=args.language,
                                             granularity=args.granularity,
                                             snapshot=args.snapshot_id))
            fallbacks += sum(1 for w in captured
                             if issubclass(w.category, ParseFallbackWarning))
            for w in captured:
                print(f"warning: {w.message}", file=sys.stderr)
    inputs_hash = hash_inputs(files, {"language": args.language,
                                      "granularity": args.granularity})
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(_jsonl_header(None, inputs_hash) + "\n")
        count = write_entities(entities, fh)
    dummies = sum(1 for e in entities if e.is_dummy)
    print(f"{count} entities from {len(files)} files "
          f"({count - dummies} methods, {dummies} dummies, {fallbacks} fallbacks)"
          if args.granularity == "method" else
          f"{count} file entities from {len(files)} files")
    return 0


def cmd_link(args) -> int:
    log_path = Path(args.log)
    known = None
    if args.bugs:
        with open(args.bugs, encoding="utf-8") as fh:
            known = set(read_bugs(fh))
    links = link_bug_fixes(log_path.read_text(encoding="utf-8"), args.granularity,
                           known_bugs=known)
    inputs_hash = hash_inputs([log_path] + ([Path(args.bugs)] if args.bugs else []),
                              {"granularity": args.granularity})
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(_jsonl_header(None, inputs_hash) + "\n")
        count = write_links(links, fh)
    print(f"{count} links for {len(links.bug_ids())} bugs")
    return 0


def cmd_run(args) -> int:
    manifest = load_manifest(
        Path(args.manifest),
        output=Path(args.out) if args.out else None,
        families=tuple(args.families.split(",")) if args.families else None,
        configs=tuple(args.configs.split(",")) if args.configs else None,
        seed=args.seed, k=args.k, k_loc=args.kloc, effort_cap=args.cap,
        idf_mode=args.idf, jobs=args.jobs, lda_iterations=args.lda_iterations,
        force=args.force or None,
    )
    result = run_experiment(manifest, progress=args.progress)
    print(f"executed {result.executed_configs} configurations "
          f"({result.skipped_configs} already in store), "
          f"{result.queries} queries, {len(result.excluded)} excluded",
          file=sys.stderr)
    for config, message in result.failures:
        print(f"FAILED {config}: {message}", file=sys.stderr)
    return 1 if result.failures else 0


def _load_store(store_dir: Path):
    store = Path(store_dir)
    meta = json.loads((store / "meta.json").read_text(encoding="utf-8"))
    rows = read_csv(store / "details.csv")
    inputs_hash = hash_inputs([store / "details.csv"], {})
    return meta, rows, inputs_hash


def cmd_evaluate(args) -> int:
    meta, rows, inputs_hash = _load_store(args.store)
    require_rows(rows, None)
    k = args.k or meta["k"]
    k_loc = args.kloc or meta["k_loc"]
    cap = args.cap or meta["effort_cap"]
    outcomes = outcomes_from_details(rows, k, k_loc, cap, meta["excluded_queries"])
    out = Path(args.out)
    write_aggregates(out / "aggregates.csv", outcomes, meta["seed"], inputs_hash)
    write_per_query(out / "per_query.csv", outcomes, meta["seed"], inputs_hash)
    print(f"{len(outcomes)} configurations evaluated at k={k}, "
          f"k_loc={k_loc}, cap={cap}")
    return 0


def cmd_report(args) -> int:
    meta, rows, inputs_hash = _load_store(args.store)
    families = args.families.split(",") if args.families else None
    require_rows(rows, families)
    if families:
        rows = [r for r in rows if r["family"] in families]
    k = args.k or meta["k"]
    k_loc = args.kloc or meta["k_loc"]
    cap = args.cap or meta["effort_cap"]
    outcomes = outcomes_from_details(rows, k, k_loc, cap, meta["excluded_queries"])
    out = Path(args.out)
    seed = meta["seed"]
    write_rank_tables(out, outcomes, args.head, args.tail, seed, inputs_hash)
    write_likelihood(out / "likelihood_topk.csv", outcomes, "top_k", seed, inputs_hash)
    write_likelihood(out / "likelihood_effort.csv", outcomes, "effort", seed, inputs_hash)
    write_spearman(out / "spearman.csv", outcomes, seed, inputs_hash)
    write_lift_curves(out, outcomes, k_max=k_loc, step=args.lift_step, seed=seed,
                      inputs_hash=inputs_hash)
    print(f"reports for {len(by_family(outcomes))} families written to {out}")
    return 0


def cmd_sensitivity(args) -> int:
    meta, rows, inputs_hash = _load_store(args.store)
    families = args.families.split(",") if args.families else ["vsm", "lsi", "lda"]
    require_rows(rows, [f for f in families if f != "em"])
    k = args.k or meta["k"]
    k_loc = args.kloc or meta["k_loc"]
    cap = args.cap or meta["effort_cap"]
    outcomes = outcomes_from_details(rows, k, k_loc, cap, meta["excluded_queries"])
    grouped = by_family(outcomes)
    seed = args.seed if args.seed is not None else meta["seed"]
    responses = ("top_k", "effort") if args.response == "both" else (args.response,)
    reports = []
    for family in families:
        if family == "em" or family not in grouped:
            continue
        for response in responses:
            dm = build_design_matrix(grouped[family], response,
                                     log_response=args.log_response)
            reports.append((meta["system"],
                            sensitivity_analysis(dm, b=args.bootstrap, seed=seed)))
    write_sensitivity(Path(args.out) / "sensitivity.csv", reports, seed, inputs_hash)
    print(f"{len(reports)} sensitivity analyses written")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bugloc",
                                     description="IR-based bug localization laboratory")
    parser.add_argument("--version", action="version", version=TOOL)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract source entities from a snapshot directory")
    p.add_argument("snapshot_dir")
    p.add_argument("--language", choices=("java", "cpp"), default="java")
    p.add_argument("--granularity", choices=("file", "method"), default="method")
    p.add_argument("--snapshot-id", default="")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("link", help="mine bug->entity links from a VCS log")
    p.add_argument("log")
    p.add_argument("--granularity", choices=("file", "method"), default="method")
    p.add_argument("--bugs", help="bug store JSONL; links to unknown bugs are dropped")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_link)

    p = sub.add_parser("run", help="run configurations against the mined data")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", help="output directory (overrides manifest)")
    p.add_argument("--families", help="comma-separated subset of vsm,lsi,lda,em")
    p.add_argument("--configs", help="comma-separated explicit configuration ids")
    p.add_argument("--seed", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--kloc", type=int)
    p.add_argument("--cap", type=int)
    p.add_argument("--idf", choices=("log", "raw"))
    p.add_argument("--jobs", type=int)
    p.add_argument("--lda-iterations", type=int)
    p.add_argument("--force", action="store_true")
    p.add_argument("--progress", type=int, default=200,
                   help="progress line every N configurations (stderr)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("evaluate", help="aggregate stored results into metric CSVs")
    p.add_argument("--store", required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--kloc", type=int)
    p.add_argument("--cap", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="rank/likelihood/correlation/lift tables")
    p.add_argument("--store", required=True)
    p.add_argument("--families")
    p.add_argument("--k", type=int)
    p.add_argument("--kloc", type=int)
    p.add_argument("--cap", type=int)
    p.add_argument("--head", type=int, default=4)
    p.add_argument("--tail", type=int, default=4)
    p.add_argument("--lift-step", type=int, default=1000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("sensitivity", help="parameter sensitivity analysis")
    p.add_argument("--store", required=True)
    p.add_argument("--families")
    p.add_argument("--response", choices=("top_k", "effort", "both"), default="both")
    p.add_argument("--bootstrap", type=int, default=1000)
    p.add_argument("--seed", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--kloc", type=int)
    p.add_argument("--cap", type=int)
    p.add_argument("--log-response", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sensitivity)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BuglocError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
