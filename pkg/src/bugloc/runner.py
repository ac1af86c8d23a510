"""End-to-end experiment runner: manifest, caches, results store.

A run maps every query bug to the latest snapshot strictly preceding its fix,
builds corpora once per (snapshot, entity representation, preprocessing)
triple, trains LSI/LDA models once per distinct corpus content, and persists
per-query facts to an append-only store keyed by (system, config, snapshot).
Re-running with identical inputs and seed is a no-op unless forced.
"""

from __future__ import annotations

import hashlib
import json
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime
from pathlib import Path

import numpy as np

from . import __version__
from .configs import Configuration, FAMILIES, config_id, enumerate_configs, parse_config_id
from .corpus import Corpus, build_corpus
from .entities import (
    BugReport,
    EntityHistoryMetrics,
    FixLinkSet,
    Snapshot,
    read_bugs,
    read_entities,
    read_links,
    parse_ts,
)
from .errors import EmptyQuery, UnresolvedEntityWarning
from .evaluation import (
    DEFAULT_EFFORT_CAP,
    DEFAULT_K,
    DEFAULT_K_LOC,
    cumulative_loc_through,
    first_relevant,
)
from .extraction import Commit, compute_entity_metrics, extract_entities, parse_vcs_log
from .models import (
    LsiModel,
    RankedList,
    em_rank,
    lda_rank,
    lsi_rank,
    train_lda,
    train_lsi,
    vsm_rank,
)
from .numerics import LdaModel
from .reports import (
    DETAIL_FIELDS,
    append_csv,
    detail_row,
    outcomes_from_details,
    read_csv,
    write_aggregates,
    write_csv,
)
from .textprep import EntityRepSpec, PreprocessSpec, build_query, load_stopwords

DEFAULT_LDA_ITERATIONS = 200


@dataclass
class SnapshotSpec:
    id: str
    timestamp: datetime
    entities_path: Path | None = None
    directory: Path | None = None
    language: str = "java"


@dataclass
class RunManifest:
    system: str
    granularity: str
    snapshots: list[SnapshotSpec]
    bugs_path: Path
    links_path: Path
    vcs_log_path: Path | None = None
    k: int = DEFAULT_K
    k_loc: int = DEFAULT_K_LOC
    effort_cap: int = DEFAULT_EFFORT_CAP
    seed: int = 0
    output: Path = Path("out")
    idf_mode: str = "log"
    families: tuple[str, ...] = FAMILIES
    configs: tuple[str, ...] | None = None
    jobs: int = 1
    lda_iterations: int = DEFAULT_LDA_ITERATIONS
    stopwords_path: Path | None = None
    force: bool = False

    def __post_init__(self):
        if self.k < 1 or self.k_loc < 1:
            raise ValueError("k and k_loc must be >= 1")
        if self.effort_cap < self.k_loc:
            raise ValueError("effort cap must be >= k_loc")
        if not self.snapshots:
            raise ValueError("manifest lists no snapshots")
        stamps = [s.timestamp for s in self.snapshots]
        if sorted(stamps) != stamps or len(set(stamps)) != len(stamps):
            raise ValueError("snapshot timestamps must be strictly increasing")

    def selected_configs(self) -> list[Configuration]:
        if self.configs:
            return [parse_config_id(c) for c in self.configs]
        return enumerate_configs(self.families)


def load_manifest(path: Path, **overrides) -> RunManifest:
    path = Path(path)
    raw = json.loads(path.read_text(encoding="utf-8"))
    base = path.parent

    def resolve(p):
        return None if p is None else (base / p).resolve()

    snapshots = [
        SnapshotSpec(
            id=s["id"], timestamp=parse_ts(s["timestamp"]),
            entities_path=resolve(s.get("entities")),
            directory=resolve(s.get("dir")),
            language=s.get("language", "java"),
        )
        for s in raw["snapshots"]
    ]
    manifest = RunManifest(
        system=raw["system"],
        granularity=raw.get("granularity", "method"),
        snapshots=snapshots,
        bugs_path=resolve(raw["bugs"]),
        links_path=resolve(raw["links"]),
        vcs_log_path=resolve(raw.get("vcs_log")),
        k=raw.get("k", DEFAULT_K),
        k_loc=raw.get("k_loc", DEFAULT_K_LOC),
        effort_cap=raw.get("effort_cap", DEFAULT_EFFORT_CAP),
        seed=raw.get("seed", 0),
        output=resolve(raw.get("output", "out")),
        idf_mode=raw.get("idf", "log"),
        stopwords_path=resolve(raw.get("stopwords")),
    )
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return replace(manifest, **overrides) if overrides else manifest


def derived_seed(seed: int, *parts) -> int:
    text = "|".join([str(seed), *map(str, parts)])
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


def hash_inputs(paths: list[Path | None], params: dict) -> str:
    digest = hashlib.sha256()
    for p in paths:
        if p is None:
            digest.update(b"\x00missing")
            continue
        digest.update(b"\x00" + Path(p).name.encode())
        digest.update(Path(p).read_bytes())
    digest.update(json.dumps(params, sort_keys=True).encode())
    return digest.hexdigest()


@dataclass
class QueryPlan:
    bug: BugReport
    snapshot_id: str
    relevant: frozenset[str]


@dataclass
class ExperimentData:
    manifest: RunManifest
    snapshots: dict[str, Snapshot]
    snapshot_order: list[str]
    bugs: dict[int, BugReport]
    links: FixLinkSet
    commits: list[Commit]
    queries: list[QueryPlan]
    excluded: list[tuple[int, str]]
    loc: dict[str, dict[str, int]] = field(default_factory=dict)

    @classmethod
    def load(cls, manifest: RunManifest) -> "ExperimentData":
        snapshots: dict[str, Snapshot] = {}
        order: list[str] = []
        for spec in manifest.snapshots:
            snap = Snapshot(id=spec.id, timestamp=spec.timestamp)
            if spec.entities_path is not None:
                with open(spec.entities_path, encoding="utf-8") as fh:
                    for entity in read_entities(fh):
                        entity.snapshot = spec.id
                        snap.add(entity)
            elif spec.directory is not None:
                for file in sorted(spec.directory.rglob("*")):
                    if not file.is_file():
                        continue
                    rel = file.relative_to(spec.directory).as_posix()
                    for entity in extract_entities(rel, file.read_text(encoding="utf-8"),
                                                   language=spec.language,
                                                   granularity=manifest.granularity,
                                                   snapshot=spec.id):
                        snap.add(entity)
            else:
                raise ValueError(f"snapshot {spec.id}: neither entities file nor directory")
            snapshots[spec.id] = snap
            order.append(spec.id)

        with open(manifest.bugs_path, encoding="utf-8") as fh:
            bugs = read_bugs(fh)
        with open(manifest.links_path, encoding="utf-8") as fh:
            links = read_links(fh)
        commits: list[Commit] = []
        if manifest.vcs_log_path is not None:
            commits = parse_vcs_log(manifest.vcs_log_path.read_text(encoding="utf-8"))

        queries: list[QueryPlan] = []
        excluded: list[tuple[int, str]] = []
        for bug_id in sorted(bugs):
            bug = bugs[bug_id]
            home = None
            for sid in order:
                if snapshots[sid].timestamp < bug.fixed:
                    home = sid
            if home is None:
                excluded.append((bug_id, "no snapshot precedes the fix"))
                continue
            linked = links.entities_for_bug(bug_id)
            if not linked:
                excluded.append((bug_id, "no ground-truth links"))
                continue
            resolvable = frozenset(eid for eid in linked if eid in snapshots[home].entities)
            for eid in sorted(set(linked) - resolvable):
                warnings.warn(f"bug {bug_id}: linked entity {eid} absent from snapshot {home}",
                              UnresolvedEntityWarning)
            if not resolvable:
                excluded.append((bug_id, "links do not resolve in the snapshot"))
                continue
            queries.append(QueryPlan(bug=bug, snapshot_id=home, relevant=resolvable))

        loc = {sid: {eid: e.loc for eid, e in snapshots[sid].entities.items()}
               for sid in order}
        return cls(manifest=manifest, snapshots=snapshots, snapshot_order=order,
                   bugs=bugs, links=links, commits=commits, queries=queries,
                   excluded=excluded, loc=loc)


class ModelCaches:
    """Per-process corpus/model caches; LDA models are also cached on disk."""

    def __init__(self, data: ExperimentData):
        self.data = data
        manifest = data.manifest
        self.stopwords = (load_stopwords(manifest.stopwords_path)
                          if manifest.stopwords_path else None)
        env_dir = os.environ.get("BUGLOC_CACHE_DIR")
        self.disk_dir = Path(env_dir) if env_dir else manifest.output / ".cache"
        self._corpora: dict[tuple, Corpus] = {}
        self._lsi: dict[tuple, LsiModel] = {}
        self._lda: dict[tuple, LdaModel] = {}
        self._em: dict[str, dict[str, EntityHistoryMetrics]] = {}

    def corpus(self, snapshot_id: str, b: int, c: int) -> Corpus:
        key = (snapshot_id, b, c)
        if key not in self._corpora:
            self._corpora[key] = build_corpus(
                self.data.snapshots[snapshot_id], EntityRepSpec(b),
                PreprocessSpec.from_code(c), history=self.data.links,
                bugs=self.data.bugs, stopwords=self.stopwords)
        return self._corpora[key]

    def lsi(self, corpus: Corpus, weight: int, k_topics: int) -> LsiModel:
        manifest = self.data.manifest
        effective = min(k_topics, min(corpus.num_terms, corpus.num_documents))
        key = (corpus.content_hash, weight, effective, manifest.idf_mode)
        if key not in self._lsi:
            seed = derived_seed(manifest.seed, "svd", *key)
            self._lsi[key] = train_lsi(corpus, weight, k_topics,
                                       idf_mode=manifest.idf_mode, seed=seed)
        model = self._lsi[key]
        if model.requested_topics != k_topics:
            model = replace(model, requested_topics=k_topics)
        return model

    def lda(self, corpus: Corpus, k_topics: int) -> LdaModel:
        manifest = self.data.manifest
        key = (corpus.content_hash, k_topics)
        if key in self._lda:
            return self._lda[key]
        seed = derived_seed(manifest.seed, "lda", corpus.content_hash, k_topics)
        cache_file = self.disk_dir / (
            f"lda-{corpus.content_hash[:16]}-k{k_topics}"
            f"-i{manifest.lda_iterations}-s{seed}.npz")
        if cache_file.exists():
            with np.load(cache_file) as payload:
                model = LdaModel(k=k_topics, alpha=float(payload["alpha"]),
                                 beta=float(payload["beta"]), phi=payload["phi"],
                                 theta=payload["theta"], seed=seed,
                                 iterations_run=int(payload["iterations"]),
                                 corpus_hash=corpus.content_hash)
        else:
            model = train_lda(corpus, k_topics, max_iterations=manifest.lda_iterations,
                              seed=seed)
            self.disk_dir.mkdir(parents=True, exist_ok=True)
            np.savez(cache_file, phi=model.phi, theta=model.theta,
                     alpha=model.alpha, beta=model.beta,
                     iterations=model.iterations_run)
        self._lda[key] = model
        return model

    def em_metrics(self, snapshot_id: str) -> dict[str, EntityHistoryMetrics]:
        if snapshot_id not in self._em:
            order = self.data.snapshot_order
            position = order.index(snapshot_id)
            since = (self.data.snapshots[order[position - 1]].timestamp
                     if position > 0 else None)
            snap = self.data.snapshots[snapshot_id]
            self._em[snapshot_id] = {
                eid: compute_entity_metrics(self.data.commits, self.data.links,
                                            entity, snap.timestamp, since)
                for eid, entity in snap.entities.items()
            }
        return self._em[snapshot_id]


def rank_query(cfg: Configuration, plan: QueryPlan, data: ExperimentData,
               caches: ModelCaches) -> RankedList | None:
    """Ranked list for one (configuration, query); None when the query is
    empty under the representation (counted as not localized)."""
    cid = config_id(cfg)
    manifest = data.manifest
    if cfg.family == "em":
        metrics = caches.em_metrics(plan.snapshot_id)
        entities = list(data.snapshots[plan.snapshot_id].entities.values())
        return em_rank(cfg.em_metric, entities, metrics, str(plan.bug.id), produced_by=cid)
    corpus = caches.corpus(plan.snapshot_id, cfg.b, cfg.c)
    try:
        query = build_query(plan.bug, cfg.query_rep, cfg.preprocess_spec,
                            stopwords=caches.stopwords)
    except EmptyQuery:
        return None
    if cfg.family == "vsm":
        return vsm_rank(query, corpus, cfg.weight, cfg.similarity,
                        idf_mode=manifest.idf_mode, produced_by=cid)
    if cfg.family == "lsi":
        model = caches.lsi(corpus, cfg.weight, cfg.topics)
        return lsi_rank(query, corpus, cfg.weight, cfg.topics, model=model,
                        idf_mode=manifest.idf_mode, produced_by=cid)
    model = caches.lda(corpus, cfg.topics)
    return lda_rank(query, corpus, cfg.topics, model, produced_by=cid)


def evaluate_config(cfg: Configuration, data: ExperimentData,
                    caches: ModelCaches) -> list[dict]:
    rows = []
    cid = config_id(cfg)
    for plan in data.queries:
        ranked = rank_query(cfg, plan, data, caches)
        if ranked is None:
            first_rank, cum = None, None
        else:
            first_rank = first_relevant(ranked, plan.relevant)
            cum = (cumulative_loc_through(ranked, first_rank, data.loc[plan.snapshot_id])
                   if first_rank is not None else None)
        rows.append(detail_row(cid, cfg.family, plan.bug.id, plan.snapshot_id,
                               len(data.snapshots[plan.snapshot_id].entities),
                               first_rank, cum))
    return rows


def _run_chunk(manifest: RunManifest, config_ids: list[str]) -> list[dict]:
    data = ExperimentData.load(manifest)
    caches = ModelCaches(data)
    rows = []
    for cid in config_ids:
        rows.extend(evaluate_config(parse_config_id(cid), data, caches))
    return rows


@dataclass
class RunResult:
    rows: list[dict]
    failures: list[tuple[str, str]]
    skipped_configs: int
    executed_configs: int
    input_hash: str
    excluded: list[tuple[int, str]]
    queries: int


def run_experiment(manifest: RunManifest, progress=None) -> RunResult:
    """Execute the selected configurations and persist the results store."""
    store = manifest.output / "store"
    store.mkdir(parents=True, exist_ok=True)
    configs = manifest.selected_configs()
    input_hash = hash_inputs(
        [s.entities_path or s.directory for s in manifest.snapshots]
        + [manifest.bugs_path, manifest.links_path, manifest.vcs_log_path],
        {"system": manifest.system, "granularity": manifest.granularity,
         "k": manifest.k, "k_loc": manifest.k_loc, "cap": manifest.effort_cap,
         "idf": manifest.idf_mode, "lda_iterations": manifest.lda_iterations,
         "seed": manifest.seed},
    )

    runs_path = store / "runs.jsonl"
    existing: set[tuple[str, str, str]] = set()
    if runs_path.exists() and not manifest.force:
        for line in runs_path.read_text(encoding="utf-8").splitlines():
            rec = json.loads(line)
            existing.add((rec["config"], rec["snapshot"], rec["input_hash"]))

    data = ExperimentData.load(manifest)
    snapshot_ids = sorted({p.snapshot_id for p in data.queries})

    todo: list[Configuration] = []
    skipped = 0
    for cfg in configs:
        keys = {(config_id(cfg), sid, input_hash) for sid in snapshot_ids}
        if keys and keys <= existing:
            skipped += 1
        else:
            todo.append(cfg)

    failures: list[tuple[str, str]] = []
    rows: list[dict] = []
    started = time.monotonic()
    if manifest.jobs > 1 and len(todo) > 1:
        chunk_count = min(manifest.jobs, len(todo))
        chunks = [[] for _ in range(chunk_count)]
        for i, cfg in enumerate(todo):
            chunks[i * chunk_count // len(todo)].append(config_id(cfg))
        with ProcessPoolExecutor(max_workers=manifest.jobs) as pool:
            futures = [pool.submit(_run_chunk, manifest, chunk) for chunk in chunks]
            for future, chunk in zip(futures, chunks):
                try:
                    rows.extend(future.result())
                except Exception as exc:  # isolate chunk failures
                    failures.extend((cid, str(exc)) for cid in chunk)
        order = {config_id(c): i for i, c in enumerate(todo)}
        rows.sort(key=lambda r: (order[r["config"]], r["query_id"]))
    else:
        caches = ModelCaches(data)
        for i, cfg in enumerate(todo):
            try:
                rows.extend(evaluate_config(cfg, data, caches))
            except Exception as exc:  # per-config isolation
                failures.append((config_id(cfg), str(exc)))
            if progress and (i + 1) % progress == 0:
                elapsed = time.monotonic() - started
                eta = elapsed / (i + 1) * (len(todo) - i - 1)
                print(f"  {i + 1}/{len(todo)} configs, {elapsed:.1f}s elapsed, "
                      f"eta {eta:.1f}s", file=sys.stderr)

    if rows:
        append_csv(store / "details.csv", DETAIL_FIELDS, rows,
                   manifest.seed, input_hash)
        failed = {cid for cid, _ in failures}
        run_records = [
            {"schema_version": 1, "system": manifest.system, "config": config_id(cfg),
             "snapshot": sid, "input_hash": input_hash, "seed": manifest.seed}
            for cfg in todo if config_id(cfg) not in failed
            for sid in snapshot_ids
        ]
        with open(runs_path, "a", encoding="utf-8") as fh:
            for rec in run_records:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")

    write_csv(store / "excluded.csv", ("query_id", "reason"),
              [{"query_id": qid, "reason": reason} for qid, reason in data.excluded],
              manifest.seed, input_hash)
    meta = {
        "schema_version": 1, "tool": f"bugloc/{__version__}",
        "system": manifest.system, "granularity": manifest.granularity,
        "seed": manifest.seed, "k": manifest.k, "k_loc": manifest.k_loc,
        "effort_cap": manifest.effort_cap, "idf": manifest.idf_mode,
        "input_hash": input_hash, "queries": len(data.queries),
        "excluded_queries": len(data.excluded),
    }
    (store / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n",
                                     encoding="utf-8")

    all_rows = read_csv(store / "details.csv")
    outcomes = outcomes_from_details(all_rows, manifest.k, manifest.k_loc,
                                     manifest.effort_cap, len(data.excluded))
    write_aggregates(store / "aggregates.csv", outcomes, manifest.seed, input_hash)

    return RunResult(rows=rows, failures=failures, skipped_configs=skipped,
                     executed_configs=len(todo), input_hash=input_hash,
                     excluded=data.excluded, queries=len(data.queries))
