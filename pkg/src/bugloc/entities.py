"""Domain records for the mining pipeline: bug reports, source entities,
snapshots, fix links and per-entity history metrics, plus their JSON-lines IO.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import IO, Iterable, Iterator

SCHEMA_VERSION = 1

DUMMY_METHOD = "<dummy>"


def parse_ts(value: str) -> datetime:
    """Parse an ISO-8601 timestamp; naive values are taken as UTC."""
    ts = datetime.fromisoformat(value)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts


def format_ts(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).isoformat()


@dataclass(frozen=True)
class BugReport:
    id: int
    title: str
    description: str
    created: datetime
    fixed: datetime

    def __post_init__(self):
        if self.id <= 0:
            raise ValueError(f"bug id must be positive, got {self.id}")
        if self.created > self.fixed:
            raise ValueError(f"bug {self.id}: created after fixed")


@dataclass
class SourceEntity:
    id: str                 # file path, or "path#method"
    granularity: str        # "file" | "method"
    identifier_text: str
    comment_text: str
    loc: int
    snapshot: str

    @property
    def file_path(self) -> str:
        return self.id.split("#", 1)[0]

    @property
    def is_dummy(self) -> bool:
        return self.id.endswith("#" + DUMMY_METHOD)


@dataclass
class Snapshot:
    id: str
    timestamp: datetime
    entities: dict[str, SourceEntity] = field(default_factory=dict)

    def add(self, entity: SourceEntity) -> None:
        if entity.id in self.entities:
            raise ValueError(f"duplicate entity id {entity.id!r} in snapshot {self.id}")
        self.entities[entity.id] = entity

    def sorted_ids(self) -> list[str]:
        return sorted(self.entities)


class FixLinkSet:
    """Ground truth: bug id -> changed entity ids, with a fix timestamp per link.

    When the same (bug, entity) pair is linked by several commits the earliest
    commit time is kept.
    """

    def __init__(self):
        self._by_bug: dict[int, dict[str, datetime]] = {}
        self._by_entity: dict[str, dict[int, datetime]] = {}

    def add(self, bug_id: int, entity_id: str, fixed_at: datetime) -> None:
        bug_links = self._by_bug.setdefault(bug_id, {})
        if entity_id not in bug_links or fixed_at < bug_links[entity_id]:
            bug_links[entity_id] = fixed_at
            self._by_entity.setdefault(entity_id, {})[bug_id] = fixed_at

    def bug_ids(self) -> list[int]:
        return sorted(self._by_bug)

    def entities_for_bug(self, bug_id: int) -> dict[str, datetime]:
        return dict(self._by_bug.get(bug_id, {}))

    def links_for_entity(self, entity_id: str) -> list[tuple[int, datetime]]:
        return sorted(self._by_entity.get(entity_id, {}).items())

    def __len__(self) -> int:
        return sum(len(v) for v in self._by_bug.values())

    def __contains__(self, bug_id: int) -> bool:
        return bug_id in self._by_bug


@dataclass(frozen=True)
class EntityHistoryMetrics:
    loc: int
    churn: int
    new_bug_count: int
    cumulative_bug_count: int
    as_of: datetime

    def __post_init__(self):
        if min(self.loc, self.churn, self.new_bug_count, self.cumulative_bug_count) < 0:
            raise ValueError("history metrics must be non-negative")
        if self.cumulative_bug_count < self.new_bug_count:
            raise ValueError("cumulative bug count below new bug count")


# ---------------------------------------------------------------------------
# JSON-lines IO


def write_entities(entities: Iterable[SourceEntity], fh: IO[str]) -> int:
    n = 0
    for e in entities:
        record = {
            "schema_version": SCHEMA_VERSION,
            "id": e.id,
            "granularity": e.granularity,
            "identifier_text": e.identifier_text,
            "comment_text": e.comment_text,
            "loc": e.loc,
            "snapshot": e.snapshot,
        }
        fh.write(json.dumps(record, sort_keys=True) + "\n")
        n += 1
    return n


def read_entities(fh: IO[str]) -> Iterator[SourceEntity]:
    for line in fh:
        if not line.strip():
            continue
        rec = json.loads(line)
        if rec.get("kind") == "header":
            continue
        yield SourceEntity(
            id=rec["id"],
            granularity=rec["granularity"],
            identifier_text=rec["identifier_text"],
            comment_text=rec["comment_text"],
            loc=rec["loc"],
            snapshot=rec["snapshot"],
        )


def write_links(links: FixLinkSet, fh: IO[str]) -> int:
    n = 0
    for bug_id in links.bug_ids():
        for entity_id, fixed_at in sorted(links.entities_for_bug(bug_id).items()):
            record = {
                "schema_version": SCHEMA_VERSION,
                "bug_id": bug_id,
                "entity_id": entity_id,
                "fixed_at": format_ts(fixed_at),
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")
            n += 1
    return n


def read_links(fh: IO[str]) -> FixLinkSet:
    links = FixLinkSet()
    for line in fh:
        if not line.strip():
            continue
        rec = json.loads(line)
        if rec.get("kind") == "header":
            continue
        links.add(rec["bug_id"], rec["entity_id"], parse_ts(rec["fixed_at"]))
    return links


def write_bugs(bugs: Iterable[BugReport], fh: IO[str]) -> int:
    n = 0
    for b in sorted(bugs, key=lambda b: b.id):
        record = {
            "schema_version": SCHEMA_VERSION,
            "id": b.id,
            "title": b.title,
            "description": b.description,
            "created": format_ts(b.created),
            "fixed": format_ts(b.fixed),
        }
        fh.write(json.dumps(record, sort_keys=True) + "\n")
        n += 1
    return n


def read_bugs(fh: IO[str]) -> dict[int, BugReport]:
    bugs: dict[int, BugReport] = {}
    for line in fh:
        if not line.strip():
            continue
        rec = json.loads(line)
        if rec.get("kind") == "header":
            continue
        bug = BugReport(
            id=rec["id"],
            title=rec["title"],
            description=rec["description"],
            created=parse_ts(rec["created"]),
            fixed=parse_ts(rec["fixed"]),
        )
        if bug.id in bugs:
            raise ValueError(f"duplicate bug id {bug.id}")
        bugs[bug.id] = bug
    return bugs
