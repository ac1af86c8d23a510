"""Source-entity extraction, VCS-log mining and per-entity history metrics.

The Java extractor is a lightweight signature-pattern + brace-balancing
parser; the C++ extractor is regular-expression based. Both separate comment
text from identifier text (string literals are excluded from both) and fall
back to a single dummy method holding the whole file when boundaries cannot
be determined. Same-name methods in one file (overloads) are merged into one
entity so that hunk-context links stay resolvable.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterable, Mapping, Sequence

from .entities import DUMMY_METHOD, EntityHistoryMetrics, FixLinkSet, SourceEntity, parse_ts
from .errors import MalformedHunkWarning, ParseFallbackWarning, UnresolvedBugWarning

# ---------------------------------------------------------------------------
# Lexing: comment and string spans


def _scan_spans(content: str) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """Return (comment_spans, string_spans) as half-open character ranges."""
    comments: list[tuple[int, int]] = []
    strings: list[tuple[int, int]] = []
    i, n = 0, len(content)
    while i < n:
        ch = content[i]
        nxt = content[i + 1] if i + 1 < n else ""
        if ch == "/" and nxt == "/":
            end = content.find("\n", i)
            end = n if end == -1 else end
            comments.append((i, end))
            i = end
        elif ch == "/" and nxt == "*":
            end = content.find("*/", i + 2)
            end = n if end == -1 else end + 2
            comments.append((i, end))
            i = end
        elif ch in "\"'":
            quote = ch
            j = i + 1
            while j < n:
                if content[j] == "\\":
                    j += 2
                    continue
                if content[j] == quote or content[j] == "\n":
                    break
                j += 1
            end = min(j + 1, n) if j < n and content[j] == quote else min(j, n)
            strings.append((i, end))
            i = end
        else:
            i += 1
    return comments, strings


def _mask(content: str, spans: Iterable[tuple[int, int]]) -> str:
    """Blank the given spans with spaces, preserving newlines and offsets."""
    chars = list(content)
    for s, e in spans:
        for k in range(s, e):
            if chars[k] != "\n":
                chars[k] = " "
    return "".join(chars)


def classify_lines(content: str) -> list[str]:
    """Per physical line: 'blank', 'comment' (comment-only) or 'code'."""
    comment_spans, _ = _scan_spans(content)
    commented = bytearray(len(content))
    for s, e in comment_spans:
        commented[s:e] = b"\x01" * (e - s)
    classes: list[str] = []
    offset = 0
    for line in content.split("\n"):
        kind = "blank"
        for k, ch in enumerate(line):
            if ch.isspace():
                continue
            if commented[offset + k]:
                kind = "comment" if kind == "blank" else kind
            else:
                kind = "code"
                break
        classes.append(kind)
        offset += len(line) + 1
    return classes


def count_loc(text: str) -> int:
    """Executable LOC: non-blank lines not made up solely of comments.

    A line with code followed by a trailing comment counts as executable.
    """
    if not text:
        return 0
    return sum(1 for kind in classify_lines(text) if kind == "code")


# ---------------------------------------------------------------------------
# Method extraction

_NOT_METHODS = frozenset({
    "if", "for", "while", "switch", "catch", "do", "else", "try", "return",
    "new", "synchronized", "assert", "throw", "this", "super", "sizeof",
})

_JAVA_CALLISH = re.compile(
    r"(?P<name>[A-Za-z_$][\w$]*)\s*\((?P<args>[^()]*)\)\s*(?:throws\s+[\w$.,\s]+?)?(?P<brace>\{)"
)
_CPP_CALLISH = re.compile(
    r"(?P<name>~?[A-Za-z_][\w]*(?:\s*::\s*~?[A-Za-z_][\w]*)*)\s*"
    r"\((?P<args>[^()]*)\)\s*(?:const\s*)?(?P<brace>\{)"
)


def _preceded_by_new(mask: str, start: int) -> bool:
    head = mask[:start].rstrip()
    return head.endswith("new") and (len(head) == 3 or not (head[-4].isalnum() or head[-4] == "_"))


def _signature_start(mask: str, name_pos: int) -> int:
    """Walk back to the statement boundary, then forward over whitespace."""
    boundary = max(mask.rfind(c, 0, name_pos) for c in ";{}")
    start = boundary + 1
    while start < name_pos and mask[start].isspace():
        start += 1
    return start


def _find_method_spans(mask: str, language: str) -> list[tuple[str, int, int]] | None:
    """(name, start, end) spans of method bodies; None when braces do not balance."""
    pattern = _JAVA_CALLISH if language == "java" else _CPP_CALLISH
    spans: list[tuple[str, int, int]] = []
    last_end = 0
    for m in pattern.finditer(mask):
        if m.start() < last_end:
            continue
        name = m.group("name")
        short = name.split("::")[-1].strip()
        if short.lstrip("~") in _NOT_METHODS or short.lstrip("~") == "":
            continue
        if _preceded_by_new(mask, m.start()):
            continue
        depth = 1
        pos = m.end("brace")
        while pos < len(mask) and depth > 0:
            if mask[pos] == "{":
                depth += 1
            elif mask[pos] == "}":
                depth -= 1
            pos += 1
        if depth != 0:
            return None
        start = _signature_start(mask, m.start())
        spans.append((short, start, pos))
        last_end = pos
    return spans


def _line_ranges(content: str) -> list[tuple[int, int]]:
    ranges = []
    offset = 0
    for line in content.split("\n"):
        ranges.append((offset, offset + len(line)))
        offset += len(line) + 1
    return ranges


def _split_texts(content: str, spans: Sequence[tuple[int, int]],
                 comment_spans, string_spans) -> tuple[str, str]:
    """identifier text (code minus comments minus strings) and comment text."""
    code_parts: list[str] = []
    comment_parts: list[str] = []
    comment_set = set(comment_spans)
    excluded = sorted(set(comment_spans) | set(string_spans))
    for s, e in spans:
        pos = s
        for cs, ce in excluded:
            if ce <= pos or cs >= e:
                continue
            lo, hi = max(cs, s), min(ce, e)
            if lo > pos:
                code_parts.append(content[pos:lo])
            if (cs, ce) in comment_set:
                comment_parts.append(content[lo:hi])
            pos = hi
        if pos < e:
            code_parts.append(content[pos:e])
    return " ".join(code_parts), " ".join(comment_parts)


def extract_entities(file_path: str, content: str, language: str = "java",
                     granularity: str = "method", snapshot: str = "") -> list[SourceEntity]:
    """Extract file- or method-granularity entities from one source file.

    Method granularity yields one entity per method plus a dummy method
    holding all residual text (headers, attributes, file-level comments).
    """
    comment_spans, string_spans = _scan_spans(content)
    line_kinds = classify_lines(content)
    total_loc = sum(1 for k in line_kinds if k == "code")

    if granularity == "file":
        ident, comm = _split_texts(content, [(0, len(content))], comment_spans, string_spans)
        return [SourceEntity(id=file_path, granularity="file", identifier_text=ident,
                             comment_text=comm, loc=total_loc, snapshot=snapshot)]

    mask = _mask(content, comment_spans + string_spans)
    spans = _find_method_spans(mask, language)
    if spans is None:
        warnings.warn(f"{file_path}: unbalanced braces, keeping whole file as dummy method",
                      ParseFallbackWarning)
        spans = []

    line_ranges = _line_ranges(content)
    owner = [DUMMY_METHOD] * len(line_ranges)
    by_name: dict[str, list[tuple[int, int]]] = {}
    order: list[str] = []
    for name, s, e in spans:
        by_name.setdefault(name, []).append((s, e))
        if name not in order:
            order.append(name)
        for i, (ls, le) in enumerate(line_ranges):
            if ls >= e or le <= s:
                continue
            if owner[i] == DUMMY_METHOD:
                owner[i] = name

    entities: list[SourceEntity] = []
    claimed = sorted(span for spanlist in by_name.values() for span in spanlist)
    residual: list[tuple[int, int]] = []
    pos = 0
    for s, e in claimed:
        if s > pos:
            residual.append((pos, s))
        pos = max(pos, e)
    if pos < len(content):
        residual.append((pos, len(content)))

    def loc_of(owner_name: str) -> int:
        return sum(1 for i, kind in enumerate(line_kinds)
                   if kind == "code" and owner[i] == owner_name)

    for name in order:
        ident, comm = _split_texts(content, by_name[name], comment_spans, string_spans)
        entities.append(SourceEntity(id=f"{file_path}#{name}", granularity="method",
                                     identifier_text=ident, comment_text=comm,
                                     loc=loc_of(name), snapshot=snapshot))
    ident, comm = _split_texts(content, residual, comment_spans, string_spans)
    entities.append(SourceEntity(id=f"{file_path}#{DUMMY_METHOD}", granularity="method",
                                 identifier_text=ident, comment_text=comm,
                                 loc=loc_of(DUMMY_METHOD), snapshot=snapshot))
    return entities


# ---------------------------------------------------------------------------
# VCS log parsing


@dataclass
class Commit:
    sha: str
    date: datetime | None = None
    message: str = ""
    numstat: list[tuple[int, int, str]] = field(default_factory=list)
    hunks: list[tuple[str, str]] = field(default_factory=list)  # (path, context line)


_NUMSTAT_RE = re.compile(r"^(\d+|-)\t(\d+|-)\t(.+)$")
_HUNK_RE = re.compile(r"^@@ -\d+(?:,\d+)? \+\d+(?:,\d+)? @@ ?(.*)$")
_DIFF_RE = re.compile(r"^diff --git a/(.+) b/(.+)$")


def parse_vcs_log(log: str) -> list[Commit]:
    """Parse combined `log -p --numstat`-style text into commit records."""
    commits: list[Commit] = []
    current: Commit | None = None
    path: str | None = None
    in_message = False
    for line in log.split("\n"):
        if line.startswith("commit "):
            current = Commit(sha=line.split()[1] if len(line.split()) > 1 else "")
            commits.append(current)
            path = None
            in_message = True
            continue
        if current is None:
            continue
        if line.startswith("Date:"):
            current.date = parse_ts(line[5:].strip())
            continue
        if line.startswith(("Author:", "Merge:", "AuthorDate:", "CommitDate:")):
            continue
        m = _NUMSTAT_RE.match(line)
        if m:
            added = 0 if m.group(1) == "-" else int(m.group(1))
            deleted = 0 if m.group(2) == "-" else int(m.group(2))
            current.numstat.append((added, deleted, m.group(3)))
            in_message = False
            continue
        dm = _DIFF_RE.match(line)
        if dm:
            path = dm.group(2)
            in_message = False
            continue
        if line.startswith("+++ "):
            target = line[4:].strip()
            path = None if target == "/dev/null" else target.removeprefix("b/")
            continue
        if line.startswith("@@"):
            in_message = False
            hm = _HUNK_RE.match(line)
            if hm is None or path is None:
                warnings.warn(f"commit {current.sha}: skipping malformed hunk header {line!r}",
                              MalformedHunkWarning)
                continue
            current.hunks.append((path, hm.group(1).strip()))
            continue
        if in_message and (line.startswith("    ") or line.startswith("\t")):
            text = line[4:] if line.startswith("    ") else line[1:]
            current.message = text if not current.message else current.message + "\n" + text
    return commits


_FIX_RE = re.compile(r"\bfix(?:ed|es)?\b", re.IGNORECASE)
_BUG_KW_RE = re.compile(r"\bbugs?\b", re.IGNORECASE)
_HASH_ID_RE = re.compile(r"#\s*(\d+)")
_BUG_ID_RE = re.compile(r"\bbugs?\s*[:#]?\s*(\d+)", re.IGNORECASE)


def bug_ids_in_message(message: str) -> list[int]:
    """Bug ids referenced by a fix-style commit message (empty if not a fix)."""
    if not (_FIX_RE.search(message) and _BUG_KW_RE.search(message)):
        return []
    ids = [int(m.group(1)) for m in _HASH_ID_RE.finditer(message)]
    if not ids:
        ids = [int(m.group(1)) for m in _BUG_ID_RE.finditer(message)]
    return sorted(set(ids))


_CONTEXT_NAME_RE = re.compile(r"(~?[A-Za-z_$][\w$:~]*)\s*\(")


def method_from_context(context: str) -> str | None:
    """Enclosing method name from a hunk-header context line, if any."""
    names = [m.group(1) for m in _CONTEXT_NAME_RE.finditer(context)]
    for name in reversed(names):
        short = name.split("::")[-1].strip()
        if short.lstrip("~") and short.lstrip("~") not in _NOT_METHODS:
            return short
    return None


def changed_entity_ids(commit: Commit, granularity: str) -> list[str]:
    """Entity ids a commit touches; hunks drive method attribution, numstat
    covers files seen without hunks (dummy method at method granularity)."""
    if granularity == "file":
        paths = {p for _, _, p in commit.numstat} | {p for p, _ in commit.hunks}
        return sorted(paths)
    ids: set[str] = set()
    files_with_hunks: set[str] = set()
    for path, context in commit.hunks:
        files_with_hunks.add(path)
        name = method_from_context(context) or DUMMY_METHOD
        ids.add(f"{path}#{name}")
    for _, _, path in commit.numstat:
        if path not in files_with_hunks:
            ids.add(f"{path}#{DUMMY_METHOD}")
    return sorted(ids)


def link_bug_fixes(log: str | list[Commit], granularity: str,
                   known_bugs: Iterable[int] | None = None) -> FixLinkSet:
    """Mine bug -> entity links from fix-style commit messages.

    When `known_bugs` is given, links to absent bug ids are dropped with a
    warning instead of entering the set.
    """
    commits = parse_vcs_log(log) if isinstance(log, str) else log
    known = set(known_bugs) if known_bugs is not None else None
    links = FixLinkSet()
    for commit in commits:
        bug_ids = bug_ids_in_message(commit.message)
        if not bug_ids:
            continue
        if commit.date is None:
            warnings.warn(f"commit {commit.sha}: fix commit without a date, skipped",
                          MalformedHunkWarning)
            continue
        entity_ids = changed_entity_ids(commit, granularity)
        for bug_id in bug_ids:
            if known is not None and bug_id not in known:
                warnings.warn(f"commit {commit.sha}: bug {bug_id} not in bug store, link dropped",
                              UnresolvedBugWarning)
                continue
            for entity_id in entity_ids:
                links.add(bug_id, entity_id, commit.date)
    return links


def compute_entity_metrics(log: str | list[Commit], links: FixLinkSet,
                           entity: SourceEntity, as_of: datetime,
                           since: datetime | None = None) -> EntityHistoryMetrics:
    """History metrics for one entity as of a snapshot timestamp.

    Churn sums the numstat added+deleted of the entity's file over commits
    that touch the entity before as_of; bug counts come from the link set
    (`since` bounds the new-bug window at the previous snapshot).
    """
    commits = parse_vcs_log(log) if isinstance(log, str) else log
    churn = 0
    for commit in commits:
        if commit.date is None or commit.date >= as_of:
            continue
        if entity.id not in changed_entity_ids(commit, entity.granularity):
            continue
        churn += sum(a + d for a, d, p in commit.numstat if p == entity.file_path)
    cumulative = 0
    new = 0
    for _bug_id, fixed_at in links.links_for_entity(entity.id):
        if fixed_at >= as_of:
            continue
        cumulative += 1
        if since is None or fixed_at >= since:
            new += 1
    return EntityHistoryMetrics(loc=entity.loc, churn=churn, new_bug_count=new,
                                cumulative_bug_count=cumulative, as_of=as_of)
