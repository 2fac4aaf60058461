"""Snapshot ingestion: load, window, and validate ecosystem data from CSV.

Input schemas (UTF-8, header row required, RFC-4180 quoting):

* ``libraries.csv``    -- id,name,created_at,downloads,stars
* ``dependencies.csv`` -- dependent_id,dependency_id
* ``commits.csv``      -- contributor_id,library_id,commit_count (aggregated)
                          or contributor_id,library_id,timestamp (raw)
* ``bots.csv``         -- contributor_id (optional)

Raw commit rows are aggregated at load over the half-open observation window
[start, end). Contributors listed in the bot file are dropped together with
their commits. The loaded snapshot is canonically ordered (ascending id) so
identical inputs yield identical snapshots regardless of row order.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterator


class SnapshotError(Exception):
    """Raised when input files violate the snapshot schemas or invariants."""

    def __init__(self, message: str, file: str | None = None,
                 line: int | None = None, column: str | None = None):
        location = []
        if file is not None:
            location.append(str(file))
        if line is not None:
            location.append(f"line {line}")
        if column is not None:
            location.append(f"column {column!r}")
        prefix = f"{': '.join(location)}: " if location else ""
        super().__init__(prefix + message)
        self.file = file
        self.line = line
        self.column = column


@dataclass(frozen=True)
class LibraryRecord:
    id: str
    name: str
    created_at: datetime
    downloads: int
    stars: int


@dataclass(frozen=True)
class ContributorRecord:
    id: str
    is_bot: bool = False


@dataclass(frozen=True)
class EcosystemSnapshot:
    """A windowed view of an ecosystem: who commits where, what depends on what.

    ``commit_counts`` maps (contributor_id, library_id) to window-aggregated
    counts; ``dependency_edges`` holds (dependent_id, dependency_id) pairs.
    Records are sorted by ascending id. Instances are treated as immutable.
    """

    libraries: tuple[LibraryRecord, ...]
    contributors: tuple[ContributorRecord, ...]
    commit_counts: dict[tuple[str, str], int]
    dependency_edges: frozenset[tuple[str, str]]
    window: tuple[datetime, datetime]
    dropped_bot_contributors: int = 0

    def library_ids(self) -> tuple[str, ...]:
        return tuple(lib.id for lib in self.libraries)

    def contributor_ids(self) -> tuple[str, ...]:
        return tuple(c.id for c in self.contributors)

    def window_days(self) -> float:
        start, end = self.window
        return (end - start).total_seconds() / 86400.0

    def canonical_json(self) -> str:
        """Deterministic serialization used for digests and round-trip checks."""
        payload = {
            "window": [ts.isoformat() for ts in self.window],
            "libraries": [
                [l.id, l.name, l.created_at.isoformat(), l.downloads, l.stars]
                for l in self.libraries
            ],
            "contributors": [[c.id, c.is_bot] for c in self.contributors],
            "commit_counts": sorted(
                [cid, lid, n] for (cid, lid), n in self.commit_counts.items()
            ),
            "dependency_edges": sorted(self.dependency_edges),
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))


@dataclass
class ValidationReport:
    """Outcome of snapshot validation; problems are reported, never thrown."""

    cycle_edges: list[tuple[str, str]] = field(default_factory=list)
    dangling_refs: list[str] = field(default_factory=list)
    dropped_bot_contributors: int = 0
    warnings: list[str] = field(default_factory=list)

    @property
    def accepted(self) -> bool:
        return not self.cycle_edges and not self.dangling_refs


def parse_timestamp(raw: str) -> datetime:
    """Parse an ISO-8601 timestamp; naive values are taken as UTC."""
    text = raw.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def _read_rows(path: Path, expected: list[str]) -> Iterator[tuple[int, dict[str, str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SnapshotError("empty file, header row required", file=str(path))
        header = [h.strip() for h in header]
        if header != expected:
            raise SnapshotError(
                f"bad header {header!r}, expected {expected!r}", file=str(path), line=1
            )
        for line, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue  # blank line
            if len(row) != len(expected):
                raise SnapshotError(
                    f"expected {len(expected)} fields, got {len(row)}",
                    file=str(path), line=line,
                )
            yield line, dict(zip(expected, row))


def _parse_int(value: str, *, file: Path, line: int, column: str,
               minimum: int = 0) -> int:
    try:
        parsed = int(value)
    except ValueError:
        raise SnapshotError(f"not an integer: {value!r}",
                            file=str(file), line=line, column=column)
    if parsed < minimum:
        raise SnapshotError(f"must be >= {minimum}, got {parsed}",
                            file=str(file), line=line, column=column)
    return parsed


def load_snapshot(
    library_file: str | Path,
    dependency_file: str | Path,
    commit_file: str | Path,
    bot_file: str | Path | None = None,
    *,
    window: tuple[datetime, datetime],
    raw_commits: bool = False,
) -> EcosystemSnapshot:
    """Load an :class:`EcosystemSnapshot` from the CSV files.

    Aggregated commit counts are taken verbatim; with ``raw_commits`` each row
    is one commit and only timestamps inside the window are counted. Duplicate
    (contributor, library) rows in aggregated mode are an error rather than
    summed, so upstream export bugs stay visible.
    """
    library_file = Path(library_file)
    dependency_file = Path(dependency_file)
    commit_file = Path(commit_file)
    start, end = window
    if end <= start:
        raise SnapshotError(f"empty window: {start.isoformat()} .. {end.isoformat()}")

    libraries: dict[str, LibraryRecord] = {}
    for line, row in _read_rows(library_file,
                                ["id", "name", "created_at", "downloads", "stars"]):
        lib_id = row["id"].strip()
        if not lib_id:
            raise SnapshotError("empty id", file=str(library_file), line=line, column="id")
        if lib_id in libraries:
            raise SnapshotError(f"duplicate library id {lib_id!r}",
                                file=str(library_file), line=line, column="id")
        try:
            created = parse_timestamp(row["created_at"])
        except ValueError:
            raise SnapshotError(f"bad timestamp: {row['created_at']!r}",
                                file=str(library_file), line=line, column="created_at")
        libraries[lib_id] = LibraryRecord(
            id=lib_id,
            name=row["name"],
            created_at=created,
            downloads=_parse_int(row["downloads"], file=library_file, line=line,
                                 column="downloads"),
            stars=_parse_int(row["stars"], file=library_file, line=line,
                             column="stars"),
        )
    if not libraries:
        raise SnapshotError("no libraries", file=str(library_file))

    edges: set[tuple[str, str]] = set()
    for line, row in _read_rows(dependency_file, ["dependent_id", "dependency_id"]):
        dep, on = row["dependent_id"].strip(), row["dependency_id"].strip()
        for column, lib_id in (("dependent_id", dep), ("dependency_id", on)):
            if lib_id not in libraries:
                raise SnapshotError(f"unknown library id {lib_id!r}",
                                    file=str(dependency_file), line=line, column=column)
        edges.add((dep, on))

    bot_ids: set[str] = set()
    if bot_file is not None:
        for _, row in _read_rows(Path(bot_file), ["contributor_id"]):
            bot_ids.add(row["contributor_id"].strip())

    commit_counts: dict[tuple[str, str], int] = {}
    dropped_bots: set[str] = set()
    columns = ["contributor_id", "library_id",
               "timestamp" if raw_commits else "commit_count"]
    for line, row in _read_rows(commit_file, columns):
        cid, lid = row["contributor_id"].strip(), row["library_id"].strip()
        if lid not in libraries:
            raise SnapshotError(f"unknown library id {lid!r}",
                                file=str(commit_file), line=line, column="library_id")
        if cid in bot_ids:
            dropped_bots.add(cid)
            continue
        key = (cid, lid)
        if raw_commits:
            try:
                ts = parse_timestamp(row["timestamp"])
            except ValueError:
                raise SnapshotError(f"bad timestamp: {row['timestamp']!r}",
                                    file=str(commit_file), line=line, column="timestamp")
            if start <= ts < end:
                commit_counts[key] = commit_counts.get(key, 0) + 1
        else:
            if key in commit_counts:
                raise SnapshotError(
                    f"duplicate (contributor, library) row {key!r}",
                    file=str(commit_file), line=line,
                )
            commit_counts[key] = _parse_int(row["commit_count"], file=commit_file,
                                            line=line, column="commit_count")

    contributor_ids = sorted({cid for cid, _ in commit_counts})
    return EcosystemSnapshot(
        libraries=tuple(libraries[k] for k in sorted(libraries)),
        contributors=tuple(ContributorRecord(id=c) for c in contributor_ids),
        commit_counts=commit_counts,
        dependency_edges=frozenset(edges),
        window=(start, end),
        dropped_bot_contributors=len(dropped_bots),
    )


def _back_edges(nodes: list[str], adjacency: dict[str, list[str]]) -> list[tuple[str, str]]:
    """Edges closing a cycle under iterative DFS; every cycle contains one."""
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {v: WHITE for v in nodes}
    found: list[tuple[str, str]] = []
    for root in nodes:
        if color[root] != WHITE:
            continue
        stack: list[tuple[str, Iterator[str]]] = [(root, iter(adjacency.get(root, ())))]
        color[root] = GRAY
        while stack:
            vertex, children = stack[-1]
            child = next(children, None)
            if child is None:
                color[vertex] = BLACK
                stack.pop()
            elif color[child] == GRAY:
                found.append((vertex, child))
            elif color[child] == WHITE:
                color[child] = GRAY
                stack.append((child, iter(adjacency.get(child, ()))))
    return found


def validate_snapshot(snapshot: EcosystemSnapshot) -> ValidationReport:
    """Check snapshot invariants: known ids, no self-edges, acyclic dependencies.

    All dependency cycles are detected (at least one offending edge is reported
    per cycle, self-edges included). An accepted report means the snapshot
    satisfies every structural invariant.
    """
    report = ValidationReport(
        dropped_bot_contributors=snapshot.dropped_bot_contributors)
    known_libs = set(snapshot.library_ids())
    known_contribs = set(snapshot.contributor_ids())

    dangling: list[str] = []
    for dep, on in sorted(snapshot.dependency_edges):
        for lib_id in (dep, on):
            if lib_id not in known_libs and lib_id not in dangling:
                dangling.append(lib_id)
    for cid, lid in sorted(snapshot.commit_counts):
        if cid not in known_contribs and cid not in dangling:
            dangling.append(cid)
        if lid not in known_libs and lid not in dangling:
            dangling.append(lid)
        if snapshot.commit_counts[(cid, lid)] < 0:
            report.warnings.append(f"negative commit count for {(cid, lid)!r}")
    report.dangling_refs = dangling

    nodes = sorted(known_libs)
    adjacency: dict[str, list[str]] = {v: [] for v in nodes}
    self_edges = []
    for dep, on in sorted(snapshot.dependency_edges):
        if dep == on:
            self_edges.append((dep, on))
            continue
        if dep in adjacency and on in adjacency:
            adjacency[dep].append(on)

    report.cycle_edges = self_edges + _back_edges(nodes, adjacency)
    for edge in self_edges:
        report.warnings.append(f"self-dependency on {edge[0]!r}")
    return report


def break_cycles(snapshot: EcosystemSnapshot) -> tuple[EcosystemSnapshot, list[tuple[str, str]]]:
    """Drop the lexicographically smallest edge of each dependency cycle.

    Returns the repaired snapshot plus the dropped edges, so the removals can
    be surfaced in the validation report instead of happening silently.
    """
    edges = set(snapshot.dependency_edges)
    dropped: list[tuple[str, str]] = []

    def find_cycle() -> list[tuple[str, str]] | None:
        adjacency: dict[str, list[str]] = {}
        for dep, on in sorted(edges):
            if dep == on:
                return [(dep, on)]
            adjacency.setdefault(dep, []).append(on)
        WHITE, GRAY, BLACK = 0, 1, 2
        color: dict[str, int] = {}
        for root in sorted(adjacency):
            if color.get(root, WHITE) != WHITE:
                continue
            path: list[str] = [root]
            stack: list[Iterator[str]] = [iter(adjacency.get(root, ()))]
            color[root] = GRAY
            while stack:
                child = next(stack[-1], None)
                if child is None:
                    color[path.pop()] = BLACK
                    stack.pop()
                    continue
                state = color.get(child, WHITE)
                if state == GRAY:
                    cycle_nodes = path[path.index(child):] + [child]
                    return list(zip(cycle_nodes, cycle_nodes[1:]))
                if state == WHITE:
                    color[child] = GRAY
                    path.append(child)
                    stack.append(iter(adjacency.get(child, ())))
        return None

    while True:
        cycle = find_cycle()
        if cycle is None:
            break
        victim = min(cycle)
        edges.discard(victim)
        dropped.append(victim)

    repaired = EcosystemSnapshot(
        libraries=snapshot.libraries,
        contributors=snapshot.contributors,
        commit_counts=snapshot.commit_counts,
        dependency_edges=frozenset(edges),
        window=snapshot.window,
        dropped_bot_contributors=snapshot.dropped_bot_contributors,
    )
    return repaired, dropped
