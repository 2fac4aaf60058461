"""Normalized contribution/dependency matrices and dependency topology.

Snapshot ids are reindexed to dense integers (ascending id order) at build
time so the cascade engine can use plain array arithmetic. Both matrices are
column-normalized:

* contribution matrix: entry (i, j) is contributor i's share of the commits
  to library j; columns of maintained libraries sum to 1.
* dependency matrix: entry (i, j) is library j's uniform share of dependency
  on upstream i (1/k for each of j's k upstreams).

Matrices are immutable after construction and safe for shared reads.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .ingest import EcosystemSnapshot


class CycleError(Exception):
    """Dependency edges do not form a DAG."""


@dataclass(frozen=True)
class NormalizedContributionMatrix:
    """Column-normalized commit shares, contributors x libraries."""

    shares: sparse.csc_matrix
    contributor_ids: tuple[str, ...]
    library_ids: tuple[str, ...]

    def contributor_index(self, contributor_id: str) -> int:
        return self.contributor_ids.index(contributor_id)


@dataclass(frozen=True)
class NormalizedDependencyMatrix:
    """Column-normalized dependency shares, upstream x downstream."""

    shares: sparse.csc_matrix
    library_ids: tuple[str, ...]


@dataclass(frozen=True)
class TopologicalOrder:
    """Upstreams-first library ordering plus the longest path length."""

    order: tuple[int, ...]
    depth: int


def _library_index(snapshot: EcosystemSnapshot) -> dict[str, int]:
    return {lib_id: i for i, lib_id in enumerate(sorted(snapshot.library_ids()))}


def build_contribution_matrix(snapshot: EcosystemSnapshot) -> NormalizedContributionMatrix:
    """Column-normalize raw commit counts into per-library shares.

    Libraries with zero window commits get an all-zero column; the cascade
    engine's no-contributor correction handles them.
    """
    lib_index = _library_index(snapshot)
    contrib_index = {cid: i for i, cid in enumerate(sorted(snapshot.contributor_ids()))}
    totals = np.zeros(len(lib_index))
    for (_, lid), count in snapshot.commit_counts.items():
        totals[lib_index[lid]] += count

    rows, cols, values = [], [], []
    for (cid, lid) in sorted(snapshot.commit_counts):
        count = snapshot.commit_counts[(cid, lid)]
        if count == 0:
            continue
        j = lib_index[lid]
        rows.append(contrib_index[cid])
        cols.append(j)
        values.append(count / totals[j])
    shares = sparse.csc_matrix(
        (values, (rows, cols)), shape=(len(contrib_index), len(lib_index))
    )
    return NormalizedContributionMatrix(
        shares=shares,
        contributor_ids=tuple(sorted(contrib_index)),
        library_ids=tuple(sorted(lib_index)),
    )


def build_dependency_matrix(snapshot: EcosystemSnapshot) -> NormalizedDependencyMatrix:
    """Uniform dependency shares: 1/k per upstream for a library with k upstreams.

    Libraries without upstreams get an all-zero column. Acyclicity is
    re-checked defensively even though validation should have caught cycles.
    """
    lib_index = _library_index(snapshot)
    upstream_counts: dict[str, int] = {}
    for dep, _ in snapshot.dependency_edges:
        upstream_counts[dep] = upstream_counts.get(dep, 0) + 1

    rows, cols, values = [], [], []
    for dep, on in sorted(snapshot.dependency_edges):
        if dep == on:
            raise CycleError(f"self-dependency on {dep!r}")
        rows.append(lib_index[on])
        cols.append(lib_index[dep])
        values.append(1.0 / upstream_counts[dep])
    shares = sparse.csc_matrix(
        (values, (rows, cols)), shape=(len(lib_index), len(lib_index))
    )
    matrix = NormalizedDependencyMatrix(
        shares=shares, library_ids=tuple(sorted(lib_index))
    )
    topological_order(matrix)  # raises CycleError on a non-DAG
    return matrix


def topological_order(matrix: NormalizedDependencyMatrix) -> TopologicalOrder:
    """Deterministic upstreams-first order plus longest-path depth.

    Kahn's algorithm with a min-heap so ties break by ascending library index.
    Depth counts edges on the longest upstream-to-downstream path.
    """
    n = len(matrix.library_ids)
    csr = matrix.shares.tocsr()  # row i -> downstream columns of upstream i
    indegree = np.zeros(n, dtype=int)
    coo = matrix.shares.tocoo()
    for j in coo.col:
        indegree[j] += 1

    level = np.zeros(n, dtype=int)
    heap = [i for i in range(n) if indegree[i] == 0]
    heapq.heapify(heap)
    order: list[int] = []
    while heap:
        i = heapq.heappop(heap)
        order.append(i)
        row = csr.indices[csr.indptr[i]:csr.indptr[i + 1]]
        for j in row:
            indegree[j] -= 1
            level[j] = max(level[j], level[i] + 1)
            if indegree[j] == 0:
                heapq.heappush(heap, int(j))
    if len(order) != n:
        remaining = [matrix.library_ids[i] for i in range(n) if indegree[i] > 0]
        raise CycleError(f"dependency cycle among {remaining!r}")
    depth = int(level.max()) if n else 0
    return TopologicalOrder(order=tuple(order), depth=depth)


@dataclass(frozen=True)
class EcosystemModel:
    """Everything the engines need, derived once from a validated snapshot."""

    contribution: NormalizedContributionMatrix
    dependency: NormalizedDependencyMatrix
    topology: TopologicalOrder
    library_ids: tuple[str, ...]
    contributor_ids: tuple[str, ...]
    downloads: np.ndarray           # per library, window totals
    stars: np.ndarray               # per library
    created_at: tuple                # per library, datetime
    library_commits: np.ndarray     # per library, total window commits (N_i)
    contributor_commits: np.ndarray  # per contributor, total window commits

    def library_index(self, library_id: str) -> int:
        try:
            return self._lib_lookup()[library_id]
        except KeyError:
            raise KeyError(f"unknown library id {library_id!r}") from None

    def contributor_index(self, contributor_id: str) -> int:
        try:
            return self._contrib_lookup()[contributor_id]
        except KeyError:
            raise KeyError(f"unknown contributor id {contributor_id!r}") from None

    def _lib_lookup(self) -> dict[str, int]:
        if not hasattr(self, "_lib_cache"):
            object.__setattr__(self, "_lib_cache",
                               {lid: i for i, lid in enumerate(self.library_ids)})
        return self._lib_cache

    def _contrib_lookup(self) -> dict[str, int]:
        if not hasattr(self, "_contrib_cache"):
            object.__setattr__(self, "_contrib_cache",
                               {cid: i for i, cid in enumerate(self.contributor_ids)})
        return self._contrib_cache


def build_model(snapshot: EcosystemSnapshot) -> EcosystemModel:
    """Build matrices, topology, and per-entity arrays from a validated snapshot."""
    contribution = build_contribution_matrix(snapshot)
    dependency = build_dependency_matrix(snapshot)
    topology = topological_order(dependency)

    by_id = {lib.id: lib for lib in snapshot.libraries}
    library_ids = contribution.library_ids
    downloads = np.array([by_id[lid].downloads for lid in library_ids], dtype=float)
    stars = np.array([by_id[lid].stars for lid in library_ids], dtype=float)
    created_at = tuple(by_id[lid].created_at for lid in library_ids)

    lib_lookup = {lid: i for i, lid in enumerate(library_ids)}
    contrib_lookup = {cid: i for i, cid in enumerate(contribution.contributor_ids)}
    library_commits = np.zeros(len(library_ids))
    contributor_commits = np.zeros(len(contribution.contributor_ids))
    for (cid, lid), count in snapshot.commit_counts.items():
        library_commits[lib_lookup[lid]] += count
        if cid in contrib_lookup:
            contributor_commits[contrib_lookup[cid]] += count

    downloads.setflags(write=False)
    stars.setflags(write=False)
    library_commits.setflags(write=False)
    contributor_commits.setflags(write=False)
    return EcosystemModel(
        contribution=contribution,
        dependency=dependency,
        topology=topology,
        library_ids=library_ids,
        contributor_ids=contribution.contributor_ids,
        downloads=downloads,
        stars=stars,
        created_at=created_at,
        library_commits=library_commits,
        contributor_commits=contributor_commits,
    )


def matrix_triplets(shares: sparse.spmatrix, row_ids: tuple[str, ...],
                    col_ids: tuple[str, ...]) -> list[tuple[str, str, float]]:
    """Sparse entries as (row_id, col_id, value) rows for debug CSV export."""
    coo = shares.tocoo()
    triplets = [
        (row_ids[i], col_ids[j], float(v))
        for i, j, v in zip(coo.row, coo.col, coo.data)
    ]
    triplets.sort()
    return triplets
