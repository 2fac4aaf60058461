from __future__ import annotations

from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pytest

from ecorisk.ingest import (
    ContributorRecord,
    EcosystemSnapshot,
    LibraryRecord,
    load_snapshot,
)
from ecorisk.model import build_model

DATA = Path(__file__).parent / "data"
TOY = DATA / "toy"

WINDOW = (
    datetime(2021, 1, 1, tzinfo=timezone.utc),
    datetime(2022, 1, 1, tzinfo=timezone.utc),
)


def utc(year: int, month: int = 1, day: int = 1) -> datetime:
    return datetime(year, month, day, tzinfo=timezone.utc)


def make_snapshot(
    library_ids,
    edges=(),
    commits=None,
    downloads=None,
    stars=None,
    created=None,
    contributor_ids=None,
) -> EcosystemSnapshot:
    """Programmatic snapshot for unit and property tests."""
    commits = dict(commits or {})
    downloads = downloads or {}
    stars = stars or {}
    created = created or {}
    if contributor_ids is None:
        contributor_ids = sorted({cid for cid, _ in commits})
    libraries = tuple(
        LibraryRecord(
            id=lid,
            name=lid,
            created_at=created.get(lid, utc(2019)),
            downloads=downloads.get(lid, 100),
            stars=stars.get(lid, 0),
        )
        for lid in sorted(library_ids)
    )
    return EcosystemSnapshot(
        libraries=libraries,
        contributors=tuple(ContributorRecord(id=c) for c in sorted(contributor_ids)),
        commit_counts=commits,
        dependency_edges=frozenset(edges),
        window=WINDOW,
    )


def toy_snapshot_from_files() -> EcosystemSnapshot:
    return load_snapshot(
        TOY / "libraries.csv",
        TOY / "dependencies.csv",
        TOY / "commits.csv",
        window=WINDOW,
    )


@pytest.fixture(scope="session")
def toy_snapshot() -> EcosystemSnapshot:
    return toy_snapshot_from_files()


@pytest.fixture(scope="session")
def toy_model(toy_snapshot):
    return build_model(toy_snapshot)


def random_ecosystem(rng: np.random.Generator, max_libraries: int = 12,
                     max_contributors: int = 8) -> EcosystemSnapshot:
    """Random acyclic ecosystem; ids are shuffled so index order is not
    topological by construction."""
    n_lib = int(rng.integers(1, max_libraries + 1))
    n_contrib = int(rng.integers(1, max_contributors + 1))
    position = rng.permutation(n_lib)  # DAG slot -> id suffix
    ids = [f"L{position[i]:02d}" for i in range(n_lib)]
    edge_prob = rng.uniform(0.1, 0.5)
    edges = {
        (ids[j], ids[i])
        for j in range(n_lib)
        for i in range(j)
        if rng.random() < edge_prob
    }
    commit_prob = rng.uniform(0.2, 0.7)
    commits = {
        (f"C{k}", ids[i]): int(rng.integers(1, 21))
        for k in range(n_contrib)
        for i in range(n_lib)
        if rng.random() < commit_prob
    }
    downloads = {lid: int(rng.integers(0, 1000)) for lid in ids}
    downloads[ids[int(rng.integers(0, n_lib))]] = int(rng.integers(1, 1000))
    return make_snapshot(
        ids,
        edges=edges,
        commits=commits,
        downloads=downloads,
        stars={lid: int(rng.integers(0, 500)) for lid in ids},
        contributor_ids=[f"C{k}" for k in range(n_contrib)],
    )
