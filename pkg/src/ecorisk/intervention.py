"""Developer-allocation interventions: rank libraries, add surplus, sweep K.

A donor adds one developer to each of the top K libraries under some ranking
heuristic. Allocated developers contribute a fixed commit volume ``e`` (by
default 5/7 of a commit per day over the observation window, roughly one per
weekday) which enters the cascade as surplus: library i receives e/N_i on its
upstream-health input, never removable by any scenario. Sweeping K and
recomputing global risk compares the heuristics.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np

from .metrics import RtsTable, all_contributor_impacts, risk_transmission_scores
from .model import EcosystemModel
from .production import ProductionFunction

TRANSITIVE = "transitive"
DOWNLOADS = "downloads"
AGE = "age"
STARS = "stars"
RANDOM = "random"
RTS_RANK = "rts"

STRATEGIES = (TRANSITIVE, DOWNLOADS, AGE, STARS, RANDOM, RTS_RANK)

WEEKDAY_COMMITS_PER_DAY = 5.0 / 7.0


def default_commit_volume(window_days: float) -> float:
    """Commit volume of one allocated developer: one commit per weekday."""
    return WEEKDAY_COMMITS_PER_DAY * window_days


@dataclass(frozen=True)
class InterventionConfig:
    """Allocation parameters: per-developer commit volume and the K grid."""

    e: float
    k_values: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.e <= 0:
            raise ValueError(f"commit volume e must be positive, got {self.e}")
        if not self.k_values:
            raise ValueError("k_values must be non-empty")
        if any(k < 1 for k in self.k_values):
            raise ValueError(f"k values must be positive: {self.k_values}")
        if any(b <= a for a, b in zip(self.k_values, self.k_values[1:])):
            raise ValueError(f"k values must be strictly ascending: {self.k_values}")


@dataclass(frozen=True)
class InterventionCurve:
    """Global risk at each K for one strategy, with the unaided baseline."""

    strategy: str
    points: tuple[tuple[int, float], ...]
    baseline: float
    e: float
    seed: int | None = None


def transitive_counts(model: EcosystemModel, direction: str = "downstream") -> np.ndarray:
    """Per-library count of transitive dependents (or upstream dependencies).

    ``downstream`` counts libraries that depend on each library directly or
    through a chain; ``upstream`` counts the libraries it depends on.
    """
    if direction not in ("downstream", "upstream"):
        raise ValueError(f"direction must be downstream or upstream: {direction!r}")
    n = len(model.library_ids)
    shares = model.dependency.shares
    order = model.topology.order
    reach = [0] * n  # bitsets over library indices
    if direction == "downstream":
        csr = shares.tocsr()  # row i -> direct dependents of i
        for i in reversed(order):
            bits = 0
            lo, hi = csr.indptr[i], csr.indptr[i + 1]
            for j in csr.indices[lo:hi]:
                bits |= (1 << int(j)) | reach[j]
            reach[i] = bits
    else:
        csc = shares.tocsc()  # column j -> direct upstreams of j
        for j in order:
            bits = 0
            lo, hi = csc.indptr[j], csc.indptr[j + 1]
            for i in csc.indices[lo:hi]:
                bits |= (1 << int(i)) | reach[i]
            reach[j] = bits
    return np.array([bits.bit_count() for bits in reach], dtype=int)


def rank_libraries(
    model: EcosystemModel,
    strategy: str,
    rts: RtsTable | None = None,
    seed: int | None = None,
    transitive_direction: str = "downstream",
) -> list[str]:
    """Order library ids by the given allocation strategy, best targets first.

    All ties break by ascending library id. The random strategy requires an
    explicit seed and is reproducible across platforms.
    """
    ids = model.library_ids
    if strategy == TRANSITIVE:
        counts = transitive_counts(model, transitive_direction)
        keyed = sorted(zip(ids, counts), key=lambda p: (-p[1], p[0]))
        return [lib_id for lib_id, _ in keyed]
    if strategy == DOWNLOADS:
        keyed = sorted(zip(ids, model.downloads), key=lambda p: (-p[1], p[0]))
        return [lib_id for lib_id, _ in keyed]
    if strategy == AGE:
        keyed = sorted(zip(ids, model.created_at), key=lambda p: (p[1], p[0]))
        return [lib_id for lib_id, _ in keyed]
    if strategy == STARS:
        keyed = sorted(zip(ids, model.stars), key=lambda p: (-p[1], p[0]))
        return [lib_id for lib_id, _ in keyed]
    if strategy == RANDOM:
        if seed is None:
            raise ValueError("random strategy requires an explicit seed")
        # legacy RandomState: frozen algorithm, identical order everywhere
        permutation = np.random.RandomState(seed).permutation(len(ids))
        return [ids[i] for i in permutation]
    if strategy == RTS_RANK:
        if rts is None:
            raise ValueError("rts strategy requires a risk-transmission table")
        keyed = sorted(ids, key=lambda lib_id: (-rts.scores.get(lib_id, 0.0), lib_id))
        return list(keyed)
    raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")


def build_surplus(model: EcosystemModel, allocated: Iterable[str], e: float) -> np.ndarray:
    """Surplus vector: e/N_i for each allocated library, zero elsewhere.

    A library with zero window commits gets full surplus 1 instead of a
    division by zero; a freshly staffed unmaintained library is at least as
    supported as the e = N case.
    """
    if e <= 0:
        raise ValueError(f"commit volume e must be positive, got {e}")
    X = np.zeros(len(model.library_ids))
    for lib_id in allocated:
        i = model.library_index(lib_id)
        commits = model.library_commits[i]
        X[i] = e / commits if commits >= 1 else 1.0
    return X


def intervention_sweep(
    model: EcosystemModel,
    strategy: str,
    config: InterventionConfig,
    pf: ProductionFunction = ProductionFunction(),
    rts: RtsTable | None = None,
    seed: int | None = None,
    transitive_direction: str = "downstream",
    jobs: int = 1,
) -> InterventionCurve:
    """Global risk as a function of developers added under one strategy.

    The ranking is fixed up front (the RTS table, when needed, is computed at
    the unaided baseline and reused across the sweep); each K reallocates
    surplus to the top K libraries and recomputes all contributor impacts.
    """
    if max(config.k_values) > len(model.library_ids):
        raise ValueError(
            f"largest k {max(config.k_values)} exceeds library count "
            f"{len(model.library_ids)}")
    if strategy == RTS_RANK and rts is None:
        rts = risk_transmission_scores(model, pf=pf, jobs=jobs)
    ranking = rank_libraries(model, strategy, rts=rts, seed=seed,
                             transitive_direction=transitive_direction)
    baseline = all_contributor_impacts(model, pf=pf, jobs=jobs).global_risk

    points = []
    for k in config.k_values:
        X = build_surplus(model, ranking[:k], config.e)
        g_k = all_contributor_impacts(model, pf=pf, X=X, jobs=jobs).global_risk
        points.append((k, g_k))
    return InterventionCurve(strategy=strategy, points=tuple(points),
                             baseline=baseline, e=config.e, seed=seed)


def cumulative_reduction(curve: InterventionCurve, k: int) -> float:
    """Normalized area between the baseline and the curve up to k.

    Trapezoidal integration over the recorded points from the smallest
    recorded k; the result is the fraction of baseline risk eliminated on
    average across the sweep, 0 for a flat curve and 1 for total elimination.
    """
    ks = [p[0] for p in curve.points]
    if k not in ks:
        raise ValueError(f"k={k} not among recorded points {ks}")
    if curve.baseline <= 0:
        raise ValueError("baseline risk is zero; reduction undefined")
    first = ks[0]
    if k == first:
        return (curve.baseline - dict(curve.points)[k]) / curve.baseline
    area = 0.0
    for (k0, g0), (k1, g1) in zip(curve.points, curve.points[1:]):
        if k0 >= k:
            break
        gap0 = curve.baseline - g0
        gap1 = curve.baseline - g1
        area += (gap0 + gap1) / 2.0 * (k1 - k0)
        if k1 == k:
            break
    return area / (curve.baseline * (k - first))
