"""Risk metrics: per-library risk, contributor impact, global risk, and
risk-transmission scores.

Each scenario removes one contributor, cascades the failure, and scores the
outcome as download-weighted library risk. Summing over libraries gives the
scenario's impact (interpretable as the risk exposure of a random download);
summing impacts over all contributors gives the ecosystem's global risk G.
A library's risk-transmission score is how much G drops when that library is
made immune to failure, i.e. how much it amplifies cascades.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .cascade import CascadeResult, ScenarioEngine, propagate
from .model import EcosystemModel
from .production import ProductionFunction


@dataclass(frozen=True)
class RiskVector:
    """Per-library risk, optionally weighted by download share."""

    values: np.ndarray
    weighted: bool = False


@dataclass(frozen=True)
class ImpactTable:
    """Impact per contributor plus their sum, the global systemic risk."""

    impacts: dict[str, float]
    global_risk: float


@dataclass(frozen=True)
class RtsTable:
    """Risk-transmission score per library against the unprotected baseline."""

    scores: dict[str, float]
    baseline: float


def library_risks(result: CascadeResult) -> RiskVector:
    """Per-library risk 1 - final state; rejects non-converged cascades."""
    if not result.converged:
        raise ValueError("cascade did not converge; risks undefined")
    return RiskVector(values=1.0 - result.final_state, weighted=False)


def download_weights(downloads: np.ndarray) -> np.ndarray:
    downloads = np.asarray(downloads, dtype=float)
    total = downloads.sum()
    if total <= 0:
        raise ValueError("all download counts are zero; weights undefined")
    return downloads / total


def download_weighted_risks(risks: RiskVector, downloads: np.ndarray) -> RiskVector:
    """Scale each library's risk by its share of all downloads.

    The sum of the result is the scenario's download-weighted risk: the
    average risk exposure of one random download.
    """
    weights = download_weights(downloads)
    if len(weights) != len(risks.values):
        raise ValueError("downloads and risk vector have different lengths")
    return RiskVector(values=risks.values * weights, weighted=True)


def _immunized_indices(model: EcosystemModel, immunized: Iterable[str]) -> frozenset[int]:
    return frozenset(model.library_index(lib_id) for lib_id in immunized)


def contributor_impact(
    model: EcosystemModel,
    contributor_id: str,
    pf: ProductionFunction = ProductionFunction(),
    X: np.ndarray | None = None,
    immunized: Iterable[str] = (),
) -> float:
    """Download-weighted total risk caused by removing one contributor."""
    idx = model.contributor_index(contributor_id)
    sc = np.ones(len(model.contributor_ids))
    sc[idx] = 0.0
    result = propagate(sc, model.contribution, model.dependency, X=X,
                       immunized=_immunized_indices(model, immunized), pf=pf)
    risks = download_weighted_risks(library_risks(result), model.downloads)
    return float(risks.values.sum())


def _impact_from_state(engine: ScenarioEngine, weights: np.ndarray,
                       contributor: int, extra_immunized=frozenset()) -> float:
    state = engine.removal_state(contributor, extra_immunized=extra_immunized)
    cone = engine.cone(contributor)
    if len(cone) == 0:
        return 0.0
    return float(((1.0 - state[cone]) * weights[cone]).sum())


def all_contributor_impacts(
    model: EcosystemModel,
    pf: ProductionFunction = ProductionFunction(),
    X: np.ndarray | None = None,
    immunized: Iterable[str] = (),
    jobs: int = 1,
) -> ImpactTable:
    """Impact of every contributor, removed alone, one at a time.

    Contributors with zero window commits have impact exactly 0 and are
    reported as explicit zeros without running a cascade. Scenario evaluation
    is pruned to the removed contributor's downstream cone, which agrees with
    the full fixed-point computation on acyclic graphs.
    """
    weights = download_weights(model.downloads)
    engine = ScenarioEngine(model.contribution, model.dependency, pf=pf, X=X,
                            immunized=_immunized_indices(model, immunized))
    active = [i for i, total in enumerate(model.contributor_commits) if total > 0]

    def impact_of(i: int) -> float:
        return _impact_from_state(engine, weights, i)

    values = np.zeros(len(model.contributor_ids))
    if jobs > 1 and len(active) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for i, impact in zip(active, pool.map(impact_of, active)):
                values[i] = impact
    else:
        for i in active:
            values[i] = impact_of(i)

    impacts = {cid: float(values[i]) for i, cid in enumerate(model.contributor_ids)}
    return ImpactTable(impacts=impacts, global_risk=float(values.sum()))


def risk_transmission_scores(
    model: EcosystemModel,
    pf: ProductionFunction = ProductionFunction(),
    candidates: Iterable[str] | None = None,
    X: np.ndarray | None = None,
    jobs: int = 1,
) -> RtsTable:
    """Drop in global risk when each candidate library is immune to failure.

    Reruns every contributor removal with the candidate hard-set to 1.
    Only scenarios in which the candidate actually failed are recomputed;
    for all other scenarios immunization is provably a no-op.
    """
    if candidates is None:
        candidate_idx = list(range(len(model.library_ids)))
    else:
        candidate_idx = sorted(model.library_index(lib_id) for lib_id in candidates)

    weights = download_weights(model.downloads)
    engine = ScenarioEngine(model.contribution, model.dependency, pf=pf, X=X)
    active = [i for i, total in enumerate(model.contributor_commits) if total > 0]

    base_impacts = np.zeros(len(model.contributor_ids))
    failed_scenarios: dict[int, list[int]] = {}  # library -> contributors failing it
    for c in active:
        state = engine.removal_state(c)
        cone = engine.cone(c)
        base_impacts[c] = float(((1.0 - state[cone]) * weights[cone]).sum())
        for j in cone:
            if state[j] < 1.0:
                failed_scenarios.setdefault(int(j), []).append(c)
    baseline = float(base_impacts.sum())

    def rts_of(m: int) -> float:
        saved = 0.0
        for c in failed_scenarios.get(m, ()):
            with_immune = _impact_from_state(engine, weights, c,
                                             extra_immunized=frozenset((m,)))
            saved += base_impacts[c] - with_immune
        return saved

    if jobs > 1 and len(candidate_idx) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            scores_by_idx = dict(zip(candidate_idx, pool.map(rts_of, candidate_idx)))
    else:
        scores_by_idx = {m: rts_of(m) for m in candidate_idx}

    scores = {model.library_ids[m]: float(scores_by_idx[m]) for m in candidate_idx}
    return RtsTable(scores=scores, baseline=baseline)


def top_share(values: Mapping[str, float], k: int) -> float:
    """Share of the total carried by the k largest values.

    The share itself is tie-invariant; the top-k set uses ascending-id
    tie-breaking so reports stay deterministic.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not values:
        raise ValueError("empty values")
    total = sum(values.values())
    if total <= 0:
        raise ValueError("sum of values is zero; share undefined")
    ranked = sorted(values.items(), key=lambda item: (-item[1], item[0]))
    return sum(v for _, v in ranked[:k]) / total


def spearman_rank_correlation(a: Mapping[str, float], b: Mapping[str, float]) -> float:
    """Spearman rank correlation with average-rank tie handling.

    Returns NaN when either input is constant (every ranking is then tied and
    the correlation is undefined).
    """
    if set(a) != set(b):
        raise ValueError("mismatched key sets")
    if len(a) < 3:
        raise ValueError(f"need >= 3 keys, got {len(a)}")
    keys = sorted(a)
    xs = [a[k] for k in keys]
    ys = [b[k] for k in keys]
    if len(set(xs)) == 1 or len(set(ys)) == 1:
        return float("nan")
    return float(stats.spearmanr(xs, ys).statistic)
