"""Fixed-point cascade engine over the contributor/dependency matrices.

The library state vector starts all-ones (every library healthy) and is
iterated through the self-referential update until it stops changing:

    state(j) <- survival(pf, contributor input(j), upstream input(j))

where the contributor input is the active share of j's committers and the
upstream input is the dependency-share-weighted state of j's upstreams plus
any allocated surplus, capped at 1. Two edge-case corrections are applied in
every step: libraries with no contributors get contributor input 1 and
libraries with no upstreams get upstream input 1. Immunized libraries are
hard-set to 1 after each step.

Because the dependency graph is acyclic the iteration always converges; the
fixed point equals a single upstreams-first pass, which
:func:`evaluate_topological` computes and serves as an independent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    NormalizedContributionMatrix,
    NormalizedDependencyMatrix,
    TopologicalOrder,
    topological_order,
)
from .production import COBB_DOUGLAS, LEONTIEF, ProductionFunction, survival

TOLERANCE = 1e-12
MIN_MAX_ITER = 64


@dataclass(frozen=True)
class CascadeResult:
    """Converged library state plus how the iteration got there.

    ``iterations`` counts effective steps (ones that changed some entry by at
    least the tolerance); when ``converged`` is true one further step was run
    and changed nothing beyond the tolerance.
    """

    final_state: np.ndarray
    iterations: int
    converged: bool


def default_max_iter(depth: int) -> int:
    """Iteration budget tied to graph depth, with a floor against float drift."""
    return max(depth + 8, MIN_MAX_ITER)


def _survival_scalar(pf: ProductionFunction, c: float, d: float) -> float:
    # hot-loop variant of production.survival; inputs already in [0, 1]
    if pf.kind == COBB_DOUGLAS:
        return c ** pf.exponent * d ** (1.0 - pf.exponent)
    if pf.kind == LEONTIEF:
        return min(c, d)
    return (c + d) / 2.0


def _check_dimensions(sc, C, D, X, state=None) -> None:
    n_contrib, n_lib = C.shares.shape
    if C.library_ids != D.library_ids:
        raise ValueError("contribution and dependency matrices index different libraries")
    if len(sc) != n_contrib:
        raise ValueError(f"contributor state has {len(sc)} entries, expected {n_contrib}")
    if len(X) != n_lib:
        raise ValueError(f"surplus vector has {len(X)} entries, expected {n_lib}")
    if state is not None and len(state) != n_lib:
        raise ValueError(f"library state has {len(state)} entries, expected {n_lib}")


def _contributor_input(sc: np.ndarray, C: NormalizedContributionMatrix) -> np.ndarray:
    left = C.shares.T @ sc
    no_contributors = np.asarray(C.shares.sum(axis=0)).ravel() == 0.0
    left[no_contributors] = 1.0
    return np.clip(left, 0.0, 1.0)


def _upstream_input(state: np.ndarray, D: NormalizedDependencyMatrix,
                    X: np.ndarray) -> np.ndarray:
    right = D.shares.T @ state + X
    no_upstreams = np.asarray(D.shares.sum(axis=0)).ravel() == 0.0
    right[no_upstreams] = 1.0
    return np.minimum(right, 1.0)


def single_step(
    state: np.ndarray,
    sc: np.ndarray,
    C: NormalizedContributionMatrix,
    D: NormalizedDependencyMatrix,
    X: np.ndarray,
    immunized: set[int] | frozenset[int],
    pf: ProductionFunction,
) -> np.ndarray:
    """One application of the state update, corrections and immunization included."""
    state = np.asarray(state, dtype=float)
    sc = np.asarray(sc, dtype=float)
    X = np.asarray(X, dtype=float)
    _check_dimensions(sc, C, D, X, state)

    left = _contributor_input(sc, C)
    right = _upstream_input(state, D, X)
    new_state = np.clip(survival(pf, left, right), 0.0, 1.0)
    if immunized:
        new_state[list(immunized)] = 1.0
    return new_state


def propagate(
    sc: np.ndarray,
    C: NormalizedContributionMatrix,
    D: NormalizedDependencyMatrix,
    X: np.ndarray | None = None,
    immunized: set[int] | frozenset[int] = frozenset(),
    pf: ProductionFunction = ProductionFunction(),
    tol: float = TOLERANCE,
    max_iter: int | None = None,
) -> CascadeResult:
    """Iterate the update from the all-ones state to its fixed point.

    Stops when one step changes no entry by ``tol`` or more (max-norm), or
    after ``max_iter`` steps, whichever comes first; non-convergence is
    reported through the flag rather than raised. ``max_iter`` defaults to
    the dependency depth plus eight, floored at 64.
    """
    if tol <= 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    sc = np.asarray(sc, dtype=float)
    n_lib = len(C.library_ids)
    if X is None:
        X = np.zeros(n_lib)
    X = np.asarray(X, dtype=float)
    _check_dimensions(sc, C, D, X)
    if max_iter is None:
        max_iter = default_max_iter(topological_order(D).depth)

    left = _contributor_input(sc, C)
    immunized_idx = sorted(immunized)
    state = np.ones(n_lib)

    iterations = 0
    converged = False
    for _ in range(max_iter):
        right = _upstream_input(state, D, X)
        new_state = np.clip(survival(pf, left, right), 0.0, 1.0)
        if immunized_idx:
            new_state[immunized_idx] = 1.0
        delta = float(np.max(np.abs(new_state - state))) if n_lib else 0.0
        state = new_state
        if delta < tol:
            converged = True
            break
        iterations += 1
    return CascadeResult(final_state=state, iterations=iterations, converged=converged)


def evaluate_topological(
    sc: np.ndarray,
    C: NormalizedContributionMatrix,
    D: NormalizedDependencyMatrix,
    X: np.ndarray | None = None,
    immunized: set[int] | frozenset[int] = frozenset(),
    pf: ProductionFunction = ProductionFunction(),
    order: TopologicalOrder | None = None,
) -> np.ndarray:
    """Single upstreams-first pass computing each library's state exactly once.

    On a DAG this equals the fixed point of :func:`propagate` and is used as
    its brute-force oracle; corrections and immunization match step-for-step.
    """
    sc = np.asarray(sc, dtype=float)
    n_lib = len(C.library_ids)
    if X is None:
        X = np.zeros(n_lib)
    X = np.asarray(X, dtype=float)
    _check_dimensions(sc, C, D, X)
    if order is None:
        order = topological_order(D)

    left = _contributor_input(sc, C)
    shares = D.shares  # csc: column j lists j's upstreams
    indptr, indices, data = shares.indptr, shares.indices, shares.data

    state = np.ones(n_lib)
    for j in order.order:
        if j in immunized:
            state[j] = 1.0
            continue
        lo, hi = indptr[j], indptr[j + 1]
        if lo == hi:
            right = 1.0
        else:
            right = X[j]
            for pos in range(lo, hi):
                right += data[pos] * state[indices[pos]]
            right = min(right, 1.0)
        state[j] = min(max(_survival_scalar(pf, float(left[j]), float(right)), 0.0), 1.0)
    return state


class ScenarioEngine:
    """Fast evaluator for single-contributor-removal scenarios.

    With every contributor active the fixed point is all-ones regardless of
    surplus or immunization, so removing one contributor can only change the
    libraries they committed to and the downstream cone of those libraries.
    The engine recomputes just that cone in topological order, reading
    baseline ones for everything outside it; equality with the unpruned
    engine is property-tested.
    """

    def __init__(
        self,
        C: NormalizedContributionMatrix,
        D: NormalizedDependencyMatrix,
        pf: ProductionFunction = ProductionFunction(),
        X: np.ndarray | None = None,
        immunized: set[int] | frozenset[int] = frozenset(),
    ):
        n_lib = len(C.library_ids)
        if X is None:
            X = np.zeros(n_lib)
        X = np.asarray(X, dtype=float)
        _check_dimensions(np.ones(C.shares.shape[0]), C, D, X)
        self.C = C
        self.D = D
        self.pf = pf
        self.X = X
        self.immunized = frozenset(immunized)
        self.n_lib = n_lib
        self.topology = topological_order(D)

        order = self.topology.order
        self._rank = np.empty(n_lib, dtype=int)
        for rank, j in enumerate(order):
            self._rank[j] = rank
        # column slices of D: upstreams of each library
        csc = D.shares
        self._up_indptr, self._up_indices, self._up_data = (
            csc.indptr, csc.indices, csc.data)
        # row slices of D: direct dependents of each library
        csr = D.shares.tocsr()
        self._down_indptr, self._down_indices = csr.indptr, csr.indices
        # row slices of C: libraries each contributor commits to, with shares
        c_csr = C.shares.tocsr()
        self._touch_indptr, self._touch_indices, self._touch_data = (
            c_csr.indptr, c_csr.indices, c_csr.data)
        self._cone_cache: dict[int, np.ndarray] = {}

    def touched_libraries(self, contributor: int) -> np.ndarray:
        lo, hi = self._touch_indptr[contributor], self._touch_indptr[contributor + 1]
        return self._touch_indices[lo:hi]

    def cone(self, contributor: int) -> np.ndarray:
        """Libraries the removal can affect, sorted in topological order."""
        cached = self._cone_cache.get(contributor)
        if cached is not None:
            return cached
        seen = set(int(j) for j in self.touched_libraries(contributor))
        frontier = list(seen)
        while frontier:
            i = frontier.pop()
            lo, hi = self._down_indptr[i], self._down_indptr[i + 1]
            for j in self._down_indices[lo:hi]:
                j = int(j)
                if j not in seen:
                    seen.add(j)
                    frontier.append(j)
        cone = np.array(sorted(seen, key=lambda j: self._rank[j]), dtype=int)
        self._cone_cache[contributor] = cone
        return cone

    def removal_state(
        self,
        contributor: int,
        extra_immunized: set[int] | frozenset[int] = frozenset(),
    ) -> np.ndarray:
        """Final library state after removing one contributor (others active)."""
        lo, hi = self._touch_indptr[contributor], self._touch_indptr[contributor + 1]
        lost_share = dict(zip(
            (int(j) for j in self._touch_indices[lo:hi]), self._touch_data[lo:hi]))
        immune = self.immunized if not extra_immunized else (
            self.immunized | frozenset(extra_immunized))

        state = np.ones(self.n_lib)
        for j in self.cone(contributor):
            j = int(j)
            if j in immune:
                continue  # stays 1.0
            left = min(max(1.0 - lost_share.get(j, 0.0), 0.0), 1.0)
            ulo, uhi = self._up_indptr[j], self._up_indptr[j + 1]
            if ulo == uhi:
                right = 1.0
            else:
                right = float(self.X[j])
                for pos in range(ulo, uhi):
                    right += self._up_data[pos] * state[self._up_indices[pos]]
                right = min(right, 1.0)
            state[j] = min(max(_survival_scalar(self.pf, left, right), 0.0), 1.0)
        return state
