import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecorisk.model import (
    CycleError,
    build_contribution_matrix,
    build_dependency_matrix,
    build_model,
    matrix_triplets,
    topological_order,
)

from conftest import make_snapshot, random_ecosystem


def column(matrix, j):
    return np.asarray(matrix.todense())[:, j]


def test_toy_contribution_matrix(toy_snapshot):
    C = build_contribution_matrix(toy_snapshot)
    assert C.contributor_ids == ("c1", "c2", "c3")
    assert C.library_ids == ("lib1", "lib2", "lib3", "lib4")
    dense = np.asarray(C.shares.todense())
    expected = np.array([
        [0.0, 0.50, 0.0, 0.0],
        [1.0, 0.25, 0.0, 0.0],
        [0.0, 0.25, 1.0, 1.0],
    ])
    assert dense == pytest.approx(expected, abs=1e-15)


def test_toy_dependency_matrix(toy_snapshot):
    D = build_dependency_matrix(toy_snapshot)
    dense = np.asarray(D.shares.todense())
    expected = np.array([
        [0.0, 1.0, 0.0, 1.0],
        [0.0, 0.0, 0.5, 0.0],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.5, 0.0],
    ])
    assert dense == pytest.approx(expected, abs=1e-15)


def test_single_contributor_share_is_one():
    snapshot = make_snapshot(["only"], commits={("dev", "only"): 7})
    C = build_contribution_matrix(snapshot)
    assert column(C.shares, 0) == pytest.approx([1.0])


def test_two_contributor_split():
    snapshot = make_snapshot(["lib"], commits={("a", "lib"): 30, ("b", "lib"): 10})
    C = build_contribution_matrix(snapshot)
    assert sorted(column(C.shares, 0)) == pytest.approx([0.25, 0.75])


def test_uncommitted_library_has_zero_column():
    snapshot = make_snapshot(["a", "b"], commits={("dev", "a"): 5})
    C = build_contribution_matrix(snapshot)
    b_col = column(C.shares, 1)
    assert np.all(b_col == 0.0)


def test_library_without_upstreams_has_zero_column(toy_snapshot):
    D = build_dependency_matrix(toy_snapshot)
    assert np.all(column(D.shares, 0) == 0.0)


def test_four_upstreams_split_evenly():
    snapshot = make_snapshot(
        ["hub", "u1", "u2", "u3", "u4"],
        edges={("hub", f"u{i}") for i in range(1, 5)})
    D = build_dependency_matrix(snapshot)
    hub = D.library_ids.index("hub")
    col = column(D.shares, hub)
    assert col[col > 0] == pytest.approx([0.25] * 4)


def test_dependency_matrix_rejects_cycles():
    snapshot = make_snapshot(["a", "b"], edges={("a", "b"), ("b", "a")})
    with pytest.raises(CycleError):
        build_dependency_matrix(snapshot)
    with pytest.raises(CycleError):
        build_dependency_matrix(make_snapshot(["a"], edges={("a", "a")}))


def exhaustive_longest_path(edges, nodes):
    """Depth oracle: enumerate every path in the failure-flow direction."""
    downstream = {v: [] for v in nodes}
    for dep, on in edges:
        downstream[on].append(dep)
    best = 0
    stack = [(v, 0) for v in nodes]
    while stack:
        vertex, length = stack.pop()
        best = max(best, length)
        for nxt in downstream[vertex]:
            stack.append((nxt, length + 1))
    return best


def test_toy_topological_order(toy_snapshot):
    D = build_dependency_matrix(toy_snapshot)
    topo = topological_order(D)
    pos = {D.library_ids[i]: topo.order.index(i) for i in range(4)}
    assert pos["lib1"] < pos["lib2"]
    assert pos["lib1"] < pos["lib4"]
    assert pos["lib2"] < pos["lib3"]
    assert pos["lib4"] < pos["lib3"]
    assert topo.depth == exhaustive_longest_path(
        toy_snapshot.dependency_edges, toy_snapshot.library_ids())
    assert topo.depth == 2


def test_edgeless_graph_identity_order():
    snapshot = make_snapshot([f"n{i}" for i in range(5)])
    topo = topological_order(build_dependency_matrix(snapshot))
    assert topo.order == (0, 1, 2, 3, 4)
    assert topo.depth == 0


def test_chain_order_and_depth():
    snapshot = make_snapshot(["l1", "l2", "l3"],
                             edges={("l2", "l1"), ("l3", "l2")})
    topo = topological_order(build_dependency_matrix(snapshot))
    assert topo.order == (0, 1, 2)
    assert topo.depth == 2


def test_order_ties_broken_by_index():
    # two independent roots: ascending index despite equal constraints
    snapshot = make_snapshot(["b", "a", "d", "c"],
                             edges={("c", "a"), ("d", "b")})
    topo = topological_order(build_dependency_matrix(snapshot))
    # ids sort to (a, b, c, d); roots a(0), b(1) first in index order
    assert topo.order == (0, 1, 2, 3)


def test_matrices_independent_of_row_order(toy_snapshot):
    shuffled = make_snapshot(
        ["lib4", "lib2", "lib3", "lib1"],
        edges=[("lib3", "lib4"), ("lib2", "lib1"), ("lib4", "lib1"),
               ("lib3", "lib2")],
        commits={("c3", "lib4"): 5, ("c1", "lib2"): 2, ("c2", "lib1"): 4,
                 ("c3", "lib2"): 1, ("c2", "lib2"): 1, ("c3", "lib3"): 3},
    )
    a = build_contribution_matrix(toy_snapshot)
    b = build_contribution_matrix(shuffled)
    assert a.library_ids == b.library_ids
    assert a.contributor_ids == b.contributor_ids
    assert (a.shares != b.shares).nnz == 0


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(min_value=0, max_value=10_000))
def test_columns_are_stochastic(seed):
    snapshot = random_ecosystem(np.random.default_rng(seed))
    C = build_contribution_matrix(snapshot)
    D = build_dependency_matrix(snapshot)
    c_sums = np.asarray(C.shares.sum(axis=0)).ravel()
    committed = {lid for _, lid in snapshot.commit_counts}
    for j, lib_id in enumerate(C.library_ids):
        if lib_id in committed:
            assert abs(c_sums[j] - 1.0) <= 1e-12
        else:
            assert c_sums[j] == 0.0
    d_sums = np.asarray(D.shares.sum(axis=0)).ravel()
    dependents = {dep for dep, _ in snapshot.dependency_edges}
    for j, lib_id in enumerate(D.library_ids):
        if lib_id in dependents:
            assert abs(d_sums[j] - 1.0) <= 1e-12
        else:
            assert d_sums[j] == 0.0


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(min_value=0, max_value=10_000))
def test_topological_order_is_valid_and_depth_matches_oracle(seed):
    snapshot = random_ecosystem(np.random.default_rng(seed))
    D = build_dependency_matrix(snapshot)
    topo = topological_order(D)
    pos = {i: p for p, i in enumerate(topo.order)}
    lib_index = {lid: i for i, lid in enumerate(D.library_ids)}
    for dep, on in snapshot.dependency_edges:
        assert pos[lib_index[on]] < pos[lib_index[dep]]
    assert topo.depth == exhaustive_longest_path(
        snapshot.dependency_edges, snapshot.library_ids())


def test_index_lookup_round_trip(toy_model):
    for i, lib_id in enumerate(toy_model.library_ids):
        assert toy_model.library_index(lib_id) == i
    for i, cid in enumerate(toy_model.contributor_ids):
        assert toy_model.contributor_index(cid) == i
    with pytest.raises(KeyError):
        toy_model.library_index("zzz")
    with pytest.raises(KeyError):
        toy_model.contributor_index("zzz")


def test_model_arrays(toy_model):
    assert toy_model.downloads == pytest.approx([250.0] * 4)
    assert toy_model.library_commits == pytest.approx([4.0, 4.0, 3.0, 5.0])
    assert toy_model.contributor_commits == pytest.approx([2.0, 5.0, 9.0])


def test_matrix_triplets_export(toy_model):
    triplets = matrix_triplets(toy_model.dependency.shares,
                               toy_model.library_ids, toy_model.library_ids)
    assert ("lib1", "lib2", 1.0) in triplets
    assert ("lib2", "lib3", 0.5) in triplets
    assert triplets == sorted(triplets)
