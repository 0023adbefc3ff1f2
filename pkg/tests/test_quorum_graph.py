import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from selfheal.adversary import corrupt_nodes
from selfheal.quorum_graph import (
    GraphError,
    QuorumId,
    UnknownNodeError,
    UnknownQuorumError,
    build_butterfly,
    levels_for,
    quorum_size_for,
)


@pytest.mark.parametrize(
    "n, levels, qsize",
    [(1024, 8, 40), (4096, 10, 48), (14_116, 11, 55), (30_509, 12, 59), (16, 2, 16)],
)
def test_sizing(n, levels, qsize):
    assert levels_for(n) == levels
    assert quorum_size_for(n) == qsize


def test_too_small():
    with pytest.raises(GraphError):
        build_butterfly(15, 0)


def test_shape_and_membership_inverse(graph_1024):
    g = graph_1024
    assert g.num_quorums == 8 * 128
    for qi in range(g.num_quorums):
        members = g.members_index(qi)
        assert len(set(members)) == g.quorum_size == len(members)
        assert list(members) == sorted(members)
        for x in members:
            assert qi in g.quorums_of_index(x)
    total = sum(len(g.quorums_of_index(x)) for x in range(g.n))
    assert total == g.num_quorums * g.quorum_size


def test_butterfly_wiring(graph_1024):
    g = graph_1024
    q = QuorumId(3, 5)
    assert g.neighbors(q) == {QuorumId(4, 5), QuorumId(4, 5 ^ 4), QuorumId(2, 5), QuorumId(2, 5 ^ 2)}
    assert len(g.neighbors(QuorumId(1, 0))) == 2
    assert len(g.neighbors(QuorumId(g.levels, 0))) == 2


def test_neighbour_relation_is_symmetric(graph_1024):
    g = graph_1024
    for qi in range(g.num_quorums):
        for p in g.neighbors_index(qi):
            assert qi in g.neighbors_index(p)


def test_unknown_ids(graph_1024):
    with pytest.raises(UnknownQuorumError):
        graph_1024.members(QuorumId(0, 0))
    with pytest.raises(UnknownNodeError):
        graph_1024.quorums_of(1024)


def test_same_seed_same_graph():
    a = build_butterfly(512, 9)
    b = build_butterfly(512, 9)
    assert np.array_equal(a.member_array, b.member_array)
    assert not np.array_equal(a.member_array, build_butterfly(512, 10).member_array)


def test_balanced_placement_caps_bad_per_quorum():
    n = 4096
    bad = corrupt_nodes(n, n // 8, 4)
    g = build_butterfly(n, 4, bad=sorted(bad))
    counts = g.bad_counts(bad)
    assert counts.max() <= g.quorum_size // 8
    assert not g.quorum_bound_violations(bad)


def test_membership_bound_is_enforced():
    with pytest.raises(GraphError):
        build_butterfly(4096, 0, membership_factor=4.0)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(16, 2000), seed=st.integers(0, 2**32), pair=st.tuples(st.integers(0, 10**6), st.integers(0, 10**6)))
def test_paths_walk_butterfly_edges(n, seed, pair):
    g = build_butterfly(n, seed)
    s, r = pair[0] % n, pair[1] % n
    path = g.path_indices(s, r)
    assert len(path) == g.levels
    # entry and exit columns come from hashes of the endpoint IDs
    assert g.quorum_id(path[0]).level == 1
    assert g.quorum_id(path[-1]).level == g.levels
    assert g.path_indices(s, (r + 1) % n)[0] == path[0]
    for a, b in zip(path, path[1:]):
        assert b in g.neighbors_index(a)
    assert path == g.path_indices(s, r)
