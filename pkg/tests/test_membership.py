import pytest
from hypothesis import given, settings, strategies as st

from selfheal.adversary import corrupt_nodes
from selfheal.membership import ConflictPair, MarkTable
from selfheal.quorum_graph import build_butterfly


def pair(g, u, v):
    qu = g.quorums_of(u)
    qv = g.quorums_of(v)
    return ConflictPair(u, v, (min(qu), min(qv)))


def test_marking_is_global(graph_1024):
    g = graph_1024
    t = MarkTable(g)
    rep = t.record_conflicts([pair(g, 3, 9)])
    assert sorted(rep.newly_marked) == [3, 9]
    for x in (3, 9):
        for q in g.quorums_of(x):
            assert x in t.marks(q)
            assert x not in t.unmarked_set(q)
    assert rep.messages > 0
    assert t.total_marks == 2


def test_excluded_endpoint_is_never_marked(graph_1024):
    g = graph_1024
    t = MarkTable(g)
    rep = t.record_conflicts([pair(g, 3, 9)], exclude={9})
    assert rep.newly_marked == [3]
    assert not t.is_marked(9)


def test_empty_pairs_cost_nothing(graph_1024):
    rep = MarkTable(graph_1024).record_conflicts([])
    assert rep.messages == 0 and not rep.newly_marked


def test_half_marked_quorum_unmarks_everyone(graph_1024):
    g = graph_1024
    t = MarkTable(g)
    qi = 5
    members = g.members_index(qi)
    half = t.unmark_threshold(qi)
    for a, b in zip(members[: half - 2 : 2], members[1 : half - 1 : 2]):
        t.record_conflicts([pair(g, a, b)])
    assert t.marked_count(g.quorum_id(qi)) == half - 2 + (half % 2)
    before = t.marked_nodes()
    rep = t.record_conflicts([pair(g, members[-1], members[-2])])
    assert g.quorum_id(qi) in rep.unmark.quorums
    assert t.marked_count(g.quorum_id(qi)) == 0
    assert set(before) <= set(rep.unmark.nodes) | set(t.marked_nodes())
    t.check_invariants()


def test_unmark_threshold_value(graph_1024):
    assert MarkTable(graph_1024).unmark_threshold(0) == 20


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), steps=st.integers(1, 120))
def test_invariant_and_potential_under_random_conflicts(seed, steps):
    """A conflict between unmarked nodes, one of them bad, raises 3b - g by at least 2."""
    import random

    n = 1024
    bad = corrupt_nodes(n, n // 8, seed)
    g = build_butterfly(n, seed, bad=sorted(bad))
    t = MarkTable(g)
    rng = random.Random(seed)
    bad_list = sorted(bad)
    b = gd = 0
    for _ in range(steps):
        u = rng.choice(bad_list)
        v = rng.randrange(n)
        if v == u or t.is_marked(u) or t.is_marked(v):
            continue
        before = 3 * b - gd
        rep = t.record_conflicts([pair(g, u, v)])
        for x in rep.newly_marked:
            b, gd = (b + 1, gd) if x in bad else (b, gd + 1)
        for x in rep.unmark.nodes:
            b, gd = (b - 1, gd) if x in bad else (b, gd - 1)
        assert 3 * b - gd >= before + 2
        t.check_invariants()
    assert t.snapshot(lambda x: x in bad) == (b, gd)


def test_snapshot_counts(graph_1024):
    t = MarkTable(graph_1024)
    t.record_conflicts([pair(graph_1024, 1, 2)])
    assert t.snapshot(lambda x: x == 1) == (1, 1)


def test_invariant_violation_is_reported(graph_1024):
    t = MarkTable(graph_1024)
    qi = 0
    for x in graph_1024.members_index(qi):
        t._set(x, 1)
    with pytest.raises(AssertionError):
        t.check_invariants()
