import random

import pytest
from hypothesis import given, settings, strategies as st

from selfheal.acceptance import threshold_sweep
from selfheal.crypto_sim import (
    EphemeralRegistry,
    MembershipError,
    SignedMessage,
    ThresholdNotMet,
    VerificationUnavailable,
    dkg_setup,
    threshold_for,
)


@pytest.fixture(scope="module")
def scheme(graph_1024):
    return dkg_setup(graph_1024, 11)


@pytest.mark.parametrize("size, need", [(8, 7), (16, 14), (40, 35), (55, 49), (59, 52)])
def test_threshold_values(size, need):
    assert threshold_for(size) == need


def test_combine_at_and_below_threshold(scheme):
    q = scheme.graph.quorum_id(17)
    members = scheme.graph.members(q)
    need = threshold_for(len(members))
    shares = scheme.sign_shares(q, b"x", members[:need])
    sm = scheme.combine_shares(q, b"x", shares)
    assert scheme.verify(scheme[q].public_key, sm)
    with pytest.raises(ThresholdNotMet) as e:
        scheme.combine_shares(q, b"x", shares[:-1] + shares[:3])
    assert e.value.valid == need - 1


def test_shares_for_other_messages_or_quorums_do_not_count(scheme):
    q = scheme.graph.quorum_id(3)
    other = scheme.graph.quorum_id(4)
    members = scheme.graph.members(q)
    good = scheme.sign_shares(q, b"a", members)
    wrong_msg = scheme.sign_shares(q, b"b", members)
    with pytest.raises(ThresholdNotMet):
        scheme.combine_shares(q, b"a", good[:10] + wrong_msg)
    foreign = scheme.sign_shares(other, b"a", scheme.graph.members(other))
    with pytest.raises(ThresholdNotMet):
        scheme.combine_shares(q, b"a", good[:10] + foreign)


def test_non_member_cannot_sign(scheme):
    q = scheme.graph.quorum_id(0)
    outsider = next(x for x in range(scheme.graph.n) if x not in scheme.graph.members(q))
    with pytest.raises(MembershipError):
        scheme.sign_share(outsider, q, b"m")
    with pytest.raises(MembershipError):
        scheme.sign_shares(q, b"m", [outsider])


def test_single_share_matches_batch(scheme):
    q = scheme.graph.quorum_id(9)
    members = scheme.graph.members(q)
    batch = scheme.sign_shares(q, b"m", members)
    assert [scheme.sign_share(x, q, b"m") for x in members] == batch


def test_forged_signature_rejected(scheme):
    q = scheme.graph.quorum_id(5)
    fake = SignedMessage(b"m", q, bytes(32))
    assert not scheme.verify(scheme[q].public_key, fake)
    real = scheme.combine_shares(q, b"m", scheme.sign_shares(q, b"m", scheme.graph.members(q)))
    assert not scheme.verify(scheme[scheme.graph.quorum_id(6)].public_key, real)
    assert not scheme.verify(scheme[q].public_key, SignedMessage(b"n", q, real.quorum_signature))


def test_key_visibility(scheme):
    g = scheme.graph
    q = g.quorum_id(0)
    sm = scheme.combine_shares(q, b"m", scheme.sign_shares(q, b"m", g.members(q)))
    assert scheme.verify_as(g.members(q)[0], sm)
    nearby = {x for p in g.neighbors(q) for x in g.members(p)} | set(g.members(q))
    far = next(x for x in range(g.n) if x not in nearby)
    with pytest.raises(VerificationUnavailable):
        scheme.verify_as(far, sm)


def test_mapping_interface(scheme):
    assert len(scheme) == scheme.graph.num_quorums
    q = next(iter(scheme))
    kp = scheme[q]
    assert set(kp.private_shares) == set(scheme.graph.members(q))


def test_ephemeral_keys():
    reg = EphemeralRegistry()
    a = reg.ephemeral_keypair(1, 5)
    b = reg.ephemeral_keypair(2, 6)
    blob = reg.sign(a.k_s, b"probe")
    assert reg.verify_ephemeral(a.k_p, blob)
    assert not reg.verify_ephemeral(b.k_p, blob)
    assert not reg.verify_ephemeral(a.k_p, reg.sign(b.k_s, b"probe"))
    assert not reg.verify_ephemeral(b"\x00" * 32, blob)


@pytest.mark.parametrize("size", [8, 16, 55])
def test_threshold_sweep(size):
    assert threshold_sweep(size) == []


@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_combine_succeeds_iff_enough_distinct_valid(scheme, data):
    g = scheme.graph
    q = g.quorum_id(data.draw(st.integers(0, g.num_quorums - 1)))
    members = list(g.members(q))
    signers = data.draw(st.lists(st.sampled_from(members), unique=True))
    dupes = data.draw(st.integers(0, 5))
    shares = scheme.sign_shares(q, b"p", signers)
    shares += shares[:dupes]
    random.Random(dupes).shuffle(shares)
    try:
        scheme.combine_shares(q, b"p", shares)
        ok = True
    except ThresholdNotMet:
        ok = False
    assert ok == (len(signers) >= threshold_for(len(members)))
