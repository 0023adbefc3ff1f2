"""SEND-PATH (random relay per quorum) and the all-to-all baseline."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import TYPE_CHECKING

from ..adversary import Equivocate, StepContext, apply, decide
from .broadcast import broadcast
from .messages import Transcript

if TYPE_CHECKING:
    from .core import Protocol


@dataclass
class PathRun:
    s: int
    r: int
    m: bytes
    path: list[int]
    selections: list[int]
    accepted: bytes | None  # what the good members of Q_l hold after q_l's broadcast
    output: bytes | None  # r's majority-filtered result
    transcript: Transcript
    messages: int
    rounds: int

    @property
    def corrupted(self) -> bool:
        return self.output != self.m


def majority(votes: Counter, quorum_size: int) -> bytes | None:
    for value, count in votes.items():
        if 2 * count > quorum_size:
            return value
    return None


def _deliver_to_r(proto: "Protocol", qi: int, held: bytes | None, r: int, kind: str) -> tuple[bytes | None, int]:
    """Every member of quorum ``qi`` sends what it holds to r; r keeps the majority."""
    size = len(proto.graph.members_index(qi))
    bad = proto.bad_members(qi)
    votes: Counter = Counter()
    if held is not None:
        votes[held] = size - len(bad)
    adv = proto.adv
    for y in bad:
        v = apply(decide(adv, y, StepContext("deliver", held)), held, r)
        if v is not None:
            votes[v] += 1
    sent = sum(votes.values())
    proto.meter.add(kind, sent)
    return majority(votes, size), sent


def send_path(proto: "Protocol", s: int, m: bytes, r: int, path: list[int] | None = None) -> PathRun:
    g = proto.graph
    adv = proto.adv
    flags = adv.flags
    meter = proto.meter
    clock = proto.clock
    if path is None:
        path = g.path_indices(s, r)
    levels = len(path)
    m0 = meter.messages
    r0 = clock.round

    randrange = proto.sel_rng.randrange
    selections = []
    for qi in path:
        u = proto.marks.unmarked_index(qi)
        selections.append(u[randrange(len(u))])
    tr = Transcript()

    # s has Q_1 sign (m, q_1) and hands it to all of Q_1
    q1 = path[0]
    first = m
    if flags[s]:
        first = apply(decide(adv, s, StepContext("broadcast", m, target_level=1)), m)
    held = None
    if first is not None:
        res = broadcast(
            proto, s, first + selections[0].to_bytes(8, "little"), q1,
            audience=len(g.members_index(q1)), kind="sendpath",
        )
        held = first if res.ok else None
    clock.step(3)

    # Q_1 forwards the signed copy to q_1; any good forwarder suffices
    if held is not None:
        meter.add("sendpath", proto.transmitting_count(q1))
    clock.step()

    hops = 0
    cur = held
    for i in range(levels - 1):
        u = selections[i]
        v = selections[i + 1]
        if flags[u]:
            sent = apply(decide(adv, u, StepContext("relay", cur, target_level=i + 2, recipients=(v,))), cur, v)
        else:
            sent = cur
        tr.add("sendpath", 0, i + 1, i + 2, u, v, cur, sent)
        if sent is not None:
            hops += 1
        cur = sent
    meter.add("sendpath", hops)
    clock.step(levels - 1)

    # q_l broadcasts into Q_l
    ql = path[-1]
    u = selections[-1]
    members = g.members_index(ql)
    per_member = None
    bval = cur
    if flags[u]:
        action = decide(adv, u, StepContext("broadcast", cur, target_level=levels + 1, recipients=members))
        if isinstance(action, Equivocate):
            per_member = dict(action.payloads)
            bval = next(iter(per_member.values()), None)
        else:
            bval = apply(action, cur)
    tr.add("sendpath", 0, levels, levels + 1, u, proto.witness(ql, s, r), cur, bval, broadcast=True)
    accepted = None
    if bval is not None:
        res = broadcast(proto, u, bval, ql, audience=len(members), kind="sendpath", per_member=per_member)
        accepted = res.signed.payload if res.ok else None
    clock.step(3)

    output, _ = _deliver_to_r(proto, ql, accepted, r, "sendpath")
    clock.step()
    return PathRun(
        s, r, m, list(path), selections, accepted, output, tr,
        meter.messages - m0, clock.round - r0,
    )


def naive_send(proto: "Protocol", s: int, m: bytes, r: int, path: list[int] | None = None) -> PathRun:
    """All-to-all relay between consecutive quorums with majority filtering at every hop."""
    g = proto.graph
    adv = proto.adv
    meter = proto.meter
    clock = proto.clock
    if path is None:
        path = g.path_indices(s, r)
    m0 = meter.messages
    r0 = clock.round

    q1 = path[0]
    meter.add("naive", len(g.members_index(q1)))
    clock.step()
    held: bytes | None = m
    for i in range(len(path) - 1):
        src, dst = path[i], path[i + 1]
        src_size = len(g.members_index(src))
        dst_members = g.members_index(dst)
        bad = proto.bad_members(src)
        good_senders = src_size - len(bad) if held is not None else 0
        actions = [decide(adv, y, StepContext("relay", held, target_level=i + 2)) for y in bad]
        if any(isinstance(a, Equivocate) for a in actions):
            # per-receiver filtering; every good receiver must agree for the hop to stay clean
            results = Counter()
            for z in dst_members:
                votes: Counter = Counter()
                if held is not None:
                    votes[held] = good_senders
                for a in actions:
                    v = apply(a, held, z)
                    if v is not None:
                        votes[v] += 1
                results[majority(votes, src_size)] += 1
                meter.add("naive", sum(votes.values()))
            held = results.most_common(1)[0][0]
        else:
            votes = Counter()
            if held is not None:
                votes[held] = good_senders
            for a in actions:
                v = apply(a, held)
                if v is not None:
                    votes[v] += 1
            meter.add("naive", sum(votes.values()) * len(dst_members))
            held = majority(votes, src_size)
        clock.step()
    output, _ = _deliver_to_r(proto, path[-1], held, r, "naive")
    clock.step()
    return PathRun(
        s, r, m, list(path), [], held, output, Transcript(),
        meter.messages - m0, clock.round - r0,
    )
