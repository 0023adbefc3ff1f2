"""CHECK1 (fixed random subquorums) and CHECK2 (growing subquorums over 4 log* n rounds)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from ..adversary import StepContext, apply, corrupt_value, decide
from .broadcast import broadcast
from .messages import EdgeFact, Probe, RandomIndexArray

if TYPE_CHECKING:
    from .core import Protocol
    from .sendpath import PathRun


@dataclass(frozen=True)
class Detection:
    node: int
    quorum: int  # index of the quorum the detecting node acted in
    level: int
    round: int
    reason: str
    evidence: tuple[EdgeFact, ...]


@dataclass
class CheckResult:
    variant: int
    detection: Detection | None
    rounds_run: int
    messages: int
    rounds: int
    subquorums: list[list[int]] = field(default_factory=list)
    bars: list[tuple[int, int]] = field(default_factory=list)

    @property
    def detected(self) -> bool:
        return self.detection is not None


def _cover_payload(run: "PathRun") -> bytes:
    # the fake probe repeats whatever Q_l accepted, so Q_l sees nothing odd
    return run.accepted if run.accepted is not None else corrupt_value(run.m)


def _q_l_verdict(run: "PathRun", got: list[Probe], prior_key: bytes | None = None) -> str | None:
    """Reason the good members of Q_l call UPDATE, or None."""
    if prior_key is not None and (not got or any(p.k_p != prior_key for p in got)):
        return "missing" if not got else "key-mismatch"
    if len(set(got)) > 1:
        return "inconsistent"
    if any(p.payload != run.accepted for p in got):
        return "mismatch"
    return None


# ------------------------------------------------------------------ CHECK1
def check1(proto: "Protocol", run: "PathRun") -> CheckResult:
    g = proto.graph
    adv = proto.adv
    flags = adv.flags
    meter = proto.meter
    clock = proto.clock
    tr = run.transcript
    path = run.path
    levels = len(path)
    m0, r0 = meter.messages, clock.round

    seed = proto.r_rng.getrandbits(64)
    R = RandomIndexArray(seed, levels, g.quorum_size, proto.params.subquorum)
    genuine = Probe(run.m, run.r, seed)
    adv.tampered = run.accepted != run.m
    cover = Probe(_cover_payload(run), run.r, seed)

    q1 = path[0]
    broadcast(proto, run.s, genuine.encode(), q1, audience=len(g.members_index(q1)), kind="check1")
    clock.step(3)

    subq: list[list[int]] = []
    for j, qi in enumerate(path, 1):
        u = proto.marks.unmarked_index(qi)
        subq.append(sorted({u[k - 1] for k in R[j, len(u)]}))

    def finish(det: Detection | None) -> CheckResult:
        return CheckResult(1, det, 1, meter.messages - m0, clock.round - r0, subq)

    # Q_1 hands the signed probe to S_1
    meter.add("check1", proto.transmitting_count(q1) * len(subq[0]))
    clock.step()
    held: dict[int, Probe | None] = {y: genuine for y in subq[0]}

    for j in range(levels - 1):
        senders, receivers = subq[j], subq[j + 1]
        nxt: dict[int, Probe | None] = {}
        sent_count = 0
        flagged: list[tuple[int, str, list[EdgeFact]]] = []
        for y in receivers:
            vals = []
            facts = []
            for u in senders:
                hv = held[u]
                if flags[u]:
                    ctx = StepContext("check1", hv, cover, target_level=j + 2, recipients=(y,))
                    sv = apply(decide(adv, u, ctx), hv, y)
                else:
                    sv = hv
                facts.append(tr.add("check1", 0, j + 1, j + 2, u, y, hv, sv))
                if sv is not None:
                    sent_count += 1
                vals.append(sv)
            distinct = {v for v in vals if v is not None}
            if flags[y]:
                nxt[y] = genuine if genuine in distinct else (next(iter(distinct)) if distinct else None)
                continue
            if len(distinct) > 1:
                flagged.append((y, "inconsistent", facts))
            elif distinct and None in vals:
                flagged.append((y, "missing", facts))
            nxt[y] = next(iter(distinct)) if len(distinct) == 1 else None
        meter.add("check1", sent_count)
        clock.step()
        if flagged:
            y, why, facts = flagged[0]
            return finish(Detection(y, path[j + 1], j + 2, 1, why, tuple(facts)))
        held = nxt

    ql = path[-1]
    qsize = len(g.members_index(ql))
    witness = proto.witness(ql, run.s, run.r)
    got: list[Probe] = []
    facts = []
    for u in subq[-1]:
        hv = held[u]
        if flags[u]:
            sv = apply(decide(adv, u, StepContext("check1", hv, cover, target_level=levels + 1)), hv)
        else:
            sv = hv
        facts.append(tr.add("check1", 0, levels, levels + 1, u, witness, hv, sv, broadcast=True))
        if sv is not None and broadcast(proto, u, sv.encode(), ql, audience=qsize, kind="check1").ok:
            got.append(sv)
    clock.step(3)
    why = _q_l_verdict(run, got)
    if why is not None:
        detector = proto.good_member(ql, run.s, run.r)
        if detector is not None:
            return finish(Detection(detector, ql, levels + 1, 1, why, tuple(facts)))
    return finish(None)


# ------------------------------------------------------------------ CHECK2
@dataclass
class _RoundPlan:
    detection: tuple | None  # (node, quorum, level, reason, edge positions)
    edges: list[tuple]
    p2p: int
    broadcasts: list[tuple[int, Probe]]
    key_updates: dict[int, bytes]
    q_key: bytes | None


class _Check2:
    def __init__(self, proto: "Protocol", run: "PathRun"):
        self.proto = proto
        self.run = run
        self.levels = len(run.path)
        self.subq: list[list[int]] = [[] for _ in range(self.levels)]
        self.keys: dict[int, bytes] = {}
        self.q_key: bytes | None = None
        self._verified: dict[tuple[bytes, object], bool] = {}

    def verify(self, k_p: bytes, probe: Probe) -> bool:
        key = (k_p, probe.blob)
        ok = self._verified.get(key)
        if ok is None:
            ok = probe.blob is not None and self.proto.ephemeral.verify_ephemeral(k_p, probe.blob)
            self._verified[key] = ok
        return ok

    def plan(self, rnd: int, xs: list[int], genuine: Probe, fake: Probe) -> _RoundPlan:
        """Simulate one round without side effects."""
        proto = self.proto
        adv = proto.adv
        flags = adv.flags
        run = self.run
        levels = self.levels
        subq = self.subq
        keys = self.keys
        kd: dict[int, bytes] = {}
        edges: list[tuple] = []
        p2p = 0

        def key_of(y):
            return kd.get(y, keys.get(y))

        def receive(y, vals, from_many):
            """Return (reason or None, value kept) for good node y."""
            k = key_of(y)
            if k is not None:
                for v in vals:
                    if v is None:
                        return "missing", None
                    if not self.verify(k, v):
                        return "key-mismatch", None
                return None, vals[0] if vals else None
            distinct = {v for v in vals if v is not None}
            for v in distinct:
                if not self.verify(v.k_p, v):
                    return "bad-signature", None
            if len(distinct) > 1:
                return "inconsistent", None
            if distinct and None in vals:
                return "missing", None
            return None, (next(iter(distinct)) if distinct else None)

        held: dict[int, Probe | None] = {}
        for y in subq[0]:
            held[y] = genuine
            if not flags[y] and key_of(y) is None:
                kd[y] = genuine.k_p

        for j in range(levels - 1):
            x = xs[j + 1]
            vals = []
            start = len(edges)
            for u in subq[j]:
                hv = held.get(u)
                if flags[u]:
                    ctx = StepContext("check2", hv, fake, target_level=j + 2, round=rnd, recipients=(x,))
                    sv = apply(decide(adv, u, ctx), hv, x)
                else:
                    sv = hv
                edges.append((j + 1, j + 2, u, x, hv, sv, False))
                if sv is not None:
                    p2p += 1
                vals.append(sv)
            if flags[x]:
                xv = genuine if genuine in vals else next((v for v in vals if v is not None), None)
            else:
                why, xv = receive(x, vals, True)
                if why is not None:
                    return _RoundPlan((x, run.path[j + 1], j + 2, why, range(start, len(edges))),
                                      edges, p2p, [], kd, self.q_key)
                if xv is not None and key_of(x) is None:
                    kd[x] = xv.k_p
            nh: dict[int, Probe | None] = {x: xv}
            for y in subq[j + 1]:
                if y == x:
                    continue
                if flags[x]:
                    ctx = StepContext("check2", xv, fake, target_level=j + 2, round=rnd, recipients=(y,))
                    sv = apply(decide(adv, x, ctx), xv, y)
                else:
                    sv = xv
                edges.append((j + 2, j + 2, x, y, xv, sv, False))
                if sv is not None:
                    p2p += 1
                nh[y] = sv
                if not flags[y]:
                    why, kept = receive(y, [sv], False)
                    if why is not None:
                        return _RoundPlan((y, run.path[j + 1], j + 2, why, range(len(edges) - 1, len(edges))),
                                          edges, p2p, [], kd, self.q_key)
                    if kept is not None and key_of(y) is None:
                        kd[y] = kept.k_p
            held = nh

        ql = run.path[-1]
        witness = proto.witness(ql, run.s, run.r)
        got: list[Probe] = []
        bcasts = []
        start = len(edges)
        can_sign = proto.can_broadcast(ql)
        for u in subq[-1]:
            hv = held.get(u)
            if flags[u]:
                sv = apply(decide(adv, u, StepContext("check2", hv, fake, target_level=levels + 1, round=rnd)), hv)
            else:
                sv = hv
            edges.append((levels, levels + 1, u, witness, hv, sv, True))
            if sv is not None:
                bcasts.append((u, sv))
                if can_sign:
                    got.append(sv)
        why = _q_l_verdict(run, got, self.q_key)
        if why is None and got and not all(self.verify(p.k_p, p) for p in got):
            why = "bad-signature"
        q_key = self.q_key if self.q_key is not None or not got else got[0].k_p
        det = None
        if why is not None:
            detector = proto.good_member(ql, run.s, run.r)
            if detector is not None:
                det = (detector, ql, levels + 1, why, range(start, len(edges)))
        return _RoundPlan(det, edges, p2p, bcasts, kd, q_key)

    def bars(self, genuine_key: bytes, fake_key: bytes) -> tuple[int, int]:
        """(rightmost level with a good genuine-key holder, leftmost level with a good fake-key holder)."""
        flags = self.proto.adv.flags
        left, right = 0, self.levels + 1
        for j, members in enumerate(self.subq, 1):
            for y in members:
                if flags[y]:
                    continue
                k = self.keys.get(y)
                if k == genuine_key:
                    left = max(left, j)
                elif k == fake_key:
                    right = min(right, j)
        return left, right


def check2(proto: "Protocol", run: "PathRun") -> CheckResult:
    g = proto.graph
    adv = proto.adv
    meter = proto.meter
    clock = proto.clock
    tr = run.transcript
    path = run.path
    levels = len(path)
    m0, r0 = meter.messages, clock.round
    adv.tampered = run.accepted != run.m

    reg = proto.ephemeral
    own = reg.ephemeral_keypair(run.s, proto.eph_rng.getrandbits(64))
    forger = min(adv.bad_set) if adv.bad_set else 0
    theirs = reg.ephemeral_keypair(forger, proto.eph_rng.getrandbits(64))
    cover = _cover_payload(run)

    st = _Check2(proto, run)
    q1 = path[0]
    q1_size = len(g.members_index(q1))
    ql_size = len(g.members_index(path[-1]))
    bars: list[tuple[int, int]] = []
    detection = None
    rounds_run = 0
    for rnd in range(1, proto.params.check2_rounds + 1):
        rounds_run = rnd
        seed = proto.r_rng.getrandbits(64)
        R = RandomIndexArray(seed, levels, g.quorum_size, 1)
        xs = []
        for j, qi in enumerate(path, 1):
            u = proto.marks.unmarked_index(qi)
            x = u[R[j, len(u)][0] - 1]
            xs.append(x)
            if x not in st.subq[j - 1]:
                st.subq[j - 1].append(x)
        body = Probe(run.m, run.r, seed, own.k_p)
        genuine = Probe(run.m, run.r, seed, own.k_p, reg.sign(own.k_s, body.encode()))
        fbody = Probe(cover, run.r, seed, theirs.k_p)
        fake = Probe(cover, run.r, seed, theirs.k_p, reg.sign(theirs.k_s, fbody.encode()))

        if adv.strategy.plans_intervals and adv.tampered:
            adv.switch_level = _choose_switch(st, rnd, xs, genuine, fake)
        plan = st.plan(rnd, xs, genuine, fake)

        # commit the round
        broadcast(proto, run.s, genuine.encode(), q1, audience=q1_size, kind="check2")
        meter.add("check2", proto.transmitting_count(q1) * len(st.subq[0]) + plan.p2p)
        facts = [tr.add("check2", rnd, *e) for e in plan.edges]
        for u, probe in plan.broadcasts:
            broadcast(proto, u, probe.encode(), path[-1], audience=ql_size, kind="check2")
        st.keys.update(plan.key_updates)
        st.q_key = plan.q_key
        clock.step(2 * levels + 5)

        lb, rb = st.bars(own.k_p, theirs.k_p)
        if bars:
            assert lb >= bars[-1][0], "left bar moved left"
            assert rb <= bars[-1][1], "right bar moved right"
        bars.append((lb, rb))
        if plan.detection is not None:
            node, qi, level, why, span = plan.detection
            detection = Detection(node, qi, level, rnd, why, tuple(facts[i] for i in span))
            break
    return CheckResult(2, detection, rounds_run, meter.messages - m0, clock.round - r0, st.subq, bars)


def _choose_switch(st: _Check2, rnd: int, xs: list[int], genuine: Probe, fake: Probe) -> int:
    """Switch level for this round that avoids detection and leaves the widest gap."""
    adv = st.proto.adv
    levels = st.levels
    best_k, best_gap = levels + 1, None
    for k in range(2, levels + 3):
        adv.switch_level = k
        plan = st.plan(rnd, xs, genuine, fake)
        if plan.detection is not None:
            continue
        saved = st.keys
        st.keys = {**saved, **plan.key_updates}
        left, right = st.bars(genuine.k_p, fake.k_p)
        st.keys = saved
        gap = right - left
        if best_gap is None or gap >= best_gap:
            best_k, best_gap = k, gap
    return best_k
