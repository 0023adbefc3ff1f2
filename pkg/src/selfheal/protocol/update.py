"""UPDATE: locate the corruption from everyone's reports and mark a conflicting pair."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from ..adversary import MISSING
from ..membership import ConflictPair, MarkReport
from .check import CheckResult, Detection

if TYPE_CHECKING:
    from .core import Protocol
    from .sendpath import PathRun


@dataclass
class UpdateResult:
    aborted: bool
    pairs: list[ConflictPair] = field(default_factory=list)
    marked: list[ConflictPair] = field(default_factory=list)
    report: MarkReport | None = None
    messages: int = 0
    rounds: int = 0


def find_conflicts(proto: "Protocol", run: "PathRun") -> list[ConflictPair]:
    """Every (u, v) in conflict, in transcript order.

    A point-to-point edge conflicts when either side's report is missing or
    the sender's reported input (and for SEND-PATH, its reported output)
    differs from what the receiver reports getting. A broadcast edge is
    signed, so only the sender's reported input is compared with what went
    out; the pair names the lowest-ID receiver.
    """
    g = proto.graph
    adv = proto.adv
    path = run.path
    levels = len(path)
    out = []
    for f in run.transcript.facts:
        u, v = f.sender, f.receiver
        said_in = adv.report(u, f.expected)
        if f.broadcast:
            conflict = said_in is MISSING or said_in != f.sent
        else:
            got = adv.report(v, f.sent)
            said_out = adv.report(u, f.sent) if f.phase == "sendpath" else said_in
            conflict = (
                said_in is MISSING
                or said_out is MISSING
                or got is MISSING
                or said_out != got
                or said_in != got
            )
        if conflict:
            where = (g.quorum_id(path[min(f.src_level, levels) - 1]), g.quorum_id(path[min(f.dst_level, levels) - 1]))
            out.append(ConflictPair(u, v, where, (f,)))
    return out


def evidence_holds(run: "PathRun", det: Detection) -> bool:
    """What the initiator's quorum checks before going on: the facts are real and addressed to it."""
    if not det.evidence:
        return False
    for f in det.evidence:
        if f not in run.transcript:
            return False
        if not f.broadcast and f.receiver != det.node:
            return False
    return True


def _involved(run: "PathRun", check: CheckResult | None, g) -> tuple[dict[int, set[int]], dict[int, set[int]]]:
    received: dict[int, set[int]] = {}
    sent: dict[int, set[int]] = {}
    first, last = run.path[0], run.path[-1]
    for qi, x in zip(run.path, run.selections):
        received.setdefault(qi, set()).add(x)
        sent.setdefault(qi, set()).add(x)
    for qi in (first, last):
        received.setdefault(qi, set()).update(g.members_index(qi))
        sent.setdefault(qi, set()).update(g.members_index(qi))
    if check is not None:
        for qi, sq in zip(run.path, check.subquorums):
            received.setdefault(qi, set()).update(sq)
    return received, sent


def update(proto: "Protocol", run: "PathRun", det: Detection, check: CheckResult | None = None) -> UpdateResult:
    g = proto.graph
    meter = proto.meter
    clock = proto.clock
    m0, r0 = meter.messages, clock.round
    qp = det.quorum
    qp_size = len(g.members_index(qp))

    # step 1: the initiator shows its quorum what it received
    meter.add("update", qp_size + len(proto.signing_members(qp)) + qp_size)
    clock.step(3)
    if not evidence_holds(run, det):
        return UpdateResult(True, messages=meter.messages - m0, rounds=clock.round - r0)

    # step 2: Q' tells every path quorum, all-to-all
    meter.add("update", qp_size * sum(len(g.members_index(qi)) for qi in run.path))
    clock.step()

    # steps 3-4: involved nodes broadcast what they received / sent to their quorum and its neighbours
    skip = {run.s, run.r}
    received, sent = _involved(run, check, g)
    for table in (received, sent):
        cost = 0
        for qi, nodes in table.items():
            size = len(g.members_index(qi))
            per = size + len(proto.signing_members(qi)) + size + proto.nbr_fanout(qi)
            cost += per * sum(1 for x in nodes if x not in skip and proto.speaks(x))
        meter.add("update", cost)
        clock.step(3)

    pairs = find_conflicts(proto, run)
    chosen = pairs[:1]
    report = proto.marks.record_conflicts(chosen, exclude=skip)
    meter.add("mark", report.messages - report.unmark.messages)
    meter.add("unmark", report.unmark.messages)
    clock.step(4)
    if report.unmark.quorums:
        clock.step(2)
    return UpdateResult(False, pairs, chosen, report, meter.messages - m0, clock.round - r0)
