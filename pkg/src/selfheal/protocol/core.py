"""One trial's protocol instance: shared state plus the SEND entry point."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Collection

from ..adversary import AdversaryState
from ..crypto_sim import EphemeralRegistry, ThresholdScheme, threshold_for
from ..membership import MarkTable
from ..quorum_graph import QuorumGraph, QuorumId
from ..sim.network import Meter, RoundClock
from ..sim.rng import rng_stream
from .broadcast import BroadcastResult, broadcast
from .check import CheckResult, check1, check2
from .params import ProtocolParams
from .sendpath import PathRun, naive_send, send_path
from .update import UpdateResult, update


class SendOutcome(enum.Enum):
    DELIVERED_CLEAN = "delivered-clean"
    CORRUPTED_UNDETECTED = "corrupted-undetected"
    DETECTED = "corruption-detected-and-updated"


@dataclass
class SendRecord:
    outcome: SendOutcome
    corrupted: bool
    check_ran: bool
    detected: bool
    messages: int
    rounds: int
    path_run: PathRun
    check: CheckResult | None
    update: UpdateResult | None


class Protocol:
    """Runs SENDs one at a time over a fixed graph, key set and adversary.

    Good nodes follow the algorithms; whenever a step belongs to a node the
    adversary controls, the adversary's ``decide`` picks what it does.
    """

    def __init__(
        self,
        graph: QuorumGraph,
        scheme: ThresholdScheme,
        adversary: AdversaryState,
        params: ProtocolParams,
        seed: int,
        h: int = 1,
        marks: MarkTable | None = None,
    ):
        self.graph = graph
        self.scheme = scheme
        self.adv = adversary
        self.params = params
        self.marks = marks if marks is not None else MarkTable(graph)
        self.ephemeral = EphemeralRegistry()
        self.meter = Meter()
        self.clock = RoundClock(h)
        self.sel_rng = rng_stream(seed, "selection")
        self.r_rng = rng_stream(seed, "R")
        self.coin = rng_stream(seed, "coin")
        self.eph_rng = rng_stream(seed, "ephemeral")
        self._bad: dict[int, tuple[int, ...]] = {}
        self._signers: dict[int, tuple[int, ...]] = {}
        self._threshold = threshold_for(graph.quorum_size)

    # ---------------------------------------------------------- node roles
    def bad_members(self, qi: int) -> tuple[int, ...]:
        b = self._bad.get(qi)
        if b is None:
            flags = self.adv.flags
            b = tuple(x for x in self.graph.members_index(qi) if flags[x])
            self._bad[qi] = b
        return b

    def signing_members(self, qi: int) -> tuple[int, ...]:
        s = self._signers.get(qi)
        if s is None:
            members = self.graph.members_index(qi)
            if self.adv.strategy.signs:
                s = members
            else:
                flags = self.adv.flags
                s = tuple(x for x in members if not flags[x])
            self._signers[qi] = s
        return s

    def speaks(self, x: int) -> bool:
        return not self.adv.flags[x] or self.adv.strategy.speaks

    def transmitting_count(self, qi: int) -> int:
        size = len(self.graph.members_index(qi))
        return size if self.adv.strategy.speaks else size - len(self.bad_members(qi))

    def can_broadcast(self, qi: int) -> bool:
        return len(self.signing_members(qi)) >= self._threshold

    def nbr_fanout(self, qi: int) -> int:
        return self.marks.neighbour_fanout(qi)

    def witness(self, qi: int, s: int, r: int) -> int:
        """Lowest-ID member of quorum ``qi`` other than the SEND's endpoints."""
        for x in self.graph.members_index(qi):
            if x != s and x != r:
                return x
        raise ValueError("quorum has no member besides the endpoints")

    def good_member(self, qi: int, s: int, r: int) -> int | None:
        flags = self.adv.flags
        for x in self.graph.members_index(qi):
            if not flags[x] and x != s and x != r:
                return x
        return None

    # ---------------------------------------------------------- operations
    def broadcast(self, x: int, m: bytes, q: QuorumId, audience: Collection[int]) -> BroadcastResult:
        qi = self.graph.index(q)
        if x not in self.graph.members_index(qi):
            raise ValueError(f"node {x} is not in {q}")
        return broadcast(self, x, m, qi, len(audience))

    def send_path(self, s: int, m: bytes, r: int) -> PathRun:
        self.adv.new_send()
        return send_path(self, s, m, r)

    def naive_send(self, s: int, m: bytes, r: int) -> PathRun:
        self.adv.new_send()
        return naive_send(self, s, m, r)

    def check(self, run: PathRun) -> CheckResult:
        return check1(self, run) if self.params.check_variant == 1 else check2(self, run)

    def send(self, s: int, m: bytes, r: int, force_check: bool = False) -> SendRecord:
        m0, r0 = self.meter.messages, self.clock.round
        run = self.send_path(s, m, r)
        chk = upd = None
        if force_check or self.coin.random() < self.params.p_call:
            chk = self.check(run)
            if chk.detected:
                upd = update(self, run, chk.detection, chk)
        detected = upd is not None and not upd.aborted
        corrupted = run.corrupted
        if detected:
            outcome = SendOutcome.DETECTED
        elif corrupted:
            outcome = SendOutcome.CORRUPTED_UNDETECTED
        else:
            outcome = SendOutcome.DELIVERED_CLEAN
        return SendRecord(
            outcome, corrupted, chk is not None, detected,
            self.meter.messages - m0, self.clock.round - r0, run, chk, upd,
        )
