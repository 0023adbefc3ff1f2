"""Static Byzantine corruption and pluggable bad-node behaviour."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Mapping

from .quorum_graph import QuorumGraph
from .sim.rng import rng_stream


class ConfigError(ValueError):
    pass


class SetupError(RuntimeError):
    pass


class _Missing:
    """Claim placeholder for a report that was never sent."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "MISSING"


MISSING = _Missing()


def corrupt_value(m: bytes | None) -> bytes:
    """Deterministic tampered payload, never equal to the input."""
    base = m if m is not None else b""
    return b"\xff" + hashlib.blake2b(base, digest_size=12, person=b"tamper").digest()


# ---------------------------------------------------------------- actions
class BadAction:
    __slots__ = ()


@dataclass(frozen=True)
class Faithful(BadAction):
    pass


@dataclass(frozen=True)
class Corrupt(BadAction):
    payload: object


@dataclass(frozen=True)
class Drop(BadAction):
    pass


@dataclass(frozen=True)
class Equivocate(BadAction):
    payloads: Mapping[int, object]  # recipient -> payload


FAITHFUL = Faithful()
DROP = Drop()


@dataclass(frozen=True)
class StepContext:
    """What a bad node sees when it must act.

    ``value`` is what an honest node would send, ``cover`` the adversary's
    prepared fake for CHECK probes, ``observed`` the good traffic of the
    current round that a rushing adversary has already seen.
    """

    phase: str  # relay | broadcast | forward | deliver | check1 | check2
    value: object = None
    cover: object = None
    target_level: int = 0
    round: int = 0
    recipients: tuple = ()
    observed: tuple = ()


# ------------------------------------------------------------- strategies
class Strategy:
    name = "base"
    signs = True  # contributes shares when asked to sign in BROADCAST
    speaks = True  # sends its own reports and relays at all
    plans_intervals = False

    def act(self, state: "AdversaryState", node: int, ctx: StepContext) -> BadAction:
        raise NotImplementedError

    def report(self, node: int, value: object) -> object:
        return value


class FaithfulControl(Strategy):
    name = "faithful"

    def act(self, state, node, ctx):
        return FAITHFUL


class Silent(Strategy):
    name = "silent"
    signs = False
    speaks = False

    def act(self, state, node, ctx):
        return DROP

    def report(self, node, value):
        return MISSING


class AlwaysCorrupt(Strategy):
    name = "always-corrupt"

    def act(self, state, node, ctx):
        if ctx.phase in ("check1", "check2"):
            return Corrupt(ctx.cover)
        if ctx.value is None:
            return DROP
        return Corrupt(corrupt_value(ctx.value))


class IntervalMaintainer(AlwaysCorrupt):
    """Corrupts SEND-PATH, then tries to keep a run of bad nodes hiding it.

    During CHECK2 the bad nodes agree on a switch level k each round: they
    relay the genuine probe to levels below k and the fake one from k on.
    The protocol dry-runs the candidates (the adversary is rushing and knows
    the round's selections) and stores the chosen k in the state. This is a
    heuristic, not a proven optimal attack.
    """

    name = "interval"
    plans_intervals = True

    def act(self, state, node, ctx):
        if ctx.phase == "check1":
            return Corrupt(ctx.cover) if state.tampered else FAITHFUL
        if ctx.phase == "check2":
            if not state.tampered or ctx.target_level < state.switch_level:
                return FAITHFUL
            return Corrupt(ctx.cover)
        return super().act(state, node, ctx)


STRATEGIES: dict[str, type[Strategy]] = {
    cls.name: cls for cls in (AlwaysCorrupt, Silent, IntervalMaintainer, FaithfulControl)
}


def make_strategy(name: str) -> Strategy:
    try:
        return STRATEGIES[name]()
    except KeyError:
        raise ConfigError(f"unknown strategy {name!r}; choose from {sorted(STRATEGIES)}") from None


# ------------------------------------------------------------------ state
@dataclass
class AdversaryState:
    bad_set: frozenset[int]
    strategy: Strategy
    n: int
    message_cap: int = 0  # per bad node per round, 0 = unlimited
    rushing: bool = True
    switch_level: int = 1 << 30
    tampered: bool = False  # Q_l accepted something other than the sender's message
    flags: bytearray = field(init=False, repr=False)

    def __post_init__(self):
        self.flags = bytearray(self.n)
        for x in self.bad_set:
            self.flags[x] = 1

    def controls(self, x: int) -> bool:
        return bool(self.flags[x])

    def new_send(self) -> None:
        self.tampered = False
        self.switch_level = 1 << 30

    def report(self, node: int, value: object) -> object:
        return self.strategy.report(node, value) if self.flags[node] else value


def decide(state: AdversaryState, node: int, ctx: StepContext) -> BadAction:
    """Action of bad ``node`` at a protocol step."""
    if not state.flags[node]:
        raise ValueError(f"node {node} is not controlled by the adversary")
    action = state.strategy.act(state, node, ctx)
    if isinstance(action, Equivocate) and state.message_cap and len(action.payloads) > state.message_cap:
        keep = sorted(action.payloads)[: state.message_cap]
        action = Equivocate({k: action.payloads[k] for k in keep})
    return action


def apply(action: BadAction, honest: object, recipient: int | None = None) -> object:
    """Value actually put on the wire for one recipient."""
    if isinstance(action, Faithful):
        return honest
    if isinstance(action, Corrupt):
        return action.payload
    if isinstance(action, Drop):
        return None
    if isinstance(action, Equivocate):
        return action.payloads.get(recipient)
    raise TypeError(f"unknown action {action!r}")


# --------------------------------------------------------------- sampling
def corrupt_nodes(
    n: int,
    t: int,
    seed: int,
    graph: QuorumGraph | None = None,
    max_retries: int = 20,
) -> frozenset[int]:
    """Uniform sample of ``t`` bad nodes without replacement.

    With ``graph`` given, samples that put more than floor(|Q|/8) bad nodes in
    some quorum are redrawn up to ``max_retries`` times.
    """
    if n < 1:
        raise ConfigError("n must be positive")
    if not 0 <= t <= n // 8:
        raise ConfigError(f"t={t} outside [0, n/8] for n={n}")
    rng = rng_stream(seed, "adversary")
    worst = None
    for _ in range(max_retries + 1):
        bad = frozenset(rng.sample(range(n), t))
        if graph is None:
            return bad
        over = graph.quorum_bound_violations(bad)
        if not over:
            return bad
        if worst is None or len(over) < worst[0]:
            worst = (len(over), int(graph.bad_counts(bad).max()))
    raise SetupError(
        f"no sample of {t} bad nodes kept every quorum at <= {graph.quorum_size // 8} bad "
        f"after {max_retries} retries (best: {worst[0]} quorums over, max {worst[1]} bad)"
    )


class GroundTruth:
    """Read-only oracle for metrics and assertions; protocol code never reads it."""

    def __init__(self, bad_set: frozenset[int]):
        self._bad = bad_set
        self._corrupted: dict[int, bool] = {}

    def is_bad(self, x: int) -> bool:
        return x in self._bad

    @property
    def t(self) -> int:
        return len(self._bad)

    def record(self, send_id: int, corrupted: bool) -> None:
        self._corrupted[send_id] = corrupted

    def was_corrupted(self, send_id: int) -> bool:
        return self._corrupted[send_id]
