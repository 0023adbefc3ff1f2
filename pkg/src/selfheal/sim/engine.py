"""Trial runner: builds one world from a config and drives a sequence of SENDs."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field, fields
from typing import Callable

import numpy as np

from ..adversary import AdversaryState, ConfigError, GroundTruth, corrupt_nodes, make_strategy
from ..crypto_sim import dkg_setup
from ..protocol import Protocol, ProtocolParams
from ..quorum_graph import build_butterfly
from .rng import derive_seed, rng_stream

PLACEMENTS = ("uniform", "balanced")
CSV_COLUMNS = (
    "index", "messages", "rounds", "corrupted", "detected",
    "updates_so_far", "marked_bad", "marked_good",
)
OUTCOME_CODES = {"delivered-clean": 0, "corrupted-undetected": 1, "corruption-detected-and-updated": 2}


@dataclass(frozen=True)
class SimConfig:
    n: int
    f: float = 0.0
    check_variant: int = 1
    num_sends: int = 1000
    seed: int = 0
    strategy: str = "always-corrupt"
    force_check: bool = False
    h: int = 1
    placement: str = "balanced"
    bad_endpoints: bool = False
    stop_when_all_marked: bool = False
    baseline: bool = False

    def __post_init__(self):
        if self.n < 16:
            raise ConfigError(f"n must be at least 16, got {self.n}")
        if not 0 <= self.f <= 0.125:
            raise ConfigError(f"f must lie in [0, 1/8], got {self.f}")
        if self.num_sends < 1:
            raise ConfigError("num_sends must be at least 1")
        if self.check_variant not in (1, 2):
            raise ConfigError(f"check variant must be 1 or 2, got {self.check_variant}")
        if self.placement not in PLACEMENTS:
            raise ConfigError(f"placement must be one of {PLACEMENTS}, got {self.placement!r}")
        if self.h < 1:
            raise ConfigError("h must be at least 1")
        if not 0 <= self.seed < 1 << 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        make_strategy(self.strategy)

    @property
    def t(self) -> int:
        return int(self.f * self.n)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)


@dataclass
class Metrics:
    config: SimConfig
    t: int
    levels: int
    quorum_size: int
    bound_violations: int
    messages: np.ndarray
    rounds: np.ndarray
    path_rounds: np.ndarray
    outcome: np.ndarray
    corrupted: np.ndarray
    detected: np.ndarray
    updates_so_far: np.ndarray
    marked_bad: np.ndarray
    marked_good: np.ndarray
    total_marks: int = 0
    total_unmarks: int = 0
    potential_trace: list[tuple[int, int, int]] = field(default_factory=list)
    pairs_total: int = 0
    pairs_sound: int = 0
    empty_updates: int = 0
    aborted_updates: int = 0
    first_all_marked: tuple[int, int] | None = None  # (send index, UPDATE count)
    messages_by_kind: dict[str, int] = field(default_factory=dict)

    @property
    def sends(self) -> int:
        return len(self.messages)

    @property
    def total_messages(self) -> int:
        return int(self.messages.sum())

    @property
    def total_corruptions(self) -> int:
        return int(self.corrupted.sum())

    @property
    def update_count(self) -> int:
        return int(self.updates_so_far[-1]) if self.sends else 0

    @property
    def potential_deltas(self) -> np.ndarray:
        """Change of 3b - g across each UPDATE."""
        return np.array([after - before for _, before, after in self.potential_trace], dtype=np.int64)

    def mean_messages(self, start: int = 0) -> float:
        return float(self.messages[start:].mean())

    def final_quartile_mean(self) -> float:
        return self.mean_messages(self.sends - self.sends // 4 if self.sends >= 4 else 0)

    def check_folds(self) -> None:
        """Cumulative counters must equal the fold of the per-SEND rows."""
        steps = np.diff(self.updates_so_far, prepend=0)
        if self.sends and not ((steps == 0) | (steps == 1)).all():
            raise AssertionError("updates_so_far is not a running count")
        clean = (self.corrupted == 0) & (self.detected == 0)
        if not np.array_equal(self.outcome == OUTCOME_CODES["delivered-clean"], clean):
            raise AssertionError("outcome codes disagree with the corrupted/detected flags")
        if self.messages_by_kind and sum(self.messages_by_kind.values()) != self.total_messages:
            raise AssertionError("metered messages by kind do not add up to the per-SEND total")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        cols = (
            self.messages, self.rounds, self.corrupted, self.detected,
            self.updates_so_far, self.marked_bad, self.marked_good,
        )
        for i, row in enumerate(zip(*(c.tolist() for c in cols))):
            w.writerow((i, *row))
        return buf.getvalue()

    def summary(self) -> dict:
        deltas = self.potential_deltas
        return {
            "config": self.config.to_dict(),
            "t": self.t,
            "levels": self.levels,
            "quorum_size": self.quorum_size,
            "quorums_over_bad_bound": self.bound_violations,
            "sends": self.sends,
            "total_messages": self.total_messages,
            "mean_messages_per_send": round(self.mean_messages(), 6),
            "final_quartile_mean_messages": round(self.final_quartile_mean(), 6),
            "total_rounds": int(self.rounds.sum()),
            "total_path_rounds": int(self.path_rounds.sum()),
            "max_rounds_per_send": int(self.rounds.max()),
            "total_corruptions": self.total_corruptions,
            "updates": self.update_count,
            "aborted_updates": self.aborted_updates,
            "empty_updates": self.empty_updates,
            "conflict_pairs": self.pairs_total,
            "conflict_pairs_with_bad_node": self.pairs_sound,
            "total_marks": self.total_marks,
            "total_unmarks": self.total_unmarks,
            "final_marked_bad": int(self.marked_bad[-1]),
            "final_marked_good": int(self.marked_good[-1]),
            "min_potential_delta": int(deltas.min()) if len(deltas) else None,
            "first_all_marked": list(self.first_all_marked) if self.first_all_marked else None,
            "messages_by_kind": dict(sorted(self.messages_by_kind.items())),
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"


@dataclass
class World:
    graph: object
    truth: GroundTruth
    protocol: Protocol
    bound_violations: int


def build_world(config: SimConfig) -> World:
    """Graph, keys and adversary for one trial, each from its own seed substream."""
    n, t = config.n, config.t
    graph_seed = derive_seed(config.seed, "assignment")
    if config.placement == "balanced":
        bad = corrupt_nodes(n, t, config.seed)
        graph = build_butterfly(n, graph_seed, bad=sorted(bad))
    else:
        graph = build_butterfly(n, graph_seed)
        bad = corrupt_nodes(n, t, config.seed, graph=graph)
    violations = len(graph.quorum_bound_violations(bad)) if t else 0
    scheme = dkg_setup(graph, derive_seed(config.seed, "dkg"))
    adv = AdversaryState(bad, make_strategy(config.strategy), n)
    params = ProtocolParams.for_graph(graph, config.check_variant, config.force_check)
    proto = Protocol(graph, scheme, adv, params, seed=config.seed, h=config.h)
    return World(graph, GroundTruth(bad), proto, violations)


def _endpoint_pool(config: SimConfig, truth: GroundTruth) -> list[int]:
    if config.bad_endpoints:
        return list(range(config.n))
    return [x for x in range(config.n) if not truth.is_bad(x)]


def run_trial(config: SimConfig, progress: Callable[[int], None] | None = None) -> Metrics:
    """Serialized SENDs between uniformly random endpoint pairs; see ``SimConfig``."""
    if config.baseline:
        return run_baseline_trial(config, progress)
    world = build_world(config)
    proto, truth = world.protocol, world.truth
    marks = proto.marks
    flags = proto.adv.flags
    pool = _endpoint_pool(config, truth)
    pick = rng_stream(config.seed, "pairs").sample

    N = config.num_sends
    msgs = np.zeros(N, dtype=np.int64)
    rounds = np.zeros(N, dtype=np.int64)
    prounds = np.zeros(N, dtype=np.int64)
    outcome = np.zeros(N, dtype=np.int8)
    corrupted = np.zeros(N, dtype=np.int8)
    detected = np.zeros(N, dtype=np.int8)
    ups = np.zeros(N, dtype=np.int64)
    mbad = np.zeros(N, dtype=np.int64)
    mgood = np.zeros(N, dtype=np.int64)

    trace: list[tuple[int, int, int]] = []
    pairs_total = pairs_sound = empty = aborted = 0
    n_updates = n_bad = n_good = 0
    first_all = None
    t = truth.t
    done = N
    for i in range(N):
        s, r = pick(pool, 2)
        rec = proto.send(s, b"m%d" % i, r, force_check=config.force_check)
        truth.record(i, rec.corrupted)
        upd = rec.update
        if upd is not None:
            n_updates += 1
            if upd.aborted:
                aborted += 1
            else:
                before = 3 * n_bad - n_good
                pairs_total += len(upd.pairs)
                pairs_sound += sum(1 for p in upd.pairs if flags[p.u] or flags[p.v])
                if not upd.pairs and rec.corrupted:
                    empty += 1
                rep = upd.report
                for x in rep.newly_marked:
                    if flags[x]:
                        n_bad += 1
                    else:
                        n_good += 1
                for x in rep.unmark.nodes:
                    if flags[x]:
                        n_bad -= 1
                    else:
                        n_good -= 1
                trace.append((i, before, 3 * n_bad - n_good))
                marks.check_invariants()
        msgs[i] = rec.messages
        rounds[i] = rec.rounds
        prounds[i] = rec.path_run.rounds
        outcome[i] = OUTCOME_CODES[rec.outcome.value]
        corrupted[i] = rec.corrupted
        detected[i] = rec.detected
        ups[i] = n_updates
        mbad[i] = n_bad
        mgood[i] = n_good
        if first_all is None and t and n_bad == t:
            first_all = (i, n_updates)
            if config.stop_when_all_marked:
                done = i + 1
                break
        if progress is not None:
            progress(i)

    cut = slice(0, done)
    m = Metrics(
        config, t, world.graph.levels, world.graph.quorum_size, world.bound_violations,
        msgs[cut], rounds[cut], prounds[cut], outcome[cut], corrupted[cut], detected[cut],
        ups[cut], mbad[cut], mgood[cut],
        total_marks=marks.total_marks, total_unmarks=marks.total_unmarks,
        potential_trace=trace, pairs_total=pairs_total, pairs_sound=pairs_sound,
        empty_updates=empty, aborted_updates=aborted, first_all_marked=first_all,
        messages_by_kind=dict(proto.meter.by_kind),
    )
    if marks.snapshot(truth.is_bad) != (n_bad, n_good):
        raise AssertionError("incremental mark counts drifted from the mark table")
    m.check_folds()
    return m


def run_baseline_trial(config: SimConfig, progress: Callable[[int], None] | None = None) -> Metrics:
    """Same world and endpoint sequence, but every SEND uses all-to-all relaying."""
    world = build_world(config)
    proto, truth = world.protocol, world.truth
    pool = _endpoint_pool(config, truth)
    pick = rng_stream(config.seed, "pairs").sample
    N = config.num_sends
    msgs = np.zeros(N, dtype=np.int64)
    rounds = np.zeros(N, dtype=np.int64)
    corrupted = np.zeros(N, dtype=np.int8)
    for i in range(N):
        s, r = pick(pool, 2)
        run = proto.naive_send(s, b"m%d" % i, r)
        truth.record(i, run.corrupted)
        msgs[i] = run.messages
        rounds[i] = run.rounds
        corrupted[i] = run.corrupted
        if progress is not None:
            progress(i)
    zeros = np.zeros(N, dtype=np.int64)
    m = Metrics(
        config, truth.t, world.graph.levels, world.graph.quorum_size, world.bound_violations,
        msgs, rounds, rounds.copy(), corrupted.astype(np.int8), corrupted, zeros.astype(np.int8),
        zeros, zeros, zeros, messages_by_kind=dict(proto.meter.by_kind),
    )
    m.check_folds()
    return m
