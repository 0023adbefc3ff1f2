"""Marking and unmarking of nodes across their quorums."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .quorum_graph import QuorumGraph, QuorumId


@dataclass(frozen=True)
class ConflictPair:
    u: int  # scheduled sender
    v: int  # scheduled receiver
    location: tuple[QuorumId, QuorumId]
    evidence: tuple = ()


@dataclass
class UnmarkReport:
    quorums: list[QuorumId] = field(default_factory=list)
    nodes: list[int] = field(default_factory=list)
    messages: int = 0


@dataclass
class MarkReport:
    newly_marked: list[int] = field(default_factory=list)
    pairs_applied: int = 0
    quorums_notified: int = 0
    messages: int = 0
    unmark: UnmarkReport = field(default_factory=UnmarkReport)


class MarkTable:
    """One authoritative view of which nodes are marked.

    Every node's status is the same in all of its quorums, so a flat per-node
    flag plus a per-quorum count is enough. Sorted unmarked lists are cached
    per quorum and dropped whenever one of the quorum's members changes.
    """

    def __init__(self, graph: QuorumGraph):
        self.graph = graph
        self._marked = bytearray(graph.n)
        self._count = [0] * graph.num_quorums
        self._unmarked: dict[int, tuple[int, ...]] = {}
        self.total_marks = 0
        self.total_unmarks = 0
        sizes = [len(graph.members_index(qi)) for qi in range(graph.num_quorums)]
        self._size = sizes
        self._unmark_at = [(x + 1) // 2 for x in sizes]
        # members notified when quorum qi tells its neighbours something
        self._nbr_fanout = [
            sum(sizes[p] for p in graph.neighbors_index(qi)) for qi in range(graph.num_quorums)
        ]

    # ------------------------------------------------------------- queries
    def is_marked(self, x: int) -> bool:
        return bool(self._marked[x])

    def marked_count(self, q: QuorumId) -> int:
        return self._count[self.graph.index(q)]

    def unmarked_index(self, qi: int) -> tuple[int, ...]:
        u = self._unmarked.get(qi)
        if u is None:
            marked = self._marked
            u = tuple(x for x in self.graph.members_index(qi) if not marked[x])
            self._unmarked[qi] = u
        return u

    def unmarked_set(self, q: QuorumId) -> list[int]:
        """Unmarked members of ``q`` in ascending ID order."""
        return list(self.unmarked_index(self.graph.index(q)))

    def marks(self, q: QuorumId) -> frozenset[int]:
        marked = self._marked
        return frozenset(x for x in self.graph.members(q) if marked[x])

    def marked_nodes(self) -> list[int]:
        return [x for x, m in enumerate(self._marked) if m]

    def neighbour_fanout(self, qi: int) -> int:
        """Total membership of the quorums adjacent to quorum index ``qi``."""
        return self._nbr_fanout[qi]

    def unmark_threshold(self, qi: int) -> int:
        return self._unmark_at[qi]

    # ------------------------------------------------------------ mutation
    def _set(self, x: int, value: int) -> None:
        if self._marked[x] == value:
            return
        self._marked[x] = value
        delta = 1 if value else -1
        for qi in self.graph.quorums_of_index(x):
            self._count[qi] += delta
            self._unmarked.pop(qi, None)

    def _spread_cost(self, x: int, origin: int) -> int:
        """Origin quorum tells x's other quorums (all-to-all), then each of x's quorums tells its neighbours."""
        size = self._size
        cost = 0
        for qi in self.graph.quorums_of_index(x):
            if qi != origin:
                cost += size[origin] * size[qi]
            cost += size[qi] * self._nbr_fanout[qi]
        return cost

    def record_conflicts(
        self,
        pairs: Sequence[ConflictPair],
        exclude: Iterable[int] = (),
    ) -> MarkReport:
        """Mark both ends of every pair in all their quorums, then run the unmark rule.

        Nodes in ``exclude`` (the SEND's endpoints) are never marked; the
        other end of such a pair still is.
        """
        report = MarkReport()
        if not pairs:
            return report
        g = self.graph
        size = self._size
        skip = set(exclude)
        notified: set[int] = set()
        touched: set[int] = set()
        for pair in pairs:
            qu = g.index(pair.location[0])
            qv = g.index(pair.location[1])
            # v tells Q_v; Q_v forwards inside Q_v and to Q_u
            cost = size[qv] + size[qv] * (size[qv] + size[qu])
            for x, origin in ((pair.u, qu), (pair.v, qv)):
                if x in skip:
                    continue
                cost += self._spread_cost(x, origin)
                for qi in g.quorums_of_index(x):
                    notified.add(qi)
                    notified.update(g.neighbors_index(qi))
                if not self._marked[x]:
                    touched.update(g.quorums_of_index(x))
                    self._set(x, 1)
                    self.total_marks += 1
                    report.newly_marked.append(x)
            report.messages += cost
            report.pairs_applied += 1
        report.quorums_notified = len(notified)
        report.unmark = self.process_unmark_threshold(sorted(touched))
        report.messages += report.unmark.messages
        return report

    def process_unmark_threshold(self, candidates: Iterable[int] | None = None) -> UnmarkReport:
        """Unmark the marked members of every quorum that reached half marked.

        Unmarking only lowers counts, so one sweep that re-reads the current
        count of each quorum reaches the fixpoint. ``candidates`` restricts
        the sweep to quorum indices whose counts went up (in ascending order).
        """
        report = UnmarkReport()
        g = self.graph
        at = self._unmark_at
        for qi in range(g.num_quorums) if candidates is None else candidates:
            if self._count[qi] < at[qi]:
                continue
            victims = [x for x in g.members_index(qi) if self._marked[x]]
            report.quorums.append(g.quorum_id(qi))
            for x in victims:
                report.messages += self._spread_cost(x, qi)
                self._set(x, 0)
                self.total_unmarks += 1
                report.nodes.append(x)
        return report

    def check_invariants(self) -> None:
        over = np.nonzero(np.asarray(self._count) >= np.asarray(self._unmark_at))[0]
        if len(over):
            raise AssertionError(f"quorum {self.graph.quorum_id(int(over[0]))} is at least half marked")

    def snapshot(self, is_bad) -> tuple[int, int]:
        """(marked bad, marked good) under a ground-truth predicate."""
        bad = good = 0
        for x, m in enumerate(self._marked):
            if m:
                if is_bad(x):
                    bad += 1
                else:
                    good += 1
        return bad, good
