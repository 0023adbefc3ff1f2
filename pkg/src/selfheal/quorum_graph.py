"""Static butterfly quorum graph: membership, adjacency and canonical paths."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

#: default bound on memberships per node, as a multiple of log2(n)
MEMBERSHIP_FACTOR = 6.0


class GraphError(ValueError):
    """Raised when a quorum graph cannot be constructed."""


class UnknownNodeError(KeyError):
    pass


class UnknownQuorumError(KeyError):
    pass


class QuorumId(NamedTuple):
    level: int  # 1-based butterfly level
    column: int


@dataclass(frozen=True)
class QuorumPath:
    quorums: tuple[QuorumId, ...]

    @property
    def length(self) -> int:
        return len(self.quorums)

    def __iter__(self):
        return iter(self.quorums)

    def __getitem__(self, i):
        return self.quorums[i]

    def __len__(self) -> int:
        return len(self.quorums)


def quorum_size_for(n: int) -> int:
    return math.floor(4 * math.log2(n))


def levels_for(n: int) -> int:
    return math.floor(math.log2(n)) - 2


def stable_hash(node: int) -> int:
    """64-bit hash of a node ID that does not depend on the interpreter's hash seed."""
    h = hashlib.blake2b(int(node).to_bytes(8, "little"), digest_size=8, person=b"qpath")
    return int.from_bytes(h.digest(), "little")


class QuorumGraph:
    """Immutable quorum graph over nodes ``0 .. n-1``.

    Quorums are addressed externally by :class:`QuorumId`; internally every
    quorum has a dense integer index ``(level - 1) * columns + column`` and the
    ``*_index`` helpers work on those for the simulator's hot paths.
    """

    def __init__(self, n: int, levels: int, members: np.ndarray):
        if members.ndim != 2:
            raise GraphError("members must be a (quorums, quorum_size) array")
        self.n = int(n)
        self.levels = int(levels)
        self.columns = 2 ** (self.levels - 1)
        if members.shape[0] != self.levels * self.columns:
            raise GraphError(
                f"expected {self.levels * self.columns} quorums, got {members.shape[0]}"
            )
        self.quorum_size = int(members.shape[1])
        self.member_array = np.sort(members, axis=1)
        self.member_array.setflags(write=False)
        self._members = [tuple(int(x) for x in row) for row in self.member_array]

        node_quorums: list[list[int]] = [[] for _ in range(self.n)]
        for qi, row in enumerate(self._members):
            for x in row:
                node_quorums[x].append(qi)
        self._node_quorums = [tuple(qs) for qs in node_quorums]
        self._neighbors = [self._butterfly_neighbors(qi) for qi in range(self.num_quorums)]
        self._column_hash = [stable_hash(x) % self.columns for x in range(self.n)]

    # ------------------------------------------------------------------ indices
    @property
    def num_quorums(self) -> int:
        return self.levels * self.columns

    def index(self, q: QuorumId) -> int:
        level, column = q
        if not (1 <= level <= self.levels and 0 <= column < self.columns):
            raise UnknownQuorumError(q)
        return (level - 1) * self.columns + column

    def quorum_id(self, qi: int) -> QuorumId:
        if not 0 <= qi < self.num_quorums:
            raise UnknownQuorumError(qi)
        level, column = divmod(qi, self.columns)
        return QuorumId(level + 1, column)

    def _butterfly_neighbors(self, qi: int) -> tuple[int, ...]:
        level0, c = divmod(qi, self.columns)
        out = []
        if level0 + 1 < self.levels:
            bit = 1 << level0
            out.append((level0 + 1) * self.columns + c)
            out.append((level0 + 1) * self.columns + (c ^ bit))
        if level0 > 0:
            bit = 1 << (level0 - 1)
            out.append((level0 - 1) * self.columns + c)
            out.append((level0 - 1) * self.columns + (c ^ bit))
        return tuple(sorted(set(out)))

    def _check_node(self, x: int) -> None:
        if not 0 <= x < self.n:
            raise UnknownNodeError(x)

    # ----------------------------------------------------------- index helpers
    def members_index(self, qi: int) -> tuple[int, ...]:
        return self._members[qi]

    def quorums_of_index(self, x: int) -> tuple[int, ...]:
        return self._node_quorums[x]

    def neighbors_index(self, qi: int) -> tuple[int, ...]:
        return self._neighbors[qi]

    def path_indices(self, s: int, r: int) -> list[int]:
        cols = self.columns
        c = self._column_hash[s]
        target = self._column_hash[r]
        out = [c]
        for i in range(self.levels - 1):
            bit = 1 << i
            c = (c & ~bit) | (target & bit)
            out.append((i + 1) * cols + c)
        return out

    # ---------------------------------------------------------------- public API
    def members(self, q: QuorumId) -> tuple[int, ...]:
        return self._members[self.index(q)]

    def neighbors(self, q: QuorumId) -> frozenset[QuorumId]:
        return frozenset(self.quorum_id(p) for p in self._neighbors[self.index(q)])

    def quorums_of(self, x: int) -> frozenset[QuorumId]:
        self._check_node(x)
        return frozenset(self.quorum_id(q) for q in self._node_quorums[x])

    def quorum_path(self, s: int, r: int) -> QuorumPath:
        self._check_node(s)
        self._check_node(r)
        if s == r:
            raise GraphError("sender and receiver must differ")
        return QuorumPath(tuple(self.quorum_id(qi) for qi in self.path_indices(s, r)))

    def membership_counts(self) -> np.ndarray:
        return np.bincount(self.member_array.ravel(), minlength=self.n)

    def bad_counts(self, bad: Iterable[int]) -> np.ndarray:
        """Number of members of each quorum (by index) that are in ``bad``."""
        mask = np.zeros(self.n, dtype=bool)
        mask[list(bad)] = True
        return mask[self.member_array].sum(axis=1)

    def quorum_bound_violations(self, bad: Iterable[int]) -> list[QuorumId]:
        """Quorums holding more than floor(|Q|/8) members of ``bad``."""
        counts = self.bad_counts(bad)
        over = np.nonzero(counts > self.quorum_size // 8)[0]
        return [self.quorum_id(int(qi)) for qi in over]

    def summary(self) -> str:
        """Line-oriented diagnostics report."""
        counts = self.membership_counts()
        lines = [
            f"n: {self.n}",
            f"quorum_size: {self.quorum_size}",
            f"levels: {self.levels}",
            f"columns: {self.columns}",
            f"quorums: {self.num_quorums}",
            f"memberships_min: {int(counts.min())}",
            f"memberships_max: {int(counts.max())}",
        ]
        for level in range(1, self.levels + 1):
            lo = (level - 1) * self.columns
            block = self.member_array[lo : lo + self.columns]
            lines.append(
                f"level {level}: quorums={self.columns} slots={block.size} "
                f"distinct_nodes={len(np.unique(block))}"
            )
        return "\n".join(lines) + "\n"


def _level_permutation(rng: np.random.Generator, n: int, bad: Sequence[int] | None) -> np.ndarray:
    if not bad:
        return rng.permutation(n)
    bad_arr = rng.permutation(np.asarray(sorted(bad), dtype=np.int64))
    is_bad = np.zeros(n, dtype=bool)
    is_bad[bad_arr] = True
    good_arr = rng.permutation(np.nonzero(~is_bad)[0])
    t = len(bad_arr)
    offset = rng.random()
    # evenly spaced slots: any cyclic window of w positions holds floor or ceil(w*t/n) of them
    slots = np.floor((np.arange(t) + offset) * n / t).astype(np.int64)
    perm = np.empty(n, dtype=np.int64)
    slot_mask = np.zeros(n, dtype=bool)
    slot_mask[slots] = True
    perm[slot_mask] = bad_arr
    perm[~slot_mask] = good_arr
    return perm


def build_butterfly(
    n: int,
    seed: int | np.random.Generator,
    *,
    bad: Sequence[int] | None = None,
    membership_factor: float = MEMBERSHIP_FACTOR,
) -> QuorumGraph:
    """Build the butterfly quorum graph for ``n`` nodes.

    Quorum size is floor(4 log2 n) and there are floor(log2 n) - 2 levels of
    2**(levels-1) columns. Each level's quorums are cut as consecutive windows
    from one seeded permutation of the nodes, read cyclically. Passing ``bad``
    spreads those nodes evenly through every permutation (balanced placement).
    """
    if n < 16:
        raise GraphError(f"n must be at least 16, got {n}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    levels = levels_for(n)
    qsize = quorum_size_for(n)
    columns = 2 ** (levels - 1)
    window = np.arange(qsize)
    rows = []
    for _ in range(levels):
        perm = _level_permutation(rng, n, bad)
        starts = np.arange(columns) * qsize
        idx = (starts[:, None] + window[None, :]) % n
        rows.append(perm[idx])
    graph = QuorumGraph(n, levels, np.concatenate(rows, axis=0))

    counts = graph.membership_counts()
    limit = membership_factor * math.log2(n)
    if counts.max() > limit:
        raise GraphError(
            f"a node sits in {int(counts.max())} quorums, above {membership_factor}*log2(n)={limit:.1f}"
        )
    return graph
