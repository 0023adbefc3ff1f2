"""Probe messages, random index arrays and the per-SEND transcript."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import NamedTuple

from ..crypto_sim import SignedBlob

PHASE_ORDER = {"sendpath": 0, "check1": 1, "check2": 1}


@dataclass(frozen=True)
class Probe:
    """m' of a CHECK: the payload plus r and the seed of R, optionally signed by k_s."""

    payload: bytes | None
    receiver: int
    r_seed: int
    k_p: bytes | None = None
    blob: SignedBlob | None = None

    def encode(self) -> bytes:
        body = (self.payload or b"") + b"|" + self.receiver.to_bytes(8, "little")
        body += b"|" + self.r_seed.to_bytes(8, "little")
        if self.k_p is not None:
            body += b"|" + self.k_p
        return body


class RandomIndexArray:
    """R[j, k]: ``multiplicity`` draws from [1, k] for level j, derived on demand.

    Entries are a pure function of (seed, j, k, draw), so every node that
    knows the seed computes the same selection without shipping the whole
    levels x |Q_max| table.
    """

    def __init__(self, seed: int, levels: int, width: int, multiplicity: int = 1):
        if levels < 1 or width < 1 or multiplicity < 1:
            raise ValueError("R dimensions must be positive")
        self.seed = seed
        self.levels = levels
        self.width = width
        self.multiplicity = multiplicity
        self._key = seed.to_bytes(8, "little")

    def __getitem__(self, jk: tuple[int, int]) -> tuple[int, ...]:
        j, k = jk
        if not (1 <= j <= self.levels and 1 <= k <= self.width):
            raise IndexError(jk)
        out = []
        for t in range(self.multiplicity):
            h = hashlib.blake2b(
                self._key + j.to_bytes(2, "little") + k.to_bytes(2, "little") + t.to_bytes(2, "little"),
                digest_size=8,
            ).digest()
            out.append(int.from_bytes(h, "little") % k + 1)
        return tuple(out)

    def materialize(self) -> list[list[tuple[int, ...]]]:
        return [[self[j, k] for k in range(1, self.width + 1)] for j in range(1, self.levels + 1)]


class EdgeFact(NamedTuple):
    """One scheduled transmission of a SEND-PATH or CHECK.

    Levels are 1-based path positions; level ``levels + 1`` stands for the
    broadcast into the last quorum. ``expected`` is the sender's input (what
    an honest sender forwards), ``sent`` what went on the wire.
    """

    order: int
    phase: str
    round: int
    src_level: int
    dst_level: int
    sender: int
    receiver: int  # lowest-ID receiver for broadcasts
    expected: object
    sent: object
    broadcast: bool = False


@dataclass
class Transcript:
    facts: list[EdgeFact] = field(default_factory=list)

    def add(self, phase, rnd, src, dst, sender, receiver, expected, sent, broadcast=False) -> EdgeFact:
        f = EdgeFact(len(self.facts), phase, rnd, src, dst, sender, receiver, expected, sent, broadcast)
        self.facts.append(f)
        return f

    def __contains__(self, fact: object) -> bool:
        if not isinstance(fact, EdgeFact) or not 0 <= fact.order < len(self.facts):
            return False
        return self.facts[fact.order] == fact

    def __len__(self) -> int:
        return len(self.facts)

    def incoming(self, node: int, phase: str | None = None) -> list[EdgeFact]:
        return [f for f in self.facts if f.receiver == node and (phase is None or f.phase == phase)]
