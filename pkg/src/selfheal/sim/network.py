"""Message and latency metering for one trial."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field


@dataclass
class Meter:
    """Counts point-to-point transmissions, bucketed by kind."""

    messages: int = 0
    by_kind: Counter = field(default_factory=Counter)

    def add(self, kind: str, count: int) -> None:
        if count < 0:
            raise ValueError("message count cannot be negative")
        self.messages += count
        self.by_kind[kind] += count

    def snapshot(self) -> tuple[int, dict[str, int]]:
        return self.messages, dict(self.by_kind)


class RoundClock:
    """Synchronous round counter.

    Every protocol step is one communication step; a step costs ``h``
    rounds because that is the worst-case delivery delay between good nodes.
    """

    def __init__(self, h: int = 1):
        if h < 1:
            raise ValueError("delivery bound h must be >= 1")
        self.h = h
        self.round = 0

    def step(self, count: int = 1) -> int:
        self.round += self.h * count
        return self.round

    def deliver_by(self, sent_round: int) -> int:
        return sent_round + self.h
