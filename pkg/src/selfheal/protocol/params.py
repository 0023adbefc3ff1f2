"""Derived protocol constants."""

from __future__ import annotations

from dataclasses import dataclass

from ..oracles import iterated_log, loglog_floor
from ..quorum_graph import QuorumGraph


@dataclass(frozen=True)
class ProtocolParams:
    check_variant: int
    p_call: float
    check2_rounds: int
    subquorum: int

    @classmethod
    def for_graph(cls, graph: QuorumGraph, variant: int, force_check: bool = False) -> "ProtocolParams":
        return cls.for_n(graph.n, variant, force_check)

    @classmethod
    def for_n(cls, n: int, variant: int, force_check: bool = False) -> "ProtocolParams":
        if variant not in (1, 2):
            raise ValueError(f"CHECK variant must be 1 or 2, got {variant}")
        sub = max(1, loglog_floor(n))
        lstar = max(1, iterated_log(n))
        base = sub if variant == 1 else lstar
        p = 1.0 if force_check else min(1.0, 1.0 / base**2)
        return cls(variant, p, 4 * lstar, sub)
