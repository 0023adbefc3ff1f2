"""Closed-form and brute-force reference values for the analysis quantities."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np


def iterated_log(x: float) -> int:
    """log* base 2: how many times log2 must be applied to bring ``x`` to <= 1."""
    if x < 1:
        raise ValueError(f"iterated_log needs x >= 1, got {x}")
    k = 0
    while x > 1:
        x = math.log2(x)
        k += 1
    return k


def loglog_floor(n: int) -> int:
    return math.floor(math.log2(math.log2(n)))


def run_length_for(x: int) -> int:
    return max(1, math.ceil(math.log2(x))) if x > 1 else 1


@dataclass(frozen=True)
class RunLengthQuery:
    x: int
    p_tail: float | Fraction
    run_len: int | None = None

    def __post_init__(self):
        if self.x < 1:
            raise ValueError("x must be >= 1")
        if not 0 <= self.p_tail <= 1:
            raise ValueError("p_tail must lie in [0, 1]")
        if self.run_len is not None and self.run_len < 1:
            raise ValueError("run_len must be >= 1")

    @property
    def length(self) -> int:
        return self.run_len if self.run_len is not None else run_length_for(self.x)


def longest_run_prob(q: RunLengthQuery) -> float | Fraction:
    """Probability that ``q.length`` consecutive tails appear in ``q.x`` tosses.

    Dynamic program over the length of the current tail run; the absorbing
    state collects every sequence that has already produced the run. Exact in
    rational arithmetic when ``p_tail`` is a Fraction.
    """
    L = q.length
    if q.x > 2**20:
        raise ValueError("x above 2**20 is outside the exact DP range")
    p = q.p_tail
    if isinstance(p, Fraction):
        state = [Fraction(0)] * L
        state[0] = Fraction(1)
        hit = Fraction(0)
        for _ in range(q.x):
            new = [Fraction(0)] * L
            total = sum(state)
            new[0] = total * (1 - p)
            for k in range(L - 1):
                new[k + 1] = state[k] * p
            hit += state[L - 1] * p
            state = new
        return hit
    vec = np.zeros(L)
    vec[0] = 1.0
    hit = 0.0
    for _ in range(q.x):
        hit += vec[-1] * p
        total = vec.sum()
        vec[1:] = vec[:-1] * p
        vec[0] = total * (1 - p)
    return float(hit)


def longest_run_curve(x_max: int, p_tail: float) -> np.ndarray:
    """``out[x-1]`` = longest_run_prob for every x in 1..x_max with the default run length.

    The run length only changes at powers of two, so one DP pass per
    length covers a whole block of x values.
    """
    out = np.empty(x_max)
    x = 1
    while x <= x_max:
        L = run_length_for(x)
        block_end = min(x_max, 2**L)
        vec = np.zeros(L)
        vec[0] = 1.0
        hit = 0.0
        for step in range(1, block_end + 1):
            hit += vec[-1] * p_tail
            total = vec.sum()
            vec[1:] = vec[:-1] * p_tail
            vec[0] = total * (1 - p_tail)
            if step >= x:
                out[step - 1] = hit
        x = block_end + 1
    return out


def longest_run_enumerated(x: int, p_tail: Fraction, run_len: int | None = None) -> Fraction:
    """Same quantity by summing over all 2**x toss sequences."""
    if x > 20:
        raise ValueError("enumeration is limited to x <= 20")
    L = run_len if run_len is not None else run_length_for(x)
    p = Fraction(p_tail)
    num, den = p.numerator, p.denominator
    total = 0
    for seq in product((0, 1), repeat=x):
        run = best = 0
        for toss in seq:
            run = run + 1 if toss else 0
            best = max(best, run)
        if best >= L:
            tails = sum(seq)
            total += num**tails * (den - num) ** (x - tails)
    return Fraction(total, den**x)


def check1_failure_bound(levels: int, n: int) -> float:
    """The Lemma-level bound levels / log2(n)**2 on CHECK1 missing a corruption."""
    return levels / math.log2(n) ** 2


def check1_failure_exact(levels: int, n: int, bad_fraction: float, subquorum: int | None = None) -> float:
    """Chance that some level's subquorum is entirely bad, selections independent."""
    s = subquorum if subquorum is not None else loglog_floor(n)
    return 1.0 - (1.0 - bad_fraction**s) ** levels


def corruption_budget(t: int, n: int, variant: int) -> int:
    """3 t (log* n)^2 for CHECK2, 3 t floor(loglog n)^2 for CHECK1."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if variant == 2:
        factor = iterated_log(n)
    elif variant == 1:
        factor = loglog_floor(n)
    else:
        raise ValueError(f"unknown CHECK variant {variant}")
    return 3 * t * factor**2


def report_lines(n_values=(14_116, 30_509)) -> list[str]:
    """Rows for the oracle-report CLI table."""
    rows = [f"{'quantity':<34}{'n':>8}  value"]
    for n in n_values:
        levels = math.floor(math.log2(n)) - 2
        rows.append(f"{'log* n':<34}{n:>8}  {iterated_log(n)}")
        rows.append(f"{'floor(loglog n)':<34}{n:>8}  {loglog_floor(n)}")
        rows.append(f"{'check1 failure bound':<34}{n:>8}  {check1_failure_bound(levels, n):.6f}")
        rows.append(f"{'check1 failure exact (q=1/4)':<34}{n:>8}  {check1_failure_exact(levels, n, 0.25):.6f}")
        for denom in (64, 32, 16, 8):
            t = n // denom
            rows.append(
                f"{f'budget CHECK1 f=1/{denom} (t={t})':<34}{n:>8}  {corruption_budget(t, n, 1)}"
            )
    curve = longest_run_curve(2**16, 0.25)
    rows.append(f"{'max run prob, x<=2^16, p=1/4':<34}{'-':>8}  {curve.max():.6f}")
    return rows
