"""Adversarial bit-stream sources for the one-pass search strategies.

A *source* models a stream of n bits (n even) that is revealed one queried
position at a time, strictly left to right. The contract every honest source
obeys: at least ceil(n/2) of the bits are ones. Sources come in three
flavours:

* fixed vectors (hand-written, from a corpus file, or drawn from one of the
  structured distributions below),
* degenerate extremes (all ones / ones only in the second half),
* a greedy adaptive adversary that decides each answer online, always
  remaining consistent with some half-ones completion.

The module also hosts the exact small-n oracle ``brute_force_worst_cost``:
it enumerates every random choice a strategy can make and every admissible
stream, entirely in rational arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from ._prng import SplitMix64, mix, sample_sorted

__all__ = [
    "RevisitError",
    "SourceContractViolation",
    "SizeError",
    "StreamSource",
    "FixedSource",
    "AllOnesSource",
    "LastHalfOnesSource",
    "GreedyAdaptiveSource",
    "AdversarySpec",
    "ADVERSARY_KINDS",
    "sample_case1_case2k",
    "sample_three_interval",
    "case_window_width",
    "load_corpus",
    "save_corpus",
    "ExactCostReport",
    "brute_force_worst_cost",
]


# ====================== errors ======================


class RevisitError(ValueError):
    """A strategy queried a position <= one it already consumed."""


class SourceContractViolation(RuntimeError):
    """A source violated the at-least-half-ones promise mid-run."""


class SizeError(ValueError):
    """Exact enumeration was asked for an n it politely refuses."""


# ====================== stream sources ======================


def _check_n(n: int) -> int:
    if n < 2 or n % 2:
        raise ValueError(f"stream length must be even and >= 2, got {n}")
    return n


class StreamSource:
    """Base class: enforces the one-pass, strictly-increasing query order."""

    kind = "abstract"

    def __init__(self, n: int):
        self.n = _check_n(n)
        self.answered = 0
        self.ones_answered = 0
        self.last_position = -1

    def answer(self, position: int) -> int:
        if not 0 <= position < self.n:
            raise IndexError(f"position {position} outside [0, {self.n})")
        if position <= self.last_position:
            raise RevisitError(
                f"position {position} not past {self.last_position}; "
                "the stream is one-pass"
            )
        self.last_position = position
        bit = self._bit(position)
        self.answered += 1
        self.ones_answered += bit
        return bit

    def _bit(self, position: int) -> int:
        raise NotImplementedError


class FixedSource(StreamSource):
    """A pre-committed bit vector.

    Rejects vectors with fewer than ceil(n/2) ones unless ``allow_subhalf``
    — useful for deliberately broken inputs in tests.
    """

    kind = "fixed"

    def __init__(self, bits, allow_subhalf: bool = False):
        arr = np.asarray(bits, dtype=np.uint8)
        if arr.ndim != 1:
            raise ValueError("bits must be one-dimensional")
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("bits must be 0/1")
        super().__init__(int(arr.size))
        ones = int(arr.sum())
        if not allow_subhalf and ones < (self.n + 1) // 2:
            raise SourceContractViolation(
                f"{ones} ones in {self.n} bits; need at least {(self.n + 1) // 2}"
            )
        self.bits = arr
        self.ones_total = ones

    def _bit(self, position: int) -> int:
        return int(self.bits[position])


class AllOnesSource(StreamSource):
    """Every bit is 1: the friendliest admissible stream."""

    kind = "allones"

    def _bit(self, position: int) -> int:
        return 1


class LastHalfOnesSource(StreamSource):
    """0^(n/2) 1^(n/2): worst fixed stream for first-half sampling."""

    kind = "lasthalf"

    def _bit(self, position: int) -> int:
        return 1 if position >= self.n // 2 else 0


class GreedyAdaptiveSource(StreamSource):
    """Answers online, delaying ones as long as consistency allows.

    Rule: answer 0 exactly when afterwards the not-yet-answered positions
    (whether skipped over or still ahead) can still host the missing ones,
    i.e. n - answered - 1 >= ceil(n/2) - ones_answered. Otherwise it must
    concede a 1. Every prefix it produces extends to a vector with at least
    ceil(n/2) ones, and it is the pointwise worst response to any strategy.
    """

    kind = "greedy"

    def _bit(self, position: int) -> int:
        unanswered_after = self.n - self.answered - 1
        need = (self.n + 1) // 2 - self.ones_answered
        return 0 if unanswered_after >= need else 1


# ====================== structured distributions ======================


def case_window_width(n: int) -> int:
    """Width of the planted zero-window: ceil(sqrt(n)) clamped to n/2."""
    return min(math.isqrt(n - 1) + 1, n // 2)


def sample_case1_case2k(n: int, seed: int, allow_subhalf: bool = False) -> FixedSource:
    """Draw from the two-case planted distribution.

    With probability 1/2 each:

    * case 1 — sqrt(n) ones scattered in the first half, the width-sqrt(n)
      window right after the midpoint all zero, ones after it;
    * case 2 — k ~ Uniform{0..sqrt(n)-1} zeros scattered in the first half,
      sqrt(n)-k zeros scattered in the window, ones elsewhere in the window,
      zeros after it.

    Either way the vector has exactly n/2 ones. The returned source carries
    ``case`` (1 or 2) and ``k_value`` (None for case 1) tags.
    """
    _check_n(n)
    rng = SplitMix64(seed)
    s = case_window_width(n)
    half = n // 2
    bits = np.zeros(n, dtype=np.uint8)
    case = 1 if rng.bounded(2) == 0 else 2
    k_value = None
    if case == 1:
        for p in sample_sorted(rng, s, half):
            bits[p] = 1
        bits[half + s :] = 1
    else:
        k_value = rng.bounded(s)
        bits[:half] = 1
        for p in sample_sorted(rng, k_value, half):
            bits[p] = 0
        bits[half : half + s] = 1
        for p in sample_sorted(rng, s - k_value, s):
            bits[half + p] = 0
    src = FixedSource(bits, allow_subhalf=allow_subhalf)
    src.case = case
    src.k_value = k_value
    return src


def sample_three_interval(n: int, seed: int) -> FixedSource:
    """One of three equal intervals all-zero, the other two n/4 ones each.

    Needs n divisible by 12 so thirds and quarters are integral. The zero
    interval index is carried as ``zero_interval``.
    """
    if n % 12:
        raise ValueError(f"three-interval streams need n % 12 == 0, got {n}")
    rng = SplitMix64(seed)
    third = n // 3
    zero_iv = rng.bounded(3)
    bits = np.zeros(n, dtype=np.uint8)
    for iv in range(3):
        if iv == zero_iv:
            continue
        for p in sample_sorted(rng, n // 4, third):
            bits[iv * third + p] = 1
    src = FixedSource(bits)
    src.zero_interval = zero_iv
    return src


# ====================== adversary specs (declarative) ======================

ADVERSARY_KINDS = ("fixed", "allones", "lasthalf", "greedy", "case12k", "threeinterval")


@dataclass
class AdversarySpec:
    """Declarative description of an adversary, usable by either backend.

    ``instantiate(seed, round_index)`` builds a fresh source for one stream;
    distribution kinds redraw per round, fixed kinds repeat their vector.
    """

    kind: str
    n: int
    bits: np.ndarray | None = field(default=None, repr=False)
    allow_subhalf: bool = False

    def __post_init__(self):
        if self.kind not in ADVERSARY_KINDS:
            raise ValueError(f"unknown adversary kind {self.kind!r}")
        _check_n(self.n)
        if self.kind == "fixed":
            if self.bits is None:
                raise ValueError("fixed adversary needs a bit vector")
            self.bits = np.asarray(self.bits, dtype=np.uint8)
            if self.bits.size != self.n:
                raise ValueError("bit vector length != n")
        if self.kind == "threeinterval" and self.n % 12:
            raise ValueError("threeinterval needs n % 12 == 0")

    def instantiate(self, seed: int, round_index: int = 0) -> StreamSource:
        if self.kind == "fixed":
            return FixedSource(self.bits, allow_subhalf=self.allow_subhalf)
        if self.kind == "allones":
            return AllOnesSource(self.n)
        if self.kind == "lasthalf":
            return LastHalfOnesSource(self.n)
        if self.kind == "greedy":
            return GreedyAdaptiveSource(self.n)
        sub = mix(seed, round_index)
        if self.kind == "case12k":
            return sample_case1_case2k(self.n, sub, allow_subhalf=self.allow_subhalf)
        return sample_three_interval(self.n, sub)


# ====================== corpus files ======================


def save_corpus(path, vectors) -> None:
    """Write bit vectors as ASCII 0/1 lines."""
    lines = []
    for v in vectors:
        arr = np.asarray(v, dtype=np.uint8)
        lines.append("".join("1" if b else "0" for b in arr))
    Path(path).write_text("\n".join(lines) + "\n")


def load_corpus(path) -> list[np.ndarray]:
    """Read ASCII 0/1 lines back into uint8 vectors (blank lines skipped)."""
    out = []
    for ln, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if set(line) - {"0", "1"}:
            raise ValueError(f"{path}:{ln}: corpus lines must be 0/1 only")
        out.append(np.frombuffer(line.encode(), dtype=np.uint8) - ord("0"))
    return out


# ====================== exact small-n oracle ======================

MAX_EXACT_N = 12


@dataclass
class ExactCostReport:
    """Exact rational costs from full enumeration.

    * worst_choice_mean: E over the strategy's random choices of the worst
      admissible stream response per choice — provably equal to the expected
      cost against the greedy adaptive adversary (asserted per choice).
    * greedy_mean: independently simulated expectation against greedy.
    * worst_stream_mean: max over committed streams of E[cost | stream]
      (<= worst_choice_mean; the adversary commits before seeing choices).
    """

    n: int
    kind: str
    rounds: int
    worst_choice_mean: Fraction
    greedy_mean: Fraction
    worst_stream_mean: Fraction


def _enumerate_streams(n: int) -> list[int]:
    """All bitmasks of n bits with at least ceil(n/2) ones."""
    need = (n + 1) // 2
    return [m for m in range(1 << n) if bin(m).count("1") >= need]


def _single_round_choices(n: int) -> list[tuple[int, ...]]:
    """Every (phase-1 subset ++ consecutive second half) position tuple."""
    from itertools import combinations

    from .streams import sqrt_budget

    half = n // 2
    tail = tuple(range(half, n))
    return [tuple(sorted(c)) + tail for c in combinations(range(half), sqrt_budget(n))]


def _naive_choices(n: int) -> list[tuple[int, ...]]:
    from itertools import combinations

    return [tuple(sorted(c)) for c in combinations(range(n), n // 2 + 1)]


def _cost_on_stream(positions: tuple[int, ...], mask: int) -> int:
    """Queries consumed until the first 1 (full budget if none found)."""
    for i, p in enumerate(positions):
        if (mask >> p) & 1:
            return i + 1
    return len(positions)


def _found_on_stream(positions: tuple[int, ...], mask: int) -> bool:
    return any((mask >> p) & 1 for p in positions)


def _greedy_cost(positions: tuple[int, ...], n: int) -> int:
    """Exact cost of a fixed position tuple against the greedy adversary."""
    src = GreedyAdaptiveSource(n)
    for i, p in enumerate(positions):
        if src.answer(p):
            return i + 1
    return len(positions)


def brute_force_worst_cost(config, n: int) -> ExactCostReport:
    """Exhaustively price a strategy at stream length n (n <= 12, even).

    ``config`` is a ``streams.StrategyConfig``. All three summary numbers
    are exact ``Fraction``s; the worst-choice mean is cross-checked against
    the greedy adversary choice by choice, so a discrepancy raises.
    """
    from .streams import StrategyConfig, prelim_budgets  # late: avoid cycle

    if not isinstance(config, StrategyConfig):
        raise TypeError("config must be a StrategyConfig")
    if n > MAX_EXACT_N:
        raise SizeError(
            f"exact enumeration is exponential; n={n} > {MAX_EXACT_N} refused"
        )
    _check_n(n)
    streams_all = _enumerate_streams(n)

    if config.kind == "naive":
        choices = _naive_choices(n)
        prelim: list[int] = []
    elif config.kind == "single_round":
        choices = _single_round_choices(n)
        prelim = []
    else:
        choices = _single_round_choices(n)
        prelim = prelim_budgets(n, config.rounds - 1)

    n_choices = len(choices)
    burn = sum(prelim)  # a fresh greedy round concedes nothing: full budget

    # E over choices of (worst stream per choice), final/only round.
    worst_choice_total = 0
    greedy_total = 0
    for pos in choices:
        worst = max(_cost_on_stream(pos, m) for m in streams_all)
        # Las Vegas check: the full-budget case must still have found a 1
        # for every admissible stream when the tuple can't miss.
        g = _greedy_cost(pos, n)
        if worst != g:
            raise AssertionError(
                f"worst fixed stream ({worst}) != greedy response ({g}) "
                f"for choice {pos}: adaptive-dominance identity broken"
            )
        worst_choice_total += worst
        greedy_total += g
    worst_choice_mean = Fraction(burn + worst_choice_total, n_choices)
    greedy_mean = Fraction(burn + greedy_total, n_choices)

    # max over committed streams of E[cost | stream], with independent fresh
    # streams per round: level i value = max_s (E[queries_i | s] +
    # P[miss_i | s] * level_{i+1}).
    final_level = max(
        Fraction(sum(_cost_on_stream(pos, m) for pos in choices), n_choices)
        for m in streams_all
    )
    worst_stream_mean = final_level
    for b in reversed(prelim):
        round_choices = [tuple(c) for c in _subsets_sorted(n, b)]
        nc = len(round_choices)
        best = None
        for m in streams_all:
            q_total = 0
            miss = 0
            for pos in round_choices:
                c = _cost_on_stream(pos, m)
                q_total += c
                miss += not _found_on_stream(pos, m)
            val = Fraction(q_total, nc) + Fraction(miss, nc) * worst_stream_mean
            if best is None or val > best:
                best = val
        worst_stream_mean = best

    return ExactCostReport(
        n=n,
        kind=config.kind,
        rounds=config.rounds,
        worst_choice_mean=worst_choice_mean,
        greedy_mean=greedy_mean,
        worst_stream_mean=worst_stream_mean,
    )


def _subsets_sorted(n: int, k: int):
    from itertools import combinations

    for c in combinations(range(n), k):
        yield c
