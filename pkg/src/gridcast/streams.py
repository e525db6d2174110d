"""One-pass search strategies over adversarial bit streams.

The problem: a stream of n bits (n even) arrives strictly left to right, at
least half of them are ones, and we must output the index of some 1 with
certainty while paying one unit per revealed bit. A strategy pre-commits the
positions it will look at (per round), visits them in increasing order, and
stops at the first 1.

Three strategies, by expected cost against their worst inputs:

* ``naive``        — n/2 + 1 uniformly chosen distinct positions; certain to
                     hit a 1, expected cost Θ(n).
* ``single_round`` — ~sqrt(n) samples in the first half, then a consecutive
                     scan of the second half; Θ(sqrt n) against any fixed
                     stream distribution worth worrying about.
* ``multi_round``  — k preliminary rounds with iterated-log budgets over
                     fresh streams, then a single_round finish; drives the
                     expected cost down to Θ(iterated log) per extra round
                     against distribution-style inputs.

Budgets use ceil'd iterated logarithms evaluated over the reals, clamped to
at least 1, so every round keeps a positive budget.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._prng import SplitMix64, mix, sample_sorted
from .sources import AdversarySpec, SourceContractViolation, StreamSource

__all__ = [
    "STRATEGY_KINDS",
    "StrategyConfig",
    "Transcript",
    "iterated_log",
    "iterated_log_real",
    "log_star",
    "sqrt_budget",
    "prelim_budgets",
    "naive_strategy",
    "single_round_strategy",
    "multi_round_strategy",
    "run_strategy",
    "CostSummary",
    "monte_carlo_cost",
]

STRATEGY_KINDS = ("naive", "single_round", "multi_round")


# ====================== budgets ======================


def iterated_log_real(x: float, depth: int) -> float:
    """Apply lg = log2 ``depth`` times over the reals (0.0 once it bottoms out)."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    v = float(x)
    for _ in range(depth):
        if v <= 1.0:
            return 0.0
        v = math.log2(v)
    return v


def iterated_log(x: float, depth: int) -> int:
    """Query budget at recursion depth ``depth``: ceil of the real value, >= 1."""
    return max(1, math.ceil(iterated_log_real(x, depth)))


def log_star(x: float) -> int:
    """Number of lg applications until the value drops to <= 1."""
    v = float(x)
    count = 0
    while v > 1.0:
        v = math.log2(v)
        count += 1
    return count


def sqrt_budget(n: int) -> int:
    """First-phase sample count: ceil(sqrt(n)), clamped into the half."""
    return min(math.isqrt(n - 1) + 1, n // 2)


def prelim_budgets(n: int, k: int) -> list[int]:
    """Budgets of the k preliminary rounds, in execution order.

    Round j (0-based) gets ceil(lg^(k-j)(n/2)): the deepest iterate first,
    finishing at ceil(lg(n/2)).
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    return [min(iterated_log(n / 2, k - j), n) for j in range(k)]


# ====================== configuration and transcripts ======================


@dataclass(frozen=True)
class StrategyConfig:
    """Which strategy to run; ``rounds`` = streams consumed (k+1 for multi)."""

    kind: str
    rounds: int = 1

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.kind != "multi_round" and self.rounds != 1:
            raise ValueError(f"{self.kind} always uses exactly one round")


@dataclass
class Transcript:
    """Everything a strategy run revealed, in order.

    ``queries`` holds (stream_round, position, answer) triples with strictly
    increasing positions within each round. ``cost`` counts every query,
    across rounds. ``found_round``/``found_position`` locate the final 1.
    """

    n: int
    kind: str
    queries: list[tuple[int, int, int]] = field(default_factory=list)
    found_round: int | None = None
    found_position: int | None = None

    @property
    def cost(self) -> int:
        return len(self.queries)

    @property
    def found(self) -> bool:
        return self.found_position is not None

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "kind": self.kind,
            "cost": self.cost,
            "found_round": self.found_round,
            "found_position": self.found_position,
            "queries": [list(q) for q in self.queries],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


# ====================== the strategies ======================


def _query_positions(
    t: Transcript, source: StreamSource, positions, stream_round: int
) -> bool:
    """Visit positions in order, recording answers; True once a 1 turns up."""
    for p in positions:
        a = source.answer(p)
        t.queries.append((stream_round, p, a))
        if a:
            t.found_round = stream_round
            t.found_position = p
            return True
    return False


def naive_strategy(source: StreamSource, seed: int) -> Transcript:
    """Query n/2 + 1 uniform distinct positions: one must be a 1."""
    n = source.n
    t = Transcript(n=n, kind="naive")
    rng = SplitMix64(mix(seed, 0))
    if _query_positions(t, source, sample_sorted(rng, n // 2 + 1, n), 0):
        return t
    raise SourceContractViolation(
        f"{n // 2 + 1} distinct positions of {n} were all zero"
    )


def single_round_strategy(source: StreamSource, seed: int) -> Transcript:
    """Sample ~sqrt(n) spots in the first half, then scan the second half."""
    n = source.n
    t = Transcript(n=n, kind="single_round")
    rng = SplitMix64(mix(seed, 0))
    half = n // 2
    if _query_positions(t, source, sample_sorted(rng, sqrt_budget(n), half), 0):
        return t
    if _query_positions(t, source, range(half, n), 0):
        return t
    raise SourceContractViolation(
        "first-half samples and the whole second half were all zero; "
        "the source cannot hold half ones"
    )


def multi_round_strategy(sources: list[StreamSource], seed: int) -> Transcript:
    """Iterated-log preliminary rounds over fresh streams, then single_round.

    ``sources`` supplies one independent stream per round (k+1 of them);
    a preliminary round samples its budget across the entire stream and the
    whole strategy stops at the first 1 anywhere.
    """
    if not sources:
        raise ValueError("multi_round needs at least one stream source")
    n = sources[0].n
    if any(s.n != n for s in sources):
        raise ValueError("all stream sources must share the same n")
    k = len(sources) - 1
    t = Transcript(n=n, kind="multi_round")
    for j, b in enumerate(prelim_budgets(n, k)):
        rng = SplitMix64(mix(seed, j))
        if _query_positions(t, sources[j], sample_sorted(rng, b, n), j):
            return t
    rng = SplitMix64(mix(seed, k))
    half = n // 2
    final = sources[k]
    if _query_positions(t, final, sample_sorted(rng, sqrt_budget(n), half), k):
        return t
    if _query_positions(t, final, range(half, n), k):
        return t
    raise SourceContractViolation("final round exhausted without a 1")


def run_strategy(config: StrategyConfig, adversary, seed: int) -> Transcript:
    """Run one trial: fresh source(s) from ``adversary``, then the strategy.

    ``adversary`` is an AdversarySpec or a callable round_index -> source.
    Seed discipline (shared with the native kernel): the source draw uses
    mix(seed, 1), the strategy's own choices use mix(seed, 2).
    """
    source_seed = mix(seed, 1)
    strat_seed = mix(seed, 2)
    if isinstance(adversary, AdversarySpec):
        make = lambda r: adversary.instantiate(source_seed, r)
    elif callable(adversary):
        make = adversary
    else:
        raise TypeError("adversary must be an AdversarySpec or a factory callable")
    if config.kind == "naive":
        return naive_strategy(make(0), strat_seed)
    if config.kind == "single_round":
        return single_round_strategy(make(0), strat_seed)
    return multi_round_strategy([make(r) for r in range(config.rounds)], strat_seed)


# ====================== Monte-Carlo driver ======================


@dataclass
class CostSummary:
    """Per-trial costs plus the headline numbers."""

    trials: int
    mean: float
    max: int
    ci95: float
    costs: np.ndarray = field(repr=False)

    @classmethod
    def from_costs(cls, costs: np.ndarray) -> "CostSummary":
        costs = np.asarray(costs, dtype=np.int64)
        mean = float(costs.mean())
        sd = float(costs.std(ddof=1)) if costs.size > 1 else 0.0
        return cls(
            trials=int(costs.size),
            mean=mean,
            max=int(costs.max()),
            ci95=1.96 * sd / math.sqrt(costs.size),
            costs=costs,
        )


def monte_carlo_cost(
    config: StrategyConfig,
    adversary,
    trials: int,
    base_seed: int,
    backend: str | None = None,
) -> CostSummary:
    """Expected-cost estimate over ``trials`` runs; trial i uses base_seed+i.

    AdversarySpec inputs run on the fast kernel when available; callables
    always run the pure-Python strategies. ``backend`` forces "native" or
    "python" (AdversarySpec only).
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    if isinstance(adversary, AdversarySpec):
        from . import _backend  # late import: backend pulls in this module

        costs = _backend.run_stream_trials(config, adversary, trials, base_seed, backend)
        return CostSummary.from_costs(costs)
    costs = np.empty(trials, dtype=np.int64)
    for i in range(trials):
        costs[i] = run_strategy(config, adversary, (base_seed + i) & ((1 << 64) - 1)).cost
    return CostSummary.from_costs(costs)
