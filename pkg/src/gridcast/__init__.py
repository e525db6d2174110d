"""gridcast: energy-efficient reliable broadcast on grid radio networks.

Two layers:

* ``streams`` / ``sources`` — one-pass search for a 1 in an adversarial bit
  stream with at least half ones: the abstract problem whose solution
  drives the listening schedules.
* ``grid`` / ``protocol`` / ``metrics`` — a slotted radio grid where a
  dealer's message is flooded as a short fingerprint first and the payload
  second, with nodes asleep except for sparsely sampled slots.

The heavy inner loops live in a compiled extension with a pure-Python
fallback (see gridcast._backend); both produce identical outputs.
"""

from ._backend import backend_name
from .grid import (
    CollisionViolation,
    DataPhaseStall,
    FingerprintPhaseStall,
    GridSpec,
    RadioNetwork,
    build_schedule,
    corridor_membership,
    verify_collision_free,
)
from .metrics import EnergyLedger, awake_fraction, scaling_report
from .protocol import (
    BroadcastConfig,
    BroadcastResult,
    FaultPlan,
    commit_deadline,
    data_wait_gate,
    fingerprint,
    fingerprint_bits,
    frontloaded_failstop_plan,
    load_scenario,
    random_byzantine_plan,
    random_failstop_plan,
    run_broadcast_sim,
    run_data_phase,
    run_fingerprint_phase,
    save_scenario,
    t_max_byzantine,
    validate_fault_plan,
)
from .sources import (
    AdversarySpec,
    AllOnesSource,
    FixedSource,
    GreedyAdaptiveSource,
    LastHalfOnesSource,
    RevisitError,
    SizeError,
    SourceContractViolation,
    brute_force_worst_cost,
    load_corpus,
    sample_case1_case2k,
    sample_three_interval,
    save_corpus,
)
from .streams import (
    CostSummary,
    StrategyConfig,
    Transcript,
    iterated_log,
    log_star,
    monte_carlo_cost,
    multi_round_strategy,
    naive_strategy,
    run_strategy,
    single_round_strategy,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "backend_name",
    # streams
    "StrategyConfig",
    "Transcript",
    "CostSummary",
    "iterated_log",
    "log_star",
    "naive_strategy",
    "single_round_strategy",
    "multi_round_strategy",
    "run_strategy",
    "monte_carlo_cost",
    # sources
    "AdversarySpec",
    "FixedSource",
    "AllOnesSource",
    "LastHalfOnesSource",
    "GreedyAdaptiveSource",
    "RevisitError",
    "SourceContractViolation",
    "SizeError",
    "sample_case1_case2k",
    "sample_three_interval",
    "load_corpus",
    "save_corpus",
    "brute_force_worst_cost",
    # grid
    "GridSpec",
    "RadioNetwork",
    "build_schedule",
    "verify_collision_free",
    "corridor_membership",
    "CollisionViolation",
    "FingerprintPhaseStall",
    "DataPhaseStall",
    # protocol
    "BroadcastConfig",
    "BroadcastResult",
    "FaultPlan",
    "fingerprint",
    "fingerprint_bits",
    "commit_deadline",
    "data_wait_gate",
    "t_max_byzantine",
    "validate_fault_plan",
    "random_failstop_plan",
    "frontloaded_failstop_plan",
    "random_byzantine_plan",
    "load_scenario",
    "save_scenario",
    "run_broadcast_sim",
    "run_fingerprint_phase",
    "run_data_phase",
    # metrics
    "EnergyLedger",
    "awake_fraction",
    "scaling_report",
]
