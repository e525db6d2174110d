"""The two-phase broadcast protocol: fingerprint wave, then staggered data.

Phase one floods a short fingerprint of the dealer's message: every node
stays awake until it *commits* — directly from the dealer, or on evidence
from ``theta`` distinct in-range attesters that some common node could have
heard (COMMIT records, or relayed HEARD records). Commit deadlines grow
linearly with L1 distance from the dealer.

Phase two delivers the payload itself with radios mostly off: a committed
node waits out its distance-staggered gate, then listens only at slots
chosen by the stream-search strategies (gridcast.streams) over its
neighbourhood's slot order, hash-checking anything it hears against the
committed fingerprint. Senders that hold the verified payload re-broadcast
it in their own slots; receivers that keep missing fall back to full-scan
retry rounds, so delivery is certain, only energy is probabilistic.

Fault plans describe fail-stop or byzantine node sets; the validator
enforces the density bounds under which the guarantees hold, and the plan
generators produce worst-density plans that still pass it.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .grid import GridSpec

__all__ = [
    "BYZ_MODES",
    "REGIMES",
    "fingerprint_bits",
    "fingerprint",
    "CommitFp",
    "HeardFp",
    "CommitData",
    "commit_deadline",
    "data_wait_gate",
    "t_max_byzantine",
    "FaultEntry",
    "FaultPlan",
    "PlanReport",
    "PlanValidationError",
    "validate_fault_plan",
    "random_failstop_plan",
    "frontloaded_failstop_plan",
    "random_byzantine_plan",
    "load_scenario",
    "save_scenario",
    "BroadcastConfig",
    "BroadcastResult",
    "run_broadcast_sim",
    "run_fingerprint_phase",
    "run_data_phase",
]

REGIMES = ("none", "failstop", "byzantine")
BYZ_MODES = ("silent", "garbage_fp", "equivocate_fp", "wrong_data")

# engine status codes (see _pyref)
_STATUS_OK = 0
_STATUS_FAILSTOP = 1
_STATUS_OF_MODE = {"silent": 2, "garbage_fp": 3, "equivocate_fp": 4, "wrong_data": 5}


# ====================== fingerprints and messages ======================


def fingerprint_bits(msg_bits: int) -> int:
    """Fingerprint width for an m-bit message: max(32, ceil(log2(m)^2))."""
    if msg_bits < 1:
        raise ValueError("message must have at least one bit")
    if msg_bits == 1:
        return 32
    return max(32, math.ceil(math.log2(msg_bits) ** 2))


def fingerprint(message: bytes) -> int:
    """Top fingerprint_bits(|m|) bits of SHA-256(message), as an int."""
    nbits = fingerprint_bits(len(message) * 8)
    digest = int.from_bytes(hashlib.sha256(message).digest(), "big")
    return digest >> (256 - nbits)


@dataclass(frozen=True)
class CommitFp:
    """COMMIT(p, f, t_init): p vouches for fingerprint f, 64 bits of header."""

    sender: tuple[int, int]
    fp: int
    t_init: int

    def bit_length(self, fp_bits: int) -> int:
        return 64 + fp_bits


@dataclass(frozen=True)
class HeardFp:
    """HEARD(p, q, f, t_init): p relays that q committed; 96 header bits."""

    sender: tuple[int, int]
    origin: tuple[int, int]
    fp: int
    t_init: int

    def bit_length(self, fp_bits: int) -> int:
        return 96 + fp_bits


@dataclass(frozen=True)
class CommitData:
    """DATA(p, m): the payload itself behind a 32-bit header."""

    sender: tuple[int, int]
    payload: bytes

    def bit_length(self, msg_bits: int | None = None) -> int:
        return 32 + (len(self.payload) * 8 if msg_bits is None else msg_bits)


# ====================== timing formulas ======================


def commit_deadline(spec: GridSpec, node: tuple[int, int], t_init: int = 0) -> int:
    """Latest fingerprint-commit step: t_init + 2n(x+y-r), floored at t_init."""
    x, y = node
    return t_init + 2 * spec.slots * max(0, x + y - spec.r)


def data_wait_gate(spec: GridSpec, node: tuple[int, int], t_init: int = 0) -> int:
    """First own slot at or after t_init + 2n(x+y+r) + 1: earliest data send."""
    x, y = node
    thresh = t_init + 2 * spec.slots * (x + y + spec.r) + 1
    return thresh + ((spec.slot(x, y) - thresh) % spec.slots)


def t_max_byzantine(r: int) -> int:
    """Largest per-window byzantine count t with t < (r/2)(2r+1)."""
    return math.ceil(r * (2 * r + 1) / 2) - 1


# ====================== fault plans ======================


@dataclass(frozen=True)
class FaultEntry:
    x: int
    y: int
    kind: str  # "failstop" | "byzantine"
    mode: str | None = None  # byzantine only


@dataclass
class FaultPlan:
    regime: str
    entries: list[FaultEntry] = field(default_factory=list)

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")

    def status_array(self, spec: GridSpec) -> np.ndarray:
        status = np.zeros(spec.node_count, dtype=np.int8)
        for e in self.entries:
            idx = spec.node_index(e.x, e.y)
            if e.kind == "failstop":
                status[idx] = _STATUS_FAILSTOP
            else:
                status[idx] = _STATUS_OF_MODE[e.mode]
        return status


@dataclass
class PlanReport:
    ok: bool
    errors: list[str]
    window_max: int  # worst fault count over every aligned (2r+1)^2 window
    t_used: int  # worst per-window byzantine count (0 outside that regime)
    bounds: dict


class PlanValidationError(ValueError):
    def __init__(self, report: PlanReport):
        super().__init__("; ".join(report.errors) or "invalid fault plan")
        self.report = report


def _window_max(spec: GridSpec, faulty: np.ndarray) -> int:
    """Max fault count over all fully-inside (2r+1)x(2r+1) alignments."""
    p = spec.period
    grid = faulty.reshape(spec.height, spec.width).astype(np.int64)
    cs = np.zeros((spec.height + 1, spec.width + 1), dtype=np.int64)
    cs[1:, 1:] = grid.cumsum(0).cumsum(1)
    best = 0
    for y0 in range(spec.height - p + 1):
        for x0 in range(spec.width - p + 1):
            c = cs[y0 + p, x0 + p] - cs[y0, x0 + p] - cs[y0 + p, x0] + cs[y0, x0]
            best = max(best, int(c))
    return best


def validate_fault_plan(
    spec: GridSpec, plan: FaultPlan, theta: int | None = None
) -> PlanReport:
    """Check a plan against every density and liveness requirement.

    Fail-stop: at most floor(n/2) faults in every aligned window and at
    most half of every correct node's punctured neighbourhood. Byzantine:
    per-window count within the hard cap t < (r/2)(2r+1), and every correct
    node keeps at least theta honest-behaving punctured neighbours (theta
    defaults to t_used + 1). Both regimes: dealer correct, and the correct
    part of the grid connected to the dealer under r-adjacency.
    """
    errors = []
    n = spec.slots
    seen = set()
    for e in plan.entries:
        if not spec.in_bounds(e.x, e.y):
            errors.append(f"entry {(e.x, e.y)} outside the grid")
        if (e.x, e.y) in seen:
            errors.append(f"duplicate entry {(e.x, e.y)}")
        seen.add((e.x, e.y))
        if (e.x, e.y) == (0, 0):
            errors.append("the dealer cannot be faulty")
        if plan.regime == "failstop" and e.kind != "failstop":
            errors.append(f"{e.kind} entry in a fail-stop plan")
        if plan.regime == "byzantine" and e.kind == "byzantine":
            if e.mode not in BYZ_MODES:
                errors.append(f"bad byzantine mode {e.mode!r} at {(e.x, e.y)}")
        if plan.regime == "none":
            errors.append("regime 'none' admits no fault entries")
    if errors:
        return PlanReport(False, errors, 0, 0, {})

    status = plan.status_array(spec)
    failstop = status == _STATUS_FAILSTOP
    byz = status >= 2
    honest = ~failstop & ~byz | (status == _STATUS_OF_MODE["wrong_data"])
    correct = status == _STATUS_OK

    window_fail = _window_max(spec, failstop)
    window_byz = _window_max(spec, byz)
    t_cap = t_max_byzantine(spec.r)
    if window_fail > n // 2:
        errors.append(
            f"{window_fail} fail-stop faults in some window; cap is {n // 2}"
        )
    if window_byz > t_cap:
        errors.append(
            f"{window_byz} byzantine nodes in some window; cap is {t_cap}"
        )
    t_used = window_byz
    if theta is None:
        theta = t_used + 1 if plan.regime == "byzantine" else 1

    # per-node feasibility
    for y in range(spec.height):
        for x in range(spec.width):
            if not correct[spec.node_index(x, y)]:
                continue
            punct = spec.punctured_neighborhood(x, y)
            deg = len(punct)
            failed = sum(
                1 for q in punct if failstop[spec.node_index(*q)]
            )
            nb_byz = sum(1 for q in punct if byz[spec.node_index(*q)])
            if plan.regime == "failstop" and failed > deg // 2:
                errors.append(
                    f"node {(x, y)}: {failed} of {deg} neighbours fail-stopped"
                )
            if plan.regime == "byzantine":
                honest_nb = sum(1 for q in punct if honest[spec.node_index(*q)])
                if honest_nb < theta:
                    errors.append(
                        f"node {(x, y)}: only {honest_nb} honest neighbours "
                        f"for theta={theta}"
                    )
                if nb_byz > t_cap:
                    errors.append(
                        f"node {(x, y)}: {nb_byz} byzantine neighbours exceed "
                        f"t_max={t_cap}"
                    )

    # connectivity of the correct subgraph from the dealer
    if not errors:
        r = spec.r
        reach = np.zeros(spec.node_count, dtype=bool)
        stack = [(0, 0)]
        reach[0] = True
        while stack:
            cx, cy = stack.pop()
            for qx, qy in spec.punctured_neighborhood(cx, cy):
                qi = spec.node_index(qx, qy)
                if correct[qi] and not reach[qi]:
                    reach[qi] = True
                    stack.append((qx, qy))
        missed = int(np.sum(correct & ~reach))
        if missed:
            errors.append(
                f"{missed} correct nodes unreachable from the dealer "
                f"through correct nodes"
            )

    bounds = {
        "window_failstop_cap": n // 2,
        "t_max": t_cap,
        "theta": theta,
        "window_failstop": window_fail,
        "window_byzantine": window_byz,
    }
    return PlanReport(not errors, errors, max(window_fail, window_byz), t_used, bounds)


# ---- generators -------------------------------------------------------------

# Residue trick: every aligned (2r+1)^2 window contains each slot residue
# exactly once, so failing the nodes of a residue set S puts exactly |S|
# faults in every fully-interior window. Keeping a boundary band of width
# 2r+1 alive preserves corner/edge feasibility and connectivity.


def _band_mask(spec: GridSpec, band: int):
    def deep(x: int, y: int) -> bool:
        return (
            band <= x < spec.width - band and band <= y < spec.height - band
        )

    return deep


def _residue_plan(
    spec: GridSpec, residues, kind: str, mode: str | None, band: int
) -> list[FaultEntry]:
    rset = set(int(s) for s in residues)
    deep = _band_mask(spec, band)
    out = []
    for y in range(spec.height):
        for x in range(spec.width):
            if spec.slot(x, y) in rset and deep(x, y) and (x, y) != (0, 0):
                out.append(FaultEntry(x, y, kind, mode))
    return out


def random_failstop_plan(
    spec: GridSpec, seed: int, count: int | None = None, band: int | None = None
) -> FaultPlan:
    """Random maximum-density fail-stop plan (floor(n/2) faults per window).

    Draws a random residue set of the requested size, fails its deep-interior
    nodes, and re-draws until the validator passes (the live boundary band
    makes nearly every draw valid).
    """
    from ._prng import SplitMix64, mix, sample_sorted

    n = spec.slots
    count = n // 2 if count is None else count
    band = spec.period if band is None else band
    for attempt in range(200):
        rng = SplitMix64(mix(seed, 0xFA11, attempt))
        residues = sample_sorted(rng, count, n)
        plan = FaultPlan("failstop", _residue_plan(spec, residues, "failstop", None, band))
        if validate_fault_plan(spec, plan).ok:
            return plan
    raise RuntimeError(
        f"no valid fail-stop plan with {count} residues after 200 draws"
    )


def frontloaded_failstop_plan(spec: GridSpec, band: int | None = None) -> FaultPlan:
    """Deterministic worst case: fail every deep node owning a low slot.

    The surviving deep nodes all own slots >= floor(n/2), so a deep
    listener's slot-ordered neighbourhood reads as a silent prefix followed
    by a live suffix — the stream shape that costs the samplers most.
    """
    band = spec.period if band is None else band
    residues = range(spec.slots // 2)
    plan = FaultPlan(
        "failstop", _residue_plan(spec, residues, "failstop", None, band)
    )
    report = validate_fault_plan(spec, plan)
    if not report.ok:
        raise PlanValidationError(report)
    return plan


def random_byzantine_plan(
    spec: GridSpec,
    t: int,
    mode: str,
    seed: int,
    band: int | None = None,
    theta: int | None = None,
) -> FaultPlan:
    """Random plan with exactly t byzantine nodes per interior window."""
    from ._prng import SplitMix64, mix, sample_sorted

    if mode not in BYZ_MODES:
        raise ValueError(f"unknown byzantine mode {mode!r}")
    if t > t_max_byzantine(spec.r):
        raise ValueError(f"t={t} above t_max={t_max_byzantine(spec.r)}")
    band = spec.period if band is None else band
    for attempt in range(200):
        rng = SplitMix64(mix(seed, 0xB1, attempt))
        residues = sample_sorted(rng, t, spec.slots)
        plan = FaultPlan(
            "byzantine", _residue_plan(spec, residues, "byzantine", mode, band)
        )
        if validate_fault_plan(spec, plan, theta=theta).ok:
            return plan
    raise RuntimeError(f"no valid byzantine plan with t={t} after 200 draws")


# ---- scenario files ----------------------------------------------------------


def save_scenario(path, spec: GridSpec, plan: FaultPlan, seed: int) -> None:
    """Write the line format: grid W H R SEED, then one line per fault."""
    lines = [f"grid {spec.width} {spec.height} {spec.r} {seed}"]
    for e in plan.entries:
        if e.kind == "failstop":
            lines.append(f"failstop {e.x} {e.y}")
        else:
            lines.append(f"byzantine {e.x} {e.y} {e.mode}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_scenario(path) -> tuple[GridSpec, FaultPlan, int]:
    spec = None
    seed = 0
    entries: list[FaultEntry] = []
    regime = "none"
    for ln, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if tok[0] == "grid":
            if len(tok) != 5:
                raise ValueError(f"{path}:{ln}: grid needs W H R SEED")
            w, h, r, seed = map(int, tok[1:])
            spec = GridSpec(w, h, r)
        elif tok[0] == "failstop":
            if len(tok) != 3:
                raise ValueError(f"{path}:{ln}: failstop needs X Y")
            entries.append(FaultEntry(int(tok[1]), int(tok[2]), "failstop"))
            regime = "failstop"
        elif tok[0] == "byzantine":
            if len(tok) != 4 or tok[3] not in BYZ_MODES:
                raise ValueError(f"{path}:{ln}: byzantine needs X Y MODE")
            entries.append(
                FaultEntry(int(tok[1]), int(tok[2]), "byzantine", tok[3])
            )
            regime = "byzantine"
        else:
            raise ValueError(f"{path}:{ln}: unknown directive {tok[0]!r}")
    if spec is None:
        raise ValueError(f"{path}: missing grid line")
    kinds = {e.kind for e in entries}
    if len(kinds) > 1:
        raise ValueError(f"{path}: fail-stop and byzantine entries mixed")
    return spec, FaultPlan(regime, entries), seed


# ====================== simulation configuration and results ======================


@dataclass
class BroadcastConfig:
    """Everything one simulation run needs."""

    grid: GridSpec
    k: int = 0
    plan: FaultPlan | None = None
    theta: int | None = None  # default: 1, or t_used+1 under byzantine faults
    message: bytes = b"\xa5" * 32
    seed: int = 0
    rebroadcasts: int | None = None  # None = keep re-broadcasting
    validate: bool = True

    @property
    def regime(self) -> str:
        return self.plan.regime if self.plan is not None else "none"

    @property
    def msg_bits(self) -> int:
        return len(self.message) * 8


@dataclass
class BroadcastResult:
    """Per-node arrays plus run-level aggregates from one simulation."""

    config: BroadcastConfig
    theta: int
    fp_value: int
    fp_bits: int
    t_init: int
    t_end: int
    nodes: dict  # name -> np.ndarray over node index (y*W + x)
    aggregates: dict

    def node_records(self):
        spec = self.config.grid
        arr = self.nodes
        for i in range(spec.node_count):
            x, y = i % spec.width, i // spec.width
            yield {
                "x": x,
                "y": y,
                "status": int(arr["status"][i]),
                "slot": spec.slot(x, y),
                "commit_time_fp": int(arr["fp_commit"][i]),
                "commit_time_data": int(arr["data_commit"][i]),
                "deadline_fp": int(arr["deadline"][i]),
                "wait_gate": int(arr["gate"][i]),
                "awake_slots": int(arr["awake"][i]),
                "total_slots": self.t_end - self.t_init + 1,
                "listened_bits": int(arr["listened_bits"][i]),
                "fp_listened_bits": int(arr["fp_listened_bits"][i]),
                "data_listened_bits": int(arr["data_listened_bits"][i]),
                "data_listened_messages": int(arr["data_listened_msgs"][i]),
                "data_listen_slots": int(arr["data_listen_slots"][i]),
                "data_window_slots": int(arr["data_window_slots"][i]),
                "sent_bits": int(arr["sent_bits"][i]),
                "sent_messages": int(arr["sent_msgs"][i]),
                "committed_ok": int(arr["payload_ok"][i]),
            }

    def to_json(self) -> str:
        spec = self.config.grid
        return json.dumps(
            {
                "config": {
                    "width": spec.width,
                    "height": spec.height,
                    "r": spec.r,
                    "k": self.config.k,
                    "regime": self.config.regime,
                    "theta": self.theta,
                    "msg_bits": self.config.msg_bits,
                    "fp_bits": self.fp_bits,
                    "seed": self.config.seed,
                    "faults": len(self.config.plan.entries)
                    if self.config.plan
                    else 0,
                },
                "t_init": self.t_init,
                "t_end": self.t_end,
                "aggregates": self.aggregates,
                "nodes": list(self.node_records()),
            },
            sort_keys=True,
        )


def _run(config: BroadcastConfig, fp_only: bool, backend: str | None) -> BroadcastResult:
    from . import _backend

    spec = config.grid
    if config.plan is not None and config.validate:
        report = validate_fault_plan(spec, config.plan, theta=config.theta)
        if not report.ok:
            raise PlanValidationError(report)
        t_used = report.t_used
    else:
        t_used = 0
    if config.theta is not None:
        theta = config.theta
    elif config.regime == "byzantine":
        theta = t_used + 1
    else:
        theta = 1

    status = (
        config.plan.status_array(spec)
        if config.plan is not None
        else np.zeros(spec.node_count, dtype=np.int8)
    )
    fpb = fingerprint_bits(config.msg_bits)
    params = {
        "W": spec.width,
        "H": spec.height,
        "r": spec.r,
        "k": config.k,
        "theta": theta,
        "seed": config.seed,
        "msg_bits": config.msg_bits,
        "fp_bits": fpb,
        "status": status,
        "rebroadcasts": -1 if config.rebroadcasts is None else config.rebroadcasts,
        "fp_only": fp_only,
    }
    out = _backend.run_broadcast(params, backend=backend)

    deadline = np.array(
        [
            commit_deadline(spec, (i % spec.width, i // spec.width))
            for i in range(spec.node_count)
        ],
        dtype=np.int64,
    )
    gate = np.array(
        [
            data_wait_gate(spec, (i % spec.width, i // spec.width))
            for i in range(spec.node_count)
        ],
        dtype=np.int64,
    )
    nodes = dict(out)
    for scalar in ("t_init", "t_end", "slots"):
        nodes.pop(scalar)
    nodes["status"] = status
    nodes["deadline"] = deadline
    nodes["gate"] = gate

    correct = status == _STATUS_OK
    fp_times = nodes["fp_commit"]
    slack = fp_times[correct] - deadline[correct]
    aggregates = {
        "correct_nodes": int(correct.sum()),
        "fp_committed_correct": int(np.sum(correct & (fp_times >= 0))),
        "max_fp_slack": int(slack.max()) if slack.size else 0,
        "fp_deadline_violations": int(np.sum(slack > 0)),
    }
    if not fp_only:
        ok = nodes["payload_ok"]
        noninit = correct & (np.arange(spec.node_count) != 0)
        aggregates.update(
            {
                "data_committed_correct": int(
                    np.sum(correct & (nodes["data_commit"] >= 0))
                ),
                "agreement_ok": bool(np.all(ok[correct] == 1)),
                "mean_data_listened_messages": float(
                    nodes["data_listened_msgs"][noninit].mean()
                )
                if noninit.any()
                else 0.0,
                "max_retries": int(nodes["retries_used"].max()),
            }
        )

    return BroadcastResult(
        config=config,
        theta=theta,
        fp_value=fingerprint(config.message),
        fp_bits=fpb,
        t_init=int(out["t_init"]),
        t_end=int(out["t_end"]),
        nodes=nodes,
        aggregates=aggregates,
    )


def run_broadcast_sim(config: BroadcastConfig, backend: str | None = None) -> BroadcastResult:
    """Run both phases on one timeline and return the full result."""
    return _run(config, fp_only=False, backend=backend)


def run_fingerprint_phase(config: BroadcastConfig, backend: str | None = None) -> BroadcastResult:
    """Run until every correct node holds the fingerprint, then stop."""
    return _run(config, fp_only=True, backend=backend)


def run_data_phase(config: BroadcastConfig, backend: str | None = None) -> BroadcastResult:
    """Alias for the full run: the data wave needs the fingerprint wave.

    The phases share the timeline (gates keep them apart in space), so
    "just the data phase" is the full simulation viewed through the
    data_* fields of the result.
    """
    return _run(config, fp_only=False, backend=backend)
