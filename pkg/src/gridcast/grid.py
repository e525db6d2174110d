"""Grid radio network: geometry, the slot schedule, and delivery semantics.

Nodes sit on the integer points of a W x H grid; a transmission from (x, y)
reaches every other node within L-infinity distance r. Medium access is a
fixed TDMA schedule: node (x, y) owns slot (x mod 2r+1) * (2r+1) + (y mod
2r+1), the schedule has period n = (2r+1)^2 slots (one *round*), and any two
nodes sharing a slot are at least 2r+1 apart along some axis — outside each
other's interference range, so the schedule is collision-free by
construction (``verify_collision_free`` proves it for a given spec).

The dealer sits at the origin, owns slot 0, and t = 0 is its first slot, so
simulated time starts at t_init = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CollisionViolation",
    "FingerprintPhaseStall",
    "DataPhaseStall",
    "GridSpec",
    "SlotSchedule",
    "build_schedule",
    "verify_collision_free",
    "corridor_membership",
    "RadioNetwork",
]


class CollisionViolation(RuntimeError):
    """Two transmitters reached a common receiver in one slot."""


class FingerprintPhaseStall(RuntimeError):
    """A correct node could never commit to the fingerprint."""


class DataPhaseStall(RuntimeError):
    """A correct node exhausted its retry budget without the payload."""


DEALER = (0, 0)


@dataclass(frozen=True)
class GridSpec:
    """A W x H grid with transmission radius r; dealer pinned at (0, 0)."""

    width: int
    height: int
    r: int

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("radius must be >= 1")
        p = 2 * self.r + 1
        if self.width < p or self.height < p:
            raise ValueError(
                f"grid {self.width}x{self.height} smaller than one period ({p})"
            )

    @property
    def period(self) -> int:
        return 2 * self.r + 1

    @property
    def slots(self) -> int:
        """Slots per round: n = (2r+1)^2."""
        return self.period * self.period

    @property
    def node_count(self) -> int:
        return self.width * self.height

    def in_bounds(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def node_index(self, x: int, y: int) -> int:
        return y * self.width + x

    def slot(self, x: int, y: int) -> int:
        return (x % self.period) * self.period + (y % self.period)

    def neighborhood(self, x: int, y: int) -> list[tuple[int, int]]:
        """All in-range nodes including (x, y) itself, row-major order."""
        r = self.r
        return [
            (xx, yy)
            for yy in range(max(0, y - r), min(self.height, y + r + 1))
            for xx in range(max(0, x - r), min(self.width, x + r + 1))
        ]

    def punctured_neighborhood(self, x: int, y: int) -> list[tuple[int, int]]:
        """In-range nodes excluding (x, y): the node's potential senders."""
        return [q for q in self.neighborhood(x, y) if q != (x, y)]

    def members_by_slot(self, x: int, y: int) -> list[tuple[int, int]]:
        """Punctured neighborhood sorted by slot: the data-phase stream order.

        Within any (2r+1)-window all slots are distinct, so the order is a
        strict total order.
        """
        return sorted(self.punctured_neighborhood(x, y), key=lambda q: self.slot(*q))


@dataclass
class SlotSchedule:
    """Materialized schedule: slot per node and transmitters per slot."""

    spec: GridSpec
    slot_of: np.ndarray  # shape (H, W), int32
    nodes_of_slot: list[list[tuple[int, int]]] = field(repr=False)


def build_schedule(spec: GridSpec) -> SlotSchedule:
    ys, xs = np.mgrid[0 : spec.height, 0 : spec.width]
    slot_of = ((xs % spec.period) * spec.period + (ys % spec.period)).astype(np.int32)
    nodes = [[] for _ in range(spec.slots)]
    for y in range(spec.height):
        for x in range(spec.width):
            nodes[slot_of[y, x]].append((x, y))
    return SlotSchedule(spec=spec, slot_of=slot_of, nodes_of_slot=nodes)


def verify_collision_free(spec: GridSpec) -> None:
    """Raise CollisionViolation unless same-slot nodes stay out of range.

    Two same-slot transmitters must be > 2r apart in L-infinity, otherwise
    some receiver could hear both in one slot.
    """
    sched = build_schedule(spec)
    for group in sched.nodes_of_slot:
        for i, (x1, y1) in enumerate(group):
            for x2, y2 in group[i + 1 :]:
                if max(abs(x1 - x2), abs(y1 - y2)) <= 2 * spec.r:
                    raise CollisionViolation(
                        f"nodes {(x1, y1)} and {(x2, y2)} share slot "
                        f"{spec.slot(x1, y1)} within interference range"
                    )


def corridor_membership(spec: GridSpec, x: int, y: int) -> set[tuple[int, int]]:
    """Nodes whose transmissions the protocol lets (x, y) stay awake for.

    Union of the horizontal strip {x' <= x, |y' - y| <= r} and the vertical
    strip {|x'| <= r, y' <= y + r}, both extended r beyond their low edge
    and clipped to the grid: the corridor the dealer's wave travels to reach
    (x, y) column-first.
    """
    r = spec.r
    out: set[tuple[int, int]] = set()
    for xx in range(max(0, -r), min(spec.width, x + 1)):
        for yy in range(max(0, y - r), min(spec.height, y + r + 1)):
            out.add((xx, yy))
    for xx in range(max(0, -r), min(spec.width, r + 1)):
        for yy in range(0, min(spec.height, y + r + 1)):
            out.add((xx, yy))
    return out


class RadioNetwork:
    """Step/deliver semantics in miniature, with per-node energy ledgers.

    This is the behavioural contract the simulation kernels implement in
    bulk: ``deliver`` fans a payload out to the in-range, non-fail-stopped,
    currently-listening nodes of the sender's slot-step; ``step`` advances
    one slot and charges awake time to listeners. Protocol logic lives
    elsewhere — this class only moves bits and keeps honest books.
    """

    def __init__(self, spec: GridSpec, failstop=()):
        self.spec = spec
        self.schedule = build_schedule(spec)
        self.failstop = set(failstop)
        self.t = 0
        self.listening: set[tuple[int, int]] = set()
        self.ledgers = {
            (x, y): {"awake_slots": 0, "listened_bits": 0, "sent_bits": 0}
            for y in range(spec.height)
            for x in range(spec.width)
        }
        self._hit_this_step: set[tuple[int, int]] = set()
        self._step_of_last_delivery = -1

    @property
    def current_slot(self) -> int:
        return self.t % self.spec.slots

    def deliver(self, sender: tuple[int, int], bits: int) -> list[tuple[int, int]]:
        """Transmit ``bits`` from ``sender`` in the current slot.

        Returns the receivers (in-range, alive, listening). A fail-stopped
        sender consumes the slot but delivers nothing. Raises
        CollisionViolation if a receiver already heard a transmission this
        step — impossible under the schedule, checked anyway.
        """
        x, y = sender
        if self.spec.slot(x, y) != self.current_slot:
            raise ValueError(
                f"{sender} owns slot {self.spec.slot(x, y)}, current is "
                f"{self.current_slot}"
            )
        if self._step_of_last_delivery != self.t:
            self._hit_this_step.clear()
            self._step_of_last_delivery = self.t
        if sender in self.failstop:
            return []
        self.ledgers[sender]["sent_bits"] += bits
        received = []
        for q in self.spec.punctured_neighborhood(x, y):
            if q in self.failstop:
                continue
            if q in self._hit_this_step:
                raise CollisionViolation(f"{q} hit twice in slot {self.current_slot}")
            self._hit_this_step.add(q)
            if q in self.listening:
                self.ledgers[q]["listened_bits"] += bits
                received.append(q)
        return received

    def step(self) -> int:
        """Advance one slot; listeners pay one awake slot (idle or not)."""
        for q in self.listening:
            if q not in self.failstop:
                self.ledgers[q]["awake_slots"] += 1
        self.t += 1
        return self.t
