"""Ion-trap physical machine description: well graph, occupancy rules, timing/error table.

The layout is a grid of linear trapping regions ("bus segments", four wells
each) joined by cross junctions, modeled after the QCCD architecture.  Each
row of segments carries one interaction well per segment; junction columns
are linked vertically by four-well bus segments.  Shuttling between adjacent
wells costs 10 us, with a 10 us surcharge for splitting an ion out of an
occupied well and another for joining one.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

SEGMENT_WELLS = 4          # wells per bus segment
PITCH = SEGMENT_WELLS + 1  # grid distance between adjacent junction columns/rows
INTERACTION_SLOT = 2       # which well of a segment (1..4) is the interaction well
SHUTTLE_STEP_US = 10.0     # move between adjacent wells
JOIN_SPLIT_US = 10.0       # surcharge per join or split
WAIT_Z_RATE_PER_US = 5.5e-10


class WellKind(enum.Enum):
    INTERACTION = "interaction"
    LOADING = "loading"
    BUS = "bus"
    JUNCTION = "junction"


@dataclass(frozen=True, order=True)
class WellId:
    """Grid coordinate of a well; doubles as its unique identifier."""

    row: int
    col: int


@dataclass(frozen=True)
class Well:
    id: WellId
    kind: WellKind
    capacity: int

    def __post_init__(self):
        if not 1 <= self.capacity <= 5:
            raise ValueError(f"well capacity must be in [1,5], got {self.capacity}")


class LayoutError(Exception):
    """Illegal layout construction or occupancy change."""


class LayoutGraph:
    """Planar well graph with adjacency and per-well ion occupancy."""

    def __init__(self, wells: dict[WellId, Well], edges: set[frozenset]):
        self.wells = wells
        self.adjacency: dict[WellId, list[WellId]] = {w: [] for w in wells}
        for edge in edges:
            a, b = sorted(edge)
            if a not in wells or b not in wells:
                raise LayoutError(f"edge {a}-{b} references unknown well")
            if abs(a.row - b.row) + abs(a.col - b.col) != 1:
                raise LayoutError(f"edge {a}-{b} joins non-adjacent wells")
            self.adjacency[a].append(b)
            self.adjacency[b].append(a)
        for w in self.adjacency:
            self.adjacency[w].sort()
        self.edges = edges
        self.occupancy: dict[WellId, list] = {w: [] for w in wells}
        self.positions: dict = {}

    # -------- queries --------

    def neighbors(self, well: WellId) -> list[WellId]:
        return self.adjacency[well]

    def interaction_wells(self) -> list[WellId]:
        return sorted(w for w, well in self.wells.items()
                      if well.kind is WellKind.INTERACTION)

    def is_connected(self) -> bool:
        if not self.wells:
            return True
        seen = set()
        stack = [next(iter(self.wells))]
        while stack:
            w = stack.pop()
            if w in seen:
                continue
            seen.add(w)
            stack.extend(n for n in self.adjacency[w] if n not in seen)
        return len(seen) == len(self.wells)

    # -------- occupancy --------

    def place(self, qubit, well: WellId) -> None:
        if qubit in self.positions:
            raise LayoutError(f"qubit {qubit} already placed")
        if len(self.occupancy[well]) >= self.wells[well].capacity:
            raise LayoutError(f"well {well} at capacity")
        self.occupancy[well].append(qubit)
        self.positions[qubit] = well

    def copy(self) -> "LayoutGraph":
        g = LayoutGraph(self.wells, self.edges)
        g.occupancy = {w: list(q) for w, q in self.occupancy.items()}
        g.positions = dict(self.positions)
        return g


def apply_occupancy_change(layout: LayoutGraph, qubit, frm: WellId,
                           to: WellId) -> float:
    """Move a qubit along one edge, mutating occupancy; returns the cost in us.

    Cost is the 10 us shuttle plus 10 us if the source held more than one ion
    (split) and 10 us if the destination was occupied (join).
    """
    if qubit not in layout.occupancy[frm]:
        raise LayoutError(f"qubit {qubit} not in well {frm}")
    if to not in layout.adjacency[frm]:
        raise LayoutError(f"wells {frm} and {to} are not adjacent")
    if len(layout.occupancy[to]) >= layout.wells[to].capacity:
        raise LayoutError(f"well {to} at capacity")
    cost = SHUTTLE_STEP_US
    if len(layout.occupancy[frm]) > 1:
        cost += JOIN_SPLIT_US
    if len(layout.occupancy[to]) >= 1:
        cost += JOIN_SPLIT_US
    layout.occupancy[frm].remove(qubit)
    layout.occupancy[to].append(qubit)
    layout.positions[qubit] = to
    return cost


def build_pmd_layout(rows: int, cols: int) -> LayoutGraph:
    """Grid of `rows` segment rows, `cols` four-well bus segments per row.

    Junctions sit at both ends of every segment; junction columns of adjacent
    rows are linked by vertical four-well bus segments.  One interaction well
    per segment, one loading well per row at the west edge.
    """
    if rows < 1 or cols < 1:
        raise LayoutError("layout needs at least one row and one column")
    wells: dict[WellId, Well] = {}
    edges: set[frozenset] = set()

    def add(well: Well):
        wells[well.id] = well

    for r in range(rows):
        y = r * PITCH
        for jc in range(cols + 1):
            add(Well(WellId(y, jc * PITCH), WellKind.JUNCTION, 1))
        for c in range(cols):
            for k in range(1, SEGMENT_WELLS + 1):
                kind = WellKind.INTERACTION if k == INTERACTION_SLOT else WellKind.BUS
                cap = 5 if kind is WellKind.INTERACTION else 1
                add(Well(WellId(y, c * PITCH + k), kind, cap))
        add(Well(WellId(y, -1), WellKind.LOADING, 5))
        # horizontal chain edges, including the loading well on the west end
        xs = [-1] + list(range(0, cols * PITCH + 1))
        for x0, x1 in zip(xs, xs[1:]):
            edges.add(frozenset((WellId(y, x0), WellId(y, x1))))
    for r in range(rows - 1):
        y0 = r * PITCH
        for jc in range(cols + 1):
            x = jc * PITCH
            for k in range(1, SEGMENT_WELLS + 1):
                add(Well(WellId(y0 + k, x), WellKind.BUS, 1))
            ys = list(range(y0, y0 + PITCH + 1))
            for a, b in zip(ys, ys[1:]):
                edges.add(frozenset((WellId(a, x), WellId(b, x))))
    return LayoutGraph(wells, edges)


def interaction_well(row: int, col: int) -> WellId:
    """Interaction well of segment `col` in segment-row `row`."""
    return WellId(row * PITCH, col * PITCH + INTERACTION_SLOT)


def grid_distance(a: WellId, b: WellId) -> int:
    """Steps between wells ignoring traffic (manhattan distance on the grid)."""
    return abs(a.row - b.row) + abs(a.col - b.col)


# ---------------------------------------------------------------------------
# Device parameter table
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GateCosts:
    latency: float
    x_rate: float = 0.0
    y_rate: float = 0.0
    z_rate: float = 0.0

    def __post_init__(self):
        if self.latency < 0:
            raise ValueError("latency must be >= 0")
        for r in (self.x_rate, self.y_rate, self.z_rate):
            if not 0.0 <= r <= 1.0:
                raise ValueError("rates must lie in [0,1]")


@dataclass(frozen=True)
class CZCosts:
    latency: float
    iz_rate: float
    zi_rate: float
    zz_rate: float


GATE_NAMES = ("X", "Y", "Z", "S", "T", "HADAMARD",
              "PREPARE_Z", "MEASURE_Z", "MULTIMEASURE_Z", "JOIN_SPLIT")
MEASUREMENT_GATES = ("MEASURE_Z", "MULTIMEASURE_Z")


@dataclass(frozen=True)
class DeviceParams:
    """Latency and Pauli error rates per physical operation (Table-1 style).

    Multipliers scale latencies only; WAIT/MOVE error stays proportional to
    the (scaled) duration, so it grows implicitly with slower gates.
    """

    gates: dict[str, GateCosts]
    cz: CZCosts
    wait_z_rate_per_us: float = WAIT_Z_RATE_PER_US
    shuttle_step_us: float = SHUTTLE_STEP_US
    join_split: GateCosts = field(
        default_factory=lambda: GateCosts(JOIN_SPLIT_US, 0.0, 0.0, 5.5e-9))
    gate_time_multiplier: float = 1.0
    measurement_time_multiplier: float = 1.0

    def __post_init__(self):
        if self.gate_time_multiplier < 0 or self.measurement_time_multiplier < 0:
            raise ValueError("multipliers must be >= 0")

    def latency(self, gate: str) -> float:
        if gate == "CZ":
            return self.cz.latency * self.gate_time_multiplier
        costs = self.gates[gate]
        if gate in MEASUREMENT_GATES:
            return costs.latency * self.measurement_time_multiplier
        if gate == "PREPARE_Z":
            return costs.latency
        return costs.latency * self.gate_time_multiplier

    def rates(self, gate: str) -> GateCosts:
        return self.gates[gate]

    def move_latency(self, steps: int = 1) -> float:
        return self.shuttle_step_us * steps

    def wait_z_error(self, duration_us: float) -> float:
        return duration_us * self.wait_z_rate_per_us

    def with_multipliers(self, gate: float = 1.0, measurement: float = 1.0
                         ) -> "DeviceParams":
        return replace(self, gate_time_multiplier=gate,
                       measurement_time_multiplier=measurement)


def default_device_params() -> DeviceParams:
    """The stock ion-trap parameter table."""
    gates = {
        "X": GateCosts(3.0, 1.6e-8, 8.0e-10, 1.0e-9),
        "Y": GateCosts(3.0, 8.0e-10, 1.6e-8, 1.0e-9),
        "Z": GateCosts(3.0, 0.0, 0.0, 1.8e-8),
        "S": GateCosts(2.0, 0.0, 0.0, 5.5e-9),
        "T": GateCosts(1.0, 0.0, 0.0, 1.7e-9),
        "HADAMARD": GateCosts(6.0, 1.6e-8, 4.0e-9, 1.9e-9),
        "PREPARE_Z": GateCosts(10.0, 0.0, 0.0, 0.0),
        "MEASURE_Z": GateCosts(100.0, 0.0, 0.0, 1.0e-4),
        "MULTIMEASURE_Z": GateCosts(355.0, 0.0, 0.0, 3.1e-6),
        "JOIN_SPLIT": GateCosts(10.0, 0.0, 0.0, 5.5e-9),
    }
    cz = CZCosts(latency=105.5, iz_rate=6.7e-8, zi_rate=6.7e-8, zz_rate=2.5e-5)
    return DeviceParams(gates=gates, cz=cz)
