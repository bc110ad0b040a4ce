"""Compile high-level schedules onto the trap layout.

Routing is safe-interval A* over the well graph: each well holds a list of
reserved stays (bounded or open-ended), each edge a list of transit windows.
Qubit paths insert waits as needed; collisions (capacity or swap) are
impossible by construction and re-checked by the replay validator in tests.

Dispatch is deterministic list scheduling: blocks in order, ops in listed
order within a block, each op starting at the max of its qubits' ready times
and its block dependencies.  Earlier-listed move requests get reservation
priority ("the first qubit is moved with no impediment"); one greedy
adjacent-swap pass re-orders a block's moves when that strictly reduces the
block's makespan.
"""

from __future__ import annotations

import hashlib
import heapq
import math
from dataclasses import dataclass, field

from .circuits import (Gate, HighLevelSchedule, MeasureTag, MeasureZ,
                       MoveRequest, MultiMeasureZ, PrepareZ, ScheduleError)
from .device import (DeviceParams, LayoutGraph, WellId, WellKind,
                     grid_distance)

INF = math.inf
STEP = 10.0
SURCHARGE = 10.0


class RoutingError(ScheduleError):
    """No feasible path (fully blocked) or an impossible co-location."""


# ---------------------------------------------------------------------------
# Reservation table
# ---------------------------------------------------------------------------


class ReservationTable:
    """Space-time bookings: per-well stays and per-edge transit windows."""

    def __init__(self, layout: LayoutGraph):
        self.layout = layout
        self.stays: dict[WellId, list] = {w: [] for w in layout.wells}
        self.edges: dict[frozenset, list] = {}

    def copy(self) -> "ReservationTable":
        t = ReservationTable.__new__(ReservationTable)
        t.layout = self.layout
        t.stays = {w: list(v) for w, v in self.stays.items()}
        t.edges = {e: list(v) for e, v in self.edges.items()}
        return t

    def open_stay(self, qubit, well: WellId, start: float) -> None:
        self.stays[well].append((start, INF, qubit))

    def close_stay(self, qubit, well: WellId, end: float) -> None:
        lst = self.stays[well]
        for i, (s, e, q) in enumerate(lst):
            if q == qubit and e == INF:
                lst[i] = (s, end, q)
                return
        raise RoutingError(f"no open stay for {qubit} at {well}")

    def book_edge(self, a: WellId, b: WellId, t0: float, t1: float) -> None:
        self.edges.setdefault(frozenset((a, b)), []).append((t0, t1))

    def edge_free(self, a: WellId, b: WellId, t0: float, t1: float) -> bool:
        for (s, e) in self.edges.get(frozenset((a, b)), ()):
            if s < t1 and t0 < e:
                return False
        return True

    def edge_next_free(self, a: WellId, b: WellId, t0: float,
                       duration: float) -> float:
        t = t0
        for (s, e) in sorted(self.edges.get(frozenset((a, b)), ())):
            if s < t + duration and t < e:
                t = e
        return t

    def count_at(self, well: WellId, t: float, exclude=None) -> int:
        return sum(1 for (s, e, q) in self.stays[well]
                   if q != exclude and s <= t < e)

    def max_count_from(self, well: WellId, t: float, exclude=None) -> int:
        points = [t]
        for (s, e, q) in self.stays[well]:
            if q != exclude and e > t:
                points.append(max(s, t))
        return max(self.count_at(well, p, exclude) for p in sorted(points))

    def safe_intervals(self, well: WellId, exclude=None) -> list:
        """Maximal intervals where occupancy is strictly below capacity."""
        cap = self.layout.wells[well].capacity
        marks: list[tuple[float, int]] = []
        for (s, e, q) in self.stays[well]:
            if q == exclude:
                continue
            marks.append((s, 1))
            if e is not INF:
                marks.append((e, -1))
        if not marks:
            return [(0.0, INF)]
        marks.sort()
        intervals = []
        count = 0
        safe_since: float | None = 0.0
        i = 0
        while i < len(marks):
            t = marks[i][0]
            delta = 0
            while i < len(marks) and marks[i][0] == t:
                delta += marks[i][1]
                i += 1
            new_count = count + delta
            if count < cap <= new_count:
                if safe_since is not None and t > safe_since:
                    intervals.append((safe_since, t))
                safe_since = None
            elif count >= cap > new_count:
                safe_since = t
            count = new_count
        if safe_since is not None:
            intervals.append((safe_since, INF))
        return intervals


# ---------------------------------------------------------------------------
# Safe-interval A* routing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Hop:
    src: WellId
    dst: WellId
    depart: float
    arrive: float
    splits: int
    joins: int


def route(layout: LayoutGraph, reservations: ReservationTable, qubit,
          dest: WellId, earliest: float) -> tuple[list, float]:
    """Minimum-arrival-time path for one qubit under current reservations.

    Returns (hops, arrival).  Waits are implicit: a hop may depart later than
    the previous arrival.  Heuristic is grid distance x 10 us (admissible);
    ties break lexicographically on well coordinates.
    """
    src = layout.positions[qubit]
    if src == dest:
        return [], earliest
    res = reservations
    iv_cache: dict[WellId, list] = {}

    def safe(w: WellId) -> list:
        if w not in iv_cache:
            iv_cache[w] = res.safe_intervals(w, exclude=qubit)
        return iv_cache[w]

    def h(w: WellId) -> float:
        return STEP * grid_distance(w, dest)

    start_iv = None
    for iv in safe(src):
        if iv[0] <= earliest < iv[1]:
            start_iv = iv
            break
    if start_iv is None:
        raise RoutingError(f"{qubit} has no safe slot at its own well {src}")

    best = {(src, start_iv[0]): earliest}
    parents: dict = {}
    heap = [(earliest + h(src), earliest, src.row, src.col, src, start_iv)]

    while heap:
        f, g, _, _, w, iv = heapq.heappop(heap)
        if best.get((w, iv[0]), INF) < g:
            continue
        if w == dest:
            if res.max_count_from(w, g, exclude=qubit) < \
                    layout.wells[w].capacity:
                hops = []
                key = (w, iv[0])
                while key in parents:
                    hop, key = parents[key]
                    hops.append(hop)
                hops.reverse()
                return hops, g
            continue
        for n in layout.neighbors(w):
            for n_iv in safe(n):
                if n_iv[1] <= g:
                    continue
                t_dep = max(g, n_iv[0] - STEP - 2 * SURCHARGE)
                ok = False
                for _ in range(6):
                    splits = 1 if res.count_at(w, t_dep, exclude=qubit) else 0
                    dur = STEP + SURCHARGE * splits
                    joins = 1 if res.count_at(n, t_dep + dur,
                                              exclude=qubit) else 0
                    dur += SURCHARGE * joins
                    if t_dep + dur < n_iv[0]:
                        t_dep = n_iv[0] - dur
                        if t_dep < g:
                            t_dep = g
                        continue
                    t_free = res.edge_next_free(w, n, t_dep, dur)
                    if t_free != t_dep:
                        t_dep = t_free
                        continue
                    ok = True
                    break
                t_arr = t_dep + dur
                if not ok or t_dep < g or t_dep >= iv[1]:
                    continue
                if not (n_iv[0] <= t_arr < n_iv[1]):
                    continue
                key = (n, n_iv[0])
                if t_arr < best.get(key, INF):
                    best[key] = t_arr
                    parents[key] = (Hop(w, n, t_dep, t_arr, splits, joins),
                                    (w, iv[0]))
                    heapq.heappush(heap, (t_arr + h(n), t_arr,
                                          n.row, n.col, n, n_iv))
    raise RoutingError(f"no path for {qubit} from {src} to {dest} "
                       f"(after t={earliest})")


# ---------------------------------------------------------------------------
# Timed events
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TimedEvent:
    qubits: tuple
    kind: str                 # gate name, MOVE or WAIT
    start: float
    duration: float
    tag: MeasureTag | None = None
    edge: tuple | None = None
    joins: int = 0
    splits: int = 0

    @property
    def end(self) -> float:
        return self.start + self.duration


@dataclass
class TimedEventSchedule:
    events: list
    latency: float
    qubit_spans: dict
    layout: LayoutGraph
    params: DeviceParams
    info_text: str = ""

    def canonical_text(self) -> str:
        rows = []
        for ev in sorted(self.events, key=lambda e: (e.start, e.qubits)):
            rows.append(f"{ev.start:.6f} {ev.duration:.6f} {ev.kind} "
                        f"{','.join(ev.qubits)} j{ev.joins} s{ev.splits}")
        return "\n".join(rows)

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()


def schedule(layout: LayoutGraph, hls: HighLevelSchedule,
             params: DeviceParams, *, reorder: bool = True,
             info_text: str = "") -> TimedEventSchedule:
    """Resolve a high-level schedule into collision-free timed events."""
    work = layout.copy()
    res = ReservationTable(work)
    for q, w in work.positions.items():
        res.open_stay(q, w, 0.0)
    ready = {q: 0.0 for q in work.positions}
    events: list[TimedEvent] = []
    state = {"res": res}

    def exec_move(op: MoveRequest, t0: float) -> float:
        q = op.qubit
        prev = work.positions[q]
        if prev == op.dest:
            ready[q] = max(ready[q], t0)
            return ready[q]
        hops, arrival = route(work, state["res"], q, op.dest, t0)
        for hop in hops:
            state["res"].close_stay(q, hop.src, hop.depart)
            state["res"].open_stay(q, hop.dst, hop.arrive)
            state["res"].book_edge(hop.src, hop.dst, hop.depart, hop.arrive)
            work.positions[q] = hop.dst
            events.append(TimedEvent(
                (q,), "MOVE", hop.depart, hop.arrive - hop.depart,
                edge=(hop.src, hop.dst), joins=hop.joins, splits=hop.splits))
        work.occupancy[prev].remove(q)
        work.occupancy[op.dest].append(q)
        ready[q] = arrival
        return arrival

    def exec_op(op, t0: float) -> float:
        if isinstance(op, MoveRequest):
            return exec_move(op, max(t0, ready[op.qubit]))
        if isinstance(op, PrepareZ):
            q = op.qubit
            start = max(t0, ready[q])
            _check_interaction(work, q)
            dur = params.latency("PREPARE_Z")
            events.append(TimedEvent((q,), "PREPARE_Z", start, dur))
            ready[q] = start + dur
            return start + dur
        if isinstance(op, Gate):
            qs = op.qubits
            start = max([t0] + [ready[q] for q in qs])
            if len(qs) == 2:
                w0, w1 = (work.positions[q] for q in qs)
                if w0 != w1:
                    raise RoutingError(
                        f"co-location unsatisfied for {op}: {w0} vs {w1}")
            _check_interaction(work, qs[0])
            dur = params.latency(op.name)
            events.append(TimedEvent(tuple(qs), op.name, start, dur))
            for q in qs:
                ready[q] = start + dur
            return start + dur
        if isinstance(op, (MeasureZ, MultiMeasureZ)):
            q = op.qubit
            start = max(t0, ready[q])
            _check_interaction(work, q)
            kind = "MEASURE_Z" if isinstance(op, MeasureZ) else \
                "MULTIMEASURE_Z"
            dur = params.latency(kind)
            events.append(TimedEvent((q,), kind, start, dur, tag=op.tag))
            ready[q] = start + dur
            return start + dur
        raise ScheduleError(f"unknown op {op}")

    def snapshot():
        return (state["res"].copy(), dict(ready), dict(work.positions),
                {w: list(qs) for w, qs in work.occupancy.items()},
                len(events))

    def restore(snap):
        res_copy, ready_copy, pos, occ, n_events = snap
        state["res"] = res_copy.copy()
        ready.clear()
        ready.update(ready_copy)
        work.positions.clear()
        work.positions.update(pos)
        for w in work.occupancy:
            work.occupancy[w] = list(occ[w])
        del events[n_events:]

    def run_block(ops, t0: float) -> float:
        end = t0
        for op in ops:
            end = max(end, exec_op(op, t0))
        return end

    block_end = [0.0] * len(hls.blocks)
    block_start = [0.0] * len(hls.blocks)
    for bi, block in enumerate(hls.blocks):
        t0 = 0.0
        for dep in block.after:
            if isinstance(dep, tuple):
                d, mode = dep
                t0 = max(t0, block_start[d] if mode == "start"
                         else block_end[d])
            else:
                t0 = max(t0, block_end[dep])
        n_before = len(events)
        all_moves = block.ops and all(isinstance(op, MoveRequest)
                                      for op in block.ops)
        if reorder and all_moves and len(block.ops) >= 2:
            snap = snapshot()
            order = list(block.ops)
            end = run_block(order, t0)
            for i in range(len(order) - 1):
                trial = list(order)
                trial[i], trial[i + 1] = trial[i + 1], trial[i]
                restore(snap)
                try:
                    trial_end = run_block(trial, t0)
                except RoutingError:
                    trial_end = INF
                if trial_end < end:
                    order, end = trial, trial_end
                else:
                    restore(snap)
                    end = run_block(order, t0)
            block_end[bi] = end
        else:
            block_end[bi] = run_block(block.ops, t0)
        block_start[bi] = min((ev.start for ev in events[n_before:]),
                              default=t0)

    latency = max((ev.end for ev in events), default=0.0)
    spans = {}
    for ev in events:
        for q in ev.qubits:
            spans[q] = max(spans.get(q, 0.0), ev.end)
    return TimedEventSchedule(events, latency, spans, work, params,
                              info_text=info_text)


def _check_interaction(layout: LayoutGraph, qubit) -> None:
    well = layout.positions[qubit]
    if layout.wells[well].kind is not WellKind.INTERACTION:
        raise ScheduleError(
            f"gate/measure on {qubit} outside an interaction well ({well})")


# ---------------------------------------------------------------------------
# Error schedule
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ErrorEvent:
    t_start: float
    t_end: float
    kind: str
    qubits: tuple
    x_rate: float
    y_rate: float
    z_rate: float
    zz_rate: float = 0.0
    tag: MeasureTag | None = None

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start


@dataclass
class ErrorSchedule:
    entries: list
    latency: float
    header: dict = field(default_factory=dict)


def emit_error_schedule(tes: TimedEventSchedule,
                        params: DeviceParams) -> ErrorSchedule:
    """One error-relevant entry per event; idle gaps become WAIT entries."""
    entries: list[ErrorEvent] = []
    for ev in sorted(tes.events, key=lambda e: (e.start, e.qubits)):
        if ev.kind == "MOVE":
            z = params.wait_z_error(ev.duration) + \
                (ev.joins + ev.splits) * params.join_split.z_rate
            entries.append(ErrorEvent(ev.start, ev.end, "MOVE", ev.qubits,
                                      0.0, 0.0, z))
        elif ev.kind == "CZ":
            entries.append(ErrorEvent(
                ev.start, ev.end, "CZ", ev.qubits,
                0.0, 0.0, params.cz.iz_rate, zz_rate=params.cz.zz_rate))
        else:
            costs = params.rates(ev.kind)
            entries.append(ErrorEvent(ev.start, ev.end, ev.kind, ev.qubits,
                                      costs.x_rate, costs.y_rate,
                                      costs.z_rate, tag=ev.tag))
    per_qubit: dict = {}
    for ev in tes.events:
        for q in ev.qubits:
            per_qubit.setdefault(q, []).append((ev.start, ev.end))
    waits = []
    for q, ivs in sorted(per_qubit.items()):
        ivs.sort()
        t = 0.0
        for (s, e) in ivs + [(tes.latency, tes.latency)]:
            if s > t:
                waits.append(ErrorEvent(t, s, "WAIT", (q,), 0.0, 0.0,
                                        params.wait_z_error(s - t)))
            t = max(t, e)
    entries.extend(waits)
    entries.sort(key=lambda e: (e.t_start, e.qubits))
    return ErrorSchedule(entries, tes.latency,
                         header={"info": tes.info_text})


# ---------------------------------------------------------------------------
# Stage counting
# ---------------------------------------------------------------------------

STAGE_KINDS = {"CNOT": ("CZ",),
               "Measurement": ("MEASURE_Z", "MULTIMEASURE_Z")}


def count_stages(tes: TimedEventSchedule, kind: str) -> int:
    """Connected components of pairwise-overlapping events of the kind,
    scanned left to right (half-open intervals: touching does not overlap)."""
    kinds = STAGE_KINDS[kind]
    spans = sorted((ev.start, ev.end) for ev in tes.events
                   if ev.kind in kinds)
    stages = 0
    reach = -INF
    for (s, e) in spans:
        if s >= reach:
            stages += 1
        reach = max(reach, e)
    return stages
