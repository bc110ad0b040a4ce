"""High-level schedules for Steane syndrome extraction on the trap layout.

A HighLevelSchedule is an ordered list of parallel blocks of ops.  Each qubit
executes its ops in block order; blocks may additionally carry explicit
"after" dependencies on earlier blocks.  The hand-crafted pipeline structure
of the ancilla-management strategies lives in those dependencies.

Conventions baked into the templates:
  - data qubits never move; the traveling (cat) qubit goes to the data
    qubit's home well for each coupling and returns afterwards;
  - CNOT is compiled as HADAMARD(target) . CZ . HADAMARD(target);
  - Z-stabilizer couplings are bare CZ legs (cats read out in the X basis),
    X-stabilizer couplings conjugate the CZ with Hadamards on the data leg;
  - cats may travel toward the data while the verifier is being measured,
    but coupling gates wait for the verifier outcome;
  - all syndrome-bearing readouts use the enhanced MULTIMEASURE_Z primitive.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .device import PITCH, LayoutGraph, WellId, build_pmd_layout, interaction_well
from .stabilizers import StabilizerSet, steane_stabilizers

# ---------------------------------------------------------------------------
# Ops and schedule containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PrepareZ:
    qubit: str


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: tuple[str, ...]


@dataclass(frozen=True)
class MoveRequest:
    qubit: str
    dest: WellId


@dataclass(frozen=True)
class MeasureTag:
    """Routing info carried by syndrome-relevant measurements."""

    role: str            # "cat" | "verifier" | "da_bit" | "plain"
    ext: int = -1        # extraction index, 0-based over the whole round
    rep: int = -1
    stab: int = -1       # 0..5 (0-2 X-type, 3-5 Z-type)
    index: int = 0       # cat / decoded-bit position 1..4

    def encode(self) -> str:
        return f"{self.role}:{self.ext}:{self.rep}:{self.stab}:{self.index}"

    @staticmethod
    def decode(text: str) -> "MeasureTag":
        role, ext, rep, stab, index = text.split(":")
        return MeasureTag(role, int(ext), int(rep), int(stab), int(index))


PLAIN_TAG = MeasureTag("plain")


@dataclass(frozen=True)
class MeasureZ:
    qubit: str
    tag: MeasureTag = PLAIN_TAG


@dataclass(frozen=True)
class MultiMeasureZ:
    qubit: str
    helpers: tuple[str, ...] = ()
    tag: MeasureTag = PLAIN_TAG


Op = PrepareZ | Gate | MoveRequest | MeasureZ | MultiMeasureZ


def op_qubits(op: Op) -> tuple[str, ...]:
    if isinstance(op, Gate):
        return op.qubits
    return (op.qubit,)


@dataclass
class Block:
    label: str
    ops: list
    after: list = field(default_factory=list)  # indices of earlier blocks


class ScheduleError(Exception):
    pass


@dataclass
class HighLevelSchedule:
    blocks: list

    def __post_init__(self):
        for i, block in enumerate(self.blocks):
            seen = set()
            for op in block.ops:
                for q in op_qubits(op):
                    if q in seen:
                        raise ScheduleError(
                            f"qubit {q} appears twice in block {block.label}")
                    seen.add(q)
            for dep in block.after:
                d = dep[0] if isinstance(dep, tuple) else dep
                if not 0 <= d < i:
                    raise ScheduleError(
                        f"block {block.label} depends on non-earlier block")

    def qubits(self) -> list[str]:
        qs = set()
        for b in self.blocks:
            for op in b.ops:
                qs.update(op_qubits(op))
        return sorted(qs)


# ---------------------------------------------------------------------------
# Ancilla strategy
# ---------------------------------------------------------------------------


class Protocol(enum.Enum):
    SHOR = "shor"
    DA = "da"


ALL_ROWS = "all"

# Per-ancilla-count overrides of the relocating-Shor wave dependencies.
# With three sets the middle reuse wave straddles the readout of the first,
# so only the later waves carry cross dependencies and the last readout pair
# synchronizes on the final coupling instead.
SHOR_WAVE_POLICY: dict = {
    3: dict(cross_pairs=(1, 2), read_chain=False, vmeas_anchor=False,
            anchors=((4, "READ", 5, "CPL", "end"),)),
}
SHOR_RETURN_OVERRIDE: dict = {}


@dataclass(frozen=True)
class AncillaStrategy:
    protocol: Protocol
    prep_rows: object = 2          # 1, 2 or ALL_ROWS
    ancilla_sets: int = 1
    repetitions: int = 3

    def __post_init__(self):
        if not 1 <= self.ancilla_sets <= 6:
            raise ScheduleError("ancilla_sets must be in [1,6]")
        if self.prep_rows not in (1, 2, ALL_ROWS):
            raise ScheduleError("prep_rows must be 1, 2 or 'all'")
        if self.repetitions < 1:
            raise ScheduleError("repetitions must be >= 1")

    @property
    def label(self) -> str:
        y = "All" if self.prep_rows == ALL_ROWS else str(self.prep_rows)
        return f"{y}P{self.ancilla_sets}R"


# ---------------------------------------------------------------------------
# Qubit naming and home arrangement
# ---------------------------------------------------------------------------

DATA = tuple(f"d{i}" for i in range(7))
CAT_COLS = (0, 2, 4, 6)
VERIFIER_COL = 3


def cat(set_id: int, i: int) -> str:
    return f"a{set_id}c{i}"


def verifier(set_id: int) -> str:
    return f"a{set_id}v"


def qec_layout(strategy: AncillaStrategy) -> LayoutGraph:
    """Smallest grid fitting the data row plus one row per ancilla set."""
    layout = build_pmd_layout(rows=1 + strategy.ancilla_sets, cols=7)
    for i, d in enumerate(DATA):
        layout.place(d, interaction_well(0, i))
    for s in range(strategy.ancilla_sets):
        row = 1 + s
        for i in range(4):
            layout.place(cat(s, i + 1), interaction_well(row, CAT_COLS[i]))
        if strategy.protocol is Protocol.SHOR:
            layout.place(verifier(s), interaction_well(row, VERIFIER_COL))
    return layout


def set_wells(row: int) -> dict[str, WellId]:
    wells = {f"c{i + 1}": interaction_well(row, CAT_COLS[i]) for i in range(4)}
    wells["v"] = interaction_well(row, VERIFIER_COL)
    return wells


def _data_well(data_qubit: str) -> WellId:
    return interaction_well(0, int(data_qubit[1:]))


def _outer_waypoints(row: int) -> list[WellId]:
    """Four wells of the west outer vertical segment just above `row`."""
    return [WellId(row * PITCH - i, 0) for i in (1, 2, 3, 4)]


# ---------------------------------------------------------------------------
# Fragment builders
# ---------------------------------------------------------------------------


def _cnot(control: str, target: str) -> list:
    return [Gate("HADAMARD", (target,)),
            Gate("CZ", (control, target)),
            Gate("HADAMARD", (target,))]


@dataclass
class Fragment:
    """Blocks of one syndrome extraction.

    `sections` maps section names to (first, last) local block indices; a
    section spans several parallel blocks when its ops reuse a qubit.
    `deps` holds the few genuinely cross-qubit orderings (per-qubit program
    order covers the rest).
    """

    blocks: list
    sections: dict
    deps: list  # (later section, earlier section)


def _parallel_split(ops) -> list:
    """Greedily pack ops into parallel groups, preserving per-qubit order."""
    groups: list[list] = [[]]
    used: set[str] = set()
    for op in ops:
        qs = op_qubits(op)
        if any(q in used for q in qs):
            groups.append([])
            used = set()
        groups[-1].append(op)
        used.update(qs)
    return groups


def _build_fragment(sections, deps) -> Fragment:
    blocks: list[Block] = []
    index: dict[str, tuple[int, int]] = {}
    for name, ops in sections:
        groups = _parallel_split(ops) if ops else [[]]
        first = len(blocks)
        for gi, group in enumerate(groups):
            label = name if len(groups) == 1 else f"{name}.{gi}"
            blocks.append(Block(label, group))
        index[name] = (first, len(blocks) - 1)
    return Fragment(blocks, index, deps)


def _support_qubits(stab_mask: int) -> list[str]:
    return [DATA[q] for q in range(7) if stab_mask >> q & 1]


def _couple_ops(cats, support, stab_kind: str) -> list:
    ops = []
    for ci, dq in zip(cats, support):
        if stab_kind == "X":
            ops.extend([Gate("HADAMARD", (dq,)), Gate("CZ", (ci, dq)),
                        Gate("HADAMARD", (dq,))])
        else:
            ops.append(Gate("CZ", (ci, dq)))
    return ops


def _return_sections(cats, ret_wells, outer_return, return_row):
    if not outer_return:
        return [("RET", [MoveRequest(c, w) for c, w in zip(cats, ret_wells)])]
    # Detour through the unoccupied west outer column before heading home.
    way = _outer_waypoints(return_row)
    return [("RETW", [MoveRequest(c, w) for c, w in zip(cats, way)]),
            ("RET", [MoveRequest(c, w) for c, w in zip(cats, ret_wells)])]


def shor_extraction_circuit(stab_mask: int, set_id: int, *,
                            stab_kind: str = "Z",
                            row: int = 1,
                            return_row: int | None = None,
                            tag: MeasureTag | None = None,
                            outer_return: bool = False) -> Fragment:
    """One Shor cat-state extraction: prepare, verify, couple, measure.

    The set's five qubits are assumed at (or routed to) the interaction wells
    of `row`; cats return to `return_row` and are measured there.
    """
    support = _support_qubits(stab_mask)
    if len(support) != 4:
        raise ScheduleError("Shor extraction needs a weight-4 stabilizer")
    c = [cat(set_id, i) for i in (1, 2, 3, 4)]
    v = verifier(set_id)
    w = set_wells(row)
    ret_row = row if return_row is None else return_row
    home = set_wells(ret_row)
    tag = tag or MeasureTag("cat")

    sections = [
        ("RESET", [PrepareZ(q) for q in c + [v]]),
        # GHZ tree: c1->c2, then c1->c3 and c2->c4 in separate wells.
        ("P1", [Gate("HADAMARD", (c[0],)), MoveRequest(c[1], w["c1"])]
               + _cnot(c[0], c[1])),
        ("P1R", [MoveRequest(c[1], w["c2"])]),
        ("P2", [MoveRequest(c[2], w["c1"]), MoveRequest(c[3], w["c2"])]
               + _cnot(c[0], c[2]) + _cnot(c[1], c[3])),
        ("P2R", [MoveRequest(c[2], w["c3"]), MoveRequest(c[3], w["c4"])]),
        # Verification: the two tree leaves checked against the verifier.
        ("V1", [MoveRequest(c[2], w["v"])] + _cnot(c[2], v)),
        ("V1R", [MoveRequest(c[2], w["c3"])]),
        ("V2", [MoveRequest(c[3], w["v"])] + _cnot(c[3], v)),
        ("V2R", [MoveRequest(c[3], w["c4"])]),
        ("VMEAS", [MultiMeasureZ(v, tag=MeasureTag(
            "verifier", tag.ext, tag.rep, tag.stab))]),
        ("GO", [MoveRequest(c[i], _data_well(support[i]))
                for i in range(4)]),
        ("CPL", _couple_ops(c, support, stab_kind)),
        *_return_sections(c, [home[f"c{i}"] for i in (1, 2, 3, 4)],
                          outer_return, ret_row),
        ("MEAS", [Gate("HADAMARD", (q,)) for q in c]),
        ("READ", [MultiMeasureZ(c[i], tag=MeasureTag(
            "cat", tag.ext, tag.rep, tag.stab, i + 1)) for i in range(4)]),
    ]
    return _build_fragment(sections, deps=[
        ("P2", "P1"), ("V1", "P2"), ("V2", "V1"), ("CPL", "VMEAS")])


def da_extraction_circuit(stab_mask: int, set_id: int, *,
                          stab_kind: str = "Z",
                          row: int = 1,
                          return_row: int | None = None,
                          tag: MeasureTag | None = None,
                          outer_return: bool = False) -> Fragment:
    """DiVincenzo-Aliferis extraction: unverified cat, couple, decode, read.

    Decoding (the inverse of preparation) replaces in-circuit verification;
    the first measured bit carries the syndrome, the rest are consistency
    checks handled classically.
    """
    support = _support_qubits(stab_mask)
    if len(support) != 4:
        raise ScheduleError("DA extraction needs a weight-4 stabilizer")
    c = [cat(set_id, i) for i in (1, 2, 3, 4)]
    w = set_wells(row)
    ret_row = row if return_row is None else return_row
    home = set_wells(ret_row)
    tag = tag or MeasureTag("da_bit")

    sections = [
        ("RESET", [PrepareZ(q) for q in c]),
        ("P1", [Gate("HADAMARD", (c[0],)), MoveRequest(c[1], w["c1"])]
               + _cnot(c[0], c[1])),
        ("P1R", [MoveRequest(c[1], w["c2"])]),
        ("P2", [MoveRequest(c[2], w["c1"]), MoveRequest(c[3], w["c2"])]
               + _cnot(c[0], c[2]) + _cnot(c[1], c[3])),
        ("P2R", [MoveRequest(c[2], w["c3"]), MoveRequest(c[3], w["c4"])]),
        ("GO", [MoveRequest(c[i], _data_well(support[i]))
                for i in range(4)]),
        ("CPL", _couple_ops(c, support, stab_kind)),
        *_return_sections(c, [home[f"c{i}"] for i in (1, 2, 3, 4)],
                          outer_return, ret_row),
        # Decode = inverse preparation, back at the ancilla row.
        ("D1", [MoveRequest(c[2], home["c1"]), MoveRequest(c[3], home["c2"])]
               + _cnot(c[0], c[2]) + _cnot(c[1], c[3])),
        ("D1R", [MoveRequest(c[2], home["c3"]), MoveRequest(c[3], home["c4"])]),
        ("D2", [MoveRequest(c[1], home["c1"])] + _cnot(c[0], c[1])
               + [Gate("HADAMARD", (c[0],))]),
        ("D2R", [MoveRequest(c[1], home["c2"])]),
        ("READ", [MultiMeasureZ(c[i], tag=MeasureTag(
            "da_bit", tag.ext, tag.rep, tag.stab, i + 1))
            for i in range(4)]),
    ]
    return _build_fragment(sections, deps=[
        ("P2", "P1"), ("CPL", "P2"), ("D1", "CPL"), ("D2", "D1")])


def multimeasure_gadget(target: str, helpers: tuple[str, str] = ("h1", "h2"),
                        ) -> HighLevelSchedule:
    """Enhanced measurement: two helpers, H/CZ/H couplings, 3-way majority.

    Helpers are prepared one at a time in the shared well, then coupled to
    the target sequentially; the three readouts fire together.  At default
    parameters the scheduled span is 355 us, matching the MULTIMEASURE_Z
    table entry.
    """
    h1, h2 = helpers
    blocks = [
        Block("MM_PREP1", [PrepareZ(h1)]),
        Block("MM_PREP2", [PrepareZ(h2)], after=[0]),
        Block("MM_CPL1a", [Gate("HADAMARD", (h1,))], after=[1]),
        Block("MM_CPL1b", [Gate("CZ", (h1, target))]),
        Block("MM_CPL1c", [Gate("HADAMARD", (h1,))]),
        Block("MM_CPL2a", [Gate("HADAMARD", (h2,))], after=[4]),
        Block("MM_CPL2b", [Gate("CZ", (h2, target))]),
        Block("MM_CPL2c", [Gate("HADAMARD", (h2,))]),
        Block("MM_READ", [MeasureZ(target), MeasureZ(h1), MeasureZ(h2)],
              after=[7]),
    ]
    return HighLevelSchedule(blocks)


def multimeasure_vote(target_bit: int, helper_bits) -> int:
    bits = [target_bit, *helper_bits]
    return 1 if sum(bits) >= 2 else 0


# ---------------------------------------------------------------------------
# Full QEC round
# ---------------------------------------------------------------------------


@dataclass
class RoundInfo:
    """Static description of a generated round, used by decoding."""

    protocol: Protocol
    repetitions: int
    extractions: list  # (ext, rep, stab index, set id, kind)

    def encode(self) -> str:
        rows = [f"{e}:{r}:{s}:{a}:{k}" for e, r, s, a, k in self.extractions]
        return f"{self.protocol.value};{self.repetitions};" + ",".join(rows)

    @staticmethod
    def decode(text: str) -> "RoundInfo":
        proto, reps, rows = text.split(";")
        extractions = []
        for row in rows.split(","):
            e, r, s, a, k = row.split(":")
            extractions.append((int(e), int(r), int(s), int(a), k))
        return RoundInfo(Protocol(proto), int(reps), extractions)


def _row_plan(n_ext: int, x: int, prep_row_count: int):
    """Static stack plan: prep row, return row and previous occupant per
    extraction.  Sets move up into a prep row, couple, and land in the
    bottom-most free row for measurement (not necessarily where they began).
    """
    set_of_ext = [k % x for k in range(n_ext)]
    prep_row = [1 + (k % prep_row_count) for k in range(n_ext)]
    return_row = [0] * n_ext
    row_of_set = {s: 1 + s for s in range(x)}
    free_rows: list[int] = []
    prev_in_row: dict[int, int] = {}
    prev_occupant = [None] * n_ext
    pending: list[int] = []

    def do_return(k):
        target = max(free_rows) if free_rows else prep_row[k]
        if target in free_rows:
            free_rows.remove(target)
        return_row[k] = target
        row_of_set[set_of_ext[k]] = target

    for k in range(n_ext):
        old = row_of_set[set_of_ext[k]]
        if prep_row[k] in free_rows:
            free_rows.remove(prep_row[k])
        if old != prep_row[k]:
            free_rows.append(old)
        prev_occupant[k] = prev_in_row.get(prep_row[k])
        prev_in_row[prep_row[k]] = k
        row_of_set[set_of_ext[k]] = prep_row[k]
        if k >= prep_row_count:
            do_return(pending.pop(0))
        free_rows.append(prep_row[k])
        pending.append(k)
    for k in pending:
        do_return(k)
    return set_of_ext, prep_row, return_row, prev_occupant


def build_qec_round(strategy: AncillaStrategy,
                    stabilizers: StabilizerSet | None = None,
                    ) -> tuple[HighLevelSchedule, RoundInfo]:
    """Compose the full round: six extractions per repetition, sets cycling
    through the prep rows per the yPxR strategy, with the strategy's
    pipeline encoded as explicit block dependencies."""
    stabilizers = stabilizers or steane_stabilizers()
    stabs = [("X", m) for m in stabilizers.x_stabilizers] + \
            [("Z", m) for m in stabilizers.z_stabilizers]
    x = strategy.ancilla_sets
    shor = strategy.protocol is Protocol.SHOR
    n_ext = 6 * strategy.repetitions

    if strategy.prep_rows == ALL_ROWS:
        prep_row_count = x
        relocating = False
    else:
        prep_row_count = min(strategy.prep_rows, x)
        relocating = x > prep_row_count

    if relocating:
        set_of_ext, prep_row, return_row, prev_occupant = _row_plan(
            n_ext, x, prep_row_count)
    else:
        set_of_ext = [k % x for k in range(n_ext)]
        prep_row = [1 + s for s in set_of_ext]
        return_row = list(prep_row)
        prev_occupant = [None] * n_ext

    blocks: list[Block] = []
    section_index: dict[tuple[int, str], tuple[int, int]] = {}
    extractions = []
    frag_deps: list = []
    fragments = {}
    for k in range(n_ext):
        rep, stab_i = divmod(k, 6)
        kind, mask = stabs[stab_i]
        s = set_of_ext[k]
        tag = MeasureTag("cat", ext=k, rep=rep, stab=stab_i)
        maker = shor_extraction_circuit if shor else da_extraction_circuit
        # Return-path policy is part of the per-strategy hand schedule: the
        # second of each extraction pair detours via the outer columns.
        outer = SHOR_RETURN_OVERRIDE.get((x, k), bool(k % 2)) if shor \
            else bool(k % 2)
        frag = maker(mask, s, stab_kind=kind, row=prep_row[k],
                     return_row=return_row[k], tag=tag, outer_return=outer)
        up_ops = []
        if relocating and k >= prep_row_count:
            w = set_wells(prep_row[k])
            up_ops = [MoveRequest(cat(s, i), w[f"c{i}"]) for i in (1, 2, 3, 4)]
            if shor:
                up_ops.append(MoveRequest(verifier(s), w["v"]))
        fragments[k] = (frag, up_ops)
        frag_deps.extend(((k, later), (k, earlier))
                         for later, earlier in frag.deps)
        extractions.append((k, rep, stab_i, s, kind))

    def emit(k, section_name):
        frag, up_ops = fragments[k]
        if section_name == "UP":
            base = len(blocks)
            blocks.append(Block(f"e{k}.UP", up_ops))
            section_index[(k, "UP")] = (base, base)
            return
        first, last = frag.sections[section_name]
        base = len(blocks)
        for b in frag.blocks[first:last + 1]:
            blocks.append(Block(f"e{k}.{b.label}", list(b.ops)))
        section_index[(k, section_name)] = (base, base + last - first)

    def section_names(k):
        frag, _ = fragments[k]
        return ["UP"] + sorted(frag.sections, key=lambda n: frag.sections[n])

    if shor and relocating:
        # Interleave each extraction pair so wave-level readout dependencies
        # can point backwards.
        for j in range(0, n_ext, 2):
            members = [j] + ([j + 1] if j + 1 < n_ext else [])
            for name in section_names(j):
                for k in members:
                    emit(k, name)
    else:
        for k in range(n_ext):
            for name in section_names(k):
                emit(k, name)

    def add_dep(later_key, earlier_key, mode="end"):
        first, last = section_index[later_key]
        target = section_index[earlier_key][1 if mode == "end" else 0]
        dep = target if mode == "end" else (target, "start")
        for bi in range(first, last + 1):
            blocks[bi].after.append(dep)

    for later_key, earlier_key in frag_deps:
        add_dep(later_key, earlier_key)

    pipeline_sections = (("P1", "P2", "V1", "V2", "CPL") if shor
                         else ("P1", "P2", "CPL", "D1", "D2"))
    for k in range(1, n_ext):
        for sec in pipeline_sections:
            add_dep((k, sec), (k - 1, sec))
    if shor and not relocating and strategy.prep_rows != ALL_ROWS:
        # No spare rows: the measured set displaces the next set's row, so
        # consecutive extractions' readouts serialize.
        for k in range(1, n_ext):
            add_dep((k, "VMEAS"), (k - 1, "VMEAS"))
            add_dep((k, "READ"), (k - 1, "READ"))
    if not shor:
        # Reads of one reuse wave wait for the previous wave to finish, the
        # strategy's "prepared again as soon as possible" wave structure.
        for k in range(x, n_ext):
            boundary = (k // x) * x - 1
            if boundary >= 0:
                add_dep((k, "READ"), (boundary, "READ"))
    if shor and relocating:
        # Preparation throttles two sets at a time; readouts advance in
        # waves of two: a wave's readouts follow both of its verifier
        # outcomes and the previous wave's readouts, and a wave's
        # verifications begin no earlier than the previous readout wave.
        pol = dict(cross_pairs=(0, 1, 2), read_chain=True, vmeas_anchor=True,
                   anchors=())
        pol.update(SHOR_WAVE_POLICY.get(x, {}))

        def wave(j):
            return [j] + ([j + 1] if j + 1 < n_ext else [])

        for j in range(0, n_ext, 2):
            for k in wave(j):
                for mate in wave(j):
                    if mate != k and j // 2 in pol["cross_pairs"]:
                        add_dep((k, "READ"), (mate, "VMEAS"))
                if j >= 2:
                    if pol["read_chain"]:
                        add_dep((k, "READ"), (j - 1, "READ"))
                    if pol["vmeas_anchor"]:
                        add_dep((k, "VMEAS"), (j - 2, "READ"), mode="start")
        for later_k, later_sec, earlier_k, earlier_sec, mode in pol["anchors"]:
            add_dep((later_k, later_sec), (earlier_k, earlier_sec), mode=mode)
    if relocating:
        vacate_section = "VMEAS" if shor else "P2R"
        for k in range(n_ext):
            prev = prev_occupant[k]
            if prev is not None:
                add_dep((k, "UP"), (prev, vacate_section))

    hls = HighLevelSchedule(blocks)
    info = RoundInfo(strategy.protocol, strategy.repetitions, extractions)
    return hls, info
