"""Level-one logical failure rate by fault-path tracing.

The circuit is traced backwards once, accumulating for every qubit the
residual effect of an X or Z inserted at that point (Clifford conjugation:
H swaps the components, CZ copies an X onto the partner as a Z, preparation
erases, a Z-basis readout turns the X component into a classical flip).
Error-schedule entries then collapse into fault points: one X-type and one
Z-type point per leg with nonzero rate (Y rates feed both), transport legs
with identical propagation merged, the CZ's correlated ZZ kept as a single
two-leg point.

Failure rate = malignant singles + sum over malignant pairs of
rate_i * rate_j, X-system and Z-system pairs enumerated separately (CSS
split); a combination is malignant when the residual data error after the
majority-voted, lookup-decoded correction has weight >= 2.  Combinations
that flip a verifier are discarded and redone, which is benign at this
order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .circuits import MeasureTag, Protocol, RoundInfo
from .scheduler import ErrorSchedule
from .stabilizers import (coset_weight, inferred_data_mask,
                          lookup_correction, syndrome_of, vote_words)

# Effect encoding: one python int.
#   bits [0,7)    residual X on data
#   bits [7,14)   residual Z on data
#   bits [14,32)  syndrome-bit flips, position rep*6+stab (up to 3 reps)
#   bits [32,86)  DA check-bit flips, 3 bits per (rep,stab)
#   bits [86,104) verifier flips, one per extraction
DATA_X_SHIFT = 0
DATA_Z_SHIFT = 7
SYND_SHIFT = 14
CHECK_SHIFT = 32
VFLIP_SHIFT = 86
DATA_MASK = 0x7F
SYND_MASK = (1 << 18) - 1
CHECK_MASK = (1 << 54) - 1

GATE_KINDS = ("HADAMARD", "CZ", "X", "Y", "Z", "S", "T",
              "PREPARE_Z", "MEASURE_Z", "MULTIMEASURE_Z")
DATA = tuple(f"d{i}" for i in range(7))


def _tag_effect(tag: MeasureTag) -> int:
    """Classical flip effect of inverting a tagged readout."""
    if tag is None or tag.role == "plain":
        return 0
    pos = tag.rep * 6 + tag.stab
    if tag.role == "verifier":
        return 1 << (VFLIP_SHIFT + tag.ext)
    if tag.role == "cat" or (tag.role == "da_bit" and tag.index == 1):
        return 1 << (SYND_SHIFT + pos)
    return 1 << (CHECK_SHIFT + pos * 3 + (tag.index - 2))


@dataclass(frozen=True)
class FaultPoint:
    """A circuit location with an error type, rate and propagated effect."""

    index: int
    kind: str              # "X" | "Z" | "ZZ" | "FLIP"
    qubits: tuple
    rate: float
    effect: int
    label: str = ""


@dataclass
class TraceResult:
    points: list
    info: RoundInfo
    n_events: int


def extract_fault_points(es: ErrorSchedule, info: RoundInfo) -> TraceResult:
    if info.repetitions > 3:
        raise ValueError("effect encoding supports up to 3 repetitions")
    entries = sorted(es.entries, key=lambda e: (e.t_start, e.t_end, e.qubits))
    gates = [e for e in entries if e.kind in GATE_KINDS]

    ex: dict = {d: 1 << (DATA_X_SHIFT + i) for i, d in enumerate(DATA)}
    ez: dict = {d: 1 << (DATA_Z_SHIFT + i) for i, d in enumerate(DATA)}

    # Backward sweep; captured values are the effects of a Pauli placed
    # immediately AFTER each gate on each of its legs.
    captured_x = [None] * len(gates)
    captured_z = [None] * len(gates)
    for gi in range(len(gates) - 1, -1, -1):
        g = gates[gi]
        captured_x[gi] = tuple(ex.get(q, 0) for q in g.qubits)
        captured_z[gi] = tuple(ez.get(q, 0) for q in g.qubits)
        if g.kind == "HADAMARD":
            q = g.qubits[0]
            ex[q], ez[q] = ez.get(q, 0), ex.get(q, 0)
        elif g.kind == "CZ":
            a, b = g.qubits
            ex[a] = ex.get(a, 0) ^ ez.get(b, 0)
            ex[b] = ex.get(b, 0) ^ ez.get(a, 0)
        elif g.kind == "PREPARE_Z":
            q = g.qubits[0]
            ex[q] = 0
            ez[q] = 0
        elif g.kind in ("MEASURE_Z", "MULTIMEASURE_Z"):
            q = g.qubits[0]
            ex[q] = _tag_effect(g.tag) ^ ex.get(q, 0)

    # ordered gate slots per qubit, for faults that sit between gates
    slots: dict = {}
    for gi, g in enumerate(gates):
        for si, q in enumerate(g.qubits):
            slots.setdefault(q, []).append((g.t_start, gi, si))
    for q in slots:
        slots[q].sort()

    def before(gi: int, si: int, kind: str) -> int:
        """Effect of a Pauli placed immediately BEFORE gate gi on leg si."""
        g = gates[gi]
        x_eff = captured_x[gi][si]
        z_eff = captured_z[gi][si]
        if g.kind == "HADAMARD":
            x_eff, z_eff = z_eff, x_eff
        elif g.kind == "CZ" and kind == "X":
            x_eff ^= captured_z[gi][1 - si]
        elif g.kind == "PREPARE_Z":
            return 0
        elif g.kind in ("MEASURE_Z", "MULTIMEASURE_Z") and kind == "X":
            x_eff ^= _tag_effect(g.tag)
        return x_eff if kind == "X" else z_eff

    def effect_from(q, t: float, kind: str) -> int:
        """Effect of a Pauli sitting on q from time t onward."""
        for (ts, gi, si) in slots.get(q, ()):
            if ts >= t:
                return before(gi, si, kind)
        if q in DATA:
            i = DATA.index(q)
            return 1 << ((DATA_X_SHIFT if kind == "X" else DATA_Z_SHIFT) + i)
        return 0

    gate_pos = {id(g): gi for gi, g in enumerate(gates)}
    points: list[FaultPoint] = []
    merged: dict = {}

    def add(kind, qubits, rate, effect, label):
        if rate <= 0.0 or effect == 0:
            return
        key = (kind, qubits, effect)
        if key in merged:
            idx = merged[key]
            old = points[idx]
            points[idx] = FaultPoint(old.index, old.kind, old.qubits,
                                     old.rate + rate, old.effect, old.label)
        else:
            merged[key] = len(points)
            points.append(FaultPoint(len(points), kind, qubits, rate,
                                     effect, label))

    for e in entries:
        if e.kind in ("MEASURE_Z", "MULTIMEASURE_Z"):
            flip = _tag_effect(e.tag)
            if flip and e.z_rate > 0:
                add("FLIP", e.qubits, e.z_rate, flip,
                    f"readout {e.tag.encode()}")
            continue
        if e.kind == "CZ":
            gi = gate_pos[id(e)]
            legs = [captured_z[gi][0], captured_z[gi][1]]
            for si, q in enumerate(e.qubits):
                add("Z", (q,), e.z_rate, legs[si],
                    f"CZ@{e.t_start:.0f} leg {q}")
            add("ZZ", e.qubits, e.zz_rate, legs[0] ^ legs[1],
                f"CZ@{e.t_start:.0f} ZZ")
            continue
        if e.kind in GATE_KINDS:
            gi = gate_pos[id(e)]
            q = e.qubits[0]
            x_eff, z_eff = captured_x[gi][0], captured_z[gi][0]
        else:  # MOVE / WAIT
            q = e.qubits[0]
            x_eff = effect_from(q, e.t_end, "X")
            z_eff = effect_from(q, e.t_end, "Z")
        label = f"{e.kind} {q}@{e.t_start:.0f}"
        add("X", (q,), e.x_rate + e.y_rate, x_eff, label)
        add("Z", (q,), e.z_rate + e.y_rate, z_eff, label)
    return TraceResult(points, info, len(entries))


# ---------------------------------------------------------------------------
# Decoding a combined effect
# ---------------------------------------------------------------------------


def residual_from_effect(effect: int, info: RoundInfo,
                         decoder=lookup_correction):
    """(residual X mask, residual Z mask) after vote + decode, or None when
    the combination trips a verifier (discarded and redone)."""
    if effect >> VFLIP_SHIFT:
        return None
    data_x = (effect >> DATA_X_SHIFT) & DATA_MASK
    data_z = (effect >> DATA_Z_SHIFT) & DATA_MASK
    synd = (effect >> SYND_SHIFT) & SYND_MASK
    checks = (effect >> CHECK_SHIFT) & CHECK_MASK
    reps = info.repetitions
    da = info.protocol is Protocol.DA
    words = [(synd >> (r * 6)) & 0x3F for r in range(reps)]
    flags = [1 if (checks >> (r * 18)) & ((1 << 18) - 1) else 0
             for r in range(reps)] if da else None
    voted = vote_words(words, flags)
    synd_for_x = (voted >> 3) & 0b111   # Z stabilizers detect X errors
    synd_for_z = voted & 0b111          # X stabilizers detect Z errors
    corr_x = decoder(synd_for_x)
    corr_z = decoder(synd_for_z)
    if da and checks:
        # Check signatures identify the induced data error (mod stabilizer);
        # the correction is committed only when consistent with the syndrome
        # the following ideal extraction would measure, which tells real cat
        # faults apart from lone check-readout flips.
        act_x = act_z = 0
        for r in range(reps):
            for stab in range(6):
                sig = (checks >> ((r * 6 + stab) * 3)) & 0b111
                if not sig:
                    continue
                mask = inferred_data_mask(stab, sig)
                if stab < 3:
                    act_x ^= mask
                else:
                    act_z ^= mask
        if act_x and syndrome_of(act_x) != syndrome_of(data_x):
            act_x = 0
        if act_z and syndrome_of(act_z) != syndrome_of(data_z):
            act_z = 0
        if act_x:
            corr_x = act_x ^ decoder(synd_for_x ^ syndrome_of(act_x))
        if act_z:
            corr_z = act_z ^ decoder(synd_for_z ^ syndrome_of(act_z))
    res_x = data_x ^ corr_x
    res_z = data_z ^ corr_z
    return res_x, res_z


def is_malignant_effect(effect: int, info: RoundInfo,
                        decoder=lookup_correction) -> bool:
    res = residual_from_effect(effect, info, decoder)
    if res is None:
        return False
    return coset_weight(res[0]) >= 2 or coset_weight(res[1]) >= 2


# ---------------------------------------------------------------------------
# Failure rate
# ---------------------------------------------------------------------------

_ZSTAB_BITS = sum(1 << (r * 6 + s) for r in range(3) for s in (3, 4, 5))
_XSTAB_BITS = sum(1 << (r * 6 + s) for r in range(3) for s in (0, 1, 2))
_ZSTAB_CHECKS = sum(0b111 << ((r * 6 + s) * 3) for r in range(3)
                    for s in (3, 4, 5))
_XSTAB_CHECKS = sum(0b111 << ((r * 6 + s) * 3) for r in range(3)
                    for s in (0, 1, 2))


def _x_system(effect: int) -> bool:
    """Feeds X-error decoding: data X, Z-stabilizer syndrome bits, check
    bits of X-stabilizer extractions (they steer X corrections), or any
    verifier."""
    return bool((effect & DATA_MASK)
                or ((effect >> SYND_SHIFT) & _ZSTAB_BITS)
                or ((effect >> CHECK_SHIFT) & _XSTAB_CHECKS)
                or (effect >> VFLIP_SHIFT))


def _z_system(effect: int) -> bool:
    return bool(((effect >> DATA_Z_SHIFT) & DATA_MASK)
                or ((effect >> SYND_SHIFT) & _XSTAB_BITS)
                or ((effect >> CHECK_SHIFT) & _ZSTAB_CHECKS)
                or (effect >> VFLIP_SHIFT))


def _touches_data(effect: int) -> bool:
    return bool(effect & ((DATA_MASK << DATA_X_SHIFT)
                          | (DATA_MASK << DATA_Z_SHIFT)))


@dataclass
class FailureReport:
    failure_rate: float
    singles_rate: float
    pairs_rate: float
    n_points: int
    n_malignant_singles: int
    n_malignant_pairs: int
    top_pairs: list = field(default_factory=list)


def failure_rate(trace: TraceResult, decoder=lookup_correction,
                 top_k: int = 10) -> FailureReport:
    """Malignant singles plus malignant pairs of rate_i * rate_j.

    Pairs are enumerated inside the X system and inside the Z system (CSS
    split); a malignant pair needs at least one data-touching member, since
    classical-flip-only combinations shift the correction by at most one
    qubit per error type.
    """
    info = trace.info
    points = trace.points
    singles = 0.0
    n_single = 0
    malignant_singles = []
    for p in points:
        if is_malignant_effect(p.effect, info, decoder):
            singles += p.rate
            n_single += 1
            malignant_singles.append(p)

    pair_sum = 0.0
    n_pairs = 0
    top: list = []
    seen: set = set()
    for member in (_x_system, _z_system):
        group = [p for p in points if member(p.effect)]
        touch = [p for p in group if _touches_data(p.effect)]
        touch_ids = {p.index for p in touch}
        for p in touch:
            for q in group:
                if q.index == p.index:
                    continue
                if q.index in touch_ids and q.index < p.index:
                    continue
                key = (min(p.index, q.index), max(p.index, q.index))
                if key in seen:
                    continue
                if is_malignant_effect(p.effect ^ q.effect, info, decoder):
                    seen.add(key)
                    contrib = p.rate * q.rate
                    pair_sum += contrib
                    n_pairs += 1
                    top.append((contrib, p.label or str(p.index),
                                q.label or str(q.index)))
    top.sort(reverse=True)
    return FailureReport(singles + pair_sum, singles, pair_sum,
                         len(points), n_single, n_pairs, top[:top_k])
