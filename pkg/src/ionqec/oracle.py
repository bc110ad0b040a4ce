"""Monte Carlo Pauli-frame oracle for error schedules.

Frames are classical X/Z bit vectors propagated through the ideal Clifford
circuit; faults are sampled per error-schedule entry (one of I/X/Y/Z per
leg, the CZ's ZZ jointly), readout flips feed the same majority-vote lookup
decoder the fault tracer uses.  Shots are processed in fixed-size chunks
from a single seeded generator, so results are a deterministic function of
(seed, shots, chunk size); the default chunk size is 100000 and is part of
the reproducibility contract.

A scalar injector (`inject_and_decode`) propagates explicit fault sets with
no sampling; the exhaustive single-fault checks drive the tracer and this
injector against each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .circuits import Protocol, RoundInfo
from .scheduler import ErrorSchedule
from .stabilizers import (coset_weight, inferred_data_mask,
                          lookup_correction, syndrome_of, vote_words)

DATA = tuple(f"d{i}" for i in range(7))
DEFAULT_CHUNK = 100_000

_COSET_W = np.array([coset_weight(i) for i in range(128)], dtype=np.uint8)
_LOOKUP = np.array([lookup_correction(s) for s in range(8)], dtype=np.uint8)
_SIGMA = np.array([syndrome_of(m) for m in range(128)], dtype=np.uint8)
_INFER = np.array([[inferred_data_mask(stab, sig) for sig in range(8)]
                   for stab in range(6)], dtype=np.uint8)


@dataclass
class PauliFrame:
    """X/Z bit vectors over the physical qubits plus the classical record."""

    x: dict = field(default_factory=dict)
    z: dict = field(default_factory=dict)
    record: dict = field(default_factory=dict)

    def flip_x(self, q):
        self.x[q] = self.x.get(q, 0) ^ 1

    def flip_z(self, q):
        self.z[q] = self.z.get(q, 0) ^ 1

    def hadamard(self, q):
        self.x[q], self.z[q] = self.z.get(q, 0), self.x.get(q, 0)

    def cz(self, a, b):
        self.z[b] = self.z.get(b, 0) ^ self.x.get(a, 0)
        self.z[a] = self.z.get(a, 0) ^ self.x.get(b, 0)

    def prepare(self, q):
        self.x[q] = 0
        self.z[q] = 0

    def measure(self, q, key) -> int:
        bit = self.x.get(q, 0)
        self.record[key] = self.record.get(key, 0) ^ bit
        return bit


def _sorted_entries(es: ErrorSchedule):
    return sorted(es.entries, key=lambda e: (e.t_start, e.t_end, e.qubits))


def _vote_words_vec(words, flagged, reps):
    """Vectorized word-level vote matching stabilizers.vote_words."""
    n = len(words[0])
    voted = np.zeros(n, dtype=np.uint16)
    decided = np.zeros(n, dtype=bool)
    # loop over flag patterns; within each, apply the scalar rule's order
    for pattern in range(1 << reps):
        sel = np.ones(n, dtype=bool)
        for r in range(reps):
            want = bool(pattern >> r & 1)
            sel &= (flagged[r] == want)
        if not sel.any():
            continue
        cand = [r for r in range(reps) if not (pattern >> r & 1)]
        if not cand:
            cand = list(range(reps))
        rows = sel.copy()
        for i in range(len(cand)):
            for j in range(i + 1, len(cand)):
                agree = rows & ~decided & (words[cand[i]] == words[cand[j]])
                voted[agree] = words[cand[i]][agree]
                decided |= agree
        rest = rows & ~decided
        voted[rest] = words[cand[-1]][rest]
        decided |= rest
    return voted


def _cat_columns(info: RoundInfo, col: dict):
    """Extraction id -> cat frame columns, for verifier discard handling."""
    out = {}
    for (ext, _rep, _stab, set_id, _kind) in info.extractions:
        cols = [col[f"a{set_id}c{i}"] for i in (1, 2, 3, 4)
                if f"a{set_id}c{i}" in col]
        out[ext] = cols
    return out


@dataclass
class OracleResult:
    logical_failure_rate: float
    std_error: float
    shots: int
    failures: int
    discard_fraction: float
    syndrome_stats: dict


def run_oracle(es: ErrorSchedule, info: RoundInfo, shots: int,
               seed: int, chunk_size: int = DEFAULT_CHUNK) -> OracleResult:
    """Sample faults, propagate frames, vote + decode, count weight>=2
    residuals.  Verifier rejections reset the set to a clean re-prepared
    cat (re-preparation latency and noise excluded, matching the tracer's
    conditioning on successful verification)."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    entries = _sorted_entries(es)
    qubits = sorted({q for e in entries for q in e.qubits})
    col = {q: i for i, q in enumerate(qubits)}
    cat_cols = _cat_columns(info, col)
    reps = info.repetitions
    da = info.protocol is Protocol.DA
    rng = np.random.default_rng(seed)

    failures = 0
    discards = 0
    synd_weight_sum = 0.0
    done = 0
    while done < shots:
        n = min(chunk_size, shots - done)
        X = np.zeros((n, len(qubits)), dtype=np.uint8)
        Z = np.zeros((n, len(qubits)), dtype=np.uint8)
        synd = np.zeros((n, 18), dtype=np.uint8)
        checks = np.zeros((n, 54), dtype=np.uint8)
        for e in entries:
            kind = e.kind
            if kind == "HADAMARD":
                q = col[e.qubits[0]]
                X[:, q], Z[:, q] = Z[:, q], X[:, q].copy()
            elif kind == "CZ":
                a, b = col[e.qubits[0]], col[e.qubits[1]]
                Z[:, b] ^= X[:, a]
                Z[:, a] ^= X[:, b]
                u = rng.random(n)
                Z[:, a] ^= u < e.z_rate
                u = rng.random(n)
                Z[:, b] ^= u < e.z_rate
                if e.zz_rate > 0:
                    zz = rng.random(n) < e.zz_rate
                    Z[:, a] ^= zz
                    Z[:, b] ^= zz
                continue
            elif kind == "PREPARE_Z":
                q = col[e.qubits[0]]
                X[:, q] = 0
                Z[:, q] = 0
            elif kind in ("MEASURE_Z", "MULTIMEASURE_Z"):
                q = col[e.qubits[0]]
                outcome = X[:, q].copy()
                if e.z_rate > 0:
                    outcome ^= rng.random(n) < e.z_rate
                tag = e.tag
                if tag is None or tag.role == "plain":
                    continue
                if tag.role == "verifier":
                    reject = outcome == 1
                    discards += int(reject.sum())
                    for c in cat_cols[tag.ext]:
                        X[reject, c] = 0
                        Z[reject, c] = 0
                    continue
                pos = tag.rep * 6 + tag.stab
                if tag.role == "cat" or (tag.role == "da_bit"
                                         and tag.index == 1):
                    synd[:, pos] ^= outcome
                else:
                    checks[:, pos * 3 + tag.index - 2] ^= outcome
                continue
            # independent X/Y/Z sampling for 1-qubit legs
            if e.x_rate or e.y_rate or e.z_rate:
                q = col[e.qubits[0]]
                u = rng.random(n)
                px, py, pz = e.x_rate, e.y_rate, e.z_rate
                X[:, q] ^= u < (px + py)
                Z[:, q] ^= (u >= px) & (u < px + py + pz)

        words = [sum(synd[:, r * 6 + s].astype(np.uint16) << s
                     for s in range(6)) for r in range(reps)]
        if da:
            flagged = [checks[:, r * 18:(r + 1) * 18].any(axis=1)
                       for r in range(reps)]
        else:
            flagged = [np.zeros(n, dtype=bool)] * reps
        voted = _vote_words_vec(words, flagged, reps)
        synd_for_x = ((voted >> 3) & 0b111).astype(np.uint8)
        synd_for_z = (voted & 0b111).astype(np.uint8)
        corr_x = _LOOKUP[synd_for_x]
        corr_z = _LOOKUP[synd_for_z]
        if da:
            act_x = np.zeros(n, dtype=np.uint8)
            act_z = np.zeros(n, dtype=np.uint8)
            for r in range(reps):
                for stab in range(6):
                    c0 = (r * 6 + stab) * 3
                    sig = (checks[:, c0]
                           | (checks[:, c0 + 1] << 1)
                           | (checks[:, c0 + 2] << 2))
                    masks = _INFER[stab][sig]
                    detecting = (3, 4, 5) if stab < 3 else (0, 1, 2)
                    ok = sig > 0
                    sigma = _SIGMA[masks]
                    for pos in range(r * 6 + stab + 1, reps * 6):
                        st = pos % 6
                        if st in detecting:
                            pred = (sigma >> detecting.index(st)) & 1
                            ok &= synd[:, pos] == pred
                    if stab < 3:
                        act_x ^= np.where(ok, masks, 0).astype(np.uint8)
                    else:
                        act_z ^= np.where(ok, masks, 0).astype(np.uint8)
            have_x = act_x != 0
            have_z = act_z != 0
            corr_x = np.where(have_x,
                              act_x ^ _LOOKUP[synd_for_x ^ _SIGMA[act_x]],
                              corr_x)
            corr_z = np.where(have_z,
                              act_z ^ _LOOKUP[synd_for_z ^ _SIGMA[act_z]],
                              corr_z)
        data_cols = [col[d] for d in DATA if d in col]
        dx = np.zeros(n, dtype=np.uint8)
        dz = np.zeros(n, dtype=np.uint8)
        for i, c in enumerate(data_cols):
            dx |= X[:, c].astype(np.uint8) << i
            dz |= Z[:, c].astype(np.uint8) << i
        res_x = dx ^ corr_x
        res_z = dz ^ corr_z
        bad = (_COSET_W[res_x] >= 2) | (_COSET_W[res_z] >= 2)
        failures += int(bad.sum())
        synd_weight_sum += float(sum(w.astype(np.int64).sum()
                                     for w in words)) / max(reps, 1)
        done += n

    p = failures / shots
    std = float(np.sqrt(max(p * (1 - p), 1e-300) / shots))
    return OracleResult(p, std, shots, failures,
                        discards / shots,
                        {"mean_voted_syndrome_weight": synd_weight_sum / shots})


# ---------------------------------------------------------------------------
# Deterministic fault injection (no sampling)
# ---------------------------------------------------------------------------


def inject_and_decode(es: ErrorSchedule, info: RoundInfo, faults):
    """Propagate an explicit fault set; returns (res_x, res_z) masks after
    vote + decode, or None when a verifier rejects (discard).

    `faults` is a list of (entry_position, kind) with kind in
    {"X","Z","ZZ","FLIP"}; entry positions index the time-sorted entries,
    and the fault applies immediately after that entry.
    """
    entries = _sorted_entries(es)
    frame = PauliFrame()
    reps = info.repetitions
    da = info.protocol is Protocol.DA
    by_pos: dict = {}
    for pos, kind in faults:
        by_pos.setdefault(pos, []).append(kind)
    synd = {}
    checks = {}
    discarded = False
    cat_names = {ext: [f"a{s}c{i}" for i in (1, 2, 3, 4)]
                 for (ext, _r, _st, s, _k) in info.extractions}

    for pos, e in enumerate(entries):
        kind = e.kind
        if kind == "HADAMARD":
            frame.hadamard(e.qubits[0])
        elif kind == "CZ":
            frame.cz(*e.qubits)
        elif kind == "PREPARE_Z":
            frame.prepare(e.qubits[0])
        elif kind in ("MEASURE_Z", "MULTIMEASURE_Z"):
            tag = e.tag
            outcome = frame.x.get(e.qubits[0], 0)
            if "FLIP" in by_pos.get(pos, ()):
                outcome ^= 1
            if tag is not None and tag.role != "plain":
                if tag.role == "verifier":
                    if outcome == 1:
                        for c in cat_names[tag.ext]:
                            frame.prepare(c)
                        discarded = True
                else:
                    key = tag.rep * 6 + tag.stab
                    if tag.role == "cat" or (tag.role == "da_bit"
                                             and tag.index == 1):
                        synd[key] = synd.get(key, 0) ^ outcome
                    elif outcome:
                        checks[key] = checks.get(key, 0) ^ \
                            (1 << (tag.index - 2))
        for fk in by_pos.get(pos, ()):
            if fk == "X":
                frame.flip_x(e.qubits[0])
            elif fk == "Z":
                frame.flip_z(e.qubits[0])
            elif fk == "ZZ":
                frame.flip_z(e.qubits[0])
                frame.flip_z(e.qubits[1])

    if discarded:
        return None
    words = [sum(synd.get(r * 6 + s, 0) << s for s in range(6))
             for r in range(reps)]
    flags = [1 if any(checks.get(r * 6 + s, 0) for s in range(6)) else 0
             for r in range(reps)] if da else None
    voted = vote_words(words, flags)
    synd_for_x = (voted >> 3) & 0b111
    synd_for_z = voted & 0b111
    corr_x = lookup_correction(synd_for_x)
    corr_z = lookup_correction(synd_for_z)
    if da and checks:
        act_x = act_z = 0
        for (key, sig) in sorted(checks.items()):
            if not sig:
                continue
            stab = key % 6
            mask = inferred_data_mask(stab, sig)
            sigma = syndrome_of(mask)
            detecting = (3, 4, 5) if stab < 3 else (0, 1, 2)
            ok = True
            for pos in range(key + 1, reps * 6):
                st = pos % 6
                if st in detecting:
                    pred = (sigma >> detecting.index(st)) & 1
                    if synd.get(pos, 0) != pred:
                        ok = False
                        break
            if not ok:
                continue
            if stab < 3:
                act_x ^= mask
            else:
                act_z ^= mask
        if act_x:
            corr_x = act_x ^ lookup_correction(synd_for_x
                                               ^ syndrome_of(act_x))
        if act_z:
            corr_z = act_z ^ lookup_correction(synd_for_z
                                               ^ syndrome_of(act_z))
    res_x = res_z = 0
    for i, d in enumerate(DATA):
        res_x |= frame.x.get(d, 0) << i
        res_z |= frame.z.get(d, 0) << i
    res_x ^= corr_x
    res_z ^= corr_z
    return res_x, res_z


def inflate_rates(es: ErrorSchedule, value: float = 1e-3) -> ErrorSchedule:
    """Replace every nonzero rate with `value` (Monte Carlo cross-checks)."""
    from dataclasses import replace
    entries = [replace(e,
                       x_rate=value if e.x_rate else 0.0,
                       y_rate=value if e.y_rate else 0.0,
                       z_rate=value if e.z_rate else 0.0,
                       zz_rate=value if e.zz_rate else 0.0)
               for e in es.entries]
    return ErrorSchedule(entries, es.latency, dict(es.header))
