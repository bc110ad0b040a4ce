"""Steane [[7,1,3]] stabilizers, syndrome lookup decoding, majority voting."""

from __future__ import annotations

from dataclasses import dataclass

# Stabilizer supports, 0-indexed qubits.  X and Z generators share supports
# (self-dual CSS).  Support bit patterns follow the Hamming-code structure:
# the syndrome bits read off a single error's 1-indexed qubit number in binary.
SUPPORTS = ((3, 4, 5, 6), (1, 2, 5, 6), (0, 2, 4, 6))
N_DATA = 7


def _mask(support) -> int:
    m = 0
    for q in support:
        m |= 1 << q
    return m


SUPPORT_MASKS = tuple(_mask(s) for s in SUPPORTS)


@dataclass(frozen=True)
class StabilizerSet:
    x_stabilizers: tuple[int, ...]  # bit masks over 7 data qubits
    z_stabilizers: tuple[int, ...]

    @property
    def all_supports(self):
        return tuple((("X", m) for m in self.x_stabilizers)) + \
            tuple((("Z", m) for m in self.z_stabilizers))


def steane_stabilizers() -> StabilizerSet:
    return StabilizerSet(x_stabilizers=SUPPORT_MASKS, z_stabilizers=SUPPORT_MASKS)


def weight(mask: int) -> int:
    return bin(mask).count("1")


def syndrome_of(error_mask: int, stabilizer_masks=SUPPORT_MASKS) -> int:
    """3-bit syndrome of a single-type error mask (X errors vs Z stabilizers,
    or Z errors vs X stabilizers; supports coincide)."""
    s = 0
    for i, m in enumerate(stabilizer_masks):
        s |= (weight(error_mask & m) & 1) << i
    return s


def lookup_correction(syndrome: int) -> int:
    """Map a 3-bit syndrome to the weight-<=1 correction mask."""
    if syndrome == 0:
        return 0
    qubit_1indexed = ((syndrome & 1) << 2) | (syndrome & 2) | (syndrome >> 2)
    return 1 << (qubit_1indexed - 1)


def residual_after_decode(error_mask: int, voted_syndrome: int) -> int:
    return error_mask ^ lookup_correction(voted_syndrome)


def majority(bits) -> int:
    bits = list(bits)
    return 1 if sum(bits) * 2 > len(bits) else 0


def vote_words(words, flags=None) -> int:
    """Majority vote over whole 6-bit syndrome words.

    Repetitions flagged inconsistent (DiVincenzo-Aliferis check bits) are
    excluded unless that empties the vote.  If two candidate words agree,
    that word wins; with no agreement the latest candidate is used (the
    freshest consistent reading), which keeps a lone mid-round fault from
    mis-steering the correction.
    """
    words = list(words)
    if flags is not None:
        cand = [w for w, f in zip(words, flags) if not f]
        if not cand:
            cand = words
    else:
        cand = words
    for i in range(len(cand)):
        for j in range(i + 1, len(cand)):
            if cand[i] == cand[j]:
                return cand[i]
    return cand[-1]


def _stabilizer_group(masks=SUPPORT_MASKS):
    group = []
    for bits in range(8):
        g = 0
        for i in range(3):
            if bits >> i & 1:
                g ^= masks[i]
        group.append(g)
    return tuple(group)


STAB_GROUP_MASKS = _stabilizer_group()


def coset_weight(mask: int) -> int:
    """Minimum weight of the error modulo the (single-type) stabilizer
    group; a residual equal to a stabilizer acts trivially on the code."""
    return min(weight(mask ^ g) for g in STAB_GROUP_MASKS)


def is_malignant(residual_mask: int) -> bool:
    """Fault-path criterion: residual weight >= 2 on the output data block,
    counted modulo stabilizers."""
    return coset_weight(residual_mask) >= 2


# ---------------------------------------------------------------------------
# DiVincenzo-Aliferis check-bit post-processing
# ---------------------------------------------------------------------------
#
# Conjugating a single cat X through the decode circuit (the inverse of the
# GHZ tree c1->c2, c1->c3, c2->c4) flips these check bits (m2, m3, m4):
#   c1 -> {m2,m3}   c2 -> {m2,m4}   c3 -> {m3}   c4 -> {m4}
# The map is invertible modulo the cat stabilizer X^4, whose two class
# representatives induce stabilizer-equivalent data errors, so either works.
_CAT_SIGS = (0b011, 0b101, 0b010, 0b100)  # bit0=m2, bit1=m3, bit2=m4


def _sig_to_cats(sig: int) -> tuple:
    best = None
    for pattern in range(16):
        s = 0
        for i in range(4):
            if pattern >> i & 1:
                s ^= _CAT_SIGS[i]
        if s == sig:
            if best is None or weight(pattern) < weight(best):
                best = pattern
    return tuple(i for i in range(4) if best >> i & 1)


SIG_TO_CATS = tuple(_sig_to_cats(s) for s in range(8))


def inferred_data_mask(stab_index: int, sig: int) -> int:
    """Data error induced by the cat-X class a check signature identifies,
    for the extraction of stabilizer `stab_index` (legs in support order)."""
    support = sorted(SUPPORTS[stab_index % 3])
    mask = 0
    for cat_i in SIG_TO_CATS[sig & 0b111]:
        mask |= 1 << support[cat_i]
    return mask
