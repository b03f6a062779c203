"""Fixed-width two's-complement lane arithmetic over 160-bit rows.

A 160-bit row is split into equal-width lanes (8/16/32 bits for 2/4/8-bit
operands). Lanes never exchange carries; every operation here is the golden,
non-cycle-accurate reference the hardware model is checked against.
"""

from dataclasses import dataclass

ROW_BITS = 160
WORD_BITS = 40


@dataclass(frozen=True)
class Precision:
    """Operand precision and the lane geometry derived from it."""

    bits: int        # operand width p
    lane_width: int  # w = 4*p, also the accumulator width
    lanes: int       # L = 160 / w, equals elements per 40-bit word
    max_dot: int     # max dot-product length before accumulator readout

    @property
    def macs_per_mac2(self) -> int:
        return 2 * self.lanes

    @property
    def acc_width(self) -> int:
        return self.lane_width

    @property
    def lane_mask(self) -> int:
        return (1 << self.lane_width) - 1

    @property
    def elem_mask(self) -> int:
        return (1 << self.bits) - 1


PREC2 = Precision(2, 8, 20, 16)
PREC4 = Precision(4, 16, 10, 256)
PREC8 = Precision(8, 32, 5, 2048)

PRECISIONS = {2: PREC2, 4: PREC4, 8: PREC8}


def precision(bits):
    try:
        return PRECISIONS[bits]
    except KeyError:
        raise ValueError(f"unsupported precision {bits}; must be 2, 4, or 8")


def to_signed(value: int, width: int) -> int:
    value &= (1 << width) - 1
    if value >= 1 << (width - 1):
        value -= 1 << width
    return value


def to_unsigned(value: int, width: int) -> int:
    if not (-(1 << (width - 1)) <= value < (1 << width)):
        raise ValueError(f"value {value} not representable in {width} bits")
    return value & ((1 << width) - 1)


def _check_operand(name, value, bits, signed):
    if signed:
        lo, hi = -(1 << (bits - 1)), (1 << (bits - 1)) - 1
    else:
        lo, hi = 0, (1 << bits) - 1
    if not (lo <= value <= hi):
        raise ValueError(f"{name}={value} out of range [{lo}, {hi}] for {bits}-bit")


@dataclass(frozen=True)
class LaneVector:
    """A 160-bit row value interpreted as independent lanes."""

    bits: int
    prec: Precision

    def __post_init__(self):
        if self.bits >> ROW_BITS:
            raise ValueError("LaneVector wider than 160 bits")

    def lane(self, j: int) -> int:
        w = self.prec.lane_width
        return (self.bits >> (j * w)) & self.prec.lane_mask

    def lane_signed(self, j: int) -> int:
        return to_signed(self.lane(j), self.prec.lane_width)

    def lanes(self):
        return [self.lane(j) for j in range(self.prec.lanes)]

    def values(self):
        return [self.lane_signed(j) for j in range(self.prec.lanes)]

    @classmethod
    def from_lanes(cls, lanes, prec):
        if len(lanes) > prec.lanes:
            raise ValueError("too many lanes")
        bits = 0
        w = prec.lane_width
        for j, v in enumerate(lanes):
            bits |= (v & prec.lane_mask) << (j * w)
        return cls(bits, prec)


@dataclass(frozen=True)
class PackedWord:
    """A 40-bit BRAM word holding lanes_per_word p-bit elements."""

    bits: int
    prec: Precision

    def __post_init__(self):
        if self.bits >> WORD_BITS:
            raise ValueError("PackedWord wider than 40 bits")

    def element(self, j: int) -> int:
        p = self.prec.bits
        return (self.bits >> (j * p)) & self.prec.elem_mask

    def element_signed(self, j: int) -> int:
        return to_signed(self.element(j), self.prec.bits)

    def values(self):
        return [self.element_signed(j) for j in range(self.prec.lanes)]

    @classmethod
    def from_elements(cls, elems, prec):
        if len(elems) > prec.lanes:
            raise ValueError("too many elements")
        bits = 0
        p = prec.bits
        for j, v in enumerate(elems):
            _check_operand(f"element[{j}]", v, p, signed=True)
            bits |= (v & prec.elem_mask) << (j * p)
        return cls(bits, prec)


def sign_extend_word(word: PackedWord, prec: Precision = None) -> LaneVector:
    """Sign-extend each p-bit element of a 40-bit word to a w-bit lane."""
    prec = prec or word.prec
    return LaneVector.from_lanes(
        [to_signed(word.element(j), prec.bits) for j in range(prec.lanes)], prec
    )


def simd_add(a: LaneVector, b: LaneVector, carry_in: int = 0) -> LaneVector:
    if a.prec is not b.prec and a.prec != b.prec:
        raise ValueError("operand precisions differ")
    if carry_in not in (0, 1):
        raise ValueError("carry_in must be 0 or 1")
    w = a.prec.lane_width
    mask = a.prec.lane_mask
    bits = 0
    for j in range(a.prec.lanes):
        s = (a.lane(j) + b.lane(j) + carry_in) & mask
        bits |= s << (j * w)
    return LaneVector(bits, a.prec)


def lane_shl1(a: LaneVector) -> LaneVector:
    w = a.prec.lane_width
    mask = a.prec.lane_mask
    bits = 0
    for j in range(a.prec.lanes):
        bits |= ((a.lane(j) << 1) & mask) << (j * w)
    return LaneVector(bits, a.prec)


def lane_invert(a: LaneVector) -> LaneVector:
    # invert + simd_add(carry_in=1) realizes per-lane negation
    full = (1 << (a.prec.lanes * a.prec.lane_width)) - 1
    return LaneVector(a.bits ^ full, a.prec)


def zero_vector(prec: Precision) -> LaneVector:
    return LaneVector(0, prec)


def mac2_reference(w1, w2, i1, i2, prec: Precision, signed_inputs: bool = True) -> int:
    """Naive oracle: exact integer w1*i1 + w2*i2 with range checks."""
    _check_operand("w1", w1, prec.bits, signed=True)
    _check_operand("w2", w2, prec.bits, signed=True)
    _check_operand("i1", i1, prec.bits, signed=signed_inputs)
    _check_operand("i2", i2, prec.bits, signed=signed_inputs)
    return w1 * i1 + w2 * i2


def alg1_mac2(w1, w2, i1, i2, prec: Precision, signed_inputs: bool = True) -> int:
    """Hybrid bit-serial/bit-parallel MAC2.

    Iterates input bits MSB-first; the MSB iteration subtracts the partial sum
    via invert-plus-one (skipped to a plain add for unsigned inputs); every
    non-LSB iteration shifts the running value left by one bit.
    """
    _check_operand("w1", w1, prec.bits, signed=True)
    _check_operand("w2", w2, prec.bits, signed=True)
    _check_operand("i1", i1, prec.bits, signed=signed_inputs)
    _check_operand("i2", i2, prec.bits, signed=signed_inputs)
    n = prec.bits
    w = prec.lane_width
    mask = prec.lane_mask
    i1u = i1 & prec.elem_mask
    i2u = i2 & prec.elem_mask
    p = 0
    half = 1 << (w - 1)
    for i in range(n - 1, -1, -1):
        b1 = (i1u >> i) & 1
        b2 = (i2u >> i) & 1
        psum = (b1 * (w1 & mask) + b2 * (w2 & mask)) & mask
        if i == n - 1 and signed_inputs:
            p = (p + (psum ^ mask) + 1) & mask
        else:
            p = (p + psum) & mask
        if i != 0:
            p = (p << 1) & mask
        # w = 4p gives enough headroom that the running value never wraps
        assert -half <= to_signed(p, w) < half
    return to_signed(p, w)


def safe_dot_length(prec: Precision, signed_inputs: bool = True) -> int:
    """Longest dot product guaranteed not to overflow the w-bit accumulator.

    The architectural max_dot (16/256/2048) is taken as given; this reports
    the exact bound implied by the operand ranges for comparison.
    """
    wmax = 1 << (prec.bits - 1)  # |w| <= 2^(p-1)
    if signed_inputs:
        pos = wmax * wmax            # (-2^(p-1)) * (-2^(p-1))
        neg = wmax * (wmax - 1)
    else:
        imax = (1 << prec.bits) - 1
        pos = (wmax - 1) * imax
        neg = wmax * imax
    half = 1 << (prec.acc_width - 1)
    return min((half - 1) // pos, half // neg)
