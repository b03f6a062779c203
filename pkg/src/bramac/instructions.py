"""Compute-instruction word formats.

Instructions are delivered as 40-bit write data to the trigger address. Both
variants share the low control bits; the field packing above bit 6 differs
because the dual-array variant fetches one weight word per instruction while
the single-array variant carries two row addresses at once.
"""

from dataclasses import dataclass

from .lanes import precision

_PREC_ENCODE = {2: 0, 4: 1, 8: 2}
_PREC_DECODE = {v: k for k, v in _PREC_ENCODE.items()}


@dataclass(frozen=True)
class Variant:
    """Static parameters of one compute-BRAM flavor."""

    name: str
    dummy_arrays: int
    array_clock_ratio: int      # dummy-array cycles per main-BRAM cycle
    port_busy_per_mac2: int     # main-BRAM cycles spent fetching weights
    prologue_cycles: int        # weight fetch for the very first MAC2
    readout_cycles: int         # cycles to stream out all accumulator chunks
    fmax_mhz: float

    def mac2_latency(self, prec_bits: int, signed_inputs: bool = True) -> int:
        """Steady-state main-BRAM cycles per pipelined MAC2."""
        n = precision(prec_bits).bits
        ticks = n + 3 if signed_inputs else n + 2
        if self.array_clock_ratio == 1:
            return ticks
        return -(-(ticks + 1) // self.array_clock_ratio)


V2SA = Variant("2SA", dummy_arrays=2, array_clock_ratio=1,
               port_busy_per_mac2=2, prologue_cycles=2, readout_cycles=8,
               fmax_mhz=586.0)
V1DA = Variant("1DA", dummy_arrays=1, array_clock_ratio=2,
               port_busy_per_mac2=1, prologue_cycles=1, readout_cycles=4,
               fmax_mhz=500.0)

VARIANTS = {"2SA": V2SA, "1DA": V1DA}


def variant(name: str) -> Variant:
    try:
        return VARIANTS[name.upper()]
    except KeyError:
        raise ValueError(f"unknown variant {name!r}; expected 2SA or 1DA")


def _field(word, lo, width):
    return (word >> lo) & ((1 << width) - 1)


def _place(value, lo, width, what):
    if value >> width:
        raise ValueError(f"{what}={value} does not fit in {width} bits")
    return value << lo


@dataclass(frozen=True)
class Mac2Instruction:
    """Decoded compute instruction, superset of both variant layouts.

    Dual-array layout (LSB first):
      prec[1:0] inType reset start copy w1_w2 done bramRow[6:0] bramCol[1:0]
      ia[7:0] ib[7:0] pad[6:0]
    Single-array layout:
      prec[1:0] inType reset start copy done bramRow1[6:0] bramRow2[6:0]
      bramCol[1:0] i1[7:0] i2[7:0] pad
    """

    prec_bits: int = 2
    signed_inputs: bool = True
    reset: bool = False
    start: bool = False
    copy: bool = False
    w1_w2: int = 0          # dual-array only: 0 fetches W1, 1 fetches W2
    done: bool = False
    bram_row: int = 0
    bram_row2: int = 0      # single-array only
    bram_col: int = 0
    i_a: int = 0            # raw 8-bit input fields
    i_b: int = 0

    def encode(self, var: Variant) -> int:
        common = (
            _place(_PREC_ENCODE[self.prec_bits], 0, 2, "prec")
            | _place(0 if self.signed_inputs else 1, 2, 1, "inType")
            | _place(int(self.reset), 3, 1, "reset")
            | _place(int(self.start), 4, 1, "start")
            | _place(int(self.copy), 5, 1, "copy")
        )
        if var.dummy_arrays == 2:
            return (common
                    | _place(self.w1_w2, 6, 1, "w1_w2")
                    | _place(int(self.done), 7, 1, "done")
                    | _place(self.bram_row, 8, 7, "bramRow")
                    | _place(self.bram_col, 15, 2, "bramCol")
                    | _place(self.i_a, 17, 8, "i_a")
                    | _place(self.i_b, 25, 8, "i_b"))
        return (common
                | _place(int(self.done), 6, 1, "done")
                | _place(self.bram_row, 7, 7, "bramRow1")
                | _place(self.bram_row2, 14, 7, "bramRow2")
                | _place(self.bram_col, 21, 2, "bramCol")
                | _place(self.i_a, 23, 8, "i1")
                | _place(self.i_b, 31, 8, "i2"))

    @classmethod
    def decode(cls, word: int, var: Variant) -> "Mac2Instruction":
        if word >> 40:
            raise ValueError("instruction wider than 40 bits")
        prec_code = _field(word, 0, 2)
        if prec_code not in _PREC_DECODE:
            raise ValueError(f"reserved precision code {prec_code}")
        common = dict(
            prec_bits=_PREC_DECODE[prec_code],
            signed_inputs=not _field(word, 2, 1),
            reset=bool(_field(word, 3, 1)),
            start=bool(_field(word, 4, 1)),
            copy=bool(_field(word, 5, 1)),
        )
        if var.dummy_arrays == 2:
            return cls(**common,
                       w1_w2=_field(word, 6, 1),
                       done=bool(_field(word, 7, 1)),
                       bram_row=_field(word, 8, 7),
                       bram_col=_field(word, 15, 2),
                       i_a=_field(word, 17, 8),
                       i_b=_field(word, 25, 8))
        return cls(**common,
                   done=bool(_field(word, 6, 1)),
                   bram_row=_field(word, 7, 7),
                   bram_row2=_field(word, 14, 7),
                   bram_col=_field(word, 21, 2),
                   i_a=_field(word, 23, 8),
                   i_b=_field(word, 31, 8))


def load_instruction_hex(path):
    """Instruction stream file: one 40-bit hex word per line."""
    words = []
    with open(path) as f:
        for line in f:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            w = int(line, 16)
            if w >> 40:
                raise ValueError(f"instruction {line!r} wider than 40 bits")
            words.append(w)
    return words


def save_instruction_hex(path, words):
    with open(path, "w") as f:
        for w in words:
            f.write(f"{w:010x}\n")
