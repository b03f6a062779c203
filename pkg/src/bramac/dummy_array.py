"""Row-level model of the 7x160 dual-port compute array.

The array holds seven 160-bit rows. Row 0 is hard-wired to zero and rejects
writes. A 2-to-4 demux selects the partial-sum row from the two current input
bits: (0,0) -> ZERO, (1,0) -> W1, (0,1) -> W2, (1,1) -> W1W2.

Each micro-op may read up to two rows and write up to two rows in one array
cycle (two sense amplifiers and two write drivers per column); callers that
need the budget enforced can inspect the per-op read/write row lists.
"""

from enum import IntEnum

from .lanes import (
    LaneVector,
    PackedWord,
    Precision,
    lane_invert,
    lane_shl1,
    sign_extend_word,
    simd_add,
)


class Row(IntEnum):
    ZERO = 0
    W1 = 1
    W2 = 2
    W1W2 = 3
    INV = 4
    P = 5
    ACC = 6


PSUM_SELECT = {
    (0, 0): Row.ZERO,
    (1, 0): Row.W1,
    (0, 1): Row.W2,
    (1, 1): Row.W1W2,
}


def select_psum_row(bit1: int, bit2: int) -> Row:
    return PSUM_SELECT[(bit1 & 1, bit2 & 1)]


class DummyArray:
    """Mutable state plus the micro-ops the FSM sequences.

    Every public op models exactly one array cycle. Ops record the rows they
    touched in `last_reads` / `last_writes` so a scheduler can check the
    two-read/two-write port budget.
    """

    def __init__(self, prec: Precision):
        self.prec = prec
        self._rows = [0] * 7
        self.last_reads = []
        self.last_writes = []

    def read(self, row: Row) -> LaneVector:
        return LaneVector(self._rows[row], self.prec)

    def write(self, row: Row, value: LaneVector):
        if row == Row.ZERO:
            raise ValueError("row 0 is hard-wired to zero")
        self._rows[row] = value.bits

    def _commit(self, reads, writes):
        assert len(reads) <= 2 and len(writes) <= 2, "port budget exceeded"
        self.last_reads = list(reads)
        self.last_writes = [r for r, _ in writes]
        for row, vec in writes:
            self.write(row, vec)

    # ---- micro-ops ----

    def copy_weight(self, word: PackedWord, which: Row):
        """Sign-extend a 40-bit weight word into row W1 or W2."""
        if which not in (Row.W1, Row.W2):
            raise ValueError("copy target must be W1 or W2")
        self._commit([], [(which, sign_extend_word(word, self.prec))])

    def copy_weights(self, word1: PackedWord, word2: PackedWord):
        """Write both weight rows in one cycle (uses both write drivers)."""
        self._commit([], [
            (Row.W1, sign_extend_word(word1, self.prec)),
            (Row.W2, sign_extend_word(word2, self.prec)),
        ])

    def sum_weights_init_p(self):
        """W1W2 = W1 + W2 lane-wise; P starts at zero the same cycle."""
        s = simd_add(self.read(Row.W1), self.read(Row.W2))
        self._commit([Row.W1, Row.W2], [
            (Row.W1W2, s),
            (Row.P, LaneVector(0, self.prec)),
        ])

    def invert_selected(self, bit1: int, bit2: int):
        """INV = bitwise complement of the demux-selected partial-sum row."""
        src = select_psum_row(bit1, bit2)
        self._commit([src], [(Row.INV, lane_invert(self.read(src)))])

    def add_psum(self, bit1, bit2, use_inv=False, shift_after=False, carry_in=0):
        """P += selected partial sum (or INV row), optional left shift after."""
        src = Row.INV if use_inv else select_psum_row(bit1, bit2)
        acc = simd_add(self.read(Row.P), self.read(src), carry_in)
        if shift_after:
            acc = lane_shl1(acc)
        self._commit([Row.P, src], [(Row.P, acc)])

    def accumulate(self):
        """ACC += P."""
        s = simd_add(self.read(Row.ACC), self.read(Row.P))
        self._commit([Row.ACC, Row.P], [(Row.ACC, s)])

    def clear_acc(self):
        self._commit([], [(Row.ACC, LaneVector(0, self.prec))])

    def read_acc_chunk(self, col: int) -> int:
        """One 40-bit readout slice of the accumulator row (col in 0..3)."""
        if not 0 <= col <= 3:
            raise ValueError("chunk index must be 0..3")
        self.last_reads, self.last_writes = [Row.ACC], []
        return (self._rows[Row.ACC] >> (40 * col)) & ((1 << 40) - 1)

    # ---- debug views, not array cycles ----

    def p_values(self):
        return self.read(Row.P).values()

    def acc_values(self):
        return self.read(Row.ACC).values()
