"""Main 20-kilobit BRAM array: 128 physical rows x 160 columns.

In memory mode the array behaves as a true-dual-port RAM in a configurable
aspect ratio. In compute mode it is re-purposed as a simple dual-port
512x40 memory: logical word w lives on physical row w >> 2, column-mux
group w & 3, with bit j of the word at storage column 4*j + (w & 3).

A write of any value to address 0xfff on port A switches the block into
compute mode; the write data is decoded as a compute instruction elsewhere.
"""

import warnings
from dataclasses import dataclass
from enum import Enum

ROWS = 128
COLS = 160
WORDS = 512
CIM_TRIGGER_ADDR = 0xFFF
_WORD_MASK = (1 << 40) - 1


class Mode(Enum):
    MEMORY = "memory"
    COMPUTE = "compute"


@dataclass(frozen=True)
class CimAddress:
    """Physical location of a 40-bit word in compute mode."""

    row: int  # 0..127
    col: int  # column-mux group, 0..3

    def __post_init__(self):
        if not 0 <= self.row < ROWS:
            raise ValueError(f"row {self.row} out of range")
        if not 0 <= self.col < 4:
            raise ValueError(f"column group {self.col} out of range")

    @property
    def word(self) -> int:
        return self.row * 4 + self.col

    @classmethod
    def from_word(cls, word: int) -> "CimAddress":
        if not 0 <= word < WORDS:
            raise ValueError(f"word address {word} out of range")
        return cls(word >> 2, word & 3)


@dataclass(frozen=True)
class PortOp:
    port: str        # 'a' or 'b'
    kind: str        # 'read' or 'write'
    addr: int
    data: int = 0


class StaleCopyWarning(UserWarning):
    """Main-array word rewritten after it was copied into a compute array."""


class MainArray:
    def __init__(self, mode: Mode = Mode.MEMORY, mem_width: int = 40):
        if mem_width not in (40, 20):
            raise ValueError("memory-mode width must be 40 or 20")
        self.mode = mode
        self.mem_width = mem_width
        self._rows = [0] * ROWS
        self._copied = set()  # word addrs mirrored into dummy arrays

    # ---- mode switching ----

    @staticmethod
    def is_cim_trigger(addr: int) -> bool:
        return addr == CIM_TRIGGER_ADDR

    def enter_compute(self):
        self.mode = Mode.COMPUTE
        self._copied.clear()

    def exit_compute(self):
        self.mode = Mode.MEMORY
        self._copied.clear()

    # ---- compute-mode accesses (512x40 simple dual port) ----

    def cim_read40(self, addr) -> int:
        if self.mode is not Mode.COMPUTE:
            raise RuntimeError("compute read while in memory mode")
        a = addr if isinstance(addr, CimAddress) else CimAddress.from_word(addr)
        row = self._rows[a.row]
        word = 0
        for j in range(40):
            word |= ((row >> (4 * j + a.col)) & 1) << j
        return word

    def cim_write40(self, addr, data: int):
        if self.mode is not Mode.COMPUTE:
            raise RuntimeError("compute write while in memory mode")
        a = addr if isinstance(addr, CimAddress) else CimAddress.from_word(addr)
        if a.word in self._copied:
            warnings.warn(
                f"word {a.word} rewritten after being copied into a compute array",
                StaleCopyWarning,
                stacklevel=2,
            )
        row = self._rows[a.row]
        for j in range(40):
            pos = 4 * j + a.col
            row = (row & ~(1 << pos)) | (((data >> j) & 1) << pos)
        self._rows[a.row] = row

    def note_copied(self, addr):
        a = addr if isinstance(addr, CimAddress) else CimAddress.from_word(addr)
        self._copied.add(a.word)

    # ---- memory-mode accesses ----

    def _mem_geometry(self):
        width = self.mem_width
        return width, (ROWS * COLS) // width

    def mem_read(self, addr: int) -> int:
        width, depth = self._mem_geometry()
        if not 0 <= addr < depth:
            raise ValueError(f"address {addr} out of range for depth {depth}")
        per_row = COLS // width
        row = self._rows[addr // per_row]
        off = (addr % per_row) * width
        return (row >> off) & ((1 << width) - 1)

    def mem_write(self, addr: int, data: int):
        width, depth = self._mem_geometry()
        if not 0 <= addr < depth:
            raise ValueError(f"address {addr} out of range for depth {depth}")
        per_row = COLS // width
        r = addr // per_row
        off = (addr % per_row) * width
        mask = ((1 << width) - 1) << off
        self._rows[r] = (self._rows[r] & ~mask) | ((data << off) & mask)

    def mem_access(self, ops):
        """One memory-mode cycle on both ports.

        Reads return pre-cycle contents (read-during-write yields old data).
        Two writes to the same address in one cycle is an error.
        """
        if self.mode is not Mode.MEMORY:
            raise RuntimeError("memory access while in compute mode")
        if len(ops) > 2:
            raise ValueError("at most one operation per port")
        ports = [op.port for op in ops]
        if len(set(ports)) != len(ports):
            raise ValueError("both operations target the same port")
        writes = [op for op in ops if op.kind == "write"]
        if len(writes) == 2 and writes[0].addr == writes[1].addr:
            raise ValueError("write-write collision on one address")
        results = {}
        for op in ops:
            if op.kind == "read":
                results[op.port] = self.mem_read(op.addr)
        for op in writes:
            self.mem_write(op.addr, op.data)
        return results

    # ---- whole-array tile images ----

    def load_words(self, words, base: int = 0):
        for i, w in enumerate(words):
            a = CimAddress.from_word(base + i)
            row = self._rows[a.row]
            for j in range(40):
                pos = 4 * j + a.col
                row = (row & ~(1 << pos)) | (((w >> j) & 1) << pos)
            self._rows[a.row] = row

    def dump_words(self):
        out = []
        for word in range(WORDS):
            a = CimAddress.from_word(word)
            row = self._rows[a.row]
            v = 0
            for j in range(40):
                v |= ((row >> (4 * j + a.col)) & 1) << j
            out.append(v)
        return out


# ---- tile image file formats ----

def save_tile_hex(path, words):
    """One 40-bit word per line, ten hex digits, word 0 first."""
    with open(path, "w") as f:
        for w in words:
            f.write(f"{w & _WORD_MASK:010x}\n")


def load_tile_hex(path):
    words = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            w = int(line, 16)
            if w >> 40:
                raise ValueError(f"word {line!r} wider than 40 bits")
            words.append(w)
    return words


def save_tile_bin(path, words):
    """Flat binary: 512 words x 5 bytes, little-endian within the word."""
    with open(path, "wb") as f:
        for w in words:
            f.write((w & _WORD_MASK).to_bytes(5, "little"))


def load_tile_bin(path):
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) % 5:
        raise ValueError("binary tile image must be a multiple of 5 bytes")
    return [int.from_bytes(blob[i:i + 5], "little") for i in range(0, len(blob), 5)]
