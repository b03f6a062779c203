"""Cycle-accurate sequencing of compute operations.

The finite-state machine in each compute-enabled BRAM fetches weight words
from the main array, drives the micro-op sequence in the dummy array(s), and
streams the accumulator out 40 bits at a time. This module replays that
schedule tick by tick:

  * dual-array variant: the compute arrays run at the main-BRAM clock, one
    micro-op per cycle; each MAC2 spends 2 cycles fetching weights, and the
    fetch for the next MAC2 overlaps the last two compute cycles of the
    current one.
  * single-array variant: the compute array runs at twice the main clock
    (two micro-ops per main cycle); both weight words are fetched through
    the two ports in a single cycle.

Steady-state pipelined MAC2 latency comes out to n+3 main cycles for the
dual-array variant and (n+4)/2 for the single-array one (signed inputs),
i.e. 5/7/11 and 3/4/6 cycles for 2/4/8-bit operands.
"""

from dataclasses import dataclass, field

from .bram_block import CimAddress, MainArray, Mode
from .dummy_array import DummyArray, Row
from .instructions import Mac2Instruction, Variant, variant as _variant
from .lanes import PackedWord, precision, to_signed

__all__ = [
    "ArrayOp", "Mac2Request", "StreamResult", "TraceRow", "ScheduleError",
    "run_mac2_stream", "run_instruction_stream", "run_dot_product",
    "instruction_stream_for_mac2s", "DotResult",
]


class ScheduleError(Exception):
    """Instruction arrived in an order the FSM cannot service."""


@dataclass(frozen=True)
class ArrayOp:
    """Work for one dummy array within one MAC2 slot."""

    addr_w1: int      # main-array word address of the first weight word
    addr_w2: int
    i1: int           # p-bit inputs, range-checked downstream
    i2: int


@dataclass(frozen=True)
class Mac2Request:
    """One pipelined MAC2 slot; ops has one entry per dummy array.

    An entry may be None (array idle this slot). shared_weights selects the
    fetch order for the dual-array variant: True fetches W1 for both arrays
    then W2 for both (same weights, different inputs); False fetches both
    words for array 0 then both for array 1.
    """

    ops: tuple
    shared_weights: bool = True


@dataclass
class TraceRow:
    cycle: int
    phase: str
    porta_busy: bool
    portb_busy: bool
    row_writes: str


@dataclass
class StreamResult:
    results: list               # per request: per array: lane values of P, or None
    acc: list                   # per array: accumulator lane values at the end
    readout_words: list         # 40-bit chunks streamed out (empty if no readout)
    total_cycles: int
    busy_cycles: int
    trace: list = field(default_factory=list)


def _compute_ops(prec, signed_inputs):
    """Micro-op descriptors for one MAC2, in issue order."""
    n = prec.bits
    msb = n - 1
    ops = [("sum_init", None, False, False, 0)]
    if signed_inputs:
        ops.append(("invert", msb, False, False, 0))
        ops.append(("add", msb, True, True, 1))
    else:
        ops.append(("add", msb, False, True, 0))
    for i in range(n - 2, 0, -1):
        ops.append(("add", i, False, True, 0))
    ops.append(("add", 0, False, False, 0))
    ops.append(("accumulate", None, False, False, 0))
    return ops


def run_mac2_stream(requests, var, prec_bits, signed_inputs=True,
                    block=None, readout=False, collect_trace=False):
    """Execute a back-to-back stream of MAC2 slots on one BRAM block.

    Returns per-slot products (lane values before accumulation), the final
    accumulator contents, and exact cycle/port accounting.
    """
    if isinstance(var, str):
        var = _variant(var)
    prec = precision(prec_bits)
    ticks_per = prec.bits + 3 if signed_inputs else prec.bits + 2
    lat = var.mac2_latency(prec_bits, signed_inputs)
    ratio = var.array_clock_ratio

    if block is None:
        block = MainArray(mode=Mode.COMPUTE)
    elif block.mode is not Mode.COMPUTE:
        block.enter_compute()

    arrays = [DummyArray(prec) for _ in range(var.dummy_arrays)]
    results = [[None] * var.dummy_arrays for _ in requests]

    # events: (tick, priority, kind, array_index, payload)
    events = []
    busy = {}  # main cycle -> (porta, portb, phase)

    def mark_busy(cycle, porta, portb, phase):
        a, b, ph = busy.get(cycle, (False, False, None))
        busy[cycle] = (a or porta, b or portb, ph or phase)

    for j, req in enumerate(requests):
        if len(req.ops) != var.dummy_arrays:
            raise ValueError("request op count does not match variant")
        if var.dummy_arrays == 2:
            base = j * lat  # ticks, ratio == 1
            mark_busy(base, True, True, "copy")
            mark_busy(base + 1, True, True, "copy")
            if req.shared_weights:
                # cycle 0 fetches W1 for both arrays, cycle 1 fetches W2
                for a, op in enumerate(req.ops):
                    if op is None:
                        continue
                    events.append((base, 1, "copy1", a, op))
                    events.append((base + 1, 1, "copy2", a, op))
            else:
                for a, op in enumerate(req.ops):
                    if op is None:
                        continue
                    events.append((base + a, 1, "copy_both", a, op))
            start = base + 2
        else:
            cycle = j * lat
            mark_busy(cycle, True, True, "copy")
            op = req.ops[0]
            if op is not None:
                events.append((2 * cycle + 2, 1, "copy_both", 0, op))
            start = 2 * cycle + 3
        for a, op in enumerate(req.ops):
            if op is None:
                continue
            for t, cop in enumerate(_compute_ops(prec, signed_inputs)):
                events.append((start + t, 0, "compute", a, (j, op, cop)))

    last_tick = -1
    writes_by_cycle = {}
    for tick, _prio, kind, a, payload in sorted(events, key=lambda e: (e[0], e[1])):
        arr = arrays[a]
        if kind == "copy1" or kind == "copy2":
            op = payload
            addr = op.addr_w1 if kind == "copy1" else op.addr_w2
            word = PackedWord(block.cim_read40(addr), prec)
            block.note_copied(addr)
            arr.copy_weight(word, Row.W1 if kind == "copy1" else Row.W2)
        elif kind == "copy_both":
            op = payload
            w1 = PackedWord(block.cim_read40(op.addr_w1), prec)
            w2 = PackedWord(block.cim_read40(op.addr_w2), prec)
            block.note_copied(op.addr_w1)
            block.note_copied(op.addr_w2)
            arr.copy_weights(w1, w2)
        else:
            j, op, (name, bit, use_inv, shift, cin) = payload
            i1u = op.i1 & prec.elem_mask
            i2u = op.i2 & prec.elem_mask
            if name == "sum_init":
                arr.sum_weights_init_p()
            elif name == "invert":
                arr.invert_selected((i1u >> bit) & 1, (i2u >> bit) & 1)
            elif name == "add":
                arr.add_psum((i1u >> bit) & 1, (i2u >> bit) & 1,
                             use_inv=use_inv, shift_after=shift, carry_in=cin)
                if bit == 0:
                    results[j][a] = arr.p_values()
            else:
                arr.accumulate()
        cycle = tick // ratio
        writes_by_cycle.setdefault(cycle, []).append(
            (a, kind == "compute", [r.name for r in arr.last_writes]))
        last_tick = max(last_tick, tick)

    total = -(-(last_tick + 1) // ratio) if events else 0
    busy_cycles = len(busy)

    readout_words = []
    if readout:
        for cycle in range(total, total + var.readout_cycles):
            mark_busy(cycle, True, False, "readout")
        for arr in arrays:
            for col in range(4):
                readout_words.append(arr.read_acc_chunk(col))
        total += var.readout_cycles
        busy_cycles = len(busy)

    trace = []
    if collect_trace:
        for cycle in range(total):
            porta, portb, phase = busy.get(cycle, (False, False, None))
            writes = writes_by_cycle.get(cycle, [])
            computing = any(c for _, c, _ in writes)
            if phase is None:
                phase = "compute" if computing else "idle"
            elif computing and phase == "copy":
                phase = "copy+compute"
            wtxt = ";".join(f"a{a}:{'+'.join(rows)}" for a, _, rows in writes if rows)
            trace.append(TraceRow(cycle, phase, porta, portb, wtxt))

    acc = [arr.acc_values() for arr in arrays]
    if readout:
        for arr in arrays:
            arr.clear_acc()
    return StreamResult(results, acc, readout_words, total, busy_cycles, trace)


# ---------------------------------------------------------------------------
# instruction-stream front end
# ---------------------------------------------------------------------------

def instruction_stream_for_mac2s(mac2s, var, prec_bits, signed_inputs=True):
    """Encode classic MAC2 work items into a 40-bit instruction stream.

    Each work item is (addr_w1, addr_w2, inputs) where inputs has two p-bit
    values per dummy array. Ends with a done instruction that triggers the
    accumulator readout.
    """
    if isinstance(var, str):
        var = _variant(var)
    words = []
    mask = (1 << prec_bits) - 1
    for addr_w1, addr_w2, inputs in mac2s:
        a1, a2 = CimAddress.from_word(addr_w1), CimAddress.from_word(addr_w2)
        if var.dummy_arrays == 2:
            i1, i2, i3, i4 = inputs
            words.append(Mac2Instruction(
                prec_bits=prec_bits, signed_inputs=signed_inputs,
                start=True, copy=True, w1_w2=0,
                bram_row=a1.row, bram_col=a1.col,
                i_a=i1 & mask, i_b=i2 & mask).encode(var))
            words.append(Mac2Instruction(
                prec_bits=prec_bits, signed_inputs=signed_inputs,
                copy=True, w1_w2=1,
                bram_row=a2.row, bram_col=a2.col,
                i_a=i3 & mask, i_b=i4 & mask).encode(var))
        else:
            # the single-array layout has one column field for both words
            if a1.col != a2.col:
                raise ValueError("weight words must share a column group")
            i1, i2 = inputs
            words.append(Mac2Instruction(
                prec_bits=prec_bits, signed_inputs=signed_inputs,
                start=True, copy=True,
                bram_row=a1.row, bram_row2=a2.row, bram_col=a1.col,
                i_a=i1 & mask, i_b=i2 & mask).encode(var))
    words.append(Mac2Instruction(prec_bits=prec_bits,
                                 signed_inputs=signed_inputs,
                                 done=True).encode(var))
    return words


def _signed_field(raw, bits, signed_inputs):
    raw &= (1 << bits) - 1
    return to_signed(raw, bits) if signed_inputs else raw


def run_instruction_stream(words, var, block=None, collect_trace=False):
    """Decode and execute an instruction stream against one BRAM block.

    Enforces the issue grammar the FSM expects; out-of-order control bits
    raise ScheduleError instead of silently corrupting state.
    """
    if isinstance(var, str):
        var = _variant(var)
    requests = []
    prec_bits = None
    signed_inputs = None
    pending = None  # first half of a dual-array MAC2
    done_seen = False

    for idx, word in enumerate(words):
        ins = Mac2Instruction.decode(word, var)
        if done_seen:
            raise ScheduleError(f"instruction {idx} after done")
        if ins.reset:
            if requests or pending:
                raise ScheduleError(f"reset at instruction {idx} mid-stream")
            continue
        if ins.done:
            if pending is not None:
                raise ScheduleError(f"done at instruction {idx} with fetch pending")
            if ins.copy or ins.start:
                raise ScheduleError(f"done combined with copy/start at {idx}")
            done_seen = True
            continue
        if not ins.copy:
            raise ScheduleError(f"instruction {idx} is neither copy, done nor reset")
        if prec_bits is None:
            prec_bits, signed_inputs = ins.prec_bits, ins.signed_inputs
        elif (ins.prec_bits, ins.signed_inputs) != (prec_bits, signed_inputs):
            raise ScheduleError(f"precision change mid-stream at instruction {idx}")

        if var.dummy_arrays == 2:
            if ins.w1_w2 == 0:
                if pending is not None:
                    raise ScheduleError(
                        f"second W1 fetch at instruction {idx} before W2")
                if not ins.start:
                    raise ScheduleError(f"W1 fetch without start at {idx}")
                pending = ins
            else:
                if pending is None:
                    raise ScheduleError(f"W2 fetch at instruction {idx} without W1")
                first = pending
                pending = None
                addr1 = CimAddress(first.bram_row, first.bram_col).word
                addr2 = CimAddress(ins.bram_row, ins.bram_col).word
                p = prec_bits
                requests.append(Mac2Request(ops=(
                    ArrayOp(addr1, addr2,
                            _signed_field(first.i_a, p, signed_inputs),
                            _signed_field(first.i_b, p, signed_inputs)),
                    ArrayOp(addr1, addr2,
                            _signed_field(ins.i_a, p, signed_inputs),
                            _signed_field(ins.i_b, p, signed_inputs)),
                ), shared_weights=True))
        else:
            if not ins.start:
                raise ScheduleError(f"fetch without start at instruction {idx}")
            addr1 = CimAddress(ins.bram_row, ins.bram_col).word
            addr2 = CimAddress(ins.bram_row2, ins.bram_col).word
            p = prec_bits
            requests.append(Mac2Request(ops=(
                ArrayOp(addr1, addr2,
                        _signed_field(ins.i_a, p, signed_inputs),
                        _signed_field(ins.i_b, p, signed_inputs)),
            )))

    if pending is not None:
        raise ScheduleError("stream ends with a W2 fetch pending")
    if not done_seen:
        raise ScheduleError("stream missing final done instruction")
    if not requests:
        raise ScheduleError("stream contains no MAC2 work")
    return run_mac2_stream(requests, var, prec_bits, signed_inputs,
                           block=block, readout=True,
                           collect_trace=collect_trace)


# ---------------------------------------------------------------------------
# dot products / matrix-vector tiles
# ---------------------------------------------------------------------------

@dataclass
class DotResult:
    outputs: list
    total_cycles: int
    busy_cycles: int
    groups: int
    lane_efficiency: float


def run_dot_product(matrix, vec, var, prec_bits, signed_inputs=True):
    """Matrix-vector product y = A @ x on one block, cycle-accounted.

    Rows of A map to lanes; column pairs stream through the MAC2 pipeline.
    The dual-array variant processes two column pairs per slot (one per
    array); long reductions are split into segments of at most max_dot
    products per lane with an accumulator readout between segments. The
    fetch for a segment's first MAC2 overlaps the tail of the previous
    readout, so a segment boundary costs exactly readout_cycles.
    """
    if isinstance(var, str):
        var = _variant(var)
    prec = precision(prec_bits)
    m, n = len(matrix), len(vec)
    if any(len(r) != n for r in matrix):
        raise ValueError("ragged matrix")
    L = prec.lanes
    groups = -(-m // L)
    pairs = -(-n // 2)
    pairs_per_seg = prec.max_dot // 2
    segments = -(-pairs // pairs_per_seg)

    outputs = [0] * m
    total = 0
    busy = 0
    for g in range(groups):
        rows = list(range(g * L, min((g + 1) * L, m)))
        block = MainArray(mode=Mode.COMPUTE)
        # column c of this tile -> word c, lanes follow the group's rows
        words = []
        for c in range(n):
            bits = 0
            for lane, r in enumerate(rows):
                bits |= (matrix[r][c] & prec.elem_mask) << (lane * prec.bits)
            words.append(bits)
        if n & 1:
            words.append(0)
        block.load_words(words)

        for s in range(segments):
            seg_pairs = list(range(s * pairs_per_seg,
                                   min((s + 1) * pairs_per_seg, pairs)))
            requests = []
            if var.dummy_arrays == 2:
                for r0 in range(0, len(seg_pairs), 2):
                    ops = []
                    for a in range(2):
                        if r0 + a < len(seg_pairs):
                            pr = seg_pairs[r0 + a]
                            c1, c2 = 2 * pr, 2 * pr + 1
                            i2 = vec[c2] if c2 < n else 0
                            ops.append(ArrayOp(c1, c2, vec[c1], i2))
                        else:
                            ops.append(None)
                    requests.append(Mac2Request(tuple(ops), shared_weights=False))
            else:
                for pr in seg_pairs:
                    c1, c2 = 2 * pr, 2 * pr + 1
                    i2 = vec[c2] if c2 < n else 0
                    requests.append(Mac2Request((ArrayOp(c1, c2, vec[c1], i2),)))
            res = run_mac2_stream(requests, var, prec_bits, signed_inputs,
                                  block=block, readout=True)
            for acc in res.acc:
                for lane, r in enumerate(rows):
                    outputs[r] += acc[lane]
            total += res.total_cycles
            busy += res.busy_cycles
        # segment boundaries overlap the next fetch with the readout tail
        total -= (segments - 1) * var.prologue_cycles

    eff = m / (groups * L) if m else 0.0
    return DotResult(outputs, total, busy, groups, eff)
