"""Oracle harness driving MAC2 operands through the full simulation path.

Every case goes main array -> FSM scheduler -> dummy array: weight words are
written to a block in memory mode, the block switches to compute mode, and
the lane results (and accumulator totals) are checked against the exact
integer reference. Used by the `verify` subcommand and by the test suite.
"""

import random
from dataclasses import dataclass, field

from . import dummy_array as _da
from .bram_block import MainArray
from .efsm import ArrayOp, Mac2Request, run_mac2_stream
from .instructions import variant as _variant
from .lanes import mac2_reference, precision, simd_add

WORD_BUDGET = 512  # block capacity in 40-bit words


@dataclass
class Mismatch:
    variant: str
    prec_bits: int
    signed_inputs: bool
    lane: int
    w1: int
    w2: int
    i1: int
    i2: int
    got: int
    want: int


@dataclass
class VerifyReport:
    cases: int = 0
    mismatches: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches


def _pack(prec, elems):
    word = 0
    for k, v in enumerate(elems):
        word |= (v & prec.elem_mask) << (k * prec.bits)
    return word


def _run_batch(var, prec, signed_inputs, batch, report, max_fail=20):
    """batch: list of slots, each slot a list (one entry per dummy array) of
    (w1_elems, w2_elems, i1, i2) or None."""
    words = []
    reqs = []
    for slot in batch:
        ops = []
        for entry in slot:
            if entry is None:
                ops.append(None)
                continue
            w1, w2, i1, i2 = entry
            a1 = len(words)
            words.append(_pack(prec, w1))
            a2 = len(words)
            words.append(_pack(prec, w2))
            ops.append(ArrayOp(a1, a2, i1, i2))
        reqs.append(Mac2Request(tuple(ops), shared_weights=False))
    assert len(words) <= WORD_BUDGET

    block = MainArray()
    block.load_words(words)
    block.enter_compute()
    res = run_mac2_stream(reqs, var, prec.bits, signed_inputs,
                          block=block, readout=True)

    acc_want = [[0] * prec.lanes for _ in range(var.dummy_arrays)]
    for j, slot in enumerate(batch):
        for a, entry in enumerate(slot):
            if entry is None:
                continue
            w1, w2, i1, i2 = entry
            got = res.results[j][a]
            for lane in range(prec.lanes):
                want = mac2_reference(w1[lane], w2[lane], i1, i2, prec,
                                      signed_inputs)
                acc_want[a][lane] += want
                report.cases += 1
                if got[lane] != want and len(report.mismatches) < max_fail:
                    report.mismatches.append(Mismatch(
                        var.name, prec.bits, signed_inputs, lane,
                        w1[lane], w2[lane], i1, i2, got[lane], want))
    # the accumulator must hold the exact running dot product as well
    for a in range(var.dummy_arrays):
        for lane in range(prec.lanes):
            if res.acc[a][lane] != acc_want[a][lane] \
                    and len(report.mismatches) < max_fail:
                report.mismatches.append(Mismatch(
                    var.name, prec.bits, signed_inputs, lane, 0, 0, 0, 0,
                    res.acc[a][lane], acc_want[a][lane]))


def _slot_capacity(var, prec):
    by_words = WORD_BUDGET // (2 * var.dummy_arrays)
    return min(by_words, prec.max_dot)


def exhaustive_2bit(variant_names=("2SA", "1DA"), report=None) -> VerifyReport:
    """All (w1, w2, i1, i2) 2-bit combinations, signed and unsigned inputs."""
    report = report or VerifyReport()
    prec = precision(2)
    for vname in variant_names:
        var = _variant(vname)
        for signed_inputs in (True, False):
            weights = range(-2, 2)
            inputs = range(-2, 2) if signed_inputs else range(0, 4)
            combos = [(a, b) for a in weights for b in weights]
            lanes = prec.lanes
            w1 = [combos[k % len(combos)][0] for k in range(lanes)]
            w2 = [combos[k % len(combos)][1] for k in range(lanes)]
            batch = []
            for i1 in inputs:
                for i2 in inputs:
                    entry = (w1, w2, i1, i2)
                    batch.append([entry] * var.dummy_arrays)
            cap = _slot_capacity(var, prec)
            for k in range(0, len(batch), cap):
                _run_batch(var, prec, signed_inputs, batch[k:k + cap], report)
    return report


def random_trials(prec_bits, trials, rng, variant_names=("2SA", "1DA"),
                  report=None) -> VerifyReport:
    """Random full-path cases at the given precision until `trials` operand
    tuples have been checked."""
    report = report or VerifyReport()
    prec = precision(prec_bits)
    lo_w, hi_w = -(1 << prec_bits - 1), (1 << prec_bits - 1) - 1
    start = report.cases
    while report.cases - start < trials:
        vname = rng.choice(variant_names)
        var = _variant(vname)
        signed_inputs = rng.random() < 0.5
        lo_i, hi_i = (lo_w, hi_w) if signed_inputs else (0, (1 << prec_bits) - 1)
        cap = _slot_capacity(var, prec)
        need = trials - (report.cases - start)
        per_slot = prec.lanes * var.dummy_arrays
        slots = min(cap, max(1, -(-need // per_slot)))
        batch = []
        for _ in range(slots):
            slot = []
            for _ in range(var.dummy_arrays):
                w1 = [rng.randint(lo_w, hi_w) for _ in range(prec.lanes)]
                w2 = [rng.randint(lo_w, hi_w) for _ in range(prec.lanes)]
                slot.append((w1, w2, rng.randint(lo_i, hi_i),
                             rng.randint(lo_i, hi_i)))
            batch.append(slot)
        _run_batch(var, prec, signed_inputs, batch, report)
    return report


def _faulty_simd_add(fire_at=57):
    """Wrap the SIMD adder so one call flips its low result bit (test hook)."""
    calls = {"n": 0}
    real = simd_add

    def wrapped(a, b, carry_in=0):
        out = real(a, b, carry_in)
        calls["n"] += 1
        if calls["n"] == fire_at:
            out = type(out)(out.bits ^ 1, out.prec)
        return out

    return wrapped


def verify(trials=10000, seed=0, variant_names=("2SA", "1DA"),
           inject_fault=False) -> VerifyReport:
    """Exhaustive 2-bit sweep plus `trials` random 4-bit and 8-bit cases."""
    rng = random.Random(seed)
    saved = _da.simd_add
    if inject_fault:
        _da.simd_add = _faulty_simd_add()
    try:
        report = exhaustive_2bit(variant_names)
        for p in (4, 8):
            random_trials(p, trials, rng, variant_names, report)
    finally:
        _da.simd_add = saved
    return report
