"""Matrix-vector (GEMV) cycle models for MAC2-capable BRAMs and for the
bit-serial in-BRAM compute schemes they are compared against.

The MAC2 model mirrors the cycle-accurate FSM exactly (the test suite checks
equality against simulation). The bit-serial model maps one output's dot
product across the 160 columns of a block: each column multiplies its
resident term(s) bit-serially, k' sequential MACs ("pack") accumulate per
column, and a pipelined pairwise tree folds the column partials into one
output. Outputs stream through the block one after another.

Two loading styles are modeled. "Persistent" assumes weights are already
resident and counts compute only (plus input staging where the scheme needs
it). "Non-persistent" charges weight loading: the MAC2 FSM hides loads in
main-port idle cycles and only the excess is exposed, while the bit-serial
schemes keep their ports busy computing, so loads are fully exposed.
"""

import math
from dataclasses import dataclass, field

from .arch import ARCHS
from .instructions import variant as _variant
from .lanes import precision

CCB_LANES = 160
_TREE_DEPTH = math.ceil(math.log2(CCB_LANES))  # pairwise fold across columns

DEFAULT_M_SIZES = (80, 120, 160, 240, 320, 480)
DEFAULT_N_SIZES = (128, 160, 224, 320, 480)
BASELINES = ("CCB-Pack-2", "CCB-Pack-4", "CoMeFa")


@dataclass(frozen=True)
class GemvWorkload:
    m: int                      # output-vector length (matrix rows)
    n: int                      # reduction length (matrix columns)
    prec_bits: int
    signed_inputs: bool = True
    persistent: bool = True

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("workload dimensions must be positive")


@dataclass
class GemvReport:
    scheme: str
    workload: GemvWorkload
    total_cycles: int
    breakdown: dict = field(default_factory=dict)
    lane_efficiency: float = 1.0
    busy_cycles: int = 0

    @property
    def free_cycles(self) -> int:
        return self.total_cycles - self.busy_cycles


# ---------------------------------------------------------------------------
# MAC2 model
# ---------------------------------------------------------------------------

def _bramac_group_cycles(pairs, var, lat, seg_pairs):
    """(total, busy, fetch, readout) main-BRAM cycles for one lane group.

    Segments of at most max_dot/2 input pairs separate accumulator readouts;
    the weight fetch of a segment's first MAC2 slot overlaps the previous
    readout tail, so only the very first segment pays the fetch prologue.
    """
    total = busy = fetch = readout = 0
    pairs_left = pairs
    segments = 0
    while pairs_left > 0:
        seg = min(pairs_left, seg_pairs)
        slots = -(-seg // var.dummy_arrays)
        total += var.prologue_cycles + slots * lat + var.readout_cycles
        fetch += slots * var.port_busy_per_mac2
        readout += var.readout_cycles
        pairs_left -= seg
        segments += 1
    total -= (segments - 1) * var.prologue_cycles
    busy = fetch + readout
    return total, busy, fetch, readout


def cycles_bramac(w: GemvWorkload, variant_name: str = "1DA",
                  blocks: int = 1) -> GemvReport:
    var = _variant(variant_name)
    prec = precision(w.prec_bits)
    lat = var.mac2_latency(w.prec_bits, w.signed_inputs)

    groups = -(-w.m // prec.lanes)
    groups_per_block = -(-groups // blocks)
    pairs = -(-w.n // 2)
    g_total, g_busy, g_fetch, g_readout = _bramac_group_cycles(
        pairs, var, lat, prec.max_dot // 2)

    total = groups_per_block * g_total
    busy = groups_per_block * g_busy
    fetch = groups_per_block * g_fetch
    readout = groups_per_block * g_readout
    breakdown = {
        "compute": total - fetch - readout,
        "instruction": fetch,
        "readout": readout,
        "load_exposed": 0,
    }
    if not w.persistent:
        words = groups_per_block * w.n  # one 40-bit word per lane-group column
        exposed = max(0, words - (total - busy))
        total += exposed
        busy += exposed
        breakdown["load_exposed"] = exposed
    eff = w.m / (groups * prec.lanes)
    return GemvReport(f"BRAMAC-{var.name}", w, total, breakdown, eff, busy)


# ---------------------------------------------------------------------------
# bit-serial baselines
# ---------------------------------------------------------------------------

def _tree_reduction_cycles(p: int, k: int) -> int:
    """Fold 160 column partials into one value.

    Pipelined pairwise tree: one cycle per level to launch, plus two passes
    over the (2p + ceil(log2 k) + 1)-bit operands per merge wave.
    """
    return _TREE_DEPTH + 2 * (2 * p + _ceil_log2(k) + 1)


def _ceil_log2(x: int) -> int:
    return max(0, math.ceil(math.log2(x))) if x > 1 else 0


def effective_pack(k: int, n: int) -> int:
    """Resident term chunks per column, limited by the reduction length."""
    return min(k, max(1, -(-n // CCB_LANES)))


def cycles_ccb(w: GemvWorkload, pack: int = 4) -> GemvReport:
    return _bit_serial_cycles(w, f"CCB-Pack-{pack}", pack, input_copy=True)


def cycles_comefa(w: GemvWorkload, flavor: str = "D", pack: int = 4) -> GemvReport:
    if flavor not in ("D", "A"):
        raise ValueError("flavor must be 'D' or 'A'")
    # flavors differ in frequency and area only; cycle counts match
    return _bit_serial_cycles(w, f"CoMeFa-{flavor}", pack, input_copy=False)


def _bit_serial_cycles(w, scheme, pack, input_copy):
    p = w.prec_bits
    lat = ARCHS["CCB"].latency_cycles[p]
    chunks = -(-w.n // CCB_LANES)          # sequential term chunks per output
    k = effective_pack(pack, w.n)
    red = _tree_reduction_cycles(p, k)
    reductions = -(-chunks // k)
    per_output = chunks * lat + reductions * red

    compute = w.m * chunks * lat
    reduction = w.m * reductions * red
    staging = math.ceil(w.n * p / 40) if input_copy else 0
    total = compute + reduction + staging
    breakdown = {
        "compute": compute,
        "reduction": reduction,
        "instruction": staging,
        "load_exposed": 0,
    }
    if not w.persistent:
        # T*p transposed weight rows per output, four 40-bit writes per row
        exposed = 4 * w.m * chunks * p
        total += exposed
        breakdown["load_exposed"] = exposed
    used = min(w.n, chunks * CCB_LANES)
    eff = used / (chunks * CCB_LANES)
    return GemvReport(scheme, w, total, breakdown, eff, busy_cycles=total)


def cycles_for(scheme: str, w: GemvWorkload) -> GemvReport:
    if scheme.startswith("BRAMAC-"):
        return cycles_bramac(w, scheme.split("-", 1)[1])
    if scheme.startswith("CCB-Pack-"):
        return cycles_ccb(w, int(scheme.rsplit("-", 1)[1]))
    if scheme.startswith("CoMeFa"):
        flavor = scheme.split("-")[1] if "-" in scheme else "D"
        return cycles_comefa(w, flavor)
    raise ValueError(f"unknown scheme {scheme!r}")


# ---------------------------------------------------------------------------
# speedup grids
# ---------------------------------------------------------------------------

@dataclass
class SpeedupGrid:
    variant_name: str
    baseline: str
    prec_bits: int
    persistent: bool
    m_values: tuple
    n_values: tuple
    cells: list  # rows indexed by n, columns by m: baseline/bramac cycle ratio

    def max_speedup(self) -> float:
        return max(max(row) for row in self.cells)


def speedup_grid(variant_name="1DA", baseline="CCB-Pack-4", prec_bits=2,
                 persistent=True, m_values=DEFAULT_M_SIZES,
                 n_values=DEFAULT_N_SIZES) -> SpeedupGrid:
    """Cycle-count speedup of the MAC2 scheme over a bit-serial baseline."""
    cells = []
    for n in n_values:
        row = []
        for m in m_values:
            w = GemvWorkload(m, n, prec_bits, persistent=persistent)
            base = cycles_for(baseline, w).total_cycles
            ours = cycles_bramac(w, variant_name).total_cycles
            row.append(base / ours)
        cells.append(row)
    return SpeedupGrid(variant_name, baseline, prec_bits, persistent,
                       tuple(m_values), tuple(n_values), cells)


def all_speedup_grids(variant_name="1DA", m_values=DEFAULT_M_SIZES,
                      n_values=DEFAULT_N_SIZES):
    grids = {}
    for p in (2, 4, 8):
        for persistent in (True, False):
            for baseline in BASELINES:
                key = (p, "persistent" if persistent else "non-persistent",
                       baseline)
                grids[key] = speedup_grid(variant_name, baseline, p,
                                          persistent, m_values, n_values)
    return grids


def max_speedups(grids):
    """Best grid speedup per (precision, style), across baselines."""
    best = {}
    for (p, style, _baseline), grid in grids.items():
        v = grid.max_speedup()
        if best.get((p, style), 0.0) < v:
            best[(p, style)] = v
    return best
