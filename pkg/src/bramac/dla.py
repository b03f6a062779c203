"""Loop-nest cycle model of a DLA-style CNN accelerator, with and without
MAC2-capable BRAMs replacing part of the PE array, plus a small exhaustive
design-space exploration.

The accelerator tiles a convolution as
  for k_tile in ceil(K/kvec):            # output channels
    for q_tile in ceil(Wout/(q1+q2)):    # output columns
      for h in Hout:                     # output rows
        for c_tile in ceil(C/cvec):      # input channels
          for r, s in RxS:               # filter window
one cycle per innermost iteration. qvec1 output columns are computed by DSP
PEs and qvec2 by compute BRAMs; the BRAM side keeps pace by construction and
only adds accumulator-readout stalls plus a fetch prologue per layer.

DSP budget: each PE fans cvec MACs across packed DSP multipliers, so a
design needs ceil(1.5 * qvec1 * cvec * kvec / pack(prec)) DSPs, with pack
4/2/1 at 2/4/8-bit.
"""

import json
import math
from dataclasses import dataclass, field
from importlib import resources

from .arch import ARCHS, DSP_FMAX, DeviceSpec, default_device
from .instructions import Variant, variant as _variant
from .lanes import precision

BRAM_KBITS = 20480
PACK = {2: 4, 4: 2, 8: 1}
# The PE array and the compute BRAMs advance in lockstep, so a hybrid
# design clocks at the slower of the DSP-based PE fmax and the
# compute-BRAM fmax (2SA 586 MHz, 1DA 500 MHz).
SYSTEM_FMAX = {
    "DLA": DSP_FMAX,
    "2SA": min(DSP_FMAX, 586.0),
    "1DA": min(DSP_FMAX, 500.0),
}


@dataclass(frozen=True)
class ConvLayer:
    name: str
    c: int
    h: int
    w: int
    k: int
    r: int
    s: int
    stride: int
    pad: int
    hout: int
    wout: int

    @property
    def macs(self) -> int:
        return self.k * self.hout * self.wout * self.c * self.r * self.s


@dataclass(frozen=True)
class DlaConfig:
    qvec1: int
    qvec2: int
    cvec: int
    kvec: int

    @property
    def qvec(self) -> int:
        return self.qvec1 + self.qvec2

    def label(self) -> str:
        if self.qvec2:
            return f"({self.qvec1}+{self.qvec2},{self.cvec},{self.kvec})"
        return f"({self.qvec1},{self.cvec},{self.kvec})"


def load_network(name_or_path) -> list:
    """Load a conv-layer table by bundled name or JSON path."""
    name = str(name_or_path)
    if name in ("alexnet", "resnet34"):
        ref = resources.files("bramac.data").joinpath(f"{name}.json")
        data = json.loads(ref.read_text())
    else:
        with open(name_or_path) as f:
            data = json.load(f)
    return [ConvLayer(**layer) for layer in data["layers"]]


def dsp_count(cfg: DlaConfig, prec_bits: int) -> int:
    return math.ceil(1.5 * cfg.qvec1 * cfg.cvec * cfg.kvec / PACK[prec_bits])


def bramac_block_count(cfg: DlaConfig, prec_bits: int, var: Variant) -> int:
    """Compute BRAMs needed so the q2 columns keep pace with the PE array.

    Each lane group sustains 2 MACs per MAC2 latency, so cvec MACs per cycle
    per output need ceil(cvec*latency/2) pipelined MAC2 units, times the
    filter groups, divided across the variant's dummy arrays.
    """
    if cfg.qvec2 == 0:
        return 0
    prec = precision(prec_bits)
    lat = var.mac2_latency(prec_bits)
    per_column = -(-cfg.kvec // prec.lanes) * -(-cfg.cvec * lat // 2)
    return cfg.qvec2 * per_column


def layer_cycles(layer: ConvLayer, cfg: DlaConfig, prec_bits: int,
                 var: Variant = None) -> int:
    """One cycle per innermost loop-nest iteration, plus BRAM-side stalls.

    Mid-tile accumulator drains hide in the weight-fetch port's idle cycles:
    each max_dot-product segment leaves (max_dot/2)*(latency - fetch) free
    port cycles, which exceeds the drain length at every operating point.
    Only the tile-final readout is exposed, once per output tile, plus a
    fetch prologue when the layer starts.
    """
    tiles = (-(-layer.k // cfg.kvec)
             * -(-layer.wout // cfg.qvec)
             * layer.hout)
    inner = -(-layer.c // cfg.cvec) * layer.r * layer.s
    cycles = tiles * inner
    if cfg.qvec2 and var is not None:
        prec = precision(prec_bits)
        lat = var.mac2_latency(prec_bits)
        assert (prec.max_dot // 2) * (lat - var.port_busy_per_mac2) \
            >= var.readout_cycles
        cycles += var.prologue_cycles + tiles * var.readout_cycles
    return cycles


def network_cycles(layers, cfg, prec_bits, var=None) -> int:
    return sum(layer_cycles(l, cfg, prec_bits, var) for l in layers)


def memory_brams(layers, cfg: DlaConfig, prec_bits: int) -> dict:
    """On-chip buffer estimate: double-buffered activation stream buffer
    sized for the largest feature map, plus a double-buffered filter slice
    per output-channel PE lane."""
    max_act = max(max(l.c * l.h * l.w, l.k * l.hout * l.wout) for l in layers)
    max_filt = max(l.c * l.r * l.s for l in layers)
    stream = math.ceil(2 * max_act * prec_bits / BRAM_KBITS)
    filt = cfg.kvec * max(1, math.ceil(2 * max_filt * prec_bits / BRAM_KBITS))
    return {"stream": stream, "filter": filt}


@dataclass
class DesignPoint:
    cfg: DlaConfig
    variant_name: str            # 'DLA', '2SA', or '1DA'
    prec_bits: int
    cycles: int
    dsps: int
    memory_brams: int
    compute_brams: int
    fmax_mhz: float
    area: float                  # fraction of the device's core area

    @property
    def perf(self) -> float:
        """Inferences per second (one frame per network pass)."""
        return self.fmax_mhz * 1e6 / self.cycles

    @property
    def objective(self) -> float:
        return self.perf ** 2 / self.area


def evaluate(layers, cfg: DlaConfig, prec_bits: int, variant_name: str = "DLA",
             device: DeviceSpec = None) -> DesignPoint:
    device = device or default_device()
    var = None
    compute_brams = 0
    if variant_name != "DLA":
        var = _variant(variant_name)
        if cfg.qvec2 == 0:
            raise ValueError("compute-BRAM design needs qvec2 > 0")
        compute_brams = bramac_block_count(cfg, prec_bits, var)
    elif cfg.qvec2:
        raise ValueError("plain design must have qvec2 == 0")

    cycles = network_cycles(layers, cfg, prec_bits, var)
    dsps = dsp_count(cfg, prec_bits)
    mem = memory_brams(layers, cfg, prec_bits)
    mem_total = mem["stream"] + mem["filter"]

    a_dsp = device.area_fraction["dsp"] / device.dsp_count
    a_bram = device.area_fraction["bram"] / device.bram_count
    overhead = ARCHS[f"BRAMAC-{variant_name}"].block_overhead if var else 0.0
    area = (dsps * a_dsp + mem_total * a_bram
            + compute_brams * a_bram * (1.0 + overhead))
    return DesignPoint(cfg, variant_name, prec_bits, cycles, dsps,
                       mem_total, compute_brams, SYSTEM_FMAX[variant_name],
                       area)


def feasible(point: DesignPoint, device: DeviceSpec) -> bool:
    return (point.dsps <= device.dsp_count
            and point.memory_brams + point.compute_brams <= device.bram_count)


@dataclass
class DseResult:
    best: DesignPoint
    evaluated: int
    rows: list = field(default_factory=list)


def dse(layers, prec_bits: int, variant_name: str = "DLA",
        device: DeviceSpec = None, q1_values=None, q2_values=None,
        cvec_values=None, kvec_values=None, keep_rows: bool = False) -> DseResult:
    """Exhaustive sweep maximizing perf^2/area under device resources."""
    device = device or default_device()
    if variant_name == "DLA":
        q1_values = q1_values or (1, 2, 3, 4)
        q2_values = (0,)
    else:
        q1_values = q1_values or (1, 2)
        q2_values = q2_values or (1, 2)
    cvec_values = cvec_values or tuple(range(4, 26, 2))
    kvec_values = kvec_values or tuple(range(8, 161, 2))

    best = None
    rows = []
    count = 0
    for q1 in q1_values:
        for q2 in q2_values:
            for cvec in cvec_values:
                for kvec in kvec_values:
                    cfg = DlaConfig(q1, q2, cvec, kvec)
                    point = evaluate(layers, cfg, prec_bits, variant_name,
                                     device)
                    count += 1
                    if not feasible(point, device):
                        continue
                    if keep_rows:
                        rows.append(point)
                    if (best is None or point.objective > best.objective
                            or (point.objective == best.objective
                                and (q1, q2, cvec, kvec) <
                                (best.cfg.qvec1, best.cfg.qvec2,
                                 best.cfg.cvec, best.cfg.kvec))):
                        best = point
    if best is None:
        raise RuntimeError("no feasible design point in the sweep")
    return DseResult(best, count, rows)


def dse_speedups(network_name: str, device: DeviceSpec = None,
                 precisions=(2, 4, 8)) -> dict:
    """Geometric-mean perf ratio of the best hybrid designs over the best
    plain DLA, averaged over precisions."""
    device = device or default_device()
    layers = load_network(network_name)
    base = {p: dse(layers, p, "DLA", device).best for p in precisions}
    out = {}
    for vname in ("2SA", "1DA"):
        ratios = []
        for p in precisions:
            point = dse(layers, p, vname, device).best
            ratios.append(point.perf / base[p].perf)
        out[vname] = math.prod(ratios) ** (1.0 / len(ratios))
    return out
