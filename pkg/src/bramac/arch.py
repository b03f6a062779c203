"""Device-level analytical models: peak MAC throughput and storage
utilization efficiency for the competing in-BRAM compute schemes.

Block-level numbers (parallel MACs, MAC latency, frequency penalties, area
overheads) come from published synthesis results for each scheme on a 20-nm
FPGA fabric. Device totals assume every logic block, DSP, and BRAM on the
part contributes simultaneously at its own fmax.
"""

import json
import math
from dataclasses import dataclass
from importlib import resources

BASE_BRAM_FMAX = 645.0
DSP_FMAX = 549.0


@dataclass(frozen=True)
class ArchSpec:
    """One compute scheme: per-block parallelism/latency by precision."""

    name: str
    kind: str                 # 'dsp' or 'bram'
    macs_parallel: dict       # precision -> MACs issued per block
    latency_cycles: dict      # precision -> cycles per MAC batch
    fmax_mhz: float
    block_overhead: float     # relative block area increase
    core_overhead: float      # relative whole-core area increase

    def macs_per_cycle(self, p: int) -> float:
        return self.macs_parallel[p] / self.latency_cycles[p]

    def block_throughput(self, p: int) -> float:
        """Peak MAC/s for one block."""
        return self.macs_per_cycle(p) * self.fmax_mhz * 1e6


ARCHS = {
    "DSP": ArchSpec("DSP", "dsp", {2: 8, 4: 4, 8: 2}, {2: 1, 4: 1, 8: 1},
                    DSP_FMAX, 0.0, 0.0),
    "eDSP": ArchSpec("eDSP", "dsp", {2: 8, 4: 8, 8: 4}, {2: 1, 4: 1, 8: 1},
                     DSP_FMAX, 0.12, 0.011),
    "PIR-DSP": ArchSpec("PIR-DSP", "dsp", {2: 24, 4: 12, 8: 6},
                        {2: 1, 4: 1, 8: 1}, DSP_FMAX / 1.3, 0.28, 0.027),
    "CCB": ArchSpec("CCB", "bram", {2: 160, 4: 160, 8: 160},
                    {2: 16, 4: 42, 8: 113}, BASE_BRAM_FMAX / 1.6,
                    0.168, 0.034),
    "CoMeFa-D": ArchSpec("CoMeFa-D", "bram", {2: 160, 4: 160, 8: 160},
                         {2: 16, 4: 42, 8: 113}, BASE_BRAM_FMAX / 1.25,
                         0.254, 0.051),
    "CoMeFa-A": ArchSpec("CoMeFa-A", "bram", {2: 160, 4: 160, 8: 160},
                         {2: 16, 4: 42, 8: 113}, BASE_BRAM_FMAX / 2.5,
                         0.081, 0.016),
    "BRAMAC-2SA": ArchSpec("BRAMAC-2SA", "bram", {2: 80, 4: 40, 8: 20},
                           {2: 5, 4: 7, 8: 11}, 586.0, 0.338, 0.068),
    "BRAMAC-1DA": ArchSpec("BRAMAC-1DA", "bram", {2: 40, 4: 20, 8: 10},
                           {2: 3, 4: 4, 8: 6}, 500.0, 0.169, 0.034),
}

PRECISIONS = (2, 4, 8)


def arch(name: str) -> ArchSpec:
    try:
        return ARCHS[name]
    except KeyError:
        raise ValueError(f"unknown architecture {name!r}")


@dataclass(frozen=True)
class LbMacSpec:
    fmax_mhz: float
    lbs_per_mac: int


@dataclass(frozen=True)
class DeviceSpec:
    name: str
    lb_count: int
    dsp_count: int
    bram_count: int
    area_fraction: dict   # resource kind -> fraction of core area
    lb_mac: dict          # precision -> LbMacSpec

    @classmethod
    def from_dict(cls, d: dict) -> "DeviceSpec":
        lb_mac = {int(k): LbMacSpec(v["fmax_mhz"], v["lbs_per_mac"])
                  for k, v in d["lb_mac"].items()}
        return cls(d["name"], d["lb_count"], d["dsp_count"], d["bram_count"],
                   dict(d["area_fraction"]), lb_mac)

    @classmethod
    def from_json(cls, path) -> "DeviceSpec":
        with open(path) as f:
            return cls.from_dict(json.load(f))

    def lb_throughput(self, p: int) -> float:
        spec = self.lb_mac[p]
        return self.lb_count / spec.lbs_per_mac * spec.fmax_mhz * 1e6


def default_device() -> DeviceSpec:
    ref = resources.files("bramac.data").joinpath("arria10_gx900.json")
    return DeviceSpec.from_dict(json.loads(ref.read_text()))


@dataclass(frozen=True)
class ThroughputReport:
    arch_name: str
    precision: int
    lb: float        # MAC/s from soft-logic MACs
    dsp: float       # MAC/s from the DSP column
    bram: float      # MAC/s from compute-enabled BRAMs (0 for baseline)

    @property
    def total(self) -> float:
        return self.lb + self.dsp + self.bram


def peak_throughput(device: DeviceSpec, arch_name: str, p: int) -> ThroughputReport:
    """Device-wide peak MAC throughput with the given scheme added.

    DSP-replacement schemes swap the stock DSP column; BRAM schemes add
    compute BRAMs on top of stock LBs and DSPs. 'baseline' is stock only.
    """
    lb = device.lb_throughput(p)
    if arch_name == "baseline":
        return ThroughputReport(arch_name, p, lb,
                                device.dsp_count * ARCHS["DSP"].block_throughput(p),
                                0.0)
    a = arch(arch_name)
    if a.kind == "dsp":
        return ThroughputReport(arch_name, p, lb,
                                device.dsp_count * a.block_throughput(p), 0.0)
    return ThroughputReport(arch_name, p, lb,
                            device.dsp_count * ARCHS["DSP"].block_throughput(p),
                            device.bram_count * a.block_throughput(p))


def throughput_boost(device: DeviceSpec, arch_name: str, p: int) -> float:
    """Total-throughput ratio over the stock LB+DSP baseline."""
    base = peak_throughput(device, "baseline", p).total
    return peak_throughput(device, arch_name, p).total / base


def fit_lb_fmax(device: DeviceSpec, variant_targets: dict) -> dict:
    """Solve for the soft-logic MAC fmax that reproduces target boosts.

    variant_targets maps precision -> (arch_name, target_boost). Returns
    precision -> fmax in MHz. Used to document how the shipped device file
    was calibrated against reported throughput gains.
    """
    out = {}
    for p, (arch_name, target) in variant_targets.items():
        a = arch(arch_name)
        dsp = device.dsp_count * ARCHS["DSP"].block_throughput(p)
        bram = device.bram_count * a.block_throughput(p)
        # (lb + dsp + bram) / (lb + dsp) = target
        lb = bram / (target - 1.0) - dsp
        spec = device.lb_mac[p]
        out[p] = lb * spec.lbs_per_mac / device.lb_count / 1e6
    return out


# ---------------------------------------------------------------------------
# storage utilization efficiency
# ---------------------------------------------------------------------------

BRAMAC_SUPPORTED = (2, 4, 8)
CCB_COLUMN_BITS = 128


def utilization_efficiency(scheme: str, p: int) -> float:
    """Fraction of BRAM storage doing useful work at operand precision p.

    The MAC2 schemes pad each operand up to the next supported precision.
    The bit-serial schemes lose column bits to operand/product/accumulator
    scratch rows: pack-k needs k*p input bits, 2p product bits and a
    (2p + ceil(log2 k))-bit accumulator per column; the streamed-operand
    flavor drops the input copy.
    """
    if not 2 <= p <= 8:
        raise ValueError("precision must be in 2..8")
    if scheme in ("BRAMAC", "BRAMAC-2SA", "BRAMAC-1DA"):
        padded = next(s for s in BRAMAC_SUPPORTED if s >= p)
        return p / padded
    if scheme.startswith("CCB-Pack-"):
        k = int(scheme.rsplit("-", 1)[1])
        overhead = k * p + 2 * p + (2 * p + math.ceil(math.log2(k)))
        return (CCB_COLUMN_BITS - overhead) / CCB_COLUMN_BITS
    if scheme == "CoMeFa":
        return (CCB_COLUMN_BITS - 4 * p) / CCB_COLUMN_BITS
    raise ValueError(f"unknown scheme {scheme!r}")


def mean_utilization(scheme: str) -> float:
    return sum(utilization_efficiency(scheme, p) for p in range(2, 9)) / 7.0


def utilization_advantage(versus: str) -> float:
    """Mean-efficiency ratio of the MAC2 scheme over a bit-serial scheme."""
    if versus == "CCB":
        rival = (mean_utilization("CCB-Pack-2") + mean_utilization("CCB-Pack-4")) / 2
    else:
        rival = mean_utilization(versus)
    return mean_utilization("BRAMAC") / rival


# ---------------------------------------------------------------------------
# table emitters (rows of plain dicts; the CLI serializes them)
# ---------------------------------------------------------------------------

def throughput_table(device: DeviceSpec):
    rows = []
    names = ["baseline", "eDSP", "PIR-DSP", "CCB", "CoMeFa-D", "CoMeFa-A",
             "BRAMAC-2SA", "BRAMAC-1DA"]
    for name in names:
        for p in PRECISIONS:
            rep = peak_throughput(device, name, p)
            rows.append({
                "arch": name,
                "precision": p,
                "lb_tmacs": rep.lb / 1e12,
                "dsp_tmacs": rep.dsp / 1e12,
                "bram_tmacs": rep.bram / 1e12,
                "total_tmacs": rep.total / 1e12,
                "boost": throughput_boost(device, name, p),
            })
    return rows


def utilization_table():
    rows = []
    for scheme in ("BRAMAC", "CCB-Pack-2", "CCB-Pack-4", "CoMeFa"):
        for p in range(2, 9):
            rows.append({
                "scheme": scheme,
                "precision": p,
                "efficiency": utilization_efficiency(scheme, p),
            })
    return rows
