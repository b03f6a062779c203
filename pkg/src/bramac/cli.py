"""Command-line front end: every experiment as a reproducible subcommand.

Subcommands write one CSV per result table into --out-dir and print a short
summary. Outputs are byte-deterministic for a fixed argument set and seed.
"""

import argparse
import csv
import sys
from pathlib import Path

from .arch import (
    DeviceSpec,
    default_device,
    mean_utilization,
    throughput_table,
    utilization_advantage,
    utilization_table,
)
from .bram_block import MainArray
from .dla import DlaConfig, dse, evaluate, load_network
from .efsm import ArrayOp, Mac2Request, run_mac2_stream
from .gemv import (
    BASELINES,
    DEFAULT_M_SIZES,
    DEFAULT_N_SIZES,
    GemvWorkload,
    cycles_bramac,
    cycles_for,
)
from .lanes import mac2_reference, precision
from .verify import verify as run_verify

_CANON_VARIANT = {"2sa": "2SA", "1da": "1DA", "dla": "DLA"}


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.9g}"
    return v


def _write_csv(out_dir, name, schema, fieldnames, rows):
    path = Path(out_dir) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(f"# schema: bramac/{schema} v1\n")
        writer = csv.DictWriter(f, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(v) for k, v in row.items()})
    return path


def _device(args) -> DeviceSpec:
    if getattr(args, "device", None):
        return DeviceSpec.from_json(args.device)
    return default_device()


def _int_pair(text, what, parser):
    parts = text.split(",")
    if len(parts) != 2:
        parser.error(f"{what} must be two comma-separated integers")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        parser.error(f"{what} must be two comma-separated integers")


# ---------------------------------------------------------------------------
# mac2
# ---------------------------------------------------------------------------

def cmd_mac2(args, parser):
    if args.prec not in (2, 4, 8):
        parser.error("--prec must be 2, 4, or 8")
    prec = precision(args.prec)
    var_name = _CANON_VARIANT[args.variant]
    signed_inputs = not args.unsigned
    w1, w2 = _int_pair(args.w, "--w", parser)
    i1, i2 = _int_pair(args.i, "--i", parser)
    try:
        want = mac2_reference(w1, w2, i1, i2, prec, signed_inputs)
    except ValueError as e:
        parser.error(str(e))

    block = MainArray()
    block.load_words([_pack_lane0(prec, w1), _pack_lane0(prec, w2)])
    block.enter_compute()
    from .instructions import variant as _variant
    var = _variant(var_name)
    ops = [ArrayOp(0, 1, i1, i2)] + [None] * (var.dummy_arrays - 1)
    res = run_mac2_stream([Mac2Request(tuple(ops), shared_weights=False)],
                          var, args.prec, signed_inputs, block=block,
                          collect_trace=True)
    got = res.results[0][0][0]

    rows = [{"cycle": t.cycle, "phase": t.phase,
             "porta_busy": int(t.porta_busy), "portb_busy": int(t.portb_busy),
             "row_writes": t.row_writes} for t in res.trace]
    path = _write_csv(args.out_dir, "mac2_trace.csv", "mac2-trace",
                      ["cycle", "phase", "porta_busy", "portb_busy",
                       "row_writes"], rows)
    print(f"mac2 {var_name} {args.prec}-bit "
          f"{'unsigned' if args.unsigned else 'signed'}: "
          f"{w1}*{i1} + {w2}*{i2} = {got} "
          f"({'ok' if got == want else f'MISMATCH, expected {want}'})")
    print(f"{res.total_cycles} cycles ({len(rows)} trace rows) -> {path}")
    return 0 if got == want else 1


def _pack_lane0(prec, value):
    return value & prec.elem_mask


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(args, parser):
    names = ("2SA", "1DA") if args.variant == "both" \
        else (_CANON_VARIANT[args.variant],)
    report = run_verify(trials=args.trials, seed=args.seed,
                        variant_names=names, inject_fault=args.inject_fault)
    print(f"verified {report.cases} cases "
          f"({len(report.mismatches)} mismatches)")
    for m in report.mismatches[:10]:
        print(f"  {m.variant} {m.prec_bits}-bit "
              f"{'signed' if m.signed_inputs else 'unsigned'} lane {m.lane}: "
              f"w=({m.w1},{m.w2}) i=({m.i1},{m.i2}) "
              f"got {m.got} want {m.want}")
    return 0 if report.ok else 1


# ---------------------------------------------------------------------------
# analytical tables
# ---------------------------------------------------------------------------

def cmd_throughput(args, parser):
    device = _device(args)
    rows = throughput_table(device)
    if args.prec:
        rows = [r for r in rows if r["precision"] == args.prec]
    path = _write_csv(args.out_dir, "throughput.csv", "peak-throughput",
                      ["arch", "precision", "lb_tmacs", "dsp_tmacs",
                       "bram_tmacs", "total_tmacs", "boost"], rows)
    for r in rows:
        if r["arch"].startswith("BRAMAC"):
            print(f"{r['arch']} {r['precision']}-bit: "
                  f"{r['total_tmacs']:.3f} TMAC/s, boost {r['boost']:.3f}x")
    print(f"-> {path}")
    return 0


def cmd_utilization(args, parser):
    rows = utilization_table()
    path = _write_csv(args.out_dir, "utilization.csv",
                      "utilization-efficiency",
                      ["scheme", "precision", "efficiency"], rows)
    for scheme in ("BRAMAC", "CCB-Pack-2", "CCB-Pack-4", "CoMeFa"):
        print(f"{scheme}: mean efficiency {mean_utilization(scheme):.3f}")
    print(f"advantage vs CCB {utilization_advantage('CCB'):.3f}x, "
          f"vs CoMeFa {utilization_advantage('CoMeFa'):.3f}x")
    print(f"-> {path}")
    return 0


def cmd_gemv(args, parser):
    var_name = _CANON_VARIANT[args.variant]
    rows = []
    best = {}
    for p in (2, 4, 8):
        for persistent in (True, False):
            style = "persistent" if persistent else "non-persistent"
            for baseline in BASELINES:
                for n in DEFAULT_N_SIZES:
                    for m in DEFAULT_M_SIZES:
                        w = GemvWorkload(m, n, p, persistent=persistent)
                        ours = cycles_bramac(w, var_name).total_cycles
                        base = cycles_for(baseline, w).total_cycles
                        speedup = base / ours
                        rows.append({
                            "variant": var_name, "baseline": baseline,
                            "precision": p, "style": style, "m": m, "n": n,
                            "bramac_cycles": ours, "baseline_cycles": base,
                            "speedup": speedup,
                        })
                        key = (p, style)
                        if best.get(key, 0.0) < speedup:
                            best[key] = speedup
    path = _write_csv(args.out_dir, "gemv_speedup.csv", "gemv-speedup",
                      ["variant", "baseline", "precision", "style", "m", "n",
                       "bramac_cycles", "baseline_cycles", "speedup"], rows)
    for (p, style), v in sorted(best.items(), key=lambda kv: (kv[0][0], kv[0][1])):
        print(f"{p}-bit {style}: max speedup {v:.3f}x")
    print(f"-> {path}")
    return 0


# ---------------------------------------------------------------------------
# dla
# ---------------------------------------------------------------------------

def _parse_config(text, parser) -> DlaConfig:
    try:
        q_text, c_text, k_text = text.split(",")
        if "+" in q_text:
            q1_text, q2_text = q_text.split("+")
            q1, q2 = int(q1_text), int(q2_text)
        else:
            q1, q2 = int(q_text), 0
        return DlaConfig(q1, q2, int(c_text), int(k_text))
    except ValueError:
        parser.error("--config must look like 'q1,cvec,kvec' or "
                     "'q1+q2,cvec,kvec'")


def _point_row(network, point):
    return {
        "network": network, "variant": point.variant_name,
        "precision": point.prec_bits,
        "qvec1": point.cfg.qvec1, "qvec2": point.cfg.qvec2,
        "cvec": point.cfg.cvec, "kvec": point.cfg.kvec,
        "dsps": point.dsps, "memory_brams": point.memory_brams,
        "compute_brams": point.compute_brams, "cycles": point.cycles,
        "fmax_mhz": point.fmax_mhz, "area": point.area,
        "perf": point.perf, "objective": point.objective,
    }


_DLA_FIELDS = ["network", "variant", "precision", "qvec1", "qvec2", "cvec",
               "kvec", "dsps", "memory_brams", "compute_brams", "cycles",
               "fmax_mhz", "area", "perf", "objective"]


def cmd_dla(args, parser):
    device = _device(args)
    try:
        layers = load_network(args.network)
    except FileNotFoundError:
        parser.error(f"network file not found: {args.network}")
    if bool(args.dse) == bool(args.config):
        parser.error("choose exactly one of --dse or --config")

    if args.config:
        cfg = _parse_config(args.config, parser)
        if args.variant == "all":
            if cfg.qvec2:
                parser.error("--config with qvec2 > 0 needs --variant 2sa/1da")
            var_name = "DLA"
        else:
            var_name = _CANON_VARIANT[args.variant]
        if args.prec not in (2, 4, 8):
            parser.error("--prec must be 2, 4, or 8")
        try:
            point = evaluate(layers, cfg, args.prec, var_name, device)
        except ValueError as e:
            parser.error(str(e))
        path = _write_csv(args.out_dir, "dla_config.csv", "dla-point",
                          _DLA_FIELDS, [_point_row(args.network, point)])
        print(f"{cfg.label()} {var_name} {args.prec}-bit: "
              f"{point.dsps} DSPs, {point.memory_brams} buffer + "
              f"{point.compute_brams} compute BRAMs, {point.cycles} cycles, "
              f"{point.perf:.2f} inf/s")
        print(f"-> {path}")
        return 0

    variants = ("DLA", "2SA", "1DA") if args.variant == "all" \
        else ("DLA", _CANON_VARIANT[args.variant])
    precisions = (args.prec,) if args.prec else (2, 4, 8)
    best_rows = []
    grid_rows = []
    best = {}
    for vname in variants:
        for p in precisions:
            result = dse(layers, p, vname, device, keep_rows=args.full_grid)
            best[(vname, p)] = result.best
            best_rows.append(_point_row(args.network, result.best))
            grid_rows.extend(_point_row(args.network, pt)
                             for pt in result.rows)
    path = _write_csv(args.out_dir, "dla_dse.csv", "dla-dse-best",
                      _DLA_FIELDS, best_rows)
    if args.full_grid:
        gpath = _write_csv(args.out_dir, "dla_grid.csv", "dla-dse-grid",
                           _DLA_FIELDS, grid_rows)
        print(f"grid ({len(grid_rows)} feasible points) -> {gpath}")
    for (vname, p), point in best.items():
        print(f"{vname} {p}-bit best: {point.cfg.label()} "
              f"perf {point.perf:.2f} inf/s")
    for vname in variants:
        if vname == "DLA" or "DLA" not in variants:
            continue
        ratios = [best[(vname, p)].perf / best[("DLA", p)].perf
                  for p in precisions]
        gm = 1.0
        for r in ratios:
            gm *= r
        gm **= 1.0 / len(ratios)
        print(f"{vname} speedup over DLA (geomean over precisions): {gm:.3f}x")
    print(f"-> {path}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bramac",
        description="Compute-in-BRAM MAC2 simulator and evaluation models")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out-dir", default=".",
                        help="directory for CSV outputs")
        sp.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("mac2", help="simulate one MAC2 with a cycle trace")
    common(p)
    p.add_argument("--variant", choices=("2sa", "1da"), default="2sa")
    p.add_argument("--prec", type=int, required=True)
    p.add_argument("--w", required=True, metavar="W1,W2")
    p.add_argument("--i", required=True, metavar="I1,I2")
    p.add_argument("--unsigned", action="store_true",
                   help="treat inputs as unsigned (skips the inverting cycle)")

    p = sub.add_parser("verify", help="oracle sweep through the full path")
    common(p)
    p.add_argument("--variant", choices=("2sa", "1da", "both"),
                   default="both")
    p.add_argument("--trials", type=int, default=10000,
                   help="random cases per precision (4- and 8-bit)")
    p.add_argument("--inject-fault", action="store_true",
                   help=argparse.SUPPRESS)

    p = sub.add_parser("throughput", help="peak MAC throughput table")
    common(p)
    p.add_argument("--device", help="device description JSON")
    p.add_argument("--prec", type=int, choices=(2, 4, 8))

    p = sub.add_parser("utilization",
                       help="BRAM storage utilization efficiency table")
    common(p)

    p = sub.add_parser("gemv", help="GEMV speedup grid vs bit-serial schemes")
    common(p)
    p.add_argument("--variant", choices=("2sa", "1da"), default="1da")

    p = sub.add_parser("dla", help="CNN accelerator cycle model and DSE")
    common(p)
    p.add_argument("--device", help="device description JSON")
    p.add_argument("--network", default="alexnet",
                   help="bundled name (alexnet, resnet34) or JSON path")
    p.add_argument("--variant", choices=("dla", "2sa", "1da", "all"),
                   default="all")
    p.add_argument("--prec", type=int, choices=(2, 4, 8))
    p.add_argument("--dse", action="store_true", help="run the grid search")
    p.add_argument("--config", metavar="Q1[+Q2],CVEC,KVEC",
                   help="evaluate one fixed configuration")
    p.add_argument("--full-grid", action="store_true",
                   help="also dump every feasible DSE point")
    return parser


_COMMANDS = {
    "mac2": cmd_mac2,
    "verify": cmd_verify,
    "throughput": cmd_throughput,
    "utilization": cmd_utilization,
    "gemv": cmd_gemv,
    "dla": cmd_dla,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return _COMMANDS[args.command](args, parser)


if __name__ == "__main__":
    sys.exit(main())
