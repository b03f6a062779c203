import pytest

from bramac.efsm import run_dot_product
from bramac.gemv import (
    DEFAULT_M_SIZES,
    DEFAULT_N_SIZES,
    GemvWorkload,
    all_speedup_grids,
    cycles_bramac,
    cycles_ccb,
    cycles_comefa,
    cycles_for,
    effective_pack,
    max_speedups,
    speedup_grid,
)
from bramac.lanes import precision


@pytest.mark.parametrize("vname", ["2SA", "1DA"])
@pytest.mark.parametrize("prec_bits", [2, 4, 8])
@pytest.mark.parametrize("signed_inputs", [True, False])
def test_analytic_cycles_match_simulation(vname, prec_bits, signed_inputs):
    prec = precision(prec_bits)
    shapes = [(1, 2), (3, 7), (prec.lanes, 16), (prec.lanes + 1, 33),
              (2 * prec.lanes, 64), (4 * prec.lanes, 40), (5, 1)]
    for m, n in shapes:
        matrix = [[(r + c) % 3 - 1 for c in range(n)] for r in range(m)]
        vec = [(c % 3) - 1 for c in range(n)]
        sim = run_dot_product(matrix, vec, vname, prec_bits, signed_inputs)
        w = GemvWorkload(m, n, prec_bits, signed_inputs=signed_inputs)
        model = cycles_bramac(w, vname)
        assert model.total_cycles == sim.total_cycles, (m, n)
        assert model.busy_cycles == sim.busy_cycles, (m, n)
        assert model.lane_efficiency == pytest.approx(sim.lane_efficiency)


def test_lane_efficiency_example():
    # 64 outputs at 2-bit fill 64 of the 80 lanes: 80% occupancy
    w = GemvWorkload(64, 160, 2)
    assert cycles_bramac(w, "1DA").lane_efficiency == pytest.approx(0.8)


def test_non_persistent_adds_only_exposed_loads():
    for vname in ("2SA", "1DA"):
        for p in (2, 4, 8):
            res = cycles_bramac(GemvWorkload(160, 320, p), vname)
            np_res = cycles_bramac(
                GemvWorkload(160, 320, p, persistent=False), vname)
            extra = np_res.total_cycles - res.total_cycles
            assert extra == np_res.breakdown["load_exposed"]
            assert extra >= 0


def test_bit_serial_reduction_pack_limit():
    # packing is capped by how many sequential chunks one column sees
    assert effective_pack(4, 480) == 3
    assert effective_pack(4, 128) == 1
    assert effective_pack(2, 960) == 2


def test_comefa_never_slower_than_ccb():
    # identical compute cadence, but no input staging cost
    for p in (2, 4, 8):
        for persistent in (True, False):
            for n in DEFAULT_N_SIZES:
                w = GemvWorkload(160, n, p, persistent=persistent)
                assert cycles_comefa(w).total_cycles \
                    <= cycles_ccb(w).total_cycles


def test_cycles_for_dispatch():
    w = GemvWorkload(80, 160, 2)
    assert cycles_for("BRAMAC-1DA", w).scheme == "BRAMAC-1DA"
    assert cycles_for("CCB-Pack-4", w).scheme == "CCB-Pack-4"
    assert cycles_for("CoMeFa-D", w).scheme == "CoMeFa-D"
    with pytest.raises(ValueError):
        cycles_for("TPU", w)


def test_workload_validation():
    with pytest.raises(ValueError):
        GemvWorkload(0, 4, 2)
    with pytest.raises(ValueError):
        cycles_comefa(GemvWorkload(4, 4, 2), flavor="X")


GRID_TARGETS = {
    (2, "persistent"): 3.3,
    (4, "persistent"): 2.8,
    (8, "persistent"): 2.4,
    (2, "non-persistent"): 4.1,
    (4, "non-persistent"): 3.4,
    (8, "non-persistent"): 2.8,
}


def test_grid_maxima_within_tolerance():
    best = max_speedups(all_speedup_grids())
    for key, target in GRID_TARGETS.items():
        assert best[key] == pytest.approx(target, rel=0.20), key


def test_speedup_monotone_in_precision_and_style():
    # lower precision never loses, and streaming weights never helps the
    # bit-serial side relative to the MAC2 side
    grids = all_speedup_grids()
    for baseline in ("CCB-Pack-2", "CCB-Pack-4", "CoMeFa"):
        for style in ("persistent", "non-persistent"):
            for lo, hi in ((2, 4), (4, 8)):
                g_lo = grids[(lo, style, baseline)]
                g_hi = grids[(hi, style, baseline)]
                for r_lo, r_hi in zip(g_lo.cells, g_hi.cells):
                    for v_lo, v_hi in zip(r_lo, r_hi):
                        assert v_lo >= v_hi
        for p in (2, 4, 8):
            g_p = grids[(p, "persistent", baseline)]
            g_n = grids[(p, "non-persistent", baseline)]
            for r_p, r_n in zip(g_p.cells, g_n.cells):
                for v_p, v_n in zip(r_p, r_n):
                    assert v_n >= v_p


def test_grid_dimensions():
    g = speedup_grid()
    assert g.m_values == DEFAULT_M_SIZES
    assert g.n_values == DEFAULT_N_SIZES
    assert len(g.cells) == len(DEFAULT_N_SIZES)
    assert all(len(row) == len(DEFAULT_M_SIZES) for row in g.cells)
    assert g.max_speedup() >= max(max(r) for r in g.cells)
