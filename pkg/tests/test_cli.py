import csv

import pytest

from bramac.cli import main


def run(argv):
    return main(argv)


def read_csv(path):
    with open(path) as f:
        schema = f.readline()
        assert schema.startswith("# schema: bramac/")
        return list(csv.DictReader(f))


def test_mac2_example(tmp_path, capsys):
    rc = run(["mac2", "--variant", "2sa", "--prec", "4", "--w", "3,-2",
              "--i", "1,2", "--out-dir", str(tmp_path)])
    out = capsys.readouterr().out
    assert rc == 0
    assert "= -1 (ok)" in out
    rows = read_csv(tmp_path / "mac2_trace.csv")
    assert len(rows) == 9
    assert rows[0]["phase"] == "copy"
    assert {"cycle", "phase", "porta_busy", "portb_busy", "row_writes"} \
        <= set(rows[0])


def test_mac2_unsigned_drops_inverting_cycle(tmp_path):
    run(["mac2", "--prec", "4", "--w", "3,2", "--i", "1,2", "--unsigned",
         "--out-dir", str(tmp_path)])
    assert len(read_csv(tmp_path / "mac2_trace.csv")) == 8


def test_mac2_usage_errors(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run(["mac2", "--prec", "3", "--w", "1,1", "--i", "1,1",
             "--out-dir", str(tmp_path)])
    assert exc.value.code == 2
    with pytest.raises(SystemExit):
        run(["mac2", "--prec", "4", "--w", "1", "--i", "1,1",
             "--out-dir", str(tmp_path)])
    with pytest.raises(SystemExit):  # operand out of range for the precision
        run(["mac2", "--prec", "4", "--w", "99,0", "--i", "1,1",
             "--out-dir", str(tmp_path)])


def test_verify_subcommand(capsys):
    assert run(["verify", "--trials", "300", "--seed", "7"]) == 0
    assert "0 mismatches" in capsys.readouterr().out
    assert run(["verify", "--trials", "300", "--seed", "7",
                "--inject-fault"]) == 1


def test_throughput_csv(tmp_path):
    assert run(["throughput", "--out-dir", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "throughput.csv")
    assert len(rows) == 24
    by_key = {(r["arch"], r["precision"]): r for r in rows}
    assert float(by_key[("BRAMAC-2SA", "2")]["boost"]) \
        == pytest.approx(2.6, abs=0.15)


def test_utilization_csv(tmp_path):
    assert run(["utilization", "--out-dir", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "utilization.csv")
    native = [r for r in rows if r["scheme"] == "BRAMAC"
              and r["precision"] in ("2", "4", "8")]
    assert all(float(r["efficiency"]) == 1.0 for r in native)


def test_gemv_csv(tmp_path):
    assert run(["gemv", "--out-dir", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "gemv_speedup.csv")
    assert len(rows) == 3 * 2 * 3 * 5 * 6
    assert all(float(r["speedup"]) > 0 for r in rows)


def test_dla_config_evaluation(tmp_path, capsys):
    rc = run(["dla", "--network", "alexnet", "--variant", "2sa", "--prec",
              "8", "--config", "2+2,10,50", "--out-dir", str(tmp_path)])
    assert rc == 0
    assert "1500 DSPs" in capsys.readouterr().out
    rows = read_csv(tmp_path / "dla_config.csv")
    assert rows[0]["dsps"] == "1500"


def test_dla_usage_errors(tmp_path):
    with pytest.raises(SystemExit):  # needs exactly one of --dse / --config
        run(["dla", "--out-dir", str(tmp_path)])
    with pytest.raises(SystemExit):
        run(["dla", "--config", "banana", "--out-dir", str(tmp_path)])
    with pytest.raises(SystemExit):  # hybrid config without a variant
        run(["dla", "--config", "2+2,10,50", "--prec", "8",
             "--out-dir", str(tmp_path)])
    with pytest.raises(SystemExit):  # missing workload file
        run(["dla", "--network", "missing.json", "--dse",
             "--out-dir", str(tmp_path)])


def test_dla_dse_restricted(tmp_path, capsys):
    rc = run(["dla", "--network", "alexnet", "--variant", "2sa", "--prec",
              "2", "--dse", "--out-dir", str(tmp_path)])
    assert rc == 0
    assert "speedup over DLA" in capsys.readouterr().out
    rows = read_csv(tmp_path / "dla_dse.csv")
    assert {r["variant"] for r in rows} == {"DLA", "2SA"}


def test_outputs_byte_deterministic(tmp_path):
    for sub in (["throughput"], ["utilization"], ["gemv"],
                ["dla", "--prec", "4", "--variant", "1da", "--dse"]):
        d1, d2 = tmp_path / "a", tmp_path / "b"
        run(sub + ["--out-dir", str(d1)])
        run(sub + ["--out-dir", str(d2)])
        for f1 in sorted(d1.iterdir()):
            assert f1.read_bytes() == (d2 / f1.name).read_bytes()
