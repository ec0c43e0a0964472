import math
import subprocess
import sys
from pathlib import Path

import pytest

from bdmsim import cli
from bdmsim.metrics import COLUMNS, MetricsReport, WindowRow
from bdmsim.report import ComparisonTable, check_comparable, compare, delta_pct, emit_csv, parse_csv
from bdmsim.scenario import ScenarioConfig, ScenarioError

SHORT = "stations=2\nduration_s=2\nwarmup_s=0\n"


def _report():
    rows = [WindowRow(0.0, 1234.5, 0.0, 1.25, 40.0, 60.0, 0.1),
            WindowRow(1.0, 1e-7, math.nan, math.nan, 33.333333333333336, 66.66666666666666, 0.0)]
    return MetricsReport(617.25, 0.1, 1.25, 36.666666666666664, 63.333333333333336, 0.1, rows)


def _same(a, b):
    return a == b or (math.isnan(a) and math.isnan(b))


def test_csv_layout():
    text = emit_csv(_report())
    lines = text.splitlines()
    assert lines[0] == ",".join(COLUMNS)
    assert lines[-1].startswith("summary,")
    assert len(lines) == 4 and text.endswith("\n")
    assert "nan" in lines[2]


def test_csv_round_trip_is_exact():
    rep = _report()
    back = parse_csv(emit_csv(rep))
    assert all(_same(a, b) for a, b in zip(rep.summary_row(), back.summary_row()))
    for w, v in zip(rep.windows, back.windows):
        assert all(_same(getattr(w, c), getattr(v, c)) for c in COLUMNS)


def test_empty_series_gives_header_and_summary():
    rep = MetricsReport(0.0, math.nan, math.nan, 0.0, 100.0, 0.0)
    assert emit_csv(rep).splitlines()[0] == ",".join(COLUMNS)
    assert len(emit_csv(rep).splitlines()) == 2


def test_parse_csv_rejects_garbage():
    with pytest.raises(ValueError):
        parse_csv("a,b\n1,2\n")
    with pytest.raises(ValueError):
        parse_csv(",".join(COLUMNS) + "\n")


def test_delta_pct():
    assert delta_pct(100.0, 150.0) == 50.0
    assert delta_pct(0.0, 0.0) == 0.0
    assert math.isnan(delta_pct(0.0, 1.0))


def test_comparison_requires_controller_only_differences():
    a = ScenarioConfig(stations=2, duration_s=1)
    check_comparable([a, a.replace(controller="edca")])
    check_comparable([a, a.replace(controller="fixed", fixed_rate_mbps=1)])
    with pytest.raises(ScenarioError):
        check_comparable([a, a.replace(stations=3)])
    with pytest.raises(ScenarioError):
        check_comparable([a, a.replace(seed=2)])
    with pytest.raises(ScenarioError):
        check_comparable([a])


def test_identical_controllers_give_zero_deltas():
    cfg = ScenarioConfig(stations=2, duration_s=1, warmup_s=0)
    table = compare([cfg, cfg])
    for i in range(2):
        for f in ("throughput_bps", "utilization_pct", "mean_access_delay_ms", "capacity_calls"):
            assert table.delta(i, f) == 0.0
    assert "deltas against bdm" in table.to_text()
    assert table.to_csv().splitlines()[0].startswith("controller,throughput_bps")


def test_deltas_follow_reports():
    t = ComparisonTable(["x", "y"], [_report(), _report()])
    t.reports[1].utilization_pct *= 2
    assert t.delta(1, "utilization_pct") == pytest.approx(100.0)


# -- command line ---------------------------------------------------------------------

@pytest.mark.parametrize("argv, out", [
    (["calc", "bandwidth", "g729", "20", "full"], "24000"),
    (["calc", "erlang", "2", "2.0"], "0.400000"),
    (["calc", "calls", "0.7", "6000000", "1200000", "24000"], "140"),
])
def test_calc(capsys, argv, out):
    assert cli.main(argv) == 0
    assert capsys.readouterr().out.strip() == out


def test_calc_bad_arguments(capsys):
    assert cli.main(["calc", "bandwidth", "opus", "20", "full"]) == 1
    assert "unknown codec" in capsys.readouterr().err
    with pytest.raises(SystemExit) as e:
        cli.main(["calc", "erlang", "two", "1"])
    assert e.value.code != 0


def test_run_writes_csv_and_figures(tmp_path):
    scen = tmp_path / "s.cfg"
    scen.write_text(SHORT)
    out = tmp_path / "out" / "r.csv"
    assert cli.main(["run", str(scen), "--out", str(out), "--figures", str(tmp_path / "fig")]) == 0
    rep = parse_csv(out.read_text())
    assert len(rep.windows) == 2
    assert (tmp_path / "fig" / "s_timeseries.png").stat().st_size > 0


def test_run_batch_of_seeds(tmp_path):
    scen = tmp_path / "s.cfg"
    scen.write_text(SHORT)
    out = tmp_path / "r.csv"
    assert cli.main(["run", str(scen), "--seeds", "2", "--out", str(out)]) == 0
    assert (tmp_path / "r_seed1.csv").exists() and (tmp_path / "r_seed2.csv").exists()


def test_failed_run_leaves_no_csv(tmp_path, capsys):
    scen = tmp_path / "bad.cfg"
    scen.write_text("stations=2\nwibble=1\n")
    out = tmp_path / "r.csv"
    assert cli.main(["run", str(scen), "--out", str(out)]) == 1
    assert not out.exists()
    assert "wibble" in capsys.readouterr().err
    assert cli.main(["run", str(tmp_path / "missing.cfg"), "--out", str(out)]) == 1
    assert not out.exists()


def test_compare_and_sweep(tmp_path, capsys):
    a, b = tmp_path / "a.cfg", tmp_path / "b.cfg"
    a.write_text(SHORT + "controller=bdm\n")
    b.write_text(SHORT + "controller=edca\n")
    assert cli.main(["compare", str(a), str(b), "--out", str(tmp_path / "cmp.csv"),
                     "--figures", str(tmp_path)]) == 0
    assert "edca" in capsys.readouterr().out
    assert (tmp_path / "comparison.png").exists()
    c = tmp_path / "c.cfg"
    c.write_text(SHORT.replace("stations=2", "stations=3"))
    assert cli.main(["compare", str(a), str(c)]) == 1
    assert cli.main(["sweep", str(a), "--calls", "1..3", "--out", str(tmp_path / "sw.csv"),
                     "--figures", str(tmp_path)]) == 0
    lines = (tmp_path / "sw.csv").read_text().splitlines()
    assert lines[0].startswith("calls,") and len(lines) == 4
    assert (tmp_path / "a_sweep.png").exists()


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "bdmsim", "calc", "bandwidth", "g711", "20", "full"],
                         capture_output=True, text=True, check=True)
    assert res.stdout.strip() == "80000"
