import json

import pytest

from whitefi.cli import EXIT_FAIL, EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE, main
from whitefi.io import write_tv_csv
from whitefi.scenario import TvTransmitter

TOWERS = [TvTransmitter("north", (7.5, 35.0), 21, 20.0, 12.0, 23.1),
          TvTransmitter("east", (33.0, 5.0), 22, 10.0, 14.0, 25.1)]


@pytest.fixture
def tv_file(tmp_path):
    path = tmp_path / "tv.csv"
    write_tv_csv(TOWERS, path)
    return path


def gen(tmp_path, tv_file, name="s.json", *extra):
    out = tmp_path / name
    code = main(["generate", "--seed", "2", "--grid", "3", "--cell-km", "5", "--nodes-per-cell", "3",
                 "--tv-file", str(tv_file), "--channels", "21,22,23", "--out", str(out), *extra])
    assert code == EXIT_OK
    return out


def test_generate_is_reproducible(tmp_path, tv_file):
    a = gen(tmp_path, tv_file, "a.json")
    b = gen(tmp_path, tv_file, "b.json")
    assert a.read_bytes() == b.read_bytes()
    d = json.loads(a.read_text())
    assert len(d["cells"]) == 9 and d["config"]["seed"] == 2
    assert "out" not in d["config"]


def test_generate_minimal_to_stdout(capsys):
    assert main(["generate", "--grid", "1", "--nodes-per-cell", "1"]) == EXIT_OK
    assert len(json.loads(capsys.readouterr().out)["cells"]) == 1


def test_optimize_and_validate(tmp_path, tv_file, capsys):
    sc = gen(tmp_path, tv_file)
    alloc, trace, rep, rep_csv = (tmp_path / n for n in ("alloc.json", "trace.csv", "rep.json", "rep.csv"))
    code = main(["optimize", "--scenario", str(sc), "--out-alloc", str(alloc), "--out-trace", str(trace),
                 "--out-report", str(rep), "--out-report-csv", str(rep_csv)])
    assert code == EXIT_OK
    assert trace.read_text().startswith("# config: ")
    assert rep_csv.read_text().startswith("# config: ")
    proposed = json.loads(rep.read_text())["total_throughput_bps"]
    assert proposed > 0
    code = main(["optimize", "--scenario", str(sc), "--method", "baseline", "--out-report", str(rep)])
    assert code == EXIT_OK
    assert json.loads(rep.read_text())["total_throughput_bps"] <= proposed
    capsys.readouterr()
    code = main(["validate", "--scenario", str(sc), "--alloc", str(alloc), "--slots", "1000000"])
    out = capsys.readouterr().out
    assert code == EXIT_OK, out
    assert "95% CI covered" in out
    assert out.startswith("# config: ")


def test_validate_detects_broken_fairness(tmp_path, tv_file, capsys):
    sc = gen(tmp_path, tv_file)
    alloc = tmp_path / "alloc.json"
    main(["optimize", "--scenario", str(sc), "--out-alloc", str(alloc), "--out-report", str(tmp_path / "r.json")])
    d = json.loads(alloc.read_text())
    pair = next(p for p in d["pairs"] if len(p["access_probability"]) > 1)
    pair["access_probability"][0] *= 0.5
    alloc.write_text(json.dumps(d))
    capsys.readouterr()
    assert main(["validate", "--scenario", str(sc), "--alloc", str(alloc), "--slots", "20000"]) == EXIT_FAIL
    assert "FAIL  time fairness" in capsys.readouterr().out


def test_empty_assignment_reports_zero(tmp_path, capsys):
    tv = tmp_path / "tv.csv"
    write_tv_csv([TvTransmitter("big", (7.5, 7.5), 21, 10.0, 40.0, 51.1)], tv)
    sc = tmp_path / "s.json"
    assert main(["generate", "--grid", "2", "--nodes-per-cell", "2", "--channels", "21", "--tv-file", str(tv),
                 "--out", str(sc)]) == EXIT_OK
    rep = tmp_path / "r.json"
    assert main(["optimize", "--scenario", str(sc), "--out-report", str(rep)]) == EXIT_OK
    assert json.loads(rep.read_text())["total_throughput_bps"] == 0.0


def test_zero_cap_is_infeasible(tmp_path, tv_file, capsys):
    sc = gen(tmp_path, tv_file, "s.json", "--imax-w", "0")
    assert main(["optimize", "--scenario", str(sc), "--out-report", str(tmp_path / "r.json")]) == EXIT_INFEASIBLE
    assert "infeasible" in capsys.readouterr().err


def test_config_file_precedence(tmp_path, tv_file):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"generate": {"seed": 7, "grid": 2}, "nodes_per_cell": 2}))
    out = tmp_path / "s.json"
    assert main(["--config", str(cfg), "generate", "--grid", "1", "--out", str(out)]) == EXIT_OK
    d = json.loads(out.read_text())
    assert d["config"]["seed"] == 7                  # from the file section
    assert d["config"]["grid"] == 1                  # flag beats file
    assert d["config"]["nodes_per_cell"] == 2        # top-level file key
    assert len(d["cells"]) == 1


def test_fcc_distance(tmp_path, tv_file, capsys):
    out = tmp_path / "d.csv"
    code = main(["fcc-distance", "--tv-file", str(tv_file), "--density-list", "0,0.5,2", "--trials", "2",
                 "--out", str(out)])
    assert code == EXIT_OK
    rows = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert rows[0].startswith("density,mean_D_km")
    means = [float(r.split(",")[1]) for r in rows[1:]]
    assert means[0] == 0.0 and means == sorted(means)


def test_usage_errors(tmp_path, capsys):
    assert main(["optimize"]) == EXIT_USAGE
    assert main(["optimize", "--scenario", str(tmp_path / "nope.json")]) == EXIT_USAGE
    assert main(["validate", "--scenario", "x"]) == EXIT_USAGE
    with pytest.raises(SystemExit):
        main(["frobnicate"])


def test_console_script_installed():
    import shutil
    import subprocess
    exe = shutil.which("whitefi")
    if exe is None:
        pytest.skip("package not installed as a console script")
    out = subprocess.run([exe, "--version"], capture_output=True, text=True, check=True)
    assert out.stdout.startswith("whitefi ")
