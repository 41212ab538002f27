import csv
import io
import json
import subprocess
import sys

import pytest

from relscatter.cli import main

FREE = dict(equation="kg", family="rectangular", height=0.0, width=20.0, x0=-40.0, p0=1.0,
            d=5.0, length=300.0, n_points=2048, snapshot_times=[0.0, 10.0])


@pytest.fixture
def config(tmp_path):
    p = tmp_path / "free.json"
    p.write_text(json.dumps(FREE))
    return p


def error_of(capsys):
    line = capsys.readouterr().err.strip().splitlines()[-1]
    return json.loads(line)


def test_amplitudes_to_stdout(tmp_path, capsys):
    p = tmp_path / "dirac.json"
    p.write_text(json.dumps({**FREE, "equation": "dirac", "height": 3.4, "n_max": None}))
    assert main(["amplitudes", "--config", str(p), "--pmin", "0.8", "--pmax", "1.2",
                 "--count", "5"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 5
    assert float(rows[0]["p1"]) == 0.8


def test_amplitudes_pmin_without_pmax(config, capsys):
    assert main(["amplitudes", "--config", str(config), "--pmin", "0.5"]) == 2
    assert error_of(capsys)["command"] == "amplitudes"


def test_run_writes_outputs(config, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", str(config), "--out", str(out), "--plot-script"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert max(m["rel_l2"] for m in summary["metrics"]) < 1e-4
    assert (out / "fd_001.csv").exists() and (out / "semi_001.csv").exists()
    assert (out / "plot.gp").exists()
    assert main(["compare", str(out / "semi_001.csv"), str(out / "fd_001.csv")]) == 0
    metrics = json.loads(capsys.readouterr().out)
    assert metrics["rel_l2"] < 1e-4


@pytest.mark.parametrize("command,files", [("packet", ["semi_000.csv"]), ("evolve", ["fd_000.csv"])])
def test_single_method_commands(config, tmp_path, command, files):
    out = tmp_path / command
    assert main([command, "--config", str(config), "--out", str(out)]) == 0
    assert sorted(p.name for p in out.glob("*_000.csv")) == files


def test_missing_config(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "none.json")]) == 2
    err = error_of(capsys)
    assert err["error"] == "ConfigError" and err["command"] == "run"


def test_domain_refusal_exit_code(tmp_path, capsys):
    p = tmp_path / "far.json"
    p.write_text(json.dumps({**FREE, "snapshot_times": [500.0]}))
    assert main(["evolve", "--config", str(p)]) == 2
    assert "domain edge" in error_of(capsys)["message"]


def test_divergent_resummation_refused(tmp_path, capsys):
    p = tmp_path / "klein.json"
    p.write_text(json.dumps({**FREE, "height": 3.4, "p0": 1.0}))
    assert main(["packet", "--config", str(p), "--nmax", "resum"]) == 2
    assert error_of(capsys)["error"] == "DivergenceError"


def test_bad_nmax_is_usage_error(config):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--config", str(config), "--nmax", "-3"])
    assert exc.value.code == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "relscatter", "--version"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and "relscatter" in res.stdout
