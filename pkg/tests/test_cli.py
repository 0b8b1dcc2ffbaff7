import subprocess
import sys

import pytest

from magstrict.cli import main
from magstrict.config import ConfigError, RunConfig, apply, dump_config, load_config, parse_lines
from magstrict.report import read_csv


def test_check_mesh(capsys):
    assert main(["check-mesh", "--r", "2"]) == 0
    assert "angle condition: pass" in capsys.readouterr().out


def test_small_run_writes_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["run", "--r", "2", "--k", "1e-3", "--T", "0.01", "--cadence", "2", "--out", str(out)])
    assert code == 0
    rows = read_csv(tmp_path / "run.csv")
    assert rows[0].t == 0 and rows[-1].t == pytest.approx(0.01)
    assert all(b.t > a.t for a, b in zip(rows, rows[1:]))
    assert (tmp_path / "run_w1inf.png").exists() and (tmp_path / "plot_run.py").exists()
    assert "T_B" in capsys.readouterr().out


def test_config_file_and_overrides(tmp_path):
    cfg_path = tmp_path / "bench.cfg"
    cfg_path.write_text("r = 2  # mesh level\nCe=40\nCm=10\npi.kind=applied_field\npi.f=0,0,1\n")
    cfg = load_config(cfg_path, {"T": "0.5"})
    assert (cfg.r, cfg.c_e, cfg.c_m, cfg.T, cfg.pi_f) == (2, 40.0, 10.0, 0.5, (0.0, 0.0, 1.0))
    again = apply(RunConfig(), parse_lines(dump_config(cfg).splitlines()))
    assert again == cfg


@pytest.mark.parametrize("argv", [
    ["run", "--r", "0"],
    ["run", "--set", "nonsense=1"],
    ["run", "--theta", "2"],
    ["run", "--scheme", "euler"],
    ["sweep", "--vary", "alpha"],
])
def test_bad_config_exit_code(argv, tmp_path):
    with pytest.raises(SystemExit) as exc:
        code = main(argv + ["--out", str(tmp_path / "o")])
        raise SystemExit(code)
    assert exc.value.code == 2


def test_missing_config_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/file.cfg")


def test_sweep(tmp_path, capsys):
    out = tmp_path / "s"
    code = main(["sweep", "--r", "1", "--k", "1e-3", "--T", "0.004", "--no-figures", "--out", str(out),
                 "--vary", "alpha=0.5,1.0"])
    assert code == 0
    assert (tmp_path / "s_alpha-0.5.csv").exists() and (tmp_path / "s_alpha-1.0.csv").exists()


def test_midpoint_run(tmp_path):
    code = main(["run", "--r", "2", "--scheme", "midpoint", "--T", "0.002", "--no-figures",
                 "--out", str(tmp_path / "mp")])
    assert code == 0
    assert max(r.mod_dev for r in read_csv(tmp_path / "mp.csv")) <= 1e-8


def test_solver_failure_exit_code(tmp_path):
    code = main(["run", "--r", "3", "--scheme", "midpoint", "--k", "0.05", "--T", "0.1", "--no-figures",
                 "--set", "midpoint.max_sweeps=20", "--out", str(tmp_path / "f")])
    assert code == 3


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "magstrict.cli", "check-mesh", "--r", "1"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "nodes=9" in res.stdout
