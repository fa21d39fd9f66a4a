import json
import math
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from heatlab.cli import main
from heatlab.config import ConfigError, parse_config
from heatlab.reference import gaussian_kernel

GOOD = """
dim = 1
c0_regime = 1.0
engines = ["pde"]
seed = 42
outputs = "{out}"

[potential]
kind = "power"
alpha = 2.0

[grid]
half_width = 8.0
n_cells = 128

[sweep]
t_list = [0.25, 0.5, 2.0, 4.0]
x_list = [0.0, 1.0]
y_list = [0.0, 1.0, 2.0]
"""


def write_cfg(tmp_path, text=None, **kw):
    cfg = tmp_path / "run.toml"
    out = tmp_path / "out"
    cfg.write_text((text or GOOD).format(out=out.as_posix(), **kw))
    return cfg, out


def test_parse_good_config(tmp_path):
    cfg, _ = write_cfg(tmp_path)
    rc = parse_config(cfg.read_text())
    assert rc.dim == 1
    assert rc.engines == ["pde"]
    assert rc.potential.name.startswith("power")
    assert rc.mc.seed == 42


def test_unknown_key_named_in_error(tmp_path):
    bad = GOOD + "\nbogus_key = 3\n"
    with pytest.raises(ConfigError, match="bogus_key"):
        parse_config(bad.format(out="x"))


def test_nested_unknown_key(tmp_path):
    bad = GOOD.replace("[grid]", "[grid]\nwidth_typo = 1.0")
    with pytest.raises(ConfigError, match="grid.width_typo"):
        parse_config(bad.format(out="x"))


def test_toml_error_carries_position():
    with pytest.raises(ConfigError, match=r"line"):
        parse_config("dim = [unclosed")


def test_malformed_config_exit_code(tmp_path):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("dim = [unclosed")
    rc = main(["envelope", "--config", str(cfg), "--t", "0.5",
               "--x", "0", "--y", "0"])
    assert rc == 2


def test_missing_config_exit_code(tmp_path):
    rc = main(["verify", "--config", str(tmp_path / "nope.toml")])
    assert rc == 2


def test_envelope_command_values(tmp_path, capsys):
    cfg, _ = write_cfg(tmp_path)
    rc = main(["--json", "envelope", "--config", str(cfg), "--t", "0.5",
               "--x", "0", "--y", "0"])
    assert rc == 0
    data = json.loads(capsys.readouterr().out)
    assert data["regime"] == "small_time"
    expected = 0.5 ** -0.5 * math.exp(-0.5)
    assert data["values"]["short_time_gauss"] == pytest.approx(expected)


def test_envelope_large_time_label(tmp_path, capsys):
    cfg, _ = write_cfg(tmp_path)
    rc = main(["--json", "envelope", "--config", str(cfg), "--t", "2.0",
               "--x", "0", "--y", "0"])
    data = json.loads(capsys.readouterr().out)
    assert rc == 0 and data["regime"] == "large_time"


def test_kernel_command_free_mc(tmp_path, capsys):
    text = GOOD.replace('kind = "power"\nalpha = 2.0', 'kind = "zero"')
    cfg, out = write_cfg(tmp_path, text=text)
    rc = main(["kernel", "--config", str(cfg), "--method", "mc",
               "--t", "1.0", "--x", "0", "--y", "1"])
    assert rc == 0
    rec = json.loads((out / "kernel_records.jsonl").read_text().splitlines()[0])
    assert rec["value"] == pytest.approx(gaussian_kernel(1, 1.0, 0.0, 1.0))
    assert rec["stderr"] == 0.0
    assert rec["seed"] == 42
    assert (out / "kernel_records.jsonl.meta.json").exists()


def test_kernel_pde_unsupported_dimension(tmp_path):
    text = GOOD.replace("dim = 1", "dim = 3").replace(
        'x_list = [0.0, 1.0]', 'x_list = [[0.0,0,0]]').replace(
        'y_list = [0.0, 1.0, 2.0]', 'y_list = [[1.0,0,0]]')
    cfg, _ = write_cfg(tmp_path, text=text)
    rc = main(["kernel", "--config", str(cfg), "--method", "pde",
               "--t", "1.0", "--x", "0", "--y", "0", "--y", "0"])
    assert rc == 3


def test_verify_writes_reports_and_cloud(tmp_path):
    cfg, out = write_cfg(tmp_path)
    rc = main(["verify", "--config", str(cfg)])
    assert rc == 0
    cloud = out / "points_c0_1.csv"
    assert cloud.exists()
    header = cloud.read_text().splitlines()[0].split(",")
    assert header[:5] == ["t", "x0", "y0", "regime", "method"]
    assert "env_lower" in header and "underflow" in header
    meta = json.loads((out / "points_c0_1.csv.meta.json").read_text())
    assert meta["seed"] == 42
    assert meta["schema"] == "heatlab-points-v1"
    assert len(meta["t0_curve"]) > 10
    fits = list(out.glob("fit_*.json"))
    assert fits
    for f in fits:
        rep = json.loads(f.read_text())
        assert rep["success"] is True


def test_verify_worker_count_bit_identical(tmp_path):
    text = GOOD.replace('engines = ["pde"]', 'engines = ["mc"]') + \
        "\n[mc]\nn_paths = 2000\n"
    cfg, out = write_cfg(tmp_path, text=text)
    rc1 = main(["--workers", "1", "verify", "--config", str(cfg)])
    body1 = (out / "points_c0_1.csv").read_bytes()
    rc2 = main(["--workers", "4", "verify", "--config", str(cfg)])
    body2 = (out / "points_c0_1.csv").read_bytes()
    assert rc1 == rc2 == 0
    assert body1 == body2


def test_heatlab_out_env_overrides(tmp_path, monkeypatch):
    cfg, out = write_cfg(tmp_path)
    redirect = tmp_path / "elsewhere"
    monkeypatch.setenv("HEATLAB_OUT", str(redirect))
    rc = main(["verify", "--config", str(cfg)])
    assert rc == 0
    assert (redirect / "points_c0_1.csv").exists()
    assert not (out / "points_c0_1.csv").exists()


def test_green_command_csv(tmp_path):
    text = GOOD + "\n[green]\nrel_tol = 1e-2\nx_list = [0.0]\ny_list = [0.5, 1.0]\n"
    cfg, out = write_cfg(tmp_path, text=text)
    rc = main(["green", "--config", str(cfg)])
    assert rc == 0
    lines = (out / "green.csv").read_text().splitlines()
    assert lines[0].split(",")[:4] == ["x0", "y0", "G", "error_bound"]
    assert len(lines) == 3


def test_console_entrypoint_runs():
    proc = subprocess.run([sys.executable, "-m", "heatlab.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "envelope" in proc.stdout


def test_verify_all_points_below_floor_exit_code(tmp_path):
    text = GOOD.replace(
        "t_list = [0.25, 0.5, 2.0, 4.0]", "t_list = [0.01]").replace(
        "x_list = [0.0, 1.0]", "x_list = [0.0]").replace(
        "y_list = [0.0, 1.0, 2.0]", "y_list = [6.0]")
    cfg, _ = write_cfg(tmp_path, text=text)
    rc = main(["verify", "--config", str(cfg)])
    assert rc == 4


def test_verify_meta_records_t0_class(tmp_path):
    cfg, out = write_cfg(tmp_path)
    assert main(["verify", "--config", str(cfg)]) == 0
    meta = json.loads((out / "points_c0_1.csv.meta.json").read_text())
    assert meta["t0_class"] == "constant_like"


def test_tabulated_potential_config(tmp_path):
    knots = tmp_path / "profile.csv"
    rs = np.array([0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0])
    np.savetxt(knots, np.column_stack([rs, (1 + rs) ** 2]), delimiter=",")
    text = GOOD.replace(
        'kind = "power"\nalpha = 2.0',
        f'kind = "tabulated"\nprofile_csv = "{knots.as_posix()}"')
    cfg, out = write_cfg(tmp_path, text=text)
    rc = main(["--json", "envelope", "--config", str(cfg), "--t", "0.5",
               "--x", "0", "--y", "1"])
    assert rc == 0


def test_kernel_pde_prints_oracle_comparison(tmp_path, capsys):
    text = GOOD.replace('kind = "power"\nalpha = 2.0',
                        'kind = "harmonic"\nomega = 1.0').replace(
        "n_cells = 128", "n_cells = 1024")
    cfg, _ = write_cfg(tmp_path, text=text)
    rc = main(["kernel", "--config", str(cfg), "--method", "pde",
               "--t", "1.0", "--x", "0", "--y", "1"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "oracle" in out
    rel = float(out.split("relative error")[1].strip())
    assert rel < 1e-3
