import json
from pathlib import Path

import numpy as np
import pytest

from cogradar.cli import main
from cogradar.config import bundled_config, digest, parse_config, parse_config_text, serialize
from cogradar.errors import ConfigError
from cogradar.export import read_table, write_table
from cogradar.sim import paper_scenario

TINY = """
[array]
tx_side = 2
rx_side = 2

[detector]
k_sec = 16

[run]
k_pulses = 4
mc_runs = 2
pd_window = 2
calibration_draws = 32
"""


@pytest.fixture
def tiny_cfg(tmp_path):
    p = tmp_path / "tiny.toml"
    p.write_text(TINY)
    return p


# ---------------------------------------------------------------- parsing


def test_bundled_config_is_reference_scenario():
    assert parse_config(bundled_config()) == paper_scenario()


def test_empty_config_gives_defaults():
    assert parse_config_text("") == paper_scenario()


def test_round_trip_digest():
    sc = parse_config(bundled_config())
    again = parse_config_text(serialize(sc))
    assert again == sc
    assert digest(again) == digest(sc)


def test_round_trip_non_default_values():
    text = TINY + """
[agent]
epsilon = 0.3
epsilon_decay = true
reward_bins = "action"

[disturbance]
rho_x = [[0.3, 0.125]]
rho_y = [[0.2, 0.5], [0.1, 0.75]]
shape = 3.5
burn_in = 7

[[targets]]
nu_x = 0.1
nu_y = -0.35
snr_db = 1.25
"""
    sc = parse_config_text(text)
    assert sc.disturbance.p == 1 and sc.disturbance.q == 2
    assert sc.disturbance.rho_x[0] == pytest.approx(0.3 * np.exp(-2j * np.pi * 0.125))
    assert sc.burn_in == 7 and sc.reward_bins == "action" and sc.agent.epsilon_decay
    assert len(sc.targets) == 1
    assert parse_config_text(serialize(sc)) == sc


def test_empty_target_list():
    sc = parse_config_text("targets = []\n")
    assert sc.targets == ()
    assert parse_config_text(serialize(sc)).targets == ()


def test_digest_changes_with_content():
    sc = paper_scenario()
    assert digest(sc) != digest(sc.replace(p_fa=1e-4))
    assert digest(sc) == digest(paper_scenario())


@pytest.mark.parametrize("text,key,line", [
    ("[array]\ntx_side = 3\nfoo = 1\n", "foo", 3),
    ("foo = 1\n", "foo", None),
    ("[bogus]\nx = 1\n", "bogus", 1),
    ("[[targets]]\nnu_x = 0.0\nnu_y = 0.0\nsnr_db = 1.0\ncolour = 2\n", "colour", 5),
    ("[run]\n\nk_pulses = 0\n", "k_pulses", 3),
    ("[array]\ntx_side = 'ten'\n", "tx_side", 2),
    ("[detector]\np_fa = 2.0\n", "p_fa", 2),
    ("[disturbance]\np = 2\nrho_x = [[0.5, 0.1]]\n", "rho_x", 3),
    ("[agent]\ngamma = 1.5\n", "gamma", 2),
])
def test_config_errors_name_key_and_line(text, key, line):
    with pytest.raises(ConfigError) as info:
        parse_config_text(text)
    assert info.value.key == key
    if line is not None:
        assert info.value.line == line
    assert key in str(info.value)


def test_off_grid_target_is_an_error():
    with pytest.raises(ConfigError):
        parse_config_text("[[targets]]\nnu_x = 0.01\nnu_y = 0.0\nsnr_db = 0.0\n")


def test_syntax_error_reports_line():
    with pytest.raises(ConfigError) as info:
        parse_config_text("[array]\ntx_side = = 3\n")
    assert info.value.line == 2


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "nope.toml")


# ---------------------------------------------------------------- csv


def test_csv_header_and_round_trip(tmp_path):
    p = write_table(tmp_path / "t.csv", "demo", ["a", "b"], [(1, 0.1), (2, 1 / 3)])
    schema, version, cols, rows = read_table(p)
    assert (schema, version, cols) == ("demo", 1, ["a", "b"])
    assert float(rows[1][1]) == 1 / 3
    assert not list(tmp_path.glob(".*.tmp"))


# ---------------------------------------------------------------- commands


def run_cli(*args):
    return main([str(a) for a in args])


def test_run_writes_outputs(tmp_path, tiny_cfg):
    out = tmp_path / "out"
    assert run_cli("run", "--config", tiny_cfg, "--seed", 7, "--out", out) == 0
    names = {p.name for p in out.iterdir()}
    assert {"cube_rl.csv", "cube_omni.csv", "pd_summary.csv", "reward_curve.csv", "q_table.csv",
            "manifest.json", "scenario.toml"} <= names
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 7
    assert manifest["digest"] == digest(parse_config(tiny_cfg))
    schema, _, cols, rows = read_table(out / "cube_rl.csv")
    assert schema == "detection_cube" and cols == ["step", "l", "i", "freq"]
    assert len(rows) == 4 * 400


def test_run_is_byte_identical(tmp_path, tiny_cfg):
    a, b = tmp_path / "a", tmp_path / "b"
    run_cli("run", "--config", tiny_cfg, "--seed", 7, "--out", a)
    run_cli("run", "--config", tiny_cfg, "--seed", 7, "--out", b, "--threads", 2)
    for p in a.iterdir():
        if p.name != "manifest.json":
            assert p.read_bytes() == (b / p.name).read_bytes(), p.name


def test_runs_override(tmp_path, tiny_cfg):
    out = tmp_path / "o"
    assert run_cli("run", "--config", tiny_cfg, "--out", out, "--runs", 1) == 0
    _, _, _, rows = read_table(out / "cube_rl.csv")
    assert {r[3] for r in rows} <= {"0", "1"}


def test_sweep_n_rows(tmp_path, tiny_cfg):
    out = tmp_path / "s"
    assert run_cli("sweep-n", "--config", tiny_cfg, "--out", out, "--sides", "2,3") == 0
    schema, _, cols, rows = read_table(out / "pd_vs_n_target0.csv")
    assert schema == "pd_curve" and cols == ["x", "pd_rl", "pd_omni"]
    assert [r[0] for r in rows] == ["16", "81"]


def test_sweep_snr(tmp_path, tiny_cfg):
    out = tmp_path / "s"
    assert run_cli("sweep-snr", "--config", tiny_cfg, "--out", out, "--snrs=-10,-5", "--target", 1) == 0
    _, _, _, rows = read_table(out / "pd_vs_snr_target1.csv")
    assert [float(r[0]) for r in rows] == [-10.0, -5.0]


def test_psd_command(tmp_path, tiny_cfg, capsys):
    out = tmp_path / "p"
    assert run_cli("psd", "--config", tiny_cfg, "--out", out, "--resolution", 11) == 0
    _, _, cols, rows = read_table(out / "psd.csv")
    assert cols == ["nu_x", "nu_y", "psd_db"] and len(rows) == 121
    assert len(read_table(out / "targets.csv")[3]) == 4
    assert "unstable" in capsys.readouterr().err


def test_calibrate_command(tmp_path, tiny_cfg):
    out = tmp_path / "c"
    assert run_cli("calibrate", "--config", tiny_cfg, "--out", out, "--trials", 800, "--p-fa", 0.05) == 0
    rep = json.loads((out / "calibrate.json").read_text())
    assert rep["trials"] == 800 and rep["p_fa"] == 0.05
    assert rep["ci95"][0] <= rep["rate"] <= rep["ci95"][1]


def test_usage_errors_exit_one(tmp_path, capsys):
    assert run_cli("run") == 1
    assert run_cli("frobnicate", "--out", tmp_path) == 1
    assert run_cli("run", "--out", tmp_path, "--runs", 0) == 1
    err = capsys.readouterr().err.strip().splitlines()[-1]
    assert json.loads(err)["error"] == "usage"


def test_bad_config_exit_one(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("[array]\nfoo = 1\n")
    assert run_cli("run", "--config", cfg, "--out", tmp_path / "o") == 1
    msg = json.loads(capsys.readouterr().err.strip())
    assert msg["key"] == "foo" and msg["line"] == 2


def test_unwritable_output_exit_two(tmp_path, tiny_cfg):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert run_cli("psd", "--config", tiny_cfg, "--out", blocker / "sub") == 2


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-m", "cogradar", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip()


def test_bundled_config_ships():
    assert Path(bundled_config()).is_file()


def test_second_target_error_points_at_its_line():
    text = "[[targets]]\nnu_x = 0.0\nnu_y = 0.0\nsnr_db = 0.0\n\n[[targets]]\nnu_x = 0.33\nnu_y = 0.0\nsnr_db = 0.0\n"
    with pytest.raises(ConfigError) as info:
        parse_config_text(text)
    assert info.value.line == 7
