import csv
import json
import math
import subprocess
import sys

import pytest

from qmfs_readout.cli import main, parse_grid
from qmfs_readout.readout import snr_heisenberg_optimum

SMALL = {
    "fig3a": ["--grid", "1,5"],
    "fig3b": ["--grid", "1,100"],
    "fig3c": ["--grid", "2"],
    "fig4a": ["--grid", "0,0.1"],
    "fig4b": ["--grid", "0.3,0.45"],
    "stats": ["--grid", "1,10"],
    "heisenberg": ["--N", "4"],
    "trajectories": ["--n-traj", "50", "--seed", "9"],
}


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


@pytest.mark.parametrize("command", sorted(SMALL))
def test_subcommands_write_csv_and_manifest(tmp_path, command):
    assert main([command, "--out", str(tmp_path)] + SMALL[command]) == 0
    rows = read_csv(tmp_path / f"{command}.csv")
    assert len(rows) >= 2
    assert all(float(x) or True for x in rows[1] if x not in ("ground", "excited"))
    manifest = json.loads((tmp_path / f"{command}.json").read_text())
    assert manifest["columns"] == rows[0]
    assert {"numpy", "scipy", "python"} <= set(manifest["versions"])
    assert manifest["wall_time_s"] >= 0
    assert manifest["seed"] == (9 if command == "trajectories" else 0)


def test_stats_columns(tmp_path):
    main(["stats", "--out", str(tmp_path), "--grid", "2"])
    header = read_csv(tmp_path / "stats.csv")[0]
    assert header[:4] == ["kappa_tau", "snr_coherent", "snr_single_opt", "snr_qmfs"]


def test_units_in_headers(tmp_path):
    main(["fig3b", "--out", str(tmp_path), "--grid", "10"])
    header = read_csv(tmp_path / "fig3b.csv")[0]
    assert header[1].startswith("kappa_tau_")
    main(["fig4b", "--out", str(tmp_path), "--grid", "0.3"])
    assert read_csv(tmp_path / "fig4b.csv")[0] == ["E_C_GHz", "chi_1_GHz", "chi_2_GHz"]


def test_heisenberg_matches_closed_form(tmp_path):
    main(["heisenberg", "--N", "8", "--out", str(tmp_path)])
    header, row = read_csv(tmp_path / "heisenberg.csv")
    vals = dict(zip(header, map(float, row)))
    n_s, snr = snr_heisenberg_optimum(8.0, math.pi / 2)
    assert abs(vals["N_s_opt_grid"] - n_s) <= vals["grid_step"]
    assert vals["N_s_opt_closed_form"] == n_s
    assert vals["snr_grid"] == pytest.approx(snr, rel=0.05)


def test_byte_identical_reruns(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        main(["trajectories", "--n-traj", "40", "--seed", "5", "--out", str(out)])
        main(["fig3a", "--grid", "0.5:3:4", "--out", str(out)])
    for name in ("trajectories.csv", "fig3a.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_floats_round_trip(tmp_path):
    main(["stats", "--out", str(tmp_path), "--grid", "3"])
    text = (tmp_path / "stats.csv").read_text().splitlines()[1].split(",")
    assert all(repr(float(x)) == x for x in text)


def test_missing_config_exits_2_without_output(tmp_path):
    out = tmp_path / "out"
    assert main(["stats", "--config", str(tmp_path / "nope.json"), "--out", str(out)]) == 2
    assert not out.exists()


def test_invalid_config_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"protocol": "coherent", "loss": {"eta": 1.5}}))
    assert main(["stats", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "loss.eta" in capsys.readouterr().err


def test_unreachable_exits_3(tmp_path):
    cfg = tmp_path / "weak.json"
    cfg.write_text(json.dumps({"protocol": "coherent", "nbar0": 1e-9, "tau_kappa": 1}))
    out = tmp_path / "o"
    assert main(["optimize", "--config", str(cfg), "--out", str(out)]) == 3
    assert not out.exists()


def test_optimize_with_config(tmp_path):
    cfg = tmp_path / "sm.json"
    cfg.write_text(json.dumps({"protocol": "single_mode_squeezed",
                               "source": {"e2r": 10, "theta": 1.5707963267948966},
                               "nbar0": 1.0, "tau_kappa": 10}))
    assert main(["optimize", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    header, row = read_csv(tmp_path / "optimize.csv")
    vals = dict(zip(header, map(float, row)))
    assert vals["target_fidelity"] == 0.9999
    assert 1.0 <= vals["e2r_single_opt"] <= 10.0 + 1e-9
    manifest = json.loads((tmp_path / "optimize.json").read_text())
    assert manifest["config"]["protocol"] == "single_mode_squeezed"


def test_bad_grid_exits_2(tmp_path):
    assert main(["fig3a", "--grid", "1:2", "--out", str(tmp_path)]) == 2


def test_parse_grid():
    assert list(parse_grid("1:3:3", [])) == [1.0, 2.0, 3.0]
    assert list(parse_grid("log:1:100:3", [])) == pytest.approx([1.0, 10.0, 100.0])
    assert list(parse_grid("0.5,2", [])) == [0.5, 2.0]
    assert list(parse_grid(None, [4.0])) == [4.0]


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "qmfs_readout", "heisenberg", "--N", "2",
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert (tmp_path / "heisenberg.csv").exists()
