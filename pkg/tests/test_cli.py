import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from nnls_ist import __version__
from nnls_ist.cli import main

SMALL = ["--l-x", "15", "--h-x", "0.03125", "--n-k", "512"]
SOLITON = json.dumps({"kind": "one_soliton", "rho11": 0.5, "rho21": -0.25,
                      "gamma11": [0, 1], "gamma21": [np.cos(np.pi / 6), np.sin(np.pi / 6)]})


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_scatter_writes_spectral_data(tmp_path):
    assert main(["scatter", *SMALL, "--out-dir", str(tmp_path)]) == 0
    spec = json.loads((tmp_path / "spectral.json").read_text())
    assert spec["winding"] == 0 and spec["zeros_upper"] == []
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["command"] == "scatter" and "spectral.json" in manifest["files"]
    assert not (tmp_path / "timings.json").exists()


def test_runs_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["scatter", *SMALL, "--out-dir", str(out)]) == 0
    assert (a / "spectral.json").read_bytes() == (b / "spectral.json").read_bytes()


def test_evolve_engines_agree(tmp_path):
    common = ["evolve", *SMALL, "--initial-data", '{"kind": "gaussian", "amplitude": 0.2}',
              "--t-list", "0,0.25", "--dt", "0.001"]
    assert main([*common, "--out-dir", str(tmp_path / "ist"), "--timings"]) == 0
    assert main([*common, "--engine", "pde", "--out-dir", str(tmp_path / "pde")]) == 0
    assert (tmp_path / "ist" / "timings.json").exists()
    ist = read_csv(tmp_path / "ist" / "field.csv")
    pde = read_csv(tmp_path / "pde" / "field.csv")
    assert len(ist) == len(pde)
    diff = max(abs(complex(float(r["re_q"]), float(r["im_q"])) - complex(float(s["re_q"]), float(s["im_q"])))
               for r, s in zip(ist, pde) if abs(float(r["x"])) <= 8)
    assert diff < 1e-4
    cons = read_csv(tmp_path / "ist" / "conserved.csv")
    assert [float(r["t"]) for r in cons] == [0.0, 0.25]
    assert abs(float(cons[0]["I1_re"]) - float(cons[1]["I1_re"])) < 1e-8


def test_evolve_flags_the_soliton_blowup(tmp_path):
    t0 = 8 * np.pi / 9
    args = ["evolve", "--initial-data", SOLITON, "--l-x", "30", "--h-x", "0.0625",
            "--t-list", f"0,{t0!r}", "--spectral-source", "exact", "--out-dir", str(tmp_path)]
    assert main(args) == 0
    rows = read_csv(tmp_path / "field.csv")
    flagged = [(float(r["x"]), float(r["t"])) for r in rows if r["blowup_flag"] == "1"]
    assert flagged == [(0.0, t0)]
    cons = read_csv(tmp_path / "conserved.csv")
    assert float(cons[0]["I1_re"]) == pytest.approx(1.5, abs=1e-6)
    assert cons[1]["I1_re"] == "nan"


def test_blowup_map_command(tmp_path):
    args = ["blowup-map", "--initial-data", SOLITON, "--spectral-source", "exact",
            "--x-range=-1,1", "--t-range=2,3.5", "--resolution=32,48", "--out-dir", str(tmp_path)]
    assert main(args) == 0
    points = read_csv(tmp_path / "blowup_points.csv")
    assert len(points) == 1
    assert abs(float(points[0]["t"]) - 8 * np.pi / 9) < 1e-6
    assert len(read_csv(tmp_path / "blowup_indicator.csv")) == 32 * 48


@pytest.mark.parametrize("norm, code", [(0.532, 0), (0.533, 4)])
def test_check_exit_code_follows_required_condition(tmp_path, norm, code):
    data = json.dumps({"kind": "gaussian", "amplitude": 1.0, "l1_norm": norm})
    args = ["check", *SMALL, "--initial-data", data, "--require", "L1_small", "--out-dir", str(tmp_path)]
    assert main(args) == code
    report = json.loads((tmp_path / "check.json").read_text())
    assert report["conditions"][0]["which"] == "L1_small"
    assert all(v["passed"] for v in report["invariants"].values())


def test_check_without_require_reports_only(tmp_path):
    data = json.dumps({"kind": "gaussian", "amplitude": 1.0, "l1_norm": 0.9})
    assert main(["check", *SMALL, "--initial-data", data, "--out-dir", str(tmp_path)]) == 0


@pytest.mark.parametrize("extra", [
    ["--sigma", "1", "--initial-data", '{"kind": "triangle"}'],
    ["--initial-data", '{"kind": "gaussian", "amplitude": "loud"}'],
    ["--h-x", "-1"],
])
def test_bad_input_exits_with_validation_code(tmp_path, extra, capsys):
    assert main(["scatter", *extra, "--out-dir", str(tmp_path)]) == 2
    assert "validation error" in capsys.readouterr().err


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "nnls_ist", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip() == __version__
