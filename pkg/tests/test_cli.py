import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from rieszgas.cli import main
from rieszgas.el_verify import ELReport
from rieszgas.halfspace import ScanReport
from rieszgas.potentials import PotentialSpec, evaluate
from rieszgas.sequences import CoefficientSequence, RadialDensity, density_power_potential_closed, RieszParams


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], np.array(rows[1:], dtype=float)


def test_identity_command(capsys):
    code, out, _ = _run(capsys, "identity", "--d", "2", "--s", "1", "--kmax", "10")
    assert code == 0
    header, data = _csv(out)
    assert header == ["k", "residual"]
    assert data[:, 0].tolist() == list(range(11))
    assert np.max(np.abs(data[:, 1])) <= 1e-9


def test_halfspace_line_threshold(capsys):
    code, out, _ = _run(capsys, "halfspace", "--d", "1")
    assert code == 0
    rep = json.loads(out)
    assert rep["a_cri"] == pytest.approx(1.41421356237, rel=1e-11)
    assert rep["C"] == pytest.approx(2 + math.log(2) / 2, rel=1e-14)


def test_density_power_potential_curve(capsys):
    code, out, _ = _run(capsys, "density", "--family", "power-potential", "--d", "2", "--s", "1", "--p", "3", "--grid", "200")
    assert code == 0
    header, data = _csv(out)
    assert header == ["r", "density", "radial_density", "cdf"]
    assert data.shape == (200, 4)
    ref = density_power_potential_closed(3, RieszParams(2, 1.0), data[:, 0])
    assert data[:, 1] == pytest.approx(ref, rel=1e-15)
    assert np.all(np.diff(data[:, 3]) >= 0)


def test_csv_uses_seventeen_digits(capsys):
    _, out, _ = _run(capsys, "density", "--family", "power-measure", "--alpha", "0.5", "--grid", "3")
    first = out.splitlines()[2].split(",")
    assert float(first[1]) == float("%.17g" % float(first[1]))
    assert len(first[1].replace(".", "").lstrip("0")) >= 15


def test_verify_valid_pair_exit_zero(capsys):
    code, out, _ = _run(capsys, "verify", "--case", "pure-power", "--d", "2", "--s", "1", "--p", "2")
    assert code == 0
    rep = json.loads(out)
    assert rep["status"] == "PASS"
    back = ELReport.from_dict(rep)
    assert back.passed(rep["tol"])


def test_verify_even_polynomial_exit_two(capsys):
    code, out, _ = _run(capsys, "verify", "--case", "power-measure", "--alpha", "1.5", "--d", "2", "--s", "1")
    assert code == 2
    rep = json.loads(out)
    assert rep["status"] == "FAIL"
    assert rep["min_margin"] < 0


def test_verify_hard_wall_report_round_trip(capsys):
    code, out, _ = _run(capsys, "verify", "--case", "soft-edge", "--m", "0", "--d", "3", "--s", "1.5", "--hard-wall")
    assert code == 0
    rep = json.loads(out)
    assert rep["min_margin"] is None
    back = ELReport.from_dict(rep)
    assert back.min_margin == math.inf and not back.outside_checked


@pytest.mark.parametrize(
    "argv",
    [
        ("bogus",),
        ("identity", "--d", "2", "--s", "5"),
        ("density", "--family", "explicit"),
        ("identity", "--d", "notanint"),
        ("potential", "--case", "nope"),
    ],
)
def test_errors_exit_one_with_json(capsys, argv):
    code, out, err = _run(capsys, *argv)
    assert code == 1
    obj = json.loads(err.strip().splitlines()[-1])
    assert set(obj) == {"error", "message"}


def test_energy_command(capsys):
    code, out, _ = _run(capsys, "energy", "--case", "pure-power", "--d", "2", "--s", "1", "--p", "1")
    assert code == 0
    rep = json.loads(out)
    assert rep["closed_form"] == pytest.approx(math.pi * 0.9, rel=1e-14)
    assert rep["discrepancy"] <= 1e-8


def test_potential_round_trip(capsys):
    code, out, _ = _run(capsys, "potential", "--case", "soft-edge", "--m", "1", "--d", "2", "--s", "1", "--format", "json", "--grid", "10")
    assert code == 0
    rep = json.loads(out)
    spec = PotentialSpec.from_dict(rep["potential"])
    r = np.array([row[0] for row in rep["rows"]])
    V = np.array([row[1] for row in rep["rows"]])
    assert evaluate(spec, r) == pytest.approx(V, rel=1e-15)


def test_potential_hard_wall_is_null_in_json(capsys):
    code, out, _ = _run(capsys, "potential", "--case", "pure-power", "--hard-wall", "--format", "json", "--grid", "4")
    rep = json.loads(out)
    V = [row[1] for row in rep["rows"]]
    assert V[-1] is None and V[0] == 0.0


def test_density_round_trip(capsys):
    code, out, _ = _run(capsys, "density", "--family", "explicit", "--coeffs", "2,-2", "--format", "json", "--grid", "5")
    assert code == 0
    rep = json.loads(out)
    seq = CoefficientSequence.from_dict(rep["sequence"])
    assert seq.coeffs.tolist() == [2.0, -2.0]
    assert rep["nonnegative"] is True


def test_halfspace_scan_round_trip(capsys):
    code, out, _ = _run(capsys, "halfspace", "--d", "3", "--scan", "--nt", "5", "--nx", "6")
    assert code == 0
    rep = json.loads(out)
    back = ScanReport.from_dict(rep)
    assert back.d == 3 and len(back.t_grid) == 5 and len(back.x_grid) == 6
    assert back.min_margin >= -1e-6


def test_halfspace_profile_curves(capsys):
    code, out, _ = _run(capsys, "halfspace", "--d", "3", "--format", "csv", "--grid", "20", "--t-values", "0,0.5")
    assert code == 0
    header, data = _csv(out)
    assert header[0] == "x" and len(header) == 3
    assert data[0, 1:] == pytest.approx([0.0, 0.0], abs=1e-14)
    assert np.min(data[:, 1:]) >= -1e-8


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"d": 3, "s": 1.5, "kmax": 3}))
    code, out, _ = _run(capsys, "identity", "--config", str(cfg))
    assert code == 0
    _, data = _csv(out)
    assert data.shape[0] == 4
    code, out, _ = _run(capsys, "identity", "--config", str(cfg), "--kmax", "5")
    _, data = _csv(out)
    assert data.shape[0] == 6


def test_config_file_must_be_object(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text("[1, 2]")
    code, _, err = _run(capsys, "identity", "--config", str(cfg))
    assert code == 1


def test_output_file_and_determinism(tmp_path, capsys):
    outs = []
    for k in range(2):
        path = tmp_path / f"sim{k}.json"
        argv = ["simulate", "--d", "2", "--s", "1", "--N", "30", "--seed", "4", "--max-iters", "200",
                "--anneal-betas", "50,500", "--steps-per-beta", "5", "--out", str(path)]
        assert main(argv) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    rep = json.loads(outs[0])
    assert rep["N"] == 30 and rep["seed"] == 4
    path = tmp_path / "sim.csv"
    assert main(["simulate", "--N", "10", "--format", "csv", "--out", str(path), "--max-iters", "50"]) == 0
    lines = path.read_text().splitlines()
    assert lines[0] == "x0,x1" and len(lines) == 11


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "rieszgas", "halfspace", "--d", "0"], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["a_cri"] == pytest.approx(1.0, rel=1e-15)
