import json
import os

import numpy as np
import pytest

from cli import main

RIGID = {"polynomial": {"n": 2, "dim": 2, "degree": 1, "terms": [
    {"alpha": [0, 0], "coeffs": [0.5, -1.0]},
    {"alpha": [0, 1], "coeffs": [-1.0, 0.0]},
    {"alpha": [1, 0], "coeffs": [0.0, 1.0]},
]}}


def _report(path):
    with open(path) as f:
        return json.load(f)


def _synth(tmp_path, name, kind, h, lower=(-1, -1), upper=(1, 1), params=None, measure=False):
    grid = str(tmp_path / f"{name}.grid")
    argv = ["synth", "--kind", kind, "--lower", *map(str, lower), "--upper", *map(str, upper),
            "--h", str(h), "--out", grid, "--report", str(tmp_path / f"{name}.report.json")]
    if params is not None:
        argv += ["--params", json.dumps(params)]
    if measure:
        argv += ["--measure-out", str(tmp_path / f"{name}.measure.json")]
    assert main(argv) == 0
    return grid


def test_classify_laplacian(tmp_path):
    out = str(tmp_path / "classify.json")
    code = main(["classify", "--operator", "zoo:laplacian_scalar", "--n", "2",
                 "--dmax", "6", "--restarts", "8", "--out", out])
    assert code == 0
    payload = _report(out)
    report = payload["report"]
    assert report["c_elliptic_verdict"] == "not_c_elliptic"
    cert = report["certificate"]
    assert cert["residual"] <= 1e-7
    xi = np.array(cert["xi_real"]) + 1j * np.array(cert["xi_imag"])
    assert np.allclose(np.abs(xi), 1 / np.sqrt(2), atol=1e-4)
    assert payload["provenance"]["tool"] == "celliptic"
    assert payload["provenance"]["seed"] == 0
    assert payload["provenance"]["config"]["subcommand"] == "classify"


def test_nullspace_symmetric_gradient(tmp_path):
    out = str(tmp_path / "nullspace.json")
    assert main(["nullspace", "--operator", "zoo:symmetric_gradient", "--n", "2", "--dmax", "6", "--out", out]) == 0
    report = _report(out)["report"]
    assert report["dims_by_degree"] == [2, 3, 3, 3, 3, 3, 3]
    assert report["degree"] == 1
    assert len(report["basis"]) == 3


def test_reports_are_deterministic(tmp_path):
    out = str(tmp_path / "classify.json")
    argv = ["classify", "--operator", "zoo:tracefree_symmetric_gradient", "--n", "2",
            "--dmax", "6", "--restarts", "8", "--seed", "7", "--out", out]
    assert main(argv) == 0
    with open(out, "rb") as f:
        first = f.read()
    assert main(argv) == 0
    with open(out, "rb") as f:
        assert f.read() == first


def test_operator_file(tmp_path):
    path = tmp_path / "op.json"
    path.write_text(json.dumps({"n": 2, "k": 1, "dim_v": 1, "dim_w": 2, "terms": [
        {"alpha": [1, 0], "matrix": [[1.0], [0.0]]},
        {"alpha": [0, 1], "matrix": [[0.0], [1.0]]},
    ]}))
    out = str(tmp_path / "nullspace.json")
    assert main(["nullspace", "--operator", str(path), "--dmax", "4", "--out", out]) == 0
    assert _report(out)["report"]["dims_by_degree"] == [1, 1, 1, 1, 1]


def test_synth_halfdisk_mass_fraction(tmp_path):
    _synth(tmp_path, "halfdisk", "indicator_halfdisk", 1 / 128, (-2, -2), (2, 2))
    report = _report(tmp_path / "halfdisk.report.json")["report"]
    assert report["shape"] == [513, 513]
    assert report["mean"][0] == pytest.approx(np.pi / 2 / 16, rel=0.02)
    assert os.path.exists(tmp_path / "halfdisk.json")


def test_riesz_of_unit_disk(tmp_path):
    _synth(tmp_path, "disk", "indicator_disk", 1 / 256, measure=True)
    out = str(tmp_path / "riesz.json")
    assert main(["riesz", "--measure", str(tmp_path / "disk.measure.json"), "--s", "1",
                 "--x0", "0", "0", "--out", out]) == 0
    report = _report(out)["report"]
    assert not report["infinite"]
    assert report["value"] == pytest.approx(2 * np.pi, rel=0.02)


def test_maximal_of_dirac(tmp_path):
    measure = tmp_path / "dirac.json"
    measure.write_text(json.dumps({"atoms": [{"x": [0.0, 0.0], "w": [1.0]}]}))
    out = str(tmp_path / "maximal.json")
    assert main(["maximal", "--measure", str(measure), "--k", "1", "--x0", "1", "0",
                 "--radii", "2", "1", "0.5", "--out", out]) == 0
    assert _report(out)["report"]["value"] == pytest.approx(1.0)


def test_project_rigid_motion(tmp_path):
    grid = _synth(tmp_path, "rigid", "polynomial", 1 / 32, params=RIGID)
    out = str(tmp_path / "project.json")
    assert main(["project", "--operator", "zoo:symmetric_gradient", "--grid", grid,
                 "--center", "0.1", "0", "--radius", "0.5", "--lambda", "0.25", "--out", out]) == 0
    report = _report(out)["report"]
    assert report["region"]["kind"] == "annulus"
    terms = {tuple(t["alpha"]): t["coeffs"] for t in report["projection"]["terms"]}
    assert np.allclose(terms[(0, 1)], [-1.0, 0.0], atol=1e-8)
    assert np.allclose(terms[(0, 0)], [0.5, -1.0], atol=1e-8)
    assert report["l1_stability_ratio"] == pytest.approx(1.0, abs=1e-8)
    assert report["poincare_lhs"] == pytest.approx(0.0, abs=1e-9)


def test_project_requires_stabilized_nullspace(tmp_path):
    grid = _synth(tmp_path, "rigid", "polynomial", 1 / 32, params=RIGID)
    out = str(tmp_path / "project.json")
    code = main(["project", "--operator", "zoo:tracefree_symmetric_gradient", "--grid", grid,
                 "--center", "0", "0", "--radius", "0.5", "--out", out])
    assert code == 2
    assert _report(out)["error"]["exit_code"] == 2


def test_profile_and_scan(tmp_path):
    grids = [_synth(tmp_path, f"smooth{i}", "smooth", h) for i, h in enumerate((1 / 16, 1 / 32, 1 / 64))]
    out = str(tmp_path / "profile.json")
    assert main(["profile", "--operator", "zoo:gradient", "--grid", grids[-1],
                 "--x0", "0", "0", "--r", "0.5", "--jmax", "2", "--out", out]) == 0
    assert _report(out)["report"]["levels"] == [0, 1, 2]
    out = str(tmp_path / "scan.json")
    csv_path = str(tmp_path / "scan.csv")
    assert main(["lebesgue-scan", "--operator", "zoo:gradient", "--grids", *grids,
                 "--x0", "0", "0", "--x0", "0.2", "-0.1", "--r", "0.5", "--jmax", "2",
                 "--radius-factors", "1", "0.5", "--csv", csv_path, "--out", out]) == 0
    verdicts = _report(out)["report"]
    assert [v["predicted"] for v in verdicts] == ["lebesgue", "lebesgue"]
    assert set(verdicts[0]["radius_slopes"]) == {"0.5", "0.25"}
    with open(csv_path) as f:
        assert len(f.read().strip().splitlines()) == 3


def test_continuity_and_linfty(tmp_path):
    grid = _synth(tmp_path, "cone", "cone_abs", 1 / 32)
    out = str(tmp_path / "continuity.json")
    assert main(["continuity-check", "--operator", "zoo:hessian", "--grid", grid, "--r", "0.5", "--out", out]) == 0
    report = _report(out)["report"]
    assert report["derivative_order"] == 0
    assert report["monotone"]
    out = str(tmp_path / "linfty.json")
    assert main(["linfty-check", "--operator", "zoo:hessian", "--grid", grid,
                 "--center", "0", "0", "--radius", "0.5", "--out", out]) == 0
    assert _report(out)["report"]["lhs"] == pytest.approx(0.5)


def test_parse_errors_exit_1(tmp_path, capsys):
    assert main(["classify", "--operator", "zoo:nope", "--n", "2"]) == 1
    payload = json.loads(capsys.readouterr().out)
    assert payload["error"]["type"] == "InputParseError"
    assert main(["riesz", "--measure", str(tmp_path / "missing.json"), "--s", "1", "--x0", "0", "0"]) == 1
    assert main(["classify"]) == 1
    # the measure file may not replace the grid's own sidecar
    assert main(["synth", "--kind", "smooth", "--lower", "-1", "-1", "--upper", "1", "1", "--h", "0.125",
                 "--out", str(tmp_path / "u.grid"), "--measure-out", str(tmp_path / "u.json")]) == 1
    assert not os.path.exists(tmp_path / "u.grid")


def test_invariant_errors_exit_2(tmp_path):
    out = str(tmp_path / "nullspace.json")
    assert main(["nullspace", "--operator", "zoo:hessian", "--dmax", "2", "--out", out]) == 2
    assert _report(out)["error"]["type"] == "InputInvariantError"


def test_numerical_errors_exit_3(tmp_path):
    grid = _synth(tmp_path, "coarse", "smooth", 1 / 16)
    out = str(tmp_path / "profile.json")
    assert main(["profile", "--operator", "zoo:gradient", "--grid", grid,
                 "--x0", "0", "0", "--r", "0.1", "--out", out]) == 3
    assert _report(out)["error"]["type"] == "GridTooSmallError"
