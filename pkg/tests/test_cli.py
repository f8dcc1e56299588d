import json
import subprocess
import sys

import pytest

from heatreach.cli import cli_main, main

SMALL = {"n_points": 51, "n_steps": 250, "n_panels": 32, "n_order": 16, "fubini_points": 0, "pde_probe": 0}


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    (d / "cfg.json").write_text(json.dumps(SMALL))
    (d / "z2.json").write_text(json.dumps({"coefficients": [[0, 0], [0, 0], [1, 0]]}))
    (d / "z3.json").write_text(json.dumps({"coefficients": [[0, 0], [0, 0], [0, 0], [1, 0]]}))
    out = d / "run"
    code = main(["synthesize", "--config", str(d / "cfg.json"), "--target", str(d / "z2.json"), "--out", str(out)])
    assert code == 0
    return d


def _common(work, target="z2.json", sub="run"):
    return ["--config", str(work / "cfg.json"), "--target", str(work / target), "--out", str(work / sub)]


def test_synthesize_outputs(work):
    run = work / "run"
    for name in ("controls.csv", "state.csv", "report.json"):
        assert (run / name).is_file()
    rep = json.loads((run / "report.json").read_text())
    assert rep["schema_version"] == 1 and rep["reach_error"] < 5e-3
    assert (run / "controls.csv").read_text().splitlines()[0] == "t,re_v_minus,im_v_minus,re_v_plus,im_v_plus"


def test_verify_round_trip(work):
    assert main(["verify", *_common(work)]) == 0
    data = json.loads((work / "run" / "verify.json").read_text())
    rep = json.loads((work / "run" / "report.json").read_text())
    assert abs(data["reach_error"] - rep["reach_error"]) <= 1e-12
    assert (work / "run" / "profile.csv").is_file()


def test_verify_tolerance_failure_exits_3(work):
    assert main(["verify", *_common(work), "--tol", "1e-12"]) == 3


def test_verify_rejects_malformed_controls(work):
    bad = work / "bad.csv"
    bad.write_text("t,a\n1,x\n")
    assert main(["verify", *_common(work), "--controls", str(bad)]) == 2


def test_precondition_exit_codes(work, tmp_path):
    assert main(["carleman", "--T", "0.2"]) == 2
    (tmp_path / "bad.json").write_text("{oops")
    assert main(["synthesize", "--config", str(work / "cfg.json"), "--target", str(tmp_path / "bad.json")]) == 2
    assert main(["synthesize", "--config", str(work / "cfg.json")]) == 2
    assert main(["synthesize", "--target", str(tmp_path / "missing.json")]) == 2
    assert main(["one-sided", *_common(work, sub="os_bad")]) == 2
    assert main(["nonsense"]) == 2


def test_carleman_csv(tmp_path):
    assert main(["carleman", "--T", "1.0", "--mode", "1", "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "carleman.csv").read_text().splitlines()
    assert rows[0] == "mode,t,E,D" and len(rows) == 201


def test_contour_csv(tmp_path):
    out = tmp_path / "c.csv"
    assert main(["contour", "--L0", "1.2", "--eps", "0.15", "--out", str(out)]) == 0
    assert out.read_text().splitlines()[0] == "tau,re_z,im_z,arc_id"


def test_decompose_outputs(work):
    assert main(["decompose", *_common(work, sub="dec")]) == 0
    for name in ("h_plus.csv", "h_minus.csv", "h_zero.csv", "decomposition.json"):
        assert (work / "dec" / name).is_file()


def test_one_sided(work):
    assert main(["one-sided", *_common(work, target="z3.json", sub="os")]) == 0
    rep = json.loads((work / "os" / "report.json").read_text())
    assert rep["oddness"] < 1e-10


def test_real_flag(work):
    assert main(["synthesize", *_common(work, sub="real"), "--real"]) == 0
    rows = (work / "real" / "controls.csv").read_text().splitlines()[1:]
    assert all(float(r.split(",")[2]) == 0.0 for r in rows)


def test_spectral_via_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "heatreach.cli", "spectral", "--coeffs", "[1, 0, 0]"],
                         capture_output=True, text=True, check=True)
    data = json.loads(out.stdout)
    assert abs(data["partial_sum"] - 23.140692632779267) < 1e-9 and data["pass"]
    assert main(["spectral", "--coeffs", "[oops"]) == 2


def test_cli_main_alias():
    assert cli_main is main
    assert cli_main(["spectral", "--coeffs", "[0.5]"]) == 0
