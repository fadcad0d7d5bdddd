import json
from pathlib import Path

import pytest
import yaml

from ckytool import cli
from ckytool import config as cfgmod

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def _run(tmp_path, *args, name="out"):
    out = tmp_path / name
    code = cli.main([*args, "--out", str(out), "--quiet"])
    return code, out


def _report(out, command):
    return json.loads((out / f"report-{command}.json").read_text())


def _write(tmp_path, data):
    p = tmp_path / "cfg.yaml"
    p.write_text(yaml.safe_dump(data))
    return str(p)


def test_check_cky_minkowski(tmp_path):
    code, out = _run(tmp_path, "check-cky", "--spacetime", "minkowski", "--points", "20")
    assert code == 0
    rep = _report(out, "check-cky")
    cky = [it for it in rep["items"] if it["name"].startswith("cky[minkowski]") and "negative" not in it["name"]]
    assert len(cky) >= 20
    assert all(it["pass"] for it in rep["items"])
    assert set(rep) == {"version", "command", "config", "items"}
    assert set(rep["items"][0]) >= {"name", "anchor", "lhs", "rhs", "residual", "tol", "pass", "seconds"}


def test_check_cky_single_entry(tmp_path):
    cfg = _write(tmp_path, {"spacetime": "ads", "form": {"name": "dy1^dy4"}, "points": 10})
    code, out = _run(tmp_path, "check-cky", "--config", cfg)
    assert code == 0
    assert [it["name"] for it in _report(out, "check-cky")["items"]] == ["cky[ads] dy1^dy4", "xi[ads] dy1^dy4"]


def test_invalid_spacetime_is_config_error(tmp_path):
    code, out = _run(tmp_path, "check-cky", "--spacetime", "kerr")
    assert code == cli.EXIT_CONFIG
    assert not out.exists()


@pytest.mark.parametrize(
    "data",
    [
        {"bogus": 1},
        {"surface": {"kind": "cap", "radius": 0.5, "wobble": 2}},
        {"surface": {"kind": "torus"}},
        {"flow": {"phi_mode": "nope"}},
        {"flow": {"speed": 2}},
        {"form": {"name": "not-a-form"}},
        {"suites": ["minkowski_formula", "telepathy"]},
        {"order": 1},
        {"spacetime": "ads", "surface": {"kind": "cap", "l": 0.5}},
    ],
)
def test_config_rejections(tmp_path, data):
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.from_mapping(data)
    code, _ = _run(tmp_path, "verify", "--config", _write(tmp_path, data))
    assert code == cli.EXIT_CONFIG


def test_unreadable_config(tmp_path):
    code, _ = _run(tmp_path, "verify", "--config", str(tmp_path / "missing.yaml"))
    assert code == cli.EXIT_CONFIG
    bad = tmp_path / "bad.yaml"
    bad.write_text("surface: [unclosed")
    code, _ = _run(tmp_path, "verify", "--config", str(bad))
    assert code == cli.EXIT_CONFIG


def test_verify_cap_scenario(tmp_path):
    code, out = _run(tmp_path, "verify", "--config", str(SCENARIOS / "cap.yaml"), "--order", "12")
    assert code == 0
    items = {it["name"].split(" [")[0]: it for it in _report(out, "verify")["items"]}
    assert abs(items["heintz_karcher"]["residual"]) < 1e-10
    assert "observed order" in items["minkowski_formula"]["note"] or items["minkowski_formula"]["residual"] == 0


def test_verify_ellipsoid_expected_fail(tmp_path):
    code, out = _run(tmp_path, "verify", "--config", str(SCENARIOS / "ellipsoid.yaml"), "--order", "12")
    assert code == 0
    items = {it["name"].split(" [")[0]: it for it in _report(out, "verify")["items"]}
    assert items["cmc_mean_curvature"]["expected_fail"] and items["cmc_mean_curvature"]["pass"]
    assert items["minkowski_formula"]["pass"] and not items["minkowski_formula"]["expected_fail"]


def test_verify_reports_genuine_failures(tmp_path):
    data = yaml.safe_load((SCENARIOS / "ellipsoid.yaml").read_text())
    data["expect_fail"] = []
    code, _ = _run(tmp_path, "verify", "--config", _write(tmp_path, data), "--order", "10")
    assert code == cli.EXIT_FAIL


def test_flow_geometry_error(tmp_path):
    code, out = _run(tmp_path, "flow", "--config", str(SCENARIOS / "flow_inward_sphere.yaml"))
    assert code == cli.EXIT_GEOMETRY
    rep = _report(out, "flow")
    assert rep["flow"]["status"] == "geometry_error"
    assert (out / "flow_trace.csv").exists()


def test_flow_short_run(tmp_path):
    data = {"surface": {"kind": "cap", "radius": 0.75, "null_shift": 0.2}, "flow": {"ds": 0.05, "expect_constant": True}, "order": 12}
    code, out = _run(tmp_path, "flow", "--config", _write(tmp_path, data))
    assert code == 0
    rep = _report(out, "flow")
    assert rep["flow"] == {"message": "", "status": "reached_slice", "steps": 4}
    lines = (out / "flow_trace.csv").read_text().splitlines()
    assert lines[0] == "s,F_value,max_x0,shear,boundary_residual"
    assert len(lines) == 6


def test_hk_command(tmp_path):
    code, out = _run(tmp_path, "hk", "--config", str(SCENARIOS / "ads_cap.yaml"), "--order", "12")
    assert code == 0
    names = [it["name"] for it in _report(out, "hk")["items"]]
    assert any(n.startswith("prefactor_experiment") for n in names)


def test_hk_needs_slice_surface(tmp_path):
    data = {"surface": {"kind": "sphere", "time_wiggle": 0.2}, "order": 8}
    code, _ = _run(tmp_path, "hk", "--config", _write(tmp_path, data))
    assert code == cli.EXIT_CONFIG


def test_mesh_dump(tmp_path):
    code, out = _run(tmp_path, "mesh-dump", "--config", str(SCENARIOS / "cap.yaml"), "--order", "4")
    assert code == 0
    assert len((out / "mesh.csv").read_text().splitlines()) == 4 * 8 + 1


def test_timings_flag(tmp_path):
    out = tmp_path / "t"
    assert cli.main(["check-div", "--points", "10", "--out", str(out), "--quiet", "--timings"]) == 0
    assert all(isinstance(it["seconds"], float) for it in _report(out, "check-div")["items"])
    code, out2 = _run(tmp_path, "check-div", "--points", "10", name="u")
    assert all(it["seconds"] is None for it in _report(out2, "check-div")["items"])


def test_reports_are_byte_identical(tmp_path):
    args = ["verify", "--config", str(SCENARIOS / "ds_perturbed_cap.yaml"), "--order", "10", "--seed", "7"]
    _, a = _run(tmp_path, *args, name="a")
    _, b = _run(tmp_path, *args, "--workers", "3", name="b")
    assert (a / "report-verify.json").read_bytes() == (b / "report-verify.json").read_bytes()
