import json
import os
import subprocess

import pytest

import aggdiff


def test_version_and_presets():
    assert aggdiff.__version__
    names = aggdiff.presets()
    assert "fig-scalar1" in names and "heat-smooth" in names
    assert "alpha" in aggdiff.preset_text("fig-scalar2")


def test_analyze_kernel():
    r = aggdiff.analyze_kernel(0.4, 1.0, mass=1.0, D=0.25)
    assert r["l1_norm"] == pytest.approx(0.4)
    assert r["c"] == pytest.approx(0.05)
    assert r["small_mass"] is True


def test_detailed_balance():
    assert aggdiff.detailed_balance([[20, -10], [-10, 2]])["pi"] == [1.0, 1.0]
    w = aggdiff.detailed_balance([[20, -10], [5, 20]])
    assert w["balanced"] is False
    assert w["witness"] == [1, 2]


def test_simulate_conserves_mass():
    r = aggdiff.simulate("heat-smooth", ["time.t_end=0.05"])
    assert not r["aborted"]
    dx = r["x"][1] - r["x"][0]
    first, last = r["snapshots"][0], r["snapshots"][-1]
    assert last["t"] == pytest.approx(0.05)
    assert sum(last["u"][0]) * dx == pytest.approx(sum(first["u"][0]) * dx, rel=1e-12)
    assert min(last["u"][0]) >= 0.0


def test_bad_override_raises():
    with pytest.raises(ValueError):
        aggdiff.simulate("heat-smooth", ["time.bogus=1"])


def test_run_writes_report(tmp_path):
    r = aggdiff.run("heat-indicator", str(tmp_path), ["time.t_end=0.01"])
    assert r["exit_code"] == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["status"] == "completed"
    assert (tmp_path / "diagnostics.csv").exists()


@pytest.mark.skipif("AGGDIFF_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_check_balance():
    cli = os.environ["AGGDIFF_CLI"]
    ok = subprocess.run([cli, "check-balance", "--matrix", "[[20,-10],[-10,2]]"], capture_output=True)
    assert ok.returncode == 0
    bad = subprocess.run([cli, "check-balance", "--matrix", "[[20,-10],[5,20]]"], capture_output=True)
    assert bad.returncode == 1
