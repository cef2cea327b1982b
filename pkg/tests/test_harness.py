import json

import numpy as np
import pytest

from densitylab import cli, harness


def _write_cfg(path, text):
    path.write_text(text)
    return str(path)


BASIC_CFG = """\
# small plane run
surface = plane
target_h = 0.2
levels = 2
grading = graded
base = 0.0, 0.0
r_min = 0.5
r_factor = 2.0
r_count = 4
checks = profile, residual, identity, sandwich
out_dir = {out}
"""


def test_parse_config_defaults_and_overrides(tmp_path):
    cfg = harness.parse_config(None, overrides=["surface=catenoid",
                                                "eps_list=0.1,0.9"])
    assert cfg.surface == "catenoid"
    assert cfg.eps_list == (0.1, 0.9)
    assert cfg.levels == 1


def test_parse_config_file(tmp_path):
    path = _write_cfg(tmp_path / "a.cfg",
                      BASIC_CFG.format(out=tmp_path / "out"))
    cfg = harness.parse_config(path)
    assert cfg.surface == "plane"
    assert cfg.levels == 2
    assert cfg.checks == ("profile", "residual", "identity", "sandwich")


def test_parse_config_rejects_unknown_keys(tmp_path):
    path = _write_cfg(tmp_path / "bad.cfg", "nonsense = 1\n")
    with pytest.raises(ValueError):
        harness.parse_config(path)
    with pytest.raises(ValueError):
        harness.parse_config(None, overrides=["checks=bogus"])


def test_env_var_overrides_out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("DENSITYLAB_OUT", str(tmp_path / "envout"))
    cfg = harness.parse_config(None)
    assert cfg.out_dir.endswith("envout")


def test_run_plane_all_pass(tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    path = _write_cfg(tmp_path / "a.cfg",
                      BASIC_CFG.format(out=tmp_path / "out"))
    cfg = harness.parse_config(path)
    report = harness.run(cfg)
    assert not report.failed
    assert len(report.levels) == 2
    # every requested check shows up at every level
    for level in range(2):
        checks = {f.check for f in report.findings if f.level == level}
        assert "profile-ordering" in checks
        assert "residual-error-integral-nonnegative" in checks
        assert "laplacian-identity" in checks
        assert "ball-sandwich" in checks
    data = json.loads((tmp_path / "out" / "report.json").read_text())
    assert data["status"] == "PASS"
    assert (tmp_path / "out" / "profile_L0.csv").exists()
    assert (tmp_path / "out" / "residuals.csv").exists()
    assert "residual" in data["orders"]


def test_run_determinism_byte_identical(tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    path = _write_cfg(tmp_path / "a.cfg", BASIC_CFG.format(
        out=tmp_path / "out").replace("levels = 2", "levels = 1"))
    cfg = harness.parse_config(path)
    harness.run(cfg)
    first = (tmp_path / "out" / "report.json").read_bytes()
    first_csv = (tmp_path / "out" / "profile_L0.csv").read_bytes()
    harness.run(cfg)
    assert (tmp_path / "out" / "report.json").read_bytes() == first
    assert (tmp_path / "out" / "profile_L0.csv").read_bytes() == first_csv


def test_sphere_identity_negative_control(tmp_path):
    cfg = harness.parse_config(None, overrides=[
        "surface=sphere", "base=1.5707963267948966,0.0", "target_h=0.3",
        "checks=identity", "disable_curvature_term=true",
        f"out_dir={tmp_path / 'out'}"])
    report = harness.run(cfg)
    assert report.failed
    bad = [f for f in report.findings if f.check == "laplacian-identity"]
    assert bad and bad[0].status == "FAIL"
    assert bad[0].values["max_defect"] >= 1.0


def test_list_surfaces_contents_and_order():
    text = harness.list_surfaces()
    for label in ("plane", "catenoid", "helicoid", "enneper", "sphere"):
        assert label in text
    assert "analytic-only" in text
    assert text == harness.list_surfaces()  # deterministic
    lines = text.splitlines()
    labels = [ln.split()[0] for ln in lines]
    assert labels == sorted(labels, key=lambda s: (s in ("plane-cone",
                                                         "simons-cone"), s))


def test_convergence_study_mesh_area():
    cfg = harness.parse_config(None, overrides=[
        "surface=catenoid", "base=0.0,0.0", "target_h=0.4", "levels=3",
        "grading=uniform"])
    table = harness.convergence_study(cfg, "mesh-area")
    orders = [r["order"] for r in table["rows"] if r["order"] is not None]
    assert orders and min(orders) >= 1.8
    assert abs(table["extrapolated"] - 98.3001741967) <= 1e-4


def test_convergence_study_plane_density_extrapolates_pi():
    cfg = harness.parse_config(None, overrides=[
        "surface=plane", "base=0.0,0.0", "target_h=0.2", "levels=3",
        "density_r=1.0"])
    table = harness.convergence_study(cfg, "intrinsic-density")
    assert abs(table["extrapolated"] - np.pi) <= 1e-4


def test_convergence_study_rejects_unknown_quantity():
    cfg = harness.parse_config(None)
    with pytest.raises(ValueError):
        harness.convergence_study(cfg, "entropy")
    cfg2 = harness.parse_config(None, overrides=["surface=catenoid",
                                                 "base=0.0,0.0"])
    with pytest.raises(ValueError):
        harness.convergence_study(cfg2, "geodesic-error")


# --- CLI ------------------------------------------------------------------

def test_cli_list_surfaces(capsys):
    assert cli.main(["list-surfaces"]) == 0
    out = capsys.readouterr().out
    assert "catenoid" in out and "simons-cone" in out


def test_cli_run_exit_codes(tmp_path, capsys):
    rc = cli.main(["run", "--set", "surface=plane", "--set", "target_h=0.4",
                   "--set", "checks=profile", "--set", "r_min=1.0",
                   "--set", f"out_dir={tmp_path / 'ok'}"])
    assert rc == 0
    rc = cli.main(["run", "--set", "surface=sphere",
                   "--set", "base=1.5707963267948966,0.0",
                   "--set", "target_h=0.4", "--set", "checks=identity",
                   "--set", "disable_curvature_term=true",
                   "--set", f"out_dir={tmp_path / 'bad'}"])
    assert rc == 1


def test_cli_export_mesh(tmp_path, capsys):
    path = tmp_path / "m.mesh"
    rc = cli.main(["export-mesh", "plane", "0.5", str(path)])
    assert rc == 0
    assert path.read_text().startswith("# densitylab mesh v1")


def test_cli_converge(tmp_path, capsys):
    rc = cli.main(["converge", "--quantity", "mesh-area",
                   "--set", "surface=plane", "--set", "target_h=0.5",
                   "--set", "levels=2"])
    assert rc == 0
    assert "mesh-area" in capsys.readouterr().out
