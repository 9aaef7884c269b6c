import csv
import json
import math

import numpy as np
import pytest

from riccilab.cli import main

SPHERE_CFG = """
[model]
kind = product_of_space_forms
factors = sphere 3 1.0

[flow]
t_end = 0.2
record_every = 0.000390625

[output]
seed = 0
"""

HEIS_CFG = """
[model]
kind = lie_group_quotient
dim = 3
covolume = 1.0
brackets = 1 2 3 1.0

[flow]
t_end = 0.2
record_every = 0.00625
"""

PROD_CFG = """
[model]
kind = product_of_space_forms
factors = sphere 3 1.0 ; circle 1 0.5

[flow]
t_end = 0.05
record_every = 0.00078125

[sweep]
parameter = factor_radius:1
values = 0.5 0.25 0.125 0.0625 0.03125 0.015625 0.0078125 0.00390625
"""


@pytest.fixture
def cfgfile(tmp_path):
    def write(text, name="run.cfg"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return write


def test_flow_writes_mandated_columns(cfgfile, tmp_path):
    out = tmp_path / "runs"
    rc = main(["flow", "--config", cfgfile(SPHERE_CFG), "--out", str(out)])
    assert rc == 0
    header = (out / "trajectory.csv").read_text().splitlines()[0].split(",")
    assert header == ["t", "g_0_0", "g_0_1", "g_0_2", "g_1_1", "g_1_2", "g_2_2",
                      "vol", "rm_norm", "scalar_R", "rm_n2_norm", "J", "theta",
                      "chi", "ric_min", "ric_max"]
    sidecar = json.loads((out / "run.json").read_text())
    assert sidecar["meta"]["termination"] == "horizon-reached"
    assert "integrator" in sidecar["meta"]
    assert sidecar["primitives"]["c_n"] == 1.0


def test_flow_gamma_override_doubles_horizon(cfgfile, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    cfg = cfgfile(SPHERE_CFG)
    assert main(["flow", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["flow", "--config", cfg, "--out", str(out2),
                 "--override", "flow.gamma=2"]) == 0
    t1 = json.loads((out1 / "run.json").read_text())["meta"]["T0"]
    t2 = json.loads((out2 / "run.json").read_text())["meta"]["T0"]
    assert math.isclose(t2, 2.0 * t1, rel_tol=1e-12)


def test_flow_missing_model_block(cfgfile, tmp_path, capsys):
    rc = main(["flow", "--config", cfgfile("[flow]\nt_end = 0.1\n"),
               "--out", str(tmp_path)])
    assert rc == 2
    assert "[model]" in capsys.readouterr().err


def test_unknown_key_is_line_precise(cfgfile, tmp_path, capsys):
    bad = "[model]\nkind = product_of_space_forms\nfactors = sphere 3 1.0\nboom = 1\n"
    rc = main(["flow", "--config", cfgfile(bad), "--out", str(tmp_path)])
    assert rc == 2
    err = capsys.readouterr().err
    assert ":4:" in err and "boom" in err


def test_flow_blowup_exits_zero(cfgfile, tmp_path):
    out = tmp_path / "blow"
    rc = main(["flow", "--config", cfgfile(SPHERE_CFG), "--out", str(out),
               "--override", "flow.t_end=0.3"])
    assert rc == 0
    meta = json.loads((out / "run.json").read_text())["meta"]
    assert meta["termination"] == "curvature-blowup"


def test_check_full_suite_on_torus(cfgfile, tmp_path):
    torus = """
[model]
kind = lie_group_quotient
dim = 3
covolume = 1.0

[flow]
t_end = 0.5
record_every = 0.015625
"""
    out = tmp_path / "torus"
    cfg = cfgfile(torus)
    assert main(["flow", "--config", cfg, "--out", str(out)]) == 0
    rc = main(["check", "--config", cfg, "--out", str(out),
               "--trajectory", str(out / "trajectory.csv")])
    assert rc == 0
    reports = json.loads((out / "report.json").read_text())
    statuses = {r["name"]: r["status"] for r in reports}
    assert statuses["volume_identity"] == "pass"
    assert statuses["holder"] == "pass"
    assert "fail" not in statuses.values()


def test_check_filter_single_check(cfgfile, tmp_path):
    out = tmp_path / "s3"
    cfg = cfgfile(SPHERE_CFG)
    assert main(["flow", "--config", cfg, "--out", str(out)]) == 0
    rc = main(["check", "--config", cfg, "--out", str(out),
               "--trajectory", str(out / "trajectory.csv"),
               "--checks", "volume_identity"])
    assert rc == 0
    reports = json.loads((out / "report.json").read_text())
    assert len(reports) == 1
    assert reports[0]["name"] == "volume_identity"
    assert reports[0]["status"] == "pass"


def test_check_corrupted_csv_exit_3(cfgfile, tmp_path, capsys):
    out = tmp_path / "s3"
    cfg = cfgfile(SPHERE_CFG)
    assert main(["flow", "--config", cfg, "--out", str(out)]) == 0
    lines = (out / "trajectory.csv").read_text().splitlines()
    lines[2], lines[3] = lines[3], lines[2]
    bad = tmp_path / "corrupt.csv"
    bad.write_text("\n".join(lines) + "\n")
    rc = main(["check", "--config", cfg, "--out", str(out),
               "--trajectory", str(bad)])
    assert rc == 3


def test_constants_defaults_n4(cfgfile, tmp_path, capsys):
    cfg = cfgfile("[constants]\nn = 4\n")
    rc = main(["constants", "--config", cfg, "--out", str(tmp_path)])
    assert rc == 0
    payload = json.loads((tmp_path / "constants.json").read_text())
    assert payload["moser"]["mu"] == 1.5
    assert payload["moser"]["q0"] == 4.0
    assert payload["moser"]["limits"]["sum_inv_q_next"] == "1/2"
    assert payload["moser"]["limits"]["sum_inv_q"] == "3/4"
    assert payload["chain"]["c_n_gamma"] > 0


def test_constants_includes_root_for_n3(cfgfile, tmp_path):
    cfg = cfgfile("[constants]\nn = 3\n")
    assert main(["constants", "--config", cfg, "--out", str(tmp_path)]) == 0
    payload = json.loads((tmp_path / "constants.json").read_text())
    assert 0.03 < payload["chain"]["c_n_gamma"] < 0.05


def test_constants_missing_block(cfgfile, tmp_path, capsys):
    rc = main(["constants", "--config", cfgfile("[flow]\ngamma = 1.0\n"),
               "--out", str(tmp_path)])
    assert rc == 2
    assert "[constants]" in capsys.readouterr().err


def test_constants_rejects_nonpositive_primitive(cfgfile, tmp_path):
    rc = main(["constants", "--config", cfgfile("[constants]\nn = 3\nc_n = -1\n"),
               "--out", str(tmp_path)])
    assert rc == 2


def test_sweep_product_scaling_slope(cfgfile, tmp_path):
    out = tmp_path / "sweep"
    rc = main(["sweep", "--config", cfgfile(PROD_CFG), "--out", str(out)])
    assert rc == 0
    rows = list(csv.DictReader(open(out / "sweep.csv")))
    assert len(rows) == 8
    eps = np.array([float(r["value"]) for r in rows])
    rm = np.array([float(r["rm_n2_norm"]) for r in rows])
    slope = np.polyfit(np.log(eps), np.log(rm), 1)[0]
    assert abs(slope - 0.5) < 1e-6


def test_sweep_single_point(cfgfile, tmp_path):
    out = tmp_path / "one"
    rc = main(["sweep", "--config", cfgfile(PROD_CFG), "--out", str(out),
               "--values", "0.25"])
    assert rc == 0
    rows = list(csv.DictReader(open(out / "sweep.csv")))
    assert len(rows) == 1


def test_sweep_empty_grid(cfgfile, tmp_path):
    cfg = cfgfile(SPHERE_CFG)
    rc = main(["sweep", "--config", cfg, "--out", str(tmp_path)])
    assert rc == 2


def test_sweep_heisenberg_margin_monotone(cfgfile, tmp_path):
    out = tmp_path / "heis"
    rc = main(["sweep", "--config", cfgfile(HEIS_CFG), "--out", str(out),
               "--param", "bracket_scale",
               "--values", "1.0,0.5,0.25,0.125"])
    assert rc == 0
    rows = list(csv.DictReader(open(out / "sweep.csv")))
    margins = [float(r["margin_pinching_main"]) for r in rows]
    assert margins == sorted(margins)    # shrinking bracket raises the margin


def test_outputs_byte_identical_across_runs(cfgfile, tmp_path):
    cfg = cfgfile(SPHERE_CFG)
    outs = []
    for name in ("r1", "r2"):
        out = tmp_path / name
        assert main(["flow", "--config", cfg, "--out", str(out)]) == 0
        assert main(["check", "--config", cfg, "--out", str(out),
                     "--trajectory", str(out / "trajectory.csv")]) == 0
        outs.append(out)
    assert (outs[0] / "trajectory.csv").read_bytes() \
        == (outs[1] / "trajectory.csv").read_bytes()
    assert (outs[0] / "report.json").read_bytes() \
        == (outs[1] / "report.json").read_bytes()


def test_roundtrip_preserves_derived_to_full_precision(cfgfile, tmp_path):
    from riccilab import build_model, read_trajectory_csv
    out = tmp_path / "rt"
    cfg = cfgfile(HEIS_CFG)
    assert main(["flow", "--config", cfg, "--out", str(out)]) == 0
    model = build_model({"kind": "lie_group_quotient", "dim": 3,
                         "covolume": 1.0, "brackets": [[1, 2, 3, 1.0]]})
    traj = read_trajectory_csv(model, out / "trajectory.csv")
    text = (out / "trajectory.csv").read_text().splitlines()
    first = text[1].split(",")
    assert float(first[7]) == traj.derived["vol"][0]
    from riccilab.flow import validate_trajectory
    assert validate_trajectory(traj) <= 1e-10


def test_json_format_emits_extra_artifacts(cfgfile, tmp_path):
    out = tmp_path / "fmt"
    rc = main(["flow", "--config", cfgfile(SPHERE_CFG), "--out", str(out),
               "--format", "json"])
    assert rc == 0
    rows = json.loads((out / "trajectory.json").read_text())
    assert rows[0]["t"] == 0.0
    assert (out / "trajectory.csv").exists()


ALMOST_FLAT_CFG = """
# weak bracket at unit covolume: unit volume, smallness hypothesis holds
[model]
kind = lie_group_quotient
dim = 3
covolume = 1.0
brackets = 1 2 3 0.04

[flow]
t_end = 1.0
record_every = 0.001953125
"""


def test_check_factor_two_bound_through_cli(cfgfile, tmp_path):
    out = tmp_path / "af"
    cfg = cfgfile(ALMOST_FLAT_CFG)
    assert main(["flow", "--config", cfg, "--out", str(out)]) == 0
    rc = main(["check", "--config", cfg, "--out", str(out),
               "--trajectory", str(out / "trajectory.csv"),
               "--checks", "n2_bound,c0_bound,volume_identity,scalar_identity"])
    assert rc == 0
    reports = {r["name"]: r for r in
               json.loads((out / "report.json").read_text())}
    assert reports["n2_bound"]["status"] == "pass"
    assert reports["n2_bound"]["details"]["margin"] > 0.0
    assert reports["volume_identity"]["status"] == "pass"
    assert reports["scalar_identity"]["status"] == "pass"


def test_stride_keeps_grid_uniform(cfgfile, tmp_path):
    out = tmp_path / "strided"
    rc = main(["flow", "--config", cfgfile(SPHERE_CFG), "--out", str(out),
               "--override", "output.stride=4"])
    assert rc == 0
    lines = (out / "trajectory.csv").read_text().splitlines()
    times = np.array([float(l.split(",")[0]) for l in lines[1:]])
    dts = np.diff(times)
    assert np.abs(dts - dts[0]).max() < 1e-12 * dts[0]


def test_env_var_default_outdir(cfgfile, tmp_path, monkeypatch):
    monkeypatch.setenv("RICCILAB_OUTDIR", str(tmp_path / "envout"))
    rc = main(["flow", "--config", cfgfile(SPHERE_CFG)])
    assert rc == 0
    assert (tmp_path / "envout" / "trajectory.csv").exists()
