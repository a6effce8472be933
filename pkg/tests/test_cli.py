import json

import numpy as np
import pandas as pd
import pytest

from conftest import write_scenario
from toda_verifier import cli
from toda_verifier.cli import main, run_scenario
from toda_verifier.errors import ConfigError
from toda_verifier.scenario import ScenarioLoader, load_config

GRID = {"r_min": 0.2, "r_max": 0.6, "n_r": 3, "n_theta": 6, "fd_step": 0.001}


def liouville_payload(**overrides):
    payload = {"n": 1, "gamma": [0.0], "g": [[[1.0, 0.0]], [[1.0, 0.0]]], "truncation_order": 24, "grid": GRID}
    payload.update(overrides)
    return payload


def bryant_payload(**overrides):
    return liouville_payload(gamma=[1.0], **overrides)


@pytest.fixture
def scenario_file(tmp_path):
    def write(payload, name="scenario.json"):
        return write_scenario(tmp_path / name, payload)

    return write


def test_load_config(scenario_file):
    config = load_config(scenario_file(liouville_payload(tasks=["pde", "pde", "energy"])))
    assert config.n == 1
    assert config.tasks == ["pde", "energy"]
    assert config.grid.n_r == 3


def test_load_config_reports_illegal_weight(scenario_file):
    with pytest.raises(ConfigError, match="IllegalWeight"):
        load_config(scenario_file(liouville_payload(gamma=[-1.0])))


def test_load_config_reports_arity(scenario_file):
    with pytest.raises(ConfigError, match="ArityMismatch"):
        load_config(scenario_file(liouville_payload(gamma=[0.0, 0.0])))


def test_load_config_reports_low_order(scenario_file):
    with pytest.raises(ConfigError, match="InsufficientOrder"):
        load_config(scenario_file(liouville_payload(truncation_order=3)))


def test_load_config_reports_unknown_fields(scenario_file):
    with pytest.raises(ConfigError, match="colour"):
        load_config(scenario_file(liouville_payload(colour="blue")))
    with pytest.raises(ConfigError, match="unknown tolerance"):
        load_config(scenario_file(liouville_payload(tolerances={"pdee": 1.0})))


def test_load_config_reports_parse_position(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "n": 1,,\n}', encoding="utf-8")
    with pytest.raises(ConfigError, match="line 2, column"):
        load_config(path)


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.json")


def test_liouville_scenario_passes():
    config = ScenarioLoader.from_payload(liouville_payload(tasks=["pde", "plucker", "energy", "branch", "normalize"]))
    report = run_scenario(config)
    assert [check.name for check in report.checks] == ["pde", "plucker", "energy", "branch", "normalize"]
    assert report.passed, report.summary_rows()
    assert report.seed["applied_root"] == [1.0, 0.0]
    assert report.seed_fingerprint == ScenarioLoader.seed_fingerprint(config)
    assert len(report.seed_fingerprint) == 64


def test_bryant_scenario_passes():
    config = ScenarioLoader.from_payload(bryant_payload(tasks=["chart", "cone-angle", "fuchsian"]))
    report = run_scenario(config, threads=3)
    assert report.passed, report.summary_rows()
    fuchsian = report.checks[2].parameters
    assert fuchsian["indicial_roots"] == pytest.approx([-0.5, 1.5])
    assert fuchsian["pole_orders"] == [2]


def test_check_writes_report_and_grid(scenario_file, tmp_path):
    grid = {**GRID, "n_r": 2, "n_theta": 2}
    path = scenario_file(liouville_payload(tasks=["metric-grid"], grid=grid))
    out = tmp_path / "out"
    assert main(["check", "--config", str(path), "--out", str(out)]) == 0

    frame = pd.read_csv(out / "metric_grid.csv")
    assert list(frame.columns) == ["x", "y", "u_1", "density_1"]
    assert len(frame) == 4
    expected = 1 / (1 + frame["x"] ** 2 + frame["y"] ** 2) ** 2
    np.testing.assert_allclose(frame["density_1"], expected, rtol=1e-13)

    report = json.loads((out / "report.json").read_text())
    assert report["checks"][0]["parameters"]["rows"] == 4


def test_empty_task_list_exits_cleanly(scenario_file, tmp_path):
    out = tmp_path / "out"
    assert main(["check", "--config", str(scenario_file(liouville_payload())), "--out", str(out)]) == 0
    assert json.loads((out / "report.json").read_text())["checks"] == []


def test_failed_check_exits_with_one(scenario_file, tmp_path):
    path = scenario_file(liouville_payload(tasks=["pde"]))
    args = ["check", "--config", str(path), "--out", str(tmp_path / "out"), "--tolerance", "pde=1e-30"]
    assert main(args) == 1


def test_reports_are_deterministic(scenario_file, tmp_path):
    path = scenario_file(liouville_payload(tasks=["normalize", "pde", "energy", "fuchsian"]))
    reports = []
    for name in ("first", "second"):
        out = tmp_path / name
        assert main(["check", "--config", str(path), "--out", str(out), "--threads", "2"]) == 0
        report = json.loads((out / "report.json").read_text())
        report.pop("timings")
        reports.append(report)
    assert reports[0] == reports[1]


def test_tolerance_override_is_echoed(scenario_file, tmp_path):
    path = scenario_file(liouville_payload(tasks=["normalize"]))
    out = tmp_path / "out"
    assert main(["check", "--config", str(path), "--out", str(out), "--tolerance", "pde=0.001"]) == 0
    config = json.loads((out / "report.json").read_text())["config"]
    assert config["tolerances"] == {"pde": 0.001}
    assert load_config(write_scenario(tmp_path / "echo.json", config)).tolerances == {"pde": 0.001}


def test_degenerate_seed_is_fatal(scenario_file, tmp_path, capsys):
    path = scenario_file(liouville_payload(g=[[[0.0, 0.0], [1.0, 0.0]], [[1.0, 0.0]]], tasks=["pde"]))
    assert main(["check", "--config", str(path), "--out", str(tmp_path / "out")]) == 2
    assert "DegenerateSeed" in capsys.readouterr().err


def test_unwritable_output_is_fatal(scenario_file, tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory")
    path = scenario_file(liouville_payload(tasks=["normalize"]))
    assert main(["check", "--config", str(path), "--out", str(blocker)]) == 2


def test_invalid_config_is_fatal(scenario_file, tmp_path):
    path = scenario_file(liouville_payload(gamma=[-2.0]))
    assert main(["check", "--config", str(path), "--out", str(tmp_path)]) == 2


def test_normalize_command(scenario_file, tmp_path):
    path = scenario_file(liouville_payload(g=[[[2.0, 0.0]], [[1.0, 0.0]]]))
    out = tmp_path / "out"
    assert main(["normalize", "--config", str(path), "--out", str(out)]) == 0

    normalized = load_config(out / "normalized_seed.json")
    assert normalized.g[0][0] == pytest.approx((np.sqrt(2.0), 0.0))
    assert normalized.g[1][0] == pytest.approx((1 / np.sqrt(2.0), 0.0))


def test_fuchsian_command(scenario_file, tmp_path):
    out = tmp_path / "out"
    assert main(["fuchsian", "--config", str(scenario_file(bryant_payload())), "--out", str(out)]) == 0
    operator = json.loads((out / "fuchsian_operator.json").read_text())
    assert operator["indicial_roots"] == pytest.approx([-0.5, 1.5])
    assert operator["coefficients"][0]["pole_order"] == 2
    assert operator["coefficients"][0]["taylor"][0] == pytest.approx([-0.75, 0.0])


def test_grid_command(scenario_file, tmp_path):
    out = tmp_path / "out"
    assert main(["grid", "--config", str(scenario_file(bryant_payload())), "--out", str(out)]) == 0
    assert len(pd.read_csv(out / "metric_grid.csv")) == 18


def test_grid_is_fitted_inside_a_small_validity_radius():
    # G_1 = 1 + 2z vanishes at z = -1/2, so the normalized series are only trusted well inside that
    config = ScenarioLoader.from_payload(liouville_payload(g=[[[1.0, 0.0]], [[1.0, 0.0], [1.0, 0.0]]], tasks=["branch"]))
    report = run_scenario(config)
    radius = report.seed["validity_radius"]
    assert radius < 0.5

    branch = report.checks[0]
    assert branch.status == "pass", branch.message
    assert branch.parameters["grid_capped"] is True
    assert branch.parameters["requested_grid"]["r_max"] == 0.6
    assert branch.parameters["r_max"] + 2 * branch.parameters["fd_step"] <= radius


def test_unexpected_exceptions_become_error_entries(monkeypatch):
    def broken(*args, **kwargs):
        raise KeyError("per_index")

    monkeypatch.setattr(cli, "cone_angles", broken)
    config = ScenarioLoader.from_payload(liouville_payload(tasks=["cone-angle", "normalize"]))
    report = run_scenario(config)
    assert [check.status for check in report.checks] == ["error", "pass"]
    assert report.checks[0].message.startswith("KeyError")
    assert report.exit_code == 1
