import json

import pytest
from click.testing import CliRunner

from fairprice.cli import main

GENERATOR = {
    "n": 400,
    "numeric": [
        {"name": "Age", "loc": 45.0, "scale": 12.0, "coefficient": 0.8},
        {"name": "Bonus", "distribution": "uniform", "loc": 0.0, "scale": 1.0, "coefficient": 20.0},
    ],
    "categorical": [
        {"name": "Region", "levels": ["East", "North", "South"], "effects": {"North": 8.0, "South": -4.0}},
    ],
    "intercept": 60.0,
    "tau": 5.0,
    "noise_scale": 5.0,
}


def write_config(tmp_path, **overrides):
    doc = {
        "output_dir": str(tmp_path / "run"),
        "seed": 5,
        "generator": GENERATOR,
        "scm": {"donor_k": 10, "forest_trees": 20},
        "metrics": {"forest_trees": 10, "lipschitz_cap": 500, "histogram_bins": 16},
        "nsga": {"population": 4, "generations": 1},
        "ensemble": {"objective_subsample": 200, "donor_k": 10, "report_models": ["MB"]},
    }
    doc.update(overrides)
    path = tmp_path / "run.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def invoke(config, *args):
    runner = CliRunner(mix_stderr=False)
    return runner.invoke(main, ["--config", str(config), "--log-level", "WARNING", *args])


def error_of(result):
    return json.loads(result.stderr.strip().splitlines()[-1])


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    tmp_path = tmp_path_factory.mktemp("cli")
    config = write_config(tmp_path)
    for command in ("synth", "train", "evaluate", "analytics"):
        result = invoke(config, command)
        assert result.exit_code == 0, result.stderr
    return config, tmp_path / "run"


def test_pipeline_artifacts(trained):
    _, run = trained
    for name in ("config.json", "data.csv", "data.csv.json", "models/MB.json", "models/MSCM.json",
                 "reports.json", "evaluation.csv", "scatter_dir_gap.csv", "ite_MU.csv", "ite_hist_MU.csv",
                 "solidarity_MU_Gender.csv", "double_lift_MU_vs_MO.csv", "manifest.json"):
        assert (run / name).exists(), name
    reports = json.loads((run / "reports.json").read_text())["reports"]
    assert {r["split"] for r in reports} == {"train", "test"}
    assert len(reports) == 2 * 6


def test_train_reports_models(tmp_path):
    config = write_config(tmp_path, models=["MB", "MU"])
    result = invoke(config, "train")
    assert result.exit_code == 0, result.stderr
    assert json.loads(result.stdout) == {"engine": "glm", "models": ["MB", "MU"]}


def test_report_is_idempotent(trained):
    config, run = trained
    assert invoke(config, "report").exit_code == 0
    first = (run / "summary.json").read_bytes()
    assert invoke(config, "report").exit_code == 0
    assert (run / "summary.json").read_bytes() == first
    summary = json.loads(first)
    assert "reports.json" in summary["artifacts"]
    assert (run / "summary.md").read_text().startswith("# Run summary")


def test_report_detects_tampering(tmp_path):
    config = write_config(tmp_path)
    assert invoke(config, "synth").exit_code == 0
    (tmp_path / "run" / "data.csv").write_text("Gender\nF\n", encoding="utf-8")
    result = invoke(config, "report")
    assert result.exit_code == 1
    assert error_of(result)["error"] == "ArtifactError"


def test_invalid_config_exits_with_error(tmp_path):
    config = write_config(tmp_path, nsga={"population": 3})
    result = invoke(config, "train")
    assert result.exit_code == 1
    assert error_of(result)["error"] == "ValidationError"


def test_evaluate_before_train(tmp_path):
    config = write_config(tmp_path)
    result = invoke(config, "evaluate")
    assert result.exit_code == 1
    error = error_of(result)
    assert error["error"] == "ArtifactError"
    assert "train" in error["message"]


def test_synth_needs_generator(tmp_path):
    config = write_config(tmp_path, generator=None, dataset="data.csv", schema_file="schema.json")
    result = invoke(config, "synth")
    assert result.exit_code == 1
    assert error_of(result)["error"] == "DomainError"


def test_bad_thread_cap(tmp_path):
    config = write_config(tmp_path)
    result = CliRunner(mix_stderr=False).invoke(main, ["--config", str(config), "--threads", "0", "synth"])
    assert result.exit_code == 1


def test_ensemble_command(tmp_path):
    config = write_config(tmp_path)
    assert invoke(config, "synth").exit_code == 0
    result = invoke(config, "ensemble")
    assert result.exit_code == 0, result.stderr
    out = json.loads(result.stdout)
    assert out["evaluations"] == 4 * 2
    run = tmp_path / "run"
    for name in ("pareto.csv", "pareto.json", "selected.json", "ensemble_model.json", "report.csv", "radar.csv", "hypervolume.csv"):
        assert (run / name).exists(), name
    selected = json.loads((run / "selected.json").read_text())
    assert set(selected["objectives"]) == {"rmse", "dir_gap", "lipschitz_q95", "median_ite_gap"}


def test_ensemble_rerun_is_byte_identical(tmp_path):
    config = write_config(tmp_path)
    assert invoke(config, "synth").exit_code == 0
    run = tmp_path / "run"
    outputs = []
    for _ in range(2):
        result = invoke(config, "ensemble")
        assert result.exit_code == 0, result.stderr
        outputs.append({name: (run / name).read_bytes() for name in ("pareto.csv", "selected.json")})
    assert outputs[0] == outputs[1]
