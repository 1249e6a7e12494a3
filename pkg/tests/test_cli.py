from unittest.mock import patch

import pandas as pd
import pytest
from click.testing import CliRunner

from mirrorflow.errors import NumericalAbort
from mirrorflow.experiment import ExperimentConfig
from mirrorflow.scripts.cli import cli


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def experiment_file(tmp_path):
    filepath = tmp_path / "small.yaml"
    ExperimentConfig(
        problem={"kind": "quadratic", "center": [0.5, 0.5]},
        noise={"kind": "constant", "sigma": 0.1},
        integrator={"dt": 0.01, "horizon": 1.0, "log_stride": 10},
        ensemble={"paths": 2},
    ).save(filepath)
    return str(filepath)


def _write_experiment(tmp_path, **sections) -> str:
    filepath = tmp_path / "experiment.yaml"
    ExperimentConfig(**sections).save(filepath)
    return str(filepath)


class TestSimulateCommand:
    def test_successful_run_exits_with_zero(self, runner, experiment_file, tmp_path):
        out = tmp_path / "results"
        result = runner.invoke(cli, ["simulate", experiment_file, "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert (out / "summary.csv").is_file()
        assert "summary.csv" in result.output

    def test_seed_override_is_echoed(self, runner, experiment_file, tmp_path):
        out = tmp_path / "results"
        args = ["simulate", experiment_file, "--out", str(out), "--seed", "99"]
        assert runner.invoke(cli, args).exit_code == 0
        assert "seed: 99" in (out / "config.echo").read_text()

    def test_missing_file_exits_with_two(self, runner, tmp_path):
        result = runner.invoke(cli, ["simulate", str(tmp_path / "missing.yaml")])
        assert result.exit_code == 2
        assert "does not exist" in result.output

    def test_invalid_experiment_names_the_field(self, runner, tmp_path):
        filepath = _write_experiment(
            tmp_path,
            integrator={"dt": 2.0, "horizon": 1.0},
            output={"directory": str(tmp_path / "results")},
        )
        result = runner.invoke(cli, ["simulate", filepath])
        assert result.exit_code == 2
        assert "integrator.dt" in result.output

    def test_numerical_abort_exits_with_three(self, runner, experiment_file, tmp_path):
        with patch(
            "mirrorflow.scripts.simulate.run_experiment",
            side_effect=NumericalAbort(5, 0.05),
        ):
            result = runner.invoke(
                cli, ["simulate", experiment_file, "--out", str(tmp_path)]
            )
        assert result.exit_code == 3
        assert "step 5" in result.output

    def test_traffic_demo_needs_a_traffic_problem(self, runner, experiment_file, tmp_path):  # fmt: skip
        result = runner.invoke(
            cli, ["traffic-demo", experiment_file, "--out", str(tmp_path)]
        )
        assert result.exit_code == 2
        assert "problem.kind" in result.output


class TestAcceptanceCommand:
    @pytest.fixture
    def report(self):
        return pd.DataFrame(
            {
                "suite": ["ou-variance", "ou-variance"],
                "check": ["ou-variance", "ou-mean"],
                "measured": [0.5, 0.2],
                "target": [0.5, 0.0],
                "condition": ["within 0.05", "within 0.01"],
                "passed": [True, False],
            }
        )

    def test_unknown_suite_exits_with_two(self, runner):
        result = runner.invoke(cli, ["acceptance", "no-such-suite"])
        assert result.exit_code == 2

    def test_failed_check_exits_with_one(self, runner, report, tmp_path):
        with patch("mirrorflow.scripts.acceptance.run_acceptance", return_value=report):
            result = runner.invoke(cli, ["acceptance", "ou-variance", "--out", str(tmp_path)])  # fmt: skip
        assert result.exit_code == 1
        assert "ou-mean" in result.output

    def test_passed_checks_exit_with_zero(self, runner, report, tmp_path):
        report["passed"] = True
        with patch(
            "mirrorflow.scripts.acceptance.run_acceptance", return_value=report
        ) as run_acceptance:
            result = runner.invoke(
                cli, ["acceptance", "ou-variance", "--out", str(tmp_path), "--seed", "5"]  # fmt: skip
            )
        assert result.exit_code == 0
        run_acceptance.assert_called_once_with(
            "ou-variance", str(tmp_path), seed=5, threads=1, xlsx=False
        )

    def test_numerical_abort_exits_with_three(self, runner, tmp_path):
        with patch(
            "mirrorflow.scripts.acceptance.run_acceptance",
            side_effect=NumericalAbort(1, 0.1),
        ):
            result = runner.invoke(cli, ["acceptance", "--out", str(tmp_path)])
        assert result.exit_code == 3


class TestValidateCommand:
    def test_valid_experiment(self, runner, experiment_file):
        result = runner.invoke(cli, ["validate", experiment_file])
        assert result.exit_code == 0
        assert "can be simulated" in result.output

    def test_unsupported_pairing_is_reported(self, runner, tmp_path):
        filepath = _write_experiment(tmp_path, regularizer={"kind": "von_neumann"})
        result = runner.invoke(cli, ["validate", filepath])
        assert "Errors detected" in result.output
        assert "regularizer.kind" in result.output

    def test_components_are_built_after_the_content_checks(self, runner, tmp_path):
        filepath = _write_experiment(tmp_path, schedule={"kind": "optimized"})
        result = runner.invoke(cli, ["validate", filepath])
        assert "Errors detected" in result.output
        assert "schedule.kind" in result.output

    def test_missing_network_file_is_reported(self, runner, tmp_path):
        filepath = _write_experiment(
            tmp_path, problem={"kind": "traffic", "network": str(tmp_path / "no.txt")}
        )
        result = runner.invoke(cli, ["validate", filepath])
        assert result.exit_code == 0
        assert "Errors detected" in result.output
        assert "problem" in result.output

    def test_missing_experiment_exits_with_two(self, runner, tmp_path):
        result = runner.invoke(cli, ["validate", str(tmp_path / "missing.yaml")])
        assert result.exit_code == 2

    def test_type_errors_stop_the_validation(self, runner, tmp_path):
        filepath = tmp_path / "experiment.yaml"
        filepath.write_text("integrator:\n  dt: fast\n")
        result = runner.invoke(cli, ["validate", str(filepath)])
        assert "Type errors detected" in result.output

    def test_broken_yaml_file(self, runner, tmp_path):
        filepath = tmp_path / "experiment.yaml"
        filepath.write_text('"not closed')
        result = runner.invoke(cli, ["validate", str(filepath)])
        assert "Error loading YAML file" in result.output


class TestAppdirCommand:
    def test_setup_copies_the_default_experiments(self, runner, tmp_path):
        data_dir = tmp_path / "appdata"
        with patch("mirrorflow.appdir.locate_appdir", return_value=str(data_dir)):
            result = runner.invoke(cli, ["appdir", "--setup", "--experiments"])
        assert result.exit_code == 0
        assert (data_dir / "ou_process.yaml").is_file()
        assert "ou_process.yaml" in result.output

    def test_missing_appdir_is_reported(self, runner, tmp_path):
        data_dir = tmp_path / "appdata"
        with patch("mirrorflow.appdir.locate_appdir", return_value=str(data_dir)):
            result = runner.invoke(cli, ["appdir"])
        assert result.exit_code == 0
        assert "not found" in result.output
