"""Config driven experiment runs writing CSV series and summaries.

Output files of `run_experiment`:
- trajectory_<i>.csv: t, x_1..x_n, f, f_avg, f_best, fenchel for the first paths
- summary.csv: statistic, value
- config.echo: the resolved configuration including the derived constants
- report.xlsx: optional workbook with the summary and parameter tables

All reals are written with 17 significant digits, so reading a file back reproduces the
values exactly.
"""

from __future__ import annotations
import logging
import os
import pathlib
from typing import NamedTuple, Optional

import numpy as np
import pandas as pd

from mirrorflow.diagnostics import (
    audit_ensemble,
    deterministic_bound,
    ensemble_summary,
    fenchel_audit,
    occupation_fraction,
    rate_fit,
    rectified_rate_bound,
)
from mirrorflow.dynamics import ConstantSchedule, Trajectory, rectify, run_ensemble
from mirrorflow.errors import ConfigError
from mirrorflow.experiment import Experiment, ExperimentConfig, resolve_experiment
from mirrorflow.experiment.config import dump_yaml
from mirrorflow.report import write_workbook
from mirrorflow.traffic import write_network


FLOAT_FORMAT = "%.17g"
ECHO_FILE = "config.echo"
SUMMARY_FILE = "summary.csv"
TRAFFIC_GAPS_FILE = "traffic_gaps.csv"
NETWORK_FILE = "network.txt"
REPORT_FILE = "report.xlsx"

logger = logging.getLogger(__name__)


class RunResult(NamedTuple):
    directory: str
    files: list[str]
    summary: dict[str, float]


def run_experiment(config: ExperimentConfig) -> RunResult:
    """Resolve and simulate an experiment and write its output files.

    Raises:
        ConfigError: If the configuration cannot be resolved.
        NumericalAbort: If a simulated state becomes nonfinite.
    """
    experiment = resolve_experiment(config)
    directory = _prepare_directory(config)
    logger.info("Running experiment %r, writing to %s", config, directory)

    trajectories = _simulate(experiment)
    files = []
    for traj in trajectories[: config["ensemble"]["write_paths"]]:
        filepath = os.path.join(directory, f"trajectory_{traj.path_index}.csv")
        write_csv(traj.to_frame(), filepath)
        files.append(filepath)

    summary = summarize_experiment(experiment, trajectories)
    files.append(_write_summary(summary, directory))
    files.append(_write_echo(experiment, directory))
    if config["output"]["excel_report"]:
        files.append(_write_report(experiment, summary, directory))
    logger.info("Experiment finished, %d file(s) written", len(files))
    return RunResult(directory, files, summary)


def run_traffic_demo(config: ExperimentConfig) -> RunResult:
    """Compare the configured schedule with a constant sensitivity on a traffic network.

    Both runs share the network and the seed. The gap series of the configured run are
    reported for the last point, the ergodic average and the best point; the companion
    run uses the constant sensitivity eta(0) and reports its last point only.

    Raises:
        ConfigError: If the problem is not a traffic problem.
    """
    if config["problem"]["kind"] != "traffic":
        field = ("problem", "kind")
        raise ConfigError(field, "the traffic demo needs a traffic problem")
    experiment = resolve_experiment(config)
    directory = _prepare_directory(config)
    f_star = experiment.f_star

    trajectories = _simulate(experiment)
    constant_schedule = ConstantSchedule(float(experiment.schedule.value(0.0)))
    companions = _simulate(experiment, constant_schedule)

    times = trajectories[0].times
    averaged = [rectify(traj, "average", experiment.objective) for traj in trajectories]
    gaps = pd.DataFrame(
        {
            "t": times,
            "gap_last": _mean_series(trajectories, "f_values") - f_star,
            "gap_average": _mean_series(averaged, "f_values") - f_star,
            "gap_best": _mean_series(trajectories, "f_best") - f_star,
            "gap_constant": _mean_series(companions, "f_values") - f_star,
        }
    )
    files = [
        os.path.join(directory, TRAFFIC_GAPS_FILE),
        os.path.join(directory, NETWORK_FILE),
    ]
    write_csv(gaps, files[0])
    write_network(experiment.network, files[1])

    window = _fit_window(experiment)
    summary = {
        "paths": float(experiment.paths),
        "path_count": float(len(experiment.path_set)),
        "social_optimum": float(f_star),
    }
    for column in ["gap_average", "gap_last", "gap_constant"]:
        fit = _try_rate_fit(times, gaps[column].to_numpy(), window)
        summary[f"{column}_slope"] = fit[0]
        summary[f"{column}_r_squared"] = fit[1]
    summary["final_gap_average"] = float(gaps["gap_average"].iloc[-1])
    summary["final_gap_constant"] = float(gaps["gap_constant"].iloc[-1])

    files.append(_write_summary(summary, directory))
    files.append(_write_echo(experiment, directory))
    if config["output"]["excel_report"]:
        files.append(_write_report(experiment, summary, directory, gaps))
    return RunResult(directory, files, summary)


def summarize_experiment(
    experiment: Experiment, trajectories: list[Trajectory]
) -> dict[str, float]:
    """Return the ensemble statistics written to the summary file.

    Statistics that need the minimizer are only reported when it is known.
    """
    config = experiment.config
    diagnostics = config["diagnostics"]
    horizon = trajectories[0].horizon
    burn_in = diagnostics["burn_in_fraction"] * horizon

    terminal = np.array([traj.primal[-1] for traj in trajectories])
    terminal_variance = 0.0
    if len(terminal) > 1:
        terminal_variance = float(np.mean(np.var(terminal, axis=0, ddof=1)))
    summary: dict[str, float] = {
        "paths": float(len(trajectories)),
        "horizon": float(horizon),
        "final_f_mean": float(np.mean([traj.f_values[-1] for traj in trajectories])),
        "terminal_variance": terminal_variance,
    }
    for key, value in experiment.derived().items():
        if key != "target" and value is not None:
            summary[key] = value

    target = experiment.target
    if target is None:
        return summary

    region = experiment.region
    statistics = ensemble_summary(
        trajectories,
        target,
        delta=diagnostics["hitting_delta"],
        burn_in=burn_in,
        f_star=experiment.f_star,
        region=region,
    )
    summary.update({key: float(value) for key, value in statistics.as_dict().items()})
    for delta in diagnostics["occupation_deltas"]:
        fractions = [
            occupation_fraction(traj, target, delta, burn_in, region)
            for traj in trajectories
        ]
        summary[f"occupation_{delta:g}"] = float(np.mean(fractions))

    mode = diagnostics["rectification"]
    rectified = [rectify(traj, mode, experiment.objective) for traj in trajectories]
    rectified_gap = _mean_series(rectified, "f_values") - experiment.f_star
    summary[f"rectified_gap_{mode}"] = float(rectified_gap[-1])
    summary["time_average_gap"] = float(
        np.mean([traj.f_mean[-1] for traj in trajectories]) - experiment.f_star
    )
    if experiment.noise_bound > 0:
        bound = rectified_rate_bound(
            experiment.depth,
            experiment.modulus,
            experiment.noise_bound,
            experiment.schedule,
            horizon,
        )
    else:
        bound = deterministic_bound(
            experiment.depth, float(experiment.schedule.value(horizon)), horizon
        )
    summary["rate_bound"] = float(bound)

    if diagnostics["rate_fit_window"] is not None:
        slope, r_squared = _try_rate_fit(
            trajectories[0].times, rectified_gap, tuple(diagnostics["rate_fit_window"])
        )
        summary["rate_slope"] = slope
        summary["rate_r_squared"] = r_squared

    if diagnostics["audit"]:
        reports = [
            fenchel_audit(
                traj,
                experiment.regularizer,
                region,
                target,
                experiment.schedule,
                experiment.noise,
                experiment.objective,
            )
            for traj in trajectories
        ]
        residual, residual_se = audit_ensemble(reports)
        summary["audit_residual_mean"] = residual
        summary["audit_residual_se"] = residual_se
        violations = sum(report.violation_count for report in reports)
        summary["audit_violations"] = float(violations)
    return summary


def write_csv(table: pd.DataFrame, filepath: str) -> None:
    """Write a CSV file with 17 significant digits and empty missing cells."""
    table.to_csv(
        filepath, index=False, float_format=FLOAT_FORMAT, na_rep="", lineterminator="\n"
    )


def _simulate(experiment: Experiment, schedule=None) -> list[Trajectory]:
    return run_ensemble(
        experiment.objective,
        experiment.regularizer,
        experiment.region,
        experiment.noise,
        experiment.schedule if schedule is None else schedule,
        experiment.integrator,
        experiment.paths,
        threads=experiment.threads,
        target=experiment.target,
        batch_size=experiment.batch_size,
    )


def _prepare_directory(config: ExperimentConfig) -> str:
    directory = config["output"]["directory"]
    pathlib.Path(directory).mkdir(parents=True, exist_ok=True)
    return directory


def _mean_series(trajectories: list[Trajectory], attribute: str) -> np.ndarray:
    return np.mean([getattr(traj, attribute) for traj in trajectories], axis=0)


def _fit_window(experiment: Experiment) -> tuple[float, float]:
    window = experiment.config["diagnostics"]["rate_fit_window"]
    if window is not None:
        return tuple(window)
    horizon = experiment.integrator.horizon
    return (0.1 * horizon, horizon)


def _try_rate_fit(times, gaps, window) -> tuple[float, float]:
    try:
        return tuple(rate_fit(times, gaps, window))
    except ValueError as error:
        logger.warning("Rate fit skipped: %s", error)
        return float("nan"), float("nan")


def _write_summary(summary: dict[str, float], directory: str) -> str:
    filepath = os.path.join(directory, SUMMARY_FILE)
    table = pd.DataFrame({"statistic": list(summary), "value": list(summary.values())})
    write_csv(table, filepath)
    return filepath


def _write_echo(experiment: Experiment, directory: str) -> str:
    filepath = os.path.join(directory, ECHO_FILE)
    dump_yaml(experiment.echo(), filepath)
    return filepath


def _write_report(
    experiment: Experiment,
    summary: dict[str, float],
    directory: str,
    series: Optional[pd.DataFrame] = None,
) -> str:
    filepath = os.path.join(directory, REPORT_FILE)
    parameters = [
        {"section": section, "parameter": key, "value": str(value)}
        for section, entries in experiment.echo().items()
        for key, value in entries.items()
    ]
    tables = {
        "summary": (
            pd.DataFrame({"statistic": list(summary), "value": list(summary.values())}),
            "Ensemble statistics",
        ),
        "parameters": (pd.DataFrame(parameters), "Resolved configuration"),
    }
    if series is not None:
        tables["gaps"] = (series, "Ensemble mean optimality gaps")
    write_workbook(filepath, tables)
    return filepath
