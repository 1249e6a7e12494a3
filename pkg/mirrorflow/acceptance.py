"""Named acceptance suites checking simulated behavior against closed form bounds.

Every suite returns a list of `AcceptanceCheck` rows; `run_acceptance` collects
them into `acceptance_report.csv` with the columns suite, check, measured, target,
condition and passed. Each suite uses its own fixed seed offset, so suites give the
same result whether they are run alone or as part of "all".
"""

from __future__ import annotations
import logging
import os
import pathlib
from typing import Callable, NamedTuple, Optional

import numpy as np
import pandas as pd

from mirrorflow.diagnostics import (
    DEFAULT_BURN_IN_FRACTION,
    audit_ensemble,
    censored_hitting_times,
    ensemble_summary,
    fenchel_audit,
    hitting_sensitivity,
    hitting_time,
    mean_square_bound,
    occupation_bound,
    occupation_fraction,
    occupation_sensitivity,
    optimized_hitting_bound,
    optimized_rate_bound,
    power_law_exponent,
    rate_fit,
)
from mirrorflow.dynamics import (
    ConstantSchedule,
    IntegratorConfig,
    OptimizedSchedule,
    PowerLawSchedule,
    integrate_hr1d,
    integrate_md,
    rectify,
    run_ensemble,
    simulate_hr1d,
    simulate_paths,
)
from mirrorflow.dynamics.ensemble import path_batches
from mirrorflow.experiment import ExperimentConfig
from mirrorflow.geometry import Box, Simplex
from mirrorflow.mirror import Regularizer, fenchel_coupling, get_mirror
from mirrorflow.noise import ConstantNoise, DecayingNoise, DecaySchedule
from mirrorflow.problems import LinearObjective, QuadraticObjective
from mirrorflow.properties import DEFAULT_CASES, run_property_checks
from mirrorflow.report import write_workbook
from mirrorflow.runner import run_traffic_demo, write_csv


REPORT_FILE = "acceptance_report.csv"
WORKBOOK_FILE = "acceptance_report.xlsx"
DEFAULT_SEED = 20240101
RECTIFIED_RATE_BANDS = [(0.25, 0.1), (0.5, 0.12), (0.75, 0.1)]

logger = logging.getLogger(__name__)


class AcceptanceCheck(NamedTuple):
    check: str
    measured: float
    target: float
    condition: str
    passed: bool


def at_most(check: str, measured: float, bound: float) -> AcceptanceCheck:
    passed = measured <= bound
    return AcceptanceCheck(check, float(measured), float(bound), "<=", bool(passed))


def at_least(check: str, measured: float, bound: float) -> AcceptanceCheck:
    passed = measured >= bound
    return AcceptanceCheck(check, float(measured), float(bound), ">=", bool(passed))


def within(
    check: str, measured: float, target: float, tolerance: float
) -> AcceptanceCheck:
    passed = abs(measured - target) <= tolerance
    return AcceptanceCheck(
        check, float(measured), float(target), f"within {tolerance:g}", bool(passed)
    )


def run_acceptance(
    suite: str = "all",
    directory: str = ".",
    seed: int = DEFAULT_SEED,
    threads: int = 1,
    xlsx: bool = False,
) -> pd.DataFrame:
    """Run one acceptance suite or all of them and write the report.

    Args:
        suite: Name of a suite in `SUITES`, or "all".
        directory: Output directory of the report and of the traffic demo files.
        seed: Base seed; each suite adds its own offset.
        threads: Number of worker processes used by ensembles.
        xlsx: Also write the report as an Excel workbook.

    Returns:
        The report table, one row per check.

    Raises:
        ValueError: If the suite name is unknown.
    """
    if suite != "all" and suite not in SUITES:
        raise ValueError(f"unknown acceptance suite '{suite}'")
    names = list(SUITES) if suite == "all" else [suite]
    pathlib.Path(directory).mkdir(parents=True, exist_ok=True)

    rows = []
    for name in names:
        offset = list(SUITES).index(name)
        logger.info("Running acceptance suite %s", name)
        checks = SUITES[name](seed + offset, threads, directory)
        for check in checks:
            logger.info(
                "%s: %s measured %.6g, target %s %.6g",
                "passed" if check.passed else "FAILED",
                check.check,
                check.measured,
                check.condition,
                check.target,
            )
            rows.append({"suite": name, **check._asdict()})

    report = pd.DataFrame(
        rows, columns=["suite", "check", "measured", "target", "condition", "passed"]
    )
    write_csv(report, os.path.join(directory, REPORT_FILE))
    if xlsx:
        description = "Acceptance checks with measured and target values"
        tables = {"acceptance": (report, description)}
        write_workbook(os.path.join(directory, WORKBOOK_FILE), tables)
    return report


def failed_checks(report: pd.DataFrame) -> list[str]:
    return report.loc[~report["passed"].astype(bool), "check"].tolist()


# SUITES
def ou_variance(seed: int, threads: int, directory: str) -> list[AcceptanceCheck]:
    """Terminal variance of the Ornstein-Uhlenbeck process on a wide interval."""
    region = Box.cube(-10.0, 10.0, 1)
    objective = QuadraticObjective([0.0], region=region)
    horizon, dt = 50.0, 1e-3
    cfg = IntegratorConfig(dt, horizon, seed, log_stride=int(round(horizon / dt)))
    trajectories = run_ensemble(
        objective,
        Regularizer.EUCLIDEAN,
        region,
        ConstantNoise.isotropic(1.0, 1),
        ConstantSchedule(1.0),
        cfg,
        paths=2000,
        threads=threads,
    )
    terminal = np.array([traj.primal[-1, 0] for traj in trajectories])
    standard_error = np.sqrt(0.5 / terminal.size)
    return [
        within("ou-variance", np.var(terminal, ddof=1), 0.5, 0.05),
        within("ou-mean", np.mean(terminal), 0.0, 4 * standard_error),
    ]


def deterministic_rate(
    seed: int, threads: int, directory: str
) -> list[AcceptanceCheck]:
    """Time averaged gap of deterministic mirror descent against depth / t."""
    checks = []
    for name, region, reg, center in _deterministic_setups():
        objective = QuadraticObjective(center, region=region)
        traj = _deterministic_run(objective, reg, region)
        mirror = get_mirror(reg, region)
        late = traj.times >= 1.0
        gap = traj.f_mean[late] - objective.known_min.value
        excess = gap - mirror.depth() / traj.times[late]
        checks.append(at_most(f"deterministic-rate-{name}", np.max(excess), 1e-4))
    return checks


def vanishing_noise(seed: int, threads: int, directory: str) -> list[AcceptanceCheck]:
    """Fraction of paths ending near the minimizer under noise decaying as 1 / log t."""
    region, objective = _box_quadratic()
    cfg = IntegratorConfig(1e-2, 200.0, seed, log_stride=100)
    trajectories = run_ensemble(
        objective,
        Regularizer.EUCLIDEAN,
        region,
        DecayingNoise(0.1, region.dim, DecaySchedule.INV_LOG),
        ConstantSchedule(1.0),
        cfg,
        paths=50,
        threads=threads,
    )
    target = objective.known_min.point
    distances = [np.linalg.norm(traj.primal[-1] - target) for traj in trajectories]
    fraction = np.mean(np.less_equal(distances, 0.05))
    return [at_least("vanishing-noise-fraction", fraction, 0.9)]


def hitting_time_suite(
    seed: int, threads: int, directory: str
) -> list[AcceptanceCheck]:
    """Mean hitting time of a ball around an interior minimizer with the optimal eta.

    Paths that do not reach the ball are counted with the horizon as hitting time.
    """
    setup = _StronglyConvexSetup(delta=0.2)
    eta = hitting_sensitivity(
        setup.alpha, setup.modulus, setup.noise_bound, setup.delta
    )
    trajectories = setup.run(eta, IntegratorConfig(1e-3, 20.0, seed, 10), 200, threads)
    hits = [
        hitting_time(traj, setup.target, setup.delta, setup.region)
        for traj in trajectories
    ]
    censored = censored_hitting_times(trajectories, hits)
    bound = optimized_hitting_bound(
        setup.depth, setup.alpha, setup.modulus, setup.noise_bound, setup.delta
    )
    return [
        at_most("hitting-time-mean", np.mean(censored), bound),
        at_least(
            "hitting-time-fraction", np.mean([hit is not None for hit in hits]), 0.95
        ),
    ]


def mean_square(seed: int, threads: int, directory: str) -> list[AcceptanceCheck]:
    """Time averaged squared distance to the minimizer against its mean square bound."""
    setup = _StronglyConvexSetup(delta=0.2)
    eta = hitting_sensitivity(
        setup.alpha, setup.modulus, setup.noise_bound, setup.delta
    )
    horizon = 50.0
    cfg = IntegratorConfig(1e-3, horizon, seed, 20)
    trajectories = setup.run(eta, cfg, 200, threads)
    summary = ensemble_summary(trajectories, setup.target, region=setup.region)
    bound = mean_square_bound(
        setup.coupling(eta),
        eta,
        setup.alpha,
        setup.modulus,
        setup.noise_bound,
        horizon,
    )
    return [
        at_most(
            "mean-square-distance",
            summary.mean_sq_distance,
            bound + 3 * summary.sq_distance_se,
        )
    ]


def occupation(seed: int, threads: int, directory: str) -> list[AcceptanceCheck]:
    """Long run fraction of time spent in a ball around the minimizer."""
    setup = _StronglyConvexSetup(delta=0.2)
    epsilon = 0.1
    eta = occupation_sensitivity(
        epsilon, setup.alpha, setup.modulus, setup.noise_bound, setup.delta
    )
    horizon = 500.0
    cfg = IntegratorConfig(1e-2, horizon, seed, 10)
    trajectories = setup.run(eta, cfg, 50, threads)
    burn_in = DEFAULT_BURN_IN_FRACTION * horizon
    fractions = [
        occupation_fraction(traj, setup.target, setup.delta, burn_in, setup.region)
        for traj in trajectories
    ]
    bound = occupation_bound(
        eta, setup.alpha, setup.modulus, setup.noise_bound, setup.delta
    )
    return [at_least("occupation-fraction", np.mean(fractions), bound - 0.05)]


def sharp_minimum(seed: int, threads: int, directory: str) -> list[AcceptanceCheck]:
    """Finite time arrival at the sharp corner minimizer of a linear program."""
    region = Box.cube(0.0, 1.0, 2)
    objective = LinearObjective([1.0, 2.0], region=region)
    horizon = 100.0
    trajectories = run_ensemble(
        objective,
        Regularizer.EUCLIDEAN,
        region,
        ConstantNoise.isotropic(0.3, 2),
        ConstantSchedule(0.05),
        IntegratorConfig(1e-3, horizon, seed, log_stride=100),
        paths=100,
        threads=threads,
    )
    vertex = objective.known_min.point
    settled = [
        bool(np.all(traj.primal[traj.times >= 0.9 * horizon] == vertex))
        for traj in trajectories
    ]
    return [
        AcceptanceCheck(
            "sharp-minimum-sharpness", objective.gamma, 0.0, ">", objective.gamma > 0
        ),
        at_least("sharp-minimum-settled", np.mean(settled), 0.95),
    ]


def rectified_rates(seed: int, threads: int, directory: str) -> list[AcceptanceCheck]:
    """Log-log slope of the ergodic average gap under power law sensitivities.

    The fitted slope over [1e2, 1e4] has to lie in a band around -min(beta, 1-beta).
    """
    checks = []
    for beta, tolerance in RECTIFIED_RATE_BANDS:
        times, gaps = _simplex_gap_series(PowerLawSchedule(1.0, beta), seed, threads)
        fit = rate_fit(times, gaps, (1e2, 1e4))
        target = -power_law_exponent(beta)
        checks.append(
            within(f"rectified-rate-beta-{beta:g}", fit.slope, target, tolerance)
        )
    return checks


def optimized_schedule(
    seed: int, threads: int, directory: str
) -> list[AcceptanceCheck]:
    """Final ergodic average gap under the optimized schedule against its rate."""
    region, reg, noise = _simplex_setup()
    mirror = get_mirror(reg, region)
    schedule = OptimizedSchedule(mirror.depth(), mirror.modulus, noise.sup_bound())
    times, gaps = _simplex_gap_series(schedule, seed, threads)
    bound = optimized_rate_bound(
        mirror.depth(), mirror.modulus, noise.sup_bound(), times[-1]
    )
    return [at_most("optimized-schedule-gap", gaps[-1], 1.5 * bound)]


def dichotomy(seed: int, threads: int, directory: str) -> list[AcceptanceCheck]:
    """Opposite limits of stochastic mirror and Hessian-Riemannian descent in 1D."""
    pairs = simulate_hr1d(
        3.0, 0.8, IntegratorConfig(1e-3, 50.0, seed, log_stride=1000), range(500)
    )
    smd_final = np.array([pair.smd.primal[-1, 0] for pair in pairs])
    shd_final = np.array([pair.shd.primal[-1, 0] for pair in pairs])
    reference_cfg = IntegratorConfig(1e-4, 5.0, seed, log_stride=10)
    reference = integrate_hr1d(1.0, 0.8, reference_cfg)
    return [
        at_least("dichotomy-smd-minimum", np.mean(smd_final < 0.01), 0.95),
        at_least("dichotomy-shd-maximum", np.mean(shd_final > 0.99), 0.5),
        at_most("dichotomy-dual-deviation", reference.deviation, 0.05),
    ]


def traffic_power_law(seed: int, threads: int, directory: str) -> list[AcceptanceCheck]:
    """Power law decay of the averaged traffic gap next to a stalling constant eta."""
    config = ExperimentConfig(
        problem={
            "kind": "traffic",
            "nodes": 20,
            "extra_edges": 40,
            "network_seed": 2024,
            "edge_sigma": 0.25,
        },
        regularizer={"kind": "entropic"},
        noise={"kind": "path_correlated"},
        schedule={"kind": "power_law", "eta0": 1.0, "beta": 0.5},
        integrator={"dt": 1e-2, "horizon": 1e3, "log_stride": 100},
        ensemble={"paths": 20, "seed": seed, "threads": threads},
        output={"directory": os.path.join(directory, "traffic-power-law")},
        diagnostics={"rate_fit_window": [100.0, 1000.0]},
    )
    summary = run_traffic_demo(config).summary
    return [
        at_most("traffic-average-slope", summary["gap_average_slope"], -0.3),
        at_least("traffic-average-r-squared", summary["gap_average_r_squared"], 0.9),
        within("traffic-constant-slope", summary["gap_constant_slope"], 0.0, 0.1),
    ]


def fenchel_audit_suite(
    seed: int, threads: int, directory: str
) -> list[AcceptanceCheck]:
    """Energy balance of the Fenchel coupling on deterministic and stochastic runs."""
    checks = []
    for name, region, reg, center in _deterministic_setups():
        objective = QuadraticObjective(center, region=region)
        traj = _deterministic_run(objective, reg, region)
        report = fenchel_audit(
            traj,
            reg,
            region,
            objective.known_min.point,
            ConstantSchedule(1.0),
            ConstantNoise.zero(region.dim),
            objective,
        )
        checks.append(
            at_most(f"audit-monotone-{name}", report.max_increase_per_step(1e-3), 1e-6)
        )
        checks.append(at_most(f"audit-violations-{name}", report.violation_count, 0))

    setup = _StronglyConvexSetup(delta=0.2)
    eta = hitting_sensitivity(
        setup.alpha, setup.modulus, setup.noise_bound, setup.delta
    )
    cfg = IntegratorConfig(1e-3, 50.0, seed, 20)
    trajectories = setup.run(eta, cfg, 200, threads)
    violations = sum(setup.audit(traj, eta).violation_count for traj in trajectories)
    checks.append(at_most("audit-violations-stochastic", violations, 0))

    # The residual is logged every step here, so paths are audited batch by batch.
    cfg = IntegratorConfig(1e-3, 10.0, seed, log_stride=1)
    reports = []
    for batch in path_batches(200, 50):
        batch_paths = setup.simulate(eta, cfg, list(batch))
        reports.extend(setup.audit(traj, eta) for traj in batch_paths)
    residual, residual_se = audit_ensemble(reports)
    checks.append(at_most("audit-mean-residual", abs(residual), 3 * residual_se + 1e-3))
    return checks


def properties(seed: int, threads: int, directory: str) -> list[AcceptanceCheck]:
    """Randomized invariant checks of regions, mirror maps, noise and networks."""
    return [
        at_most(f"{result.name}[{result.setup}]", result.failures, 0)
        for result in run_property_checks(DEFAULT_CASES, seed)
    ]


SUITES: dict[str, Callable[[int, int, str], list[AcceptanceCheck]]] = {
    "ou-variance": ou_variance,
    "deterministic-rate": deterministic_rate,
    "vanishing-noise": vanishing_noise,
    "hitting-time": hitting_time_suite,
    "mean-square": mean_square,
    "occupation": occupation,
    "sharp-minimum": sharp_minimum,
    "rectified-rates": rectified_rates,
    "optimized-schedule": optimized_schedule,
    "dichotomy": dichotomy,
    "traffic-power-law": traffic_power_law,
    "fenchel-audit": fenchel_audit_suite,
    "properties": properties,
}


# SETUPS
class _StronglyConvexSetup:
    """Unit quadratic centered in the unit square with isotropic noise of level 0.1."""

    def __init__(self, delta: float, level: float = 0.1):
        self.region, self.objective = _box_quadratic()
        self.regularizer = Regularizer.EUCLIDEAN
        self.noise = ConstantNoise.isotropic(level, self.region.dim)
        mirror = get_mirror(self.regularizer, self.region)
        self.modulus = mirror.modulus
        self.depth = mirror.depth()
        self.alpha = self.objective.alpha
        self.noise_bound = self.noise.sup_bound()
        self.target = self.objective.known_min.point
        self.delta = delta

    def coupling(self, eta: float, y0: Optional[np.ndarray] = None) -> float:
        y0 = np.zeros(self.region.dim) if y0 is None else y0
        return fenchel_coupling(self.regularizer, self.region, self.target, eta * y0)

    def run(self, eta: float, cfg: IntegratorConfig, paths: int, threads: int):
        return run_ensemble(
            self.objective,
            self.regularizer,
            self.region,
            self.noise,
            ConstantSchedule(eta),
            cfg,
            paths,
            threads=threads,
            target=self.target,
        )

    def simulate(self, eta: float, cfg: IntegratorConfig, path_indices: list[int]):
        return simulate_paths(
            self.objective,
            self.regularizer,
            self.region,
            self.noise,
            ConstantSchedule(eta),
            cfg,
            path_indices,
            self.target,
        )

    def audit(self, traj, eta: float):
        return fenchel_audit(
            traj,
            self.regularizer,
            self.region,
            self.target,
            ConstantSchedule(eta),
            self.noise,
            self.objective,
        )


def _box_quadratic() -> tuple[Box, QuadraticObjective]:
    region = Box.cube(0.0, 1.0, 2)
    return region, QuadraticObjective([0.5, 0.5], region=region)


def _simplex_setup() -> tuple[Simplex, Regularizer, ConstantNoise]:
    return Simplex(3), Regularizer.ENTROPIC, ConstantNoise.isotropic(0.5, 3)


def _deterministic_setups():
    yield "box", Box.cube(0.0, 1.0, 2), Regularizer.EUCLIDEAN, [0.5, 0.5]
    yield "simplex", Simplex(3), Regularizer.ENTROPIC, [0.5, 0.3, 0.2]


def _deterministic_run(objective, reg: Regularizer, region):
    cfg = IntegratorConfig(1e-3, 100.0, log_stride=100)
    target = objective.known_min.point
    return integrate_md(objective, reg, region, 1.0, cfg, target=target)


def _simplex_gap_series(
    schedule, seed: int, threads: int
) -> tuple[np.ndarray, np.ndarray]:
    """Return the ensemble mean ergodic gap on the simplex quadratic.

    The gap at t is the time average of f(X) over [0, t] minus the minimum, the quantity
    bounded by the rectified rates; f at the averaged point lies below it.
    """
    region, reg, noise = _simplex_setup()
    objective = QuadraticObjective([0.5, 0.3, 0.2], region=region)
    trajectories = run_ensemble(
        objective,
        reg,
        region,
        noise,
        schedule,
        IntegratorConfig(1e-2, 1e4, seed, log_stride=100),
        paths=20,
        threads=threads,
    )
    averaged = [rectify(traj, "average") for traj in trajectories]
    mean_values = np.mean([traj.f_values for traj in averaged], axis=0)
    gaps = mean_values - objective.known_min.value
    return trajectories[0].times, gaps
