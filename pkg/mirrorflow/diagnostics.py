"""Measurements on simulated trajectories and the bounds they are checked against.

Path measurements:
- occupation_fraction, hitting_time: concentration around a point
- fenchel_audit, audit_ensemble: term by term reconstruction of the change of the
  Fenchel energy V(t) = F(x*, eta(t) Y(t)) / eta(t)
- rate_fit: power law fit of a gap series on a log-log scale
- ensemble_summary: ensemble statistics of a list of trajectories

Bounds (all closed form): deterministic_bound, rectified_rate_bound,
power_law_exponent, optimized_rate_bound, mean_square_bound, hitting_time_bound,
optimized_hitting_bound, hitting_sensitivity, occupation_bound, occupation_sensitivity.
"""

from __future__ import annotations
from dataclasses import asdict, dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
import pandas as pd

from mirrorflow.dynamics.schedules import SensitivitySchedule
from mirrorflow.dynamics.trajectory import Trajectory, running_mean
from mirrorflow.errors import InfeasiblePointError
from mirrorflow.geometry import FeasibleRegion
from mirrorflow.mirror import FEASIBILITY_TOLERANCE, Regularizer, get_mirror
from mirrorflow.noise import NoiseModel, covariance
from mirrorflow.problems import Objective


DEFAULT_BURN_IN_FRACTION = 0.2
DEFAULT_SLACK_FACTOR = 10.0
MIN_FIT_POINTS = 10


@dataclass(frozen=True, eq=False)
class FenchelAuditReport:
    """Per interval terms of the Fenchel energy balance.

    All interval arrays have one entry less than `times`. The residual is the exact
    remainder delta_v - (drift + temperature + ito); `martingale` is its left-point
    estimate from the logged dual path. An interval is a violation if delta_v exceeds
    drift + temperature + ito + martingale + slack.
    """

    times: np.ndarray
    energy: np.ndarray
    delta_v: np.ndarray
    drift: np.ndarray
    temperature: np.ndarray
    ito: np.ndarray
    residual: np.ndarray
    martingale: np.ndarray
    slack: np.ndarray
    violation_count: int

    @property
    def cumulative_drift(self) -> np.ndarray:
        return np.cumsum(self.drift)

    @property
    def cumulative_temperature(self) -> np.ndarray:
        return np.cumsum(self.temperature)

    @property
    def cumulative_ito(self) -> np.ndarray:
        return np.cumsum(self.ito)

    @property
    def cumulative_residual(self) -> np.ndarray:
        return np.cumsum(self.residual)

    @property
    def cumulative_delta_v(self) -> np.ndarray:
        return np.cumsum(self.delta_v)

    @property
    def min_energy(self) -> float:
        return float(np.min(self.energy))

    def max_increase_per_step(self, dt: float) -> float:
        """Return the largest increase of V per integration step of size dt."""
        if self.delta_v.size == 0:
            return 0.0
        steps = np.maximum(np.round(np.diff(self.times) / dt), 1.0)
        return float(np.max(self.delta_v / steps))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "t": self.times[1:],
                "delta_v": self.delta_v,
                "drift": self.drift,
                "temperature": self.temperature,
                "ito": self.ito,
                "residual": self.residual,
                "martingale": self.martingale,
                "slack": self.slack,
            }
        )


class RateFit(NamedTuple):
    slope: float
    r_squared: float


@dataclass(frozen=True)
class EnsembleSummary:
    paths: int
    mean_sq_distance: float
    sq_distance_se: float
    mean_hitting_time: float
    hit_fraction: float
    mean_occupation: float
    final_gap_mean: float
    final_gap_min: float
    final_gap_max: float

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


# MAIN API FUNCTIONS
def occupation_fraction(
    traj: Trajectory,
    center,
    delta: float,
    burn_in: Optional[float] = None,
    region: Optional[FeasibleRegion] = None,
) -> float:
    """Return the fraction of logged times in [burn_in, T] with X near the center.

    A point is near the center if it lies within delta of it. Distances use the region
    norm if a region is given and the Euclidean norm otherwise. The burn-in defaults to
    the first 20% of the horizon.

    Raises:
        ValueError: If delta is not positive or no logged time lies in the window.
    """
    _check_delta(delta)
    if burn_in is None:
        start = traj.times[0]
        burn_in = start + DEFAULT_BURN_IN_FRACTION * (traj.horizon - start)
    window = traj.times >= burn_in
    if not np.any(window):
        raise ValueError(f"no logged time at or after the burn-in {burn_in}")
    distances = _distances(traj.primal[window], center, region)
    return float(np.mean(distances <= delta))


def hitting_time(
    traj: Trajectory, center, delta: float, region: Optional[FeasibleRegion] = None
) -> Optional[float]:
    """Return the first logged time with X within delta of center, or None."""
    _check_delta(delta)
    inside = np.flatnonzero(_distances(traj.primal, center, region) <= delta)
    if inside.size == 0:
        return None
    return float(traj.times[inside[0]])


def censored_hitting_times(
    trajs: Sequence[Trajectory], hits: Sequence[Optional[float]]
) -> list[float]:
    """Replace missing hitting times by the horizon of their path."""
    return [traj.horizon if hit is None else hit for traj, hit in zip(trajs, hits)]


def fenchel_audit(
    traj: Trajectory,
    reg: Regularizer,
    region: FeasibleRegion,
    target,
    schedule: SensitivitySchedule,
    noise: NoiseModel,
    objective: Objective,
    slack_constant: Optional[float] = None,
) -> FenchelAuditReport:
    """Decompose the change of V(t) = F(x*, eta Y) / eta between logged times.

    Over each logged interval [t_k, t_k+1] the terms are integrated with the left point
    rule, consistent with the Ito integral:
    - drift: <v(X), X - x*> dt
    - temperature: -(eta' / eta^2) (h(x*) - h(X)) dt
    - Ito correction: eta tr(Sigma) dt / (2K)
    The martingale part is estimated as <dY - v(X) dt, X - x*>. The slack per interval
    is C dt with C = 10 max ||v|| diam(region) unless `slack_constant` is given.

    Raises:
        InfeasiblePointError: If the target lies outside of the region.
    """
    target = np.asarray(target, dtype=float)
    if not region.contains(target, FEASIBILITY_TOLERANCE):
        raise InfeasiblePointError("the audit target lies outside of the region")
    mirror = get_mirror(reg, region)
    times, dual, primal, eta = traj.times, traj.dual, traj.primal, traj.eta
    target_value = mirror.value(target)

    conjugate = mirror.conjugate(eta[:, None] * dual)
    energy = (target_value + conjugate - eta * region.inner(dual, target)) / eta
    _, gradient = objective.value_and_gradient(primal)
    offset = primal - target
    drift_rate = -np.asarray(region.inner(gradient, offset))
    temperature_rate = -(schedule.derivative(times) / eta**2) * (
        target_value - mirror.value(primal)
    )
    ito_rate = eta * _noise_trace(noise, primal, times) / (2.0 * mirror.modulus)

    steps = np.diff(times)
    delta_v = np.diff(energy)
    drift = drift_rate[:-1] * steps
    temperature = temperature_rate[:-1] * steps
    ito = ito_rate[:-1] * steps
    residual = delta_v - (drift + temperature + ito)
    martingale_increment = np.diff(dual, axis=0) + gradient[:-1] * steps[:, None]
    martingale = np.asarray(region.inner(martingale_increment, offset[:-1]))

    if slack_constant is None:
        largest_drift = float(np.max(region.dual_norm(gradient)))
        slack_constant = DEFAULT_SLACK_FACTOR * largest_drift * region.diameter()
    slack = slack_constant * steps
    bound = drift + temperature + ito + martingale + slack
    violation_count = int(np.sum(delta_v > bound))
    return FenchelAuditReport(
        times=times,
        energy=energy,
        delta_v=delta_v,
        drift=drift,
        temperature=temperature,
        ito=ito,
        residual=residual,
        martingale=martingale,
        slack=slack,
        violation_count=violation_count,
    )


def audit_ensemble(reports: Sequence[FenchelAuditReport]) -> tuple[float, float]:
    """Return the mean final cumulative residual of an ensemble and its std. error."""
    if not reports:
        raise ValueError("the ensemble is empty")
    finals = np.array([np.sum(report.residual) for report in reports])
    if finals.size == 1:
        return float(finals[0]), float("nan")
    return float(np.mean(finals)), float(np.std(finals, ddof=1) / np.sqrt(finals.size))


def rate_fit(times, gaps, window: tuple[float, float]) -> RateFit:
    """Fit log(gap) = slope * log(t) + c by least squares over t_lo <= t <= t_hi.

    Raises:
        ValueError: If fewer than ten points fall in the window or a gap in the window
            is not positive.
    """
    times = np.asarray(times, dtype=float)
    gaps = np.asarray(gaps, dtype=float)
    low, high = window
    inside = (times >= low) & (times <= high)
    if np.count_nonzero(inside) < MIN_FIT_POINTS:
        raise ValueError(f"at least {MIN_FIT_POINTS} points are needed in {window}")
    if np.any(gaps[inside] <= 0) or np.any(times[inside] <= 0):
        raise ValueError("gaps and times must be positive inside the fit window")

    log_t = np.log(times[inside])
    log_gap = np.log(gaps[inside])
    slope, intercept = np.polyfit(log_t, log_gap, 1)
    fitted = slope * log_t + intercept
    total = np.sum((log_gap - np.mean(log_gap)) ** 2)
    r_squared = 1.0 - np.sum((log_gap - fitted) ** 2) / total if total > 0 else 1.0
    return RateFit(float(slope), float(r_squared))


def ensemble_summary(
    trajs: Sequence[Trajectory],
    target,
    delta: Optional[float] = None,
    burn_in: Optional[float] = None,
    f_star: Optional[float] = None,
    region: Optional[FeasibleRegion] = None,
) -> EnsembleSummary:
    """Return ensemble statistics of trajectories logged on a common time grid.

    The time averaged squared distance to the target uses the trapezoidal rule. Hitting
    times and occupation fractions are only computed when `delta` is given, final f
    gaps only when `f_star` is given; missing statistics are NaN. Paths that never hit
    the ball enter the mean hitting time with their horizon.

    Raises:
        ValueError: If the ensemble is empty or the time grids differ.
    """
    if not trajs:
        raise ValueError("the ensemble is empty")
    times = trajs[0].times
    if any(not np.array_equal(traj.times, times) for traj in trajs[1:]):
        raise ValueError("all trajectories must share the same time grid")
    target = np.asarray(target, dtype=float)

    elapsed = times[-1] - times[0]
    sq_distances = []
    for traj in trajs:
        squares = _distances(traj.primal, target, region) ** 2
        if elapsed > 0:
            sq_distances.append(running_mean(times, squares)[-1])
        else:
            sq_distances.append(squares[0])
    sq_distances = np.array(sq_distances)
    sq_distance_se = 0.0
    if len(trajs) > 1:
        sq_distance_se = float(np.std(sq_distances, ddof=1) / np.sqrt(len(trajs)))

    mean_hitting = hit_fraction = mean_occupation = float("nan")
    if delta is not None:
        hits = [hitting_time(traj, target, delta, region) for traj in trajs]
        hit_fraction = sum(hit is not None for hit in hits) / len(trajs)
        mean_hitting = float(np.mean(censored_hitting_times(trajs, hits)))
        fractions = [
            occupation_fraction(traj, target, delta, burn_in, region) for traj in trajs
        ]
        mean_occupation = float(np.mean(fractions))

    gap_mean = gap_min = gap_max = float("nan")
    if f_star is not None:
        gaps = np.array([traj.f_values[-1] for traj in trajs]) - f_star
        gap_mean = float(np.mean(gaps))
        gap_min, gap_max = float(np.min(gaps)), float(np.max(gaps))

    return EnsembleSummary(
        paths=len(trajs),
        mean_sq_distance=float(np.mean(sq_distances)),
        sq_distance_se=sq_distance_se,
        mean_hitting_time=mean_hitting,
        hit_fraction=hit_fraction,
        mean_occupation=mean_occupation,
        final_gap_mean=gap_mean,
        final_gap_min=gap_min,
        final_gap_max=gap_max,
    )


# BOUNDS
def deterministic_bound(depth: float, eta: float, t):
    """Bound Omega / (eta t) on the averaged gap of deterministic mirror descent."""
    return depth / (eta * np.asarray(t, dtype=float))[()]


def rectified_rate_bound(
    depth: float, modulus: float, noise_bound: float, schedule: SensitivitySchedule, t
):
    """Bound Omega / (t eta(t)) + noise_bound / (2 K t) * int_0^t eta on the gap."""
    t = np.asarray(t, dtype=float)
    temperature = depth / (t * schedule.value(t))
    return (temperature + noise_bound * schedule.integral(t) / (2.0 * modulus * t))[()]


def power_law_exponent(beta: float) -> float:
    """Decay exponent min(beta, 1 - beta) of the rate bound under eta(t) ~ t^-beta."""
    return min(beta, 1.0 - beta)


def optimized_rate_bound(depth: float, modulus: float, noise_bound: float, t):
    """Rate 2 sqrt(Omega noise_bound / (K t)) reached by the optimized schedule."""
    t = np.asarray(t, dtype=float)
    return 2.0 * np.sqrt(depth * noise_bound / (modulus * t))[()]


def mean_square_bound(
    coupling: float,
    eta: float,
    alpha: float,
    modulus: float,
    noise_bound: float,
    t: float,
) -> float:
    """Bound 2 F / (eta alpha t) + eta noise_bound / (alpha K) on mean ||X - x*||^2."""
    return 2.0 * coupling / (eta * alpha * t) + eta * noise_bound / (alpha * modulus)


def hitting_time_bound(
    coupling: float,
    eta: float,
    alpha: float,
    modulus: float,
    noise_bound: float,
    delta: float,
) -> float:
    """Bound 2 K F / (eta alpha K delta^2 - eta^2 noise_bound) on the mean hitting time.

    Returns infinity when eta is not below alpha K delta^2 / noise_bound.
    """
    denominator = eta * alpha * modulus * delta**2 - eta**2 * noise_bound
    if denominator <= 0:
        return float("inf")
    return 2.0 * modulus * coupling / denominator


def optimized_hitting_bound(
    depth: float, alpha: float, modulus: float, noise_bound: float, delta: float
) -> float:
    """Bound 8 Omega noise_bound / (alpha^2 K delta^4) for y0 = 0 and the best eta."""
    return 8.0 * depth * noise_bound / (alpha**2 * modulus * delta**4)


def hitting_sensitivity(
    alpha: float, modulus: float, noise_bound: float, delta: float
) -> float:
    """Sensitivity alpha K delta^2 / (2 noise_bound) minimizing the hitting bound."""
    return alpha * modulus * delta**2 / (2.0 * noise_bound)


def occupation_bound(
    eta: float, alpha: float, modulus: float, noise_bound: float, delta: float
) -> float:
    """Long run occupation lower bound 1 - eta noise_bound / (alpha K delta^2)."""
    return 1.0 - eta * noise_bound / (alpha * modulus * delta**2)


def occupation_sensitivity(
    epsilon: float, alpha: float, modulus: float, noise_bound: float, delta: float
) -> float:
    """Sensitivity epsilon alpha K delta^2 / noise_bound for occupation 1 - epsilon."""
    return epsilon * alpha * modulus * delta**2 / noise_bound


def _noise_trace(
    noise: NoiseModel, primal: np.ndarray, times: np.ndarray
) -> np.ndarray:
    if noise.time_homogeneous:
        return np.full(times.size, np.trace(covariance(noise, None, 0.0)))
    return np.array(
        [np.trace(covariance(noise, x, t)) for x, t in zip(primal, times)]
    )


def _distances(points, center, region: Optional[FeasibleRegion]) -> np.ndarray:
    offset = np.asarray(points, dtype=float) - np.asarray(center, dtype=float)
    if region is not None:
        return np.asarray(region.primal_norm(offset), dtype=float)
    return np.linalg.norm(offset, axis=-1)


def _check_delta(delta: float) -> None:
    if not delta > 0:
        raise ValueError(f"'delta' must be positive, not {delta}")
