"""Integrators for mirror descent flows, sensitivity schedules and rectification."""

from mirrorflow.dynamics.ensemble import run_ensemble
from mirrorflow.dynamics.hessian import HessianComparison, integrate_hr1d, simulate_hr1d
from mirrorflow.dynamics.integrators import integrate_md, integrate_smd, simulate_paths
from mirrorflow.dynamics.schedules import (
    ConstantSchedule,
    OptimizedSchedule,
    PowerLawSchedule,
    SensitivitySchedule,
    eta,
)
from mirrorflow.dynamics.trajectory import (
    IntegratorConfig,
    RectificationMode,
    Trajectory,
    rectify,
)
