"""
MirrorFlow is a Python package for simulating continuous time mirror descent dynamics
under persistent noise, and for checking simulated ensembles against the convergence,
concentration and rate bounds of the dynamics. Experiments are described by YAML files.

Exposes the following functions and classes:
    - get_experiment_path (function): Returns the path to an experiment file. Returns
        the specified path if the file exists, otherwise looks for the file in the
        MirrorFlow app directory.
    - ExperimentConfig (class): Python representation of a YAML experiment file. Can be
        used to load, edit, and save experiment files.
    - resolve_experiment (function): Builds the region, regularizer, objective, noise
        model, schedule and integrator settings described by an `ExperimentConfig`.
    - run_ensemble (function): Simulates an ensemble of seeded sample paths.
    - run_experiment (function): Simulates an experiment and writes its result files.
    - run_acceptance (function): Runs the named acceptance suites and writes a report.
    - ReportBuilder (class): Provides an interface for building multi-tab Excel reports.
"""

from mirrorflow.acceptance import run_acceptance
from mirrorflow.appdir import get_experiment_path
from mirrorflow.dynamics import run_ensemble
from mirrorflow.experiment import ExperimentConfig, resolve_experiment
from mirrorflow.report import ReportBuilder
from mirrorflow.runner import run_experiment

__author__ = "MirrorFlow developers"
__license__ = "Apache 2.0"
__version__ = "0.1.0"
