"""Experiment definitions and their resolution into simulation components."""

from mirrorflow.experiment.components import Experiment, resolve_experiment
from mirrorflow.experiment.config import ConfigSection, ExperimentConfig
