"""Resolution of an `ExperimentConfig` into simulation components.

`resolve_experiment` builds the feasible region, regularizer, objective, noise model,
sensitivity schedule and integrator settings described by a configuration, and derives
the constants the diagnostics need. Every failure is reported as a `ConfigError` naming
the offending configuration field.
"""

from __future__ import annotations
from contextlib import contextmanager
from dataclasses import dataclass
import logging
from typing import Any, Optional

import numpy as np

from mirrorflow.dynamics import (
    ConstantSchedule,
    IntegratorConfig,
    OptimizedSchedule,
    PowerLawSchedule,
    SensitivitySchedule,
)
from mirrorflow.errors import ConfigError, InvalidParameterError, MirrorFlowError
from mirrorflow.experiment.config import ConfigSection, ExperimentConfig
from mirrorflow.geometry import Box, FeasibleRegion, Product, Simplex, Spectrahedron
from mirrorflow.mirror import Regularizer, get_mirror
from mirrorflow.noise import (
    ConstantNoise,
    DecayingNoise,
    DecaySchedule,
    NoiseModel,
    PathCorrelatedNoise,
)
from mirrorflow.optimum import reference_minimum, social_optimum
from mirrorflow.problems import (
    LinearObjective,
    Minimum,
    Objective,
    QuadraticObjective,
    ScalarObjective,
    TrafficObjective,
)
from mirrorflow.traffic import (
    Network,
    PathSet,
    enumerate_paths,
    random_network,
    read_network,
)
from mirrorflow.validate import ErrorLevel, validate_experiment_content


logger = logging.getLogger(__name__)

# Constructor arguments that are configured in a different section than the component.
_PARAMETER_SECTIONS = {"seed": "ensemble"}


@dataclass(frozen=True, eq=False)
class Experiment:
    """The resolved components of an experiment.

    Attributes:
        target: The minimizer x*, if it is known or could be computed.
        f_star: The minimum value f(x*), if known.
        modulus: Strong convexity constant K of the regularizer.
        depth: Depth Omega = max h - min h of the regularizer.
        noise_bound: Bound sigma*^2 on the squared Frobenius norm of the volatility.
        alpha: Strong convexity constant of the objective, zero if it is not strongly
            convex.
    """

    config: ExperimentConfig
    region: FeasibleRegion
    regularizer: Regularizer
    objective: Objective
    noise: NoiseModel
    schedule: SensitivitySchedule
    integrator: IntegratorConfig
    paths: int
    threads: int
    batch_size: int
    target: Optional[np.ndarray]
    f_star: Optional[float]
    modulus: float
    depth: float
    noise_bound: float
    alpha: float
    network: Optional[Network] = None
    path_set: Optional[PathSet] = None

    def derived(self) -> dict[str, Any]:
        """Return the derived constants as plain Python values."""
        return {
            "modulus": float(self.modulus),
            "depth": float(self.depth),
            "noise_bound": float(self.noise_bound),
            "alpha": float(self.alpha),
            "f_star": None if self.f_star is None else float(self.f_star),
            "target": None if self.target is None else [float(v) for v in self.target],
        }

    def echo(self) -> dict[str, dict]:
        """Return the resolved configuration document including the derived section."""
        document = self.config.resolved()
        document["derived"] = self.derived()
        return document


def resolve_experiment(config: ExperimentConfig) -> Experiment:
    """Build the simulation components described by an experiment configuration.

    Raises:
        ConfigError: If the configuration contains an error; the error names the field.
    """
    errors = validate_experiment_content(config.resolved())
    if serious := [error for error in errors if error.error_level >= ErrorLevel.ERROR]:
        raise ConfigError(serious[0].field, serious[0].description)

    problem = config["problem"]
    regularizer = Regularizer(config["regularizer"]["kind"])
    network = path_set = None
    if problem["kind"] == "traffic":
        with _config_field("problem"):
            network, path_set = build_network(problem)
            objective = TrafficObjective(network, path_set)
        region = objective.region
    else:
        with _config_field("region"):
            region = build_region(config["region"].resolved())
        with _config_field("problem"):
            objective = build_objective(problem, region)

    with _config_field("regularizer"):
        mirror = get_mirror(regularizer, region)
    with _config_field("noise"):
        noise = build_noise(config["noise"], region.dim, network, path_set)
    with _config_field("schedule"):
        schedule = build_schedule(
            config["schedule"], mirror.depth(), mirror.modulus, noise
        )

    integrator_section, ensemble = config["integrator"], config["ensemble"]
    with _config_field("integrator"):
        integrator = IntegratorConfig(
            dt=integrator_section["dt"],
            horizon=integrator_section["horizon"],
            seed=ensemble["seed"],
            log_stride=integrator_section["log_stride"],
            y0=integrator_section["y0"],
        )
        integrator.initial_dual(region.dim)

    target, f_star = _locate_minimum(objective, regularizer, region, network, path_set)
    experiment = Experiment(
        config=config,
        region=region,
        regularizer=regularizer,
        objective=objective,
        noise=noise,
        schedule=schedule,
        integrator=integrator,
        paths=ensemble["paths"],
        threads=ensemble["threads"],
        batch_size=ensemble["batch_size"],
        target=target,
        f_star=f_star,
        modulus=mirror.modulus,
        depth=mirror.depth(),
        noise_bound=noise.sup_bound(),
        alpha=objective.alpha,
        network=network,
        path_set=path_set,
    )
    logger.info("Resolved %r with derived constants %s", config, experiment.derived())
    return experiment


def build_region(section: dict) -> FeasibleRegion:
    """Build a feasible region from the parameters of a region section."""
    kind = section["kind"]
    if kind == "box":
        lower, upper = section["lower"], section["upper"]
        dim = section["dim"]
        for bound in (lower, upper):
            if isinstance(bound, list):
                dim = len(bound)
        return Box(
            np.broadcast_to(np.asarray(lower, dtype=float), (dim,)),
            np.broadcast_to(np.asarray(upper, dtype=float), (dim,)),
        )
    if kind == "simplex":
        return Simplex(section["dim"], section["mass"])
    if kind == "spectrahedron":
        return Spectrahedron(section["order"])
    blocks = [
        build_region(ConfigSection("region", block).resolved())
        for block in section["blocks"]
    ]
    return Product(tuple(blocks))


def build_objective(section, region: FeasibleRegion) -> Objective:
    """Build a quadratic, linear or scalar objective on the region."""
    known_min = None
    if section["known_min"] is not None:
        known_min = Minimum(
            np.asarray(section["known_min"]["point"], dtype=float),
            float(section["known_min"]["value"]),
        )
    kind = section["kind"]
    if kind == "quadratic":
        center = section["center"]
        center = region.center() if center is None else np.asarray(center, dtype=float)
        return QuadraticObjective(
            center, section["curvature"], section["offset"], region, known_min
        )
    if kind == "linear":
        return LinearObjective(
            section["cost"],
            section["offset"],
            region,
            weights=_inner_product_weights(region),
            known_min=known_min,
        )
    if kind == "scalar":
        return ScalarObjective(section["slope"], section["offset"], region)
    raise ValueError(f"'{kind}' objectives need a network")


def build_network(section) -> tuple[Network, PathSet]:
    """Read or generate the network of a traffic problem and enumerate its paths."""
    if section["network"] is not None:
        network = read_network(section["network"])
    else:
        network = random_network(
            section["nodes"],
            section["extra_edges"],
            section["network_seed"],
            demand=section["demand"],
            sigma=section["edge_sigma"],
        )
    paths = enumerate_paths(network, section["path_cap"])
    logger.info(
        "Network with %d nodes, %d edges and %d paths",
        network.node_count,
        network.edge_count,
        len(paths),
    )
    return network, paths


def build_noise(
    section,
    dim: int,
    network: Optional[Network] = None,
    paths: Optional[PathSet] = None,
) -> NoiseModel:
    """Build the noise model of a noise section for a state of dimension `dim`."""
    kind = section["kind"]
    if kind == "zero":
        return ConstantNoise.zero(dim)
    if kind == "constant":
        sigma = np.asarray(section["sigma"], dtype=float)
        if sigma.ndim == 0:
            return ConstantNoise.isotropic(float(sigma), dim)
        if sigma.ndim == 1:
            return ConstantNoise(np.diag(sigma))
        return ConstantNoise(sigma)
    if kind == "decaying":
        return DecayingNoise(
            section["base"], dim, DecaySchedule(section["decay"]), section["power"]
        )
    if network is None or paths is None:
        raise ValueError("path correlated noise needs a traffic problem")
    return PathCorrelatedNoise.from_network(network, paths, section["edge_sigma"])


def build_schedule(
    section, depth: float, modulus: float, noise: NoiseModel
) -> SensitivitySchedule:
    """Build the sensitivity schedule of a schedule section."""
    kind = section["kind"]
    if kind == "constant":
        return ConstantSchedule(section["eta0"])
    if kind == "power_law":
        return PowerLawSchedule(section["eta0"], section["beta"])
    if noise.sup_bound() <= 0:
        raise InvalidParameterError(
            "kind", "'optimized' needs a noise model with sigma* > 0"
        )
    return OptimizedSchedule(depth, modulus, noise.sup_bound())


def _locate_minimum(
    objective: Objective,
    regularizer: Regularizer,
    region: FeasibleRegion,
    network: Optional[Network],
    path_set: Optional[PathSet],
) -> tuple[Optional[np.ndarray], Optional[float]]:
    if objective.known_min is not None:
        known_min = objective.known_min
        return np.asarray(known_min.point, dtype=float), known_min.value
    if network is not None:
        optimum = social_optimum(network, path_set)
    elif _has_certificate(region):
        optimum = reference_minimum(objective, regularizer, region)
    else:
        logger.info("No reference minimum available on %s", type(region).__name__)
        return None, None
    return optimum.point, optimum.value


def _has_certificate(region: FeasibleRegion) -> bool:
    if isinstance(region, Product):
        return all(_has_certificate(block) for block in region.regions)
    return isinstance(region, (Box, Simplex))


def _inner_product_weights(region: FeasibleRegion) -> Optional[np.ndarray]:
    if isinstance(region, Spectrahedron):
        return region.weights
    if isinstance(region, Product):
        return np.concatenate(
            [
                (
                    block.weights
                    if isinstance(block, Spectrahedron)
                    else np.ones(block.dim)
                )
                for block in region.regions
            ]
        )
    return None


@contextmanager
def _config_field(section: str):
    """Re-raise constructor errors as `ConfigError`s naming the configuration field."""
    try:
        yield
    except ConfigError:
        raise
    except InvalidParameterError as error:
        field = (_PARAMETER_SECTIONS.get(error.parameter, section), error.parameter)
        raise ConfigError(field, error.description) from error
    except (MirrorFlowError, ValueError, TypeError, OSError) as error:
        raise ConfigError((section,), str(error)) from error
