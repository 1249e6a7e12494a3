"""Randomized checks of the structural properties of regions, mirror maps, objectives
and noise models.

Each check draws random cases from a seeded generator and reports the number of
violated cases together with the largest violation, where a violation is the amount by
which an inequality fails after subtracting its tolerance. A check passes when no case
is violated.
"""

from __future__ import annotations
from dataclasses import dataclass
import logging
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
import pandas as pd

from mirrorflow.geometry import (
    Box,
    FeasibleRegion,
    Product,
    Simplex,
    Spectrahedron,
    pack_symmetric,
)
from mirrorflow.mirror import Mirror, Regularizer, get_mirror
from mirrorflow.noise import (
    ConstantNoise,
    DecayingNoise,
    DecaySchedule,
    PathCorrelatedNoise,
    covariance,
)
from mirrorflow.problems import QuadraticObjective, TrafficObjective
from mirrorflow.traffic import (
    cost_eval,
    enumerate_paths,
    path_covariance,
    path_volatility,
    random_network,
)


DEFAULT_CASES = 1000
DUAL_SCALE = 3.0
TOLERANCE = 1e-9
FD_STEP = 1e-5
FD_TOLERANCE = 1e-6
CONJUGATE_FD_STEP = 1e-6
CONJUGATE_FD_TOLERANCE = 1e-5

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PropertyResult:
    name: str
    setup: str
    cases: int
    failures: int
    worst: float

    @property
    def passed(self) -> bool:
        return self.failures == 0


PropertyCheck = Callable[[np.random.Generator, int], list[PropertyResult]]


def mirror_setups() -> list[tuple[str, Mirror]]:
    """Return the regularizer and region pairings covered by the mirror checks."""
    pairings = [
        (
            "euclidean/box",
            Regularizer.EUCLIDEAN,
            Box([-1.0, 0.0, 2.0], [1.0, 0.5, 4.0]),
        ),
        ("euclidean/simplex", Regularizer.EUCLIDEAN, Simplex(4)),
        ("entropic/simplex", Regularizer.ENTROPIC, Simplex(4, mass=2.0)),
        ("entropic/box", Regularizer.ENTROPIC, Box([0.0, -1.0], [1.0, 2.0])),
        ("von_neumann/spectrahedron", Regularizer.VON_NEUMANN, Spectrahedron(3)),
        (
            "entropic/product",
            Regularizer.ENTROPIC,
            Product((Box.cube(0.0, 1.0, 2), Simplex(3))),
        ),
    ]
    return [(label, get_mirror(reg, region)) for label, reg, region in pairings]


def projection_regions() -> list[tuple[str, FeasibleRegion]]:
    return [
        ("box", Box([-1.0, 0.0, 2.0], [1.0, 0.5, 4.0])),
        ("simplex", Simplex(5, mass=2.0)),
        ("product", Product((Box.cube(0.0, 1.0, 2), Simplex(3)))),
    ]


# MAIN API FUNCTIONS
def run_property_checks(
    cases: int = DEFAULT_CASES, seed: int = 0, names: Optional[Sequence[str]] = None
) -> list[PropertyResult]:
    """Run the registered property checks, each with its own generator.

    Args:
        cases: Number of random cases per check and setup.
        seed: Seed of the generators.
        names: Optional subset of check names to run.
    """
    results = []
    for offset, (name, check) in enumerate(PROPERTY_CHECKS.items()):
        if names is not None and name not in names:
            continue
        rng = np.random.default_rng([seed, offset])
        check_results = check(rng, cases)
        failed = sum(not result.passed for result in check_results)
        logger.info(
            "Property %s: %d setup(s), %d failed", name, len(check_results), failed
        )
        results.extend(check_results)
    return results


def results_frame(results: Iterable[PropertyResult]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "property": r.name,
                "setup": r.setup,
                "cases": r.cases,
                "failures": r.failures,
                "worst": r.worst,
                "passed": r.passed,
            }
            for r in results
        ]
    )


# REGIONS
def check_projection_idempotent(rng, cases) -> list[PropertyResult]:
    results = []
    for label, region in projection_regions():
        y = DUAL_SCALE * rng.standard_normal((cases, region.dim))
        once = region.project(y)
        twice = region.project(once)
        violations = np.max(np.abs(twice - once), axis=-1) - 1e-12
        results.append(_result("projection idempotent", label, violations))
    return results


def check_projection_lipschitz(rng, cases) -> list[PropertyResult]:
    results = []
    for label, region in projection_regions():
        y = DUAL_SCALE * rng.standard_normal((cases, region.dim))
        y_other = DUAL_SCALE * rng.standard_normal((cases, region.dim))
        moved = np.linalg.norm(region.project(y) - region.project(y_other), axis=-1)
        distance = np.linalg.norm(y - y_other, axis=-1)
        violations = moved - distance * (1 + 1e-12)
        results.append(_result("projection 1-Lipschitz", label, violations))
    return results


def check_tangent_cone(rng, cases) -> list[PropertyResult]:
    results = []
    for label, region in projection_regions():
        violations = []
        vertices = region.vertices()
        for index in rng.integers(len(vertices), size=min(cases, 10 * len(vertices))):
            vertex = vertices[index]
            for direction in region.tangent_cone_generators(vertex):
                step = float(rng.uniform(1e-9, 1e-6))
                inside = region.contains(vertex + step * direction, 1e-12)
                violations.append(0.0 if inside else step)
        results.append(_result("tangent cone feasible", label, violations))
    return results


# MIRROR MAPS
def check_mirror_lipschitz(rng, cases) -> list[PropertyResult]:
    results = []
    for label, mirror in mirror_setups():
        region = mirror.region
        y, y_other = _dual_pair(rng, cases, region.dim)
        moved = region.primal_norm(mirror.mirror_map(y) - mirror.mirror_map(y_other))
        bound = region.dual_norm(y - y_other) / mirror.modulus
        violations = moved - bound - TOLERANCE * (1 + bound)
        results.append(_result("mirror map Lipschitz", label, violations))
    return results


def check_fenchel_lower_bound(rng, cases) -> list[PropertyResult]:
    results = []
    for label, mirror in mirror_setups():
        region = mirror.region
        p = region.sample(rng, cases)
        y = DUAL_SCALE * rng.standard_normal((cases, region.dim))
        coupling = _coupling(mirror, p, y)
        bound = 0.5 * mirror.modulus * region.primal_norm(mirror.mirror_map(y) - p) ** 2
        violations = bound - coupling - TOLERANCE * (1 + coupling)
        results.append(_result("fenchel >= K/2 distance^2", label, violations))
    return results


def check_fenchel_upper_bound(rng, cases) -> list[PropertyResult]:
    results = []
    for label, mirror in mirror_setups():
        region = mirror.region
        p = region.sample(rng, cases)
        y, y_other = _dual_pair(rng, cases, region.dim)
        step = y_other - y
        bound = (
            _coupling(mirror, p, y)
            + region.inner(step, mirror.mirror_map(y) - p)
            + region.dual_norm(step) ** 2 / (2.0 * mirror.modulus)
        )
        coupling = _coupling(mirror, p, y_other)
        violations = coupling - bound - TOLERANCE * (1 + bound)
        results.append(_result("fenchel three point bound", label, violations))
    return results


def check_fenchel_bregman(rng, cases) -> list[PropertyResult]:
    """F(p, y) >= D(p, Q(y)), with equality for steep regularizers."""
    results = []
    for label, mirror in mirror_setups():
        region = mirror.region
        p = region.sample(rng, cases)
        y = DUAL_SCALE * rng.standard_normal((cases, region.dim))
        x = mirror.mirror_map(y)
        divergence = (
            mirror.value(p) - mirror.value(x) - region.inner(mirror.gradient(x), p - x)
        )
        coupling = _coupling(mirror, p, y)
        slack = 1e-8 * (1 + np.abs(coupling))
        if mirror.regularizer.steep:
            violations = np.abs(coupling - divergence) - slack
        else:
            violations = divergence - coupling - slack
        results.append(_result("fenchel versus bregman", label, violations))
    return results


def check_mirror_image(rng, cases) -> list[PropertyResult]:
    """Steep maps land in the relative interior, the Euclidean map is onto."""
    results = []
    for label, mirror in mirror_setups():
        region = mirror.region
        if mirror.regularizer.steep:
            y = DUAL_SCALE * rng.standard_normal((cases, region.dim))
            interior = np.asarray(mirror.is_interior(mirror.mirror_map(y)))
            violations = np.where(interior, -1.0, 1.0)
            results.append(_result("steep map interior", label, violations))
        else:
            y = 5.0 * DUAL_SCALE * rng.standard_normal((cases, region.dim))
            boundary = region.project(y)
            images = mirror.mirror_map(boundary)
            violations = np.max(np.abs(images - boundary), axis=-1) - 1e-12
            results.append(_result("euclidean map onto", label, violations))
    return results


def check_conjugate_gradient(rng, cases) -> list[PropertyResult]:
    """Central differences of h* reproduce Q, weighted by the inner product."""
    results = []
    for label, mirror in mirror_setups():
        region = mirror.region
        dim = region.dim
        y = DUAL_SCALE * rng.standard_normal((cases, region.dim))
        weights = np.asarray(region.inner(np.eye(dim), np.ones(dim)), dtype=float)
        shifts = CONJUGATE_FD_STEP * np.eye(dim)
        upper = mirror.conjugate(y[:, None, :] + shifts)
        lower = mirror.conjugate(y[:, None, :] - shifts)
        slopes = (upper - lower) / (2.0 * CONJUGATE_FD_STEP * weights)
        errors = np.max(np.abs(slopes - mirror.mirror_map(y)), axis=-1)
        violations = errors - CONJUGATE_FD_TOLERANCE
        results.append(_result("conjugate gradient", label, violations))
    return results


def check_entropic_shift(rng, cases) -> list[PropertyResult]:
    shift = 2.5
    region = Simplex(4, mass=2.0)
    mirror = get_mirror(Regularizer.ENTROPIC, region)
    y = DUAL_SCALE * rng.standard_normal((cases, region.dim))
    difference = mirror.conjugate(y + shift) - mirror.conjugate(y) - region.mass * shift
    violations = np.abs(difference) - 1e-12 * (1 + np.abs(y).max())
    return [_result("entropic conjugate shift", "entropic/simplex", violations)]


def check_polar_cone(rng, cases) -> list[PropertyResult]:
    """Dual moves into the normal cone of a box vertex leave the vertex fixed."""
    region = Box([-1.0, 0.0, 2.0], [1.0, 0.5, 4.0])
    mirror = get_mirror(Regularizer.EUCLIDEAN, region)
    at_upper = rng.random((cases, region.dim)) < 0.5
    vertices = np.where(at_upper, region.upper, region.lower)
    normals = np.where(at_upper, 1.0, -1.0) * rng.exponential(size=(cases, region.dim))
    moved = mirror.mirror_map(vertices + normals)
    violations = np.max(np.abs(moved - vertices), axis=-1) - 1e-12
    return [_result("polar cone invariance", "euclidean/box", violations)]


def check_reciprocity(rng, cases) -> list[PropertyResult]:
    """F(p, n g) vanishes as n grows along a ray g exposing the point p."""
    scales = 2.0 ** np.arange(7)
    results = []
    for label, mirror in mirror_setups():
        region = mirror.region
        violations = []
        for _ in range(min(cases, 200)):
            point, direction = _exposed_point(rng, region)
            couplings = _coupling(mirror, point, scales[:, None] * direction)
            violations.append(
                max(couplings[-1] - 1e-9, couplings[-1] - couplings[0] - 1e-12)
            )
        results.append(_result("bregman reciprocity", label, violations))
    return results


# OBJECTIVES
def check_objective_gradients(rng, cases) -> list[PropertyResult]:
    results = []
    for label, objective, region in _objective_setups(rng):
        x = _interior_samples(rng, region, cases)
        _, gradient = objective.value_and_gradient(x)
        shifts = FD_STEP * np.eye(region.dim)
        upper, _ = objective.value_and_gradient(x[:, None, :] + shifts)
        lower, _ = objective.value_and_gradient(x[:, None, :] - shifts)
        errors = np.max(np.abs((upper - lower) / (2.0 * FD_STEP) - gradient), axis=-1)
        violations = errors - FD_TOLERANCE
        results.append(_result("gradient finite differences", label, violations))
    return results


def check_objective_convexity(rng, cases) -> list[PropertyResult]:
    results = []
    for label, objective, region in _objective_setups(rng):
        x, x_other = region.sample(rng, cases), region.sample(rng, cases)
        middle, _ = objective.value_and_gradient(0.5 * (x + x_other))
        value, _ = objective.value_and_gradient(x)
        value_other, _ = objective.value_and_gradient(x_other)
        violations = middle - 0.5 * (value + value_other) - 1e-12
        results.append(_result("midpoint convexity", label, violations))
    return results


def check_strong_convexity_inequality(rng, cases) -> list[PropertyResult]:
    region = Box.cube(-1.0, 1.0, 3)
    factor = rng.standard_normal((3, 3))
    objective = QuadraticObjective(
        rng.uniform(-0.5, 0.5, size=3),
        factor @ factor.T + 0.5 * np.eye(3),
        region=region,
    )
    x = region.sample(rng, cases)
    value, _ = objective.value_and_gradient(x)
    minimum = objective.known_min
    bound = 0.5 * objective.alpha * np.sum((x - minimum.point) ** 2, axis=-1)
    violations = bound - (value - minimum.value) - 1e-12
    return [_result("strong convexity", "quadratic/box", violations)]


# NOISE
def check_covariance(rng, cases) -> list[PropertyResult]:
    """The covariance is PSD and its trace is at most the sup bound."""
    network, paths = _routing_network(rng)
    models = [
        ("constant", ConstantNoise(rng.standard_normal((3, 2)))),
        ("path_correlated", PathCorrelatedNoise.from_network(network, paths)),
    ]
    for schedule in DecaySchedule:
        model = DecayingNoise(0.7, 3, schedule, 0.75)
        models.append((f"decaying/{schedule.value}", model))

    results = []
    for label, model in models:
        violations = []
        for t in rng.uniform(0.0, 1e4, size=cases):
            sigma = covariance(model, None, float(t))
            scale = 1.0 + np.max(np.abs(sigma))
            smallest = np.linalg.eigvalsh(sigma)[0]
            excess = np.trace(sigma) - model.sup_bound()
            violations.append(max(-smallest - 1e-12 * scale, excess - 1e-12 * scale))
        results.append(_result("covariance psd and bounded", label, violations))
    return results


def check_noise_decay_rate(rng, cases) -> list[PropertyResult]:
    """g(t) sqrt(log t) decreases on a log spaced grid up to 1e6 for log power decay."""
    model = DecayingNoise(1.0, 1, DecaySchedule.LOG_POWER, power=0.75)
    times = np.logspace(2, 6, max(cases, 10))
    scaled = model.decay(times) * np.sqrt(np.log(times))
    violations = np.append(np.diff(scaled), scaled[-1] - scaled[0])
    return [_result("log power decay rate", "decaying/log_power", violations)]


# TRAFFIC
def check_path_covariance(rng, cases) -> list[PropertyResult]:
    """Factored and explicit path covariances agree and have the expected trace."""
    violations = []
    for _ in range(min(cases, 200)):
        network = random_network(5, 6, int(rng.integers(2**32)))
        paths = enumerate_paths(network)
        sigma_e = rng.uniform(0.0, 1.0, size=network.edge_count)
        matrix = path_covariance(network, paths, sigma_e)
        factor = path_volatility(network, paths, sigma_e)
        explicit = np.array(
            [
                [np.sum(sigma_e**2 * (p & q)) for q in paths.incidence]
                for p in paths.incidence
            ]
        )
        trace_error = abs(np.trace(matrix) - np.sum(paths.incidence * sigma_e**2))
        smallest = np.linalg.eigvalsh(factor @ factor.T)[0]
        violations.append(
            max(
                np.max(np.abs(matrix - explicit)) - 1e-12,
                trace_error - 1e-12,
                -smallest - 1e-12,
            )
        )
    return [_result("path covariance", "random networks", violations)]


def check_flow_conservation(rng, cases) -> list[PropertyResult]:
    violations = []
    for _ in range(min(cases, 200)):
        demand = float(rng.uniform(0.5, 2))
        network = random_network(6, 8, int(rng.integers(2**32)), demand=demand)
        paths = enumerate_paths(network)
        flow = network.demand * rng.dirichlet(np.ones(len(paths)))
        loads = cost_eval(network, paths, flow).loads
        lengths = np.sum(paths.incidence, axis=1)
        violations.append(abs(np.sum(loads) - np.sum(flow * lengths)) - 1e-12)
    return [_result("flow conservation", "random networks", violations)]


PROPERTY_CHECKS: dict[str, PropertyCheck] = {
    "projection_idempotent": check_projection_idempotent,
    "projection_lipschitz": check_projection_lipschitz,
    "tangent_cone": check_tangent_cone,
    "mirror_lipschitz": check_mirror_lipschitz,
    "fenchel_lower_bound": check_fenchel_lower_bound,
    "fenchel_upper_bound": check_fenchel_upper_bound,
    "fenchel_bregman": check_fenchel_bregman,
    "mirror_image": check_mirror_image,
    "conjugate_gradient": check_conjugate_gradient,
    "entropic_shift": check_entropic_shift,
    "polar_cone": check_polar_cone,
    "reciprocity": check_reciprocity,
    "objective_gradients": check_objective_gradients,
    "objective_convexity": check_objective_convexity,
    "strong_convexity": check_strong_convexity_inequality,
    "covariance": check_covariance,
    "noise_decay_rate": check_noise_decay_rate,
    "path_covariance": check_path_covariance,
    "flow_conservation": check_flow_conservation,
}


def _result(name: str, setup: str, violations) -> PropertyResult:
    violations = np.asarray(violations, dtype=float)
    failures = int(np.sum(~(violations <= 0)))
    worst = float(np.max(violations)) if violations.size else 0.0
    return PropertyResult(name, setup, int(violations.size), failures, worst)


def _coupling(mirror: Mirror, p, y):
    region = mirror.region
    return mirror.value(p) + mirror.conjugate(y) - region.inner(y, p)


def _dual_pair(rng, cases: int, dim: int):
    y = DUAL_SCALE * rng.standard_normal((cases, dim))
    # every other pair is close
    nearby = y + 0.01 * rng.standard_normal((cases, dim))
    far = DUAL_SCALE * rng.standard_normal((cases, dim))
    close = (np.arange(cases) % 2 == 0)[:, None]
    return y, np.where(close, nearby, far)


def _exposed_point(rng, region: FeasibleRegion) -> tuple[np.ndarray, np.ndarray]:
    """Return a boundary point p and a dual direction g with Q(n g) -> p as n grows."""
    if isinstance(region, Box):
        upper = rng.random(region.dim) < 0.5
        return np.where(upper, region.upper, region.lower), np.where(upper, 1.0, -1.0)
    if isinstance(region, Simplex):
        k = int(rng.integers(region.dim))
        direction = np.zeros(region.dim)
        direction[k] = 1.0
        return region.mass * direction, direction
    if isinstance(region, Spectrahedron):
        u = rng.standard_normal(region.order)
        projector = pack_symmetric(np.outer(u, u) / np.dot(u, u))
        return projector, projector
    parts = [_exposed_point(rng, block) for block in region.regions]
    return np.concatenate([p for p, _ in parts]), np.concatenate([g for _, g in parts])


def _objective_setups(rng):
    box = Box.cube(-1.0, 1.0, 4)
    factor = rng.standard_normal((4, 4))
    quadratic = QuadraticObjective(rng.uniform(-1, 1, 4), factor @ factor.T, region=box)
    network, paths = _routing_network(rng)
    traffic = TrafficObjective(network, paths)
    return [
        ("quadratic/box", quadratic, box),
        ("traffic/simplex", traffic, traffic.region),
    ]


def _interior_samples(rng, region: FeasibleRegion, cases: int) -> np.ndarray:
    center = region.center()
    return center + 0.9 * (region.sample(rng, cases) - center)


def _routing_network(rng) -> tuple:
    """Return a random network offering at least two paths, and its path set."""
    while True:
        network = random_network(8, 12, int(rng.integers(2**32)))
        paths = enumerate_paths(network)
        if len(paths) > 1:
            return network, paths
