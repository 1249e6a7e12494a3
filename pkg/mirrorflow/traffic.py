"""Single origin-destination traffic networks with affine edge costs.

A `Network` is a directed multigraph whose edges carry the cost c_e(w) = a_e * w + b_e
and a noise volatility sigma_e. Routing flows live on a `PathSet`, the simple origin to
destination paths of the network, and are points of the scaled simplex {x >= 0 :
sum(x) = demand}.

Network files are plain text. The header line is `nodes N od o d demand L`, followed by
one edge per line as `src dst a b sigma`. Blank lines and lines starting with "#" are
ignored.
"""

from __future__ import annotations
from dataclasses import dataclass
import itertools
import os
from typing import Iterator, NamedTuple, Optional, Union
import warnings

import numpy as np

from mirrorflow.errors import InfeasiblePointError, NoPathError


DEFAULT_PATH_CAP = 64
DEFAULT_EDGE_SIGMA = 0.25
FLOW_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Edge:
    source: int
    target: int
    slope: float
    intercept: float
    sigma: float = 0.0

    def __post_init__(self):
        for name in ["slope", "intercept", "sigma"]:
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ValueError(
                    f"edge '{name}' must be finite and nonnegative, not {value}"
                )
            object.__setattr__(self, name, float(value))
        if self.source == self.target:
            raise ValueError(f"self loop at node {self.source} is not allowed")

    def cost(self, load: float) -> float:
        return self.slope * load + self.intercept


@dataclass(frozen=True, eq=False)
class Network:
    """Directed multigraph with a single origin-destination pair and a fixed demand."""

    node_count: int
    edges: tuple[Edge, ...]
    origin: int
    destination: int
    demand: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(self.edges))
        if self.node_count < 2:
            raise ValueError(f"'node_count' must be at least 2, not {self.node_count}")
        for node in (self.origin, self.destination):
            if not 0 <= node < self.node_count:
                raise ValueError(f"node {node} is not part of the network")
        if self.origin == self.destination:
            raise ValueError("'origin' and 'destination' must differ")
        if not np.isfinite(self.demand) or self.demand <= 0:
            raise ValueError(f"'demand' must be positive and finite, not {self.demand}")
        for edge in self.edges:
            nodes = (edge.source, edge.target)
            if not all(0 <= node < self.node_count for node in nodes):
                raise ValueError(
                    f"edge {edge.source}->{edge.target} leaves the network"
                )
        if not self._destination_reachable():
            raise NoPathError(
                f"no path from node {self.origin} to node {self.destination}"
            )

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def slopes(self) -> np.ndarray:
        return np.array([edge.slope for edge in self.edges])

    @property
    def intercepts(self) -> np.ndarray:
        return np.array([edge.intercept for edge in self.edges])

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([edge.sigma for edge in self.edges])

    def outgoing(self) -> list[list[int]]:
        """Return the outgoing edge indices of every node in increasing index order."""
        outgoing: list[list[int]] = [[] for _ in range(self.node_count)]
        for index, edge in enumerate(self.edges):
            outgoing[edge.source].append(index)
        return outgoing

    def _destination_reachable(self) -> bool:
        outgoing = self.outgoing()
        seen = {self.origin}
        frontier = [self.origin]
        while frontier:
            node = frontier.pop()
            for index in outgoing[node]:
                target = self.edges[index].target
                if target not in seen:
                    seen.add(target)
                    frontier.append(target)
        return self.destination in seen


@dataclass(frozen=True, eq=False)
class PathSet:
    """Simple origin-destination paths given as edge index sequences.

    Attributes:
        paths: One tuple of edge indices per path.
        incidence: Boolean matrix of shape (paths, edges), True where the edge lies on
            the path.
        truncated: True if the enumeration stopped at the path cap.
    """

    paths: tuple[tuple[int, ...], ...]
    incidence: np.ndarray
    truncated: bool = False

    def __len__(self) -> int:
        return len(self.paths)

    def nodes(self, network: Network, index: int) -> list[int]:
        """Return the node sequence visited by one path."""
        edges = [network.edges[i] for i in self.paths[index]]
        return [edges[0].source] + [edge.target for edge in edges]


class CostEvaluation(NamedTuple):
    loads: np.ndarray
    total: float
    marginal: np.ndarray


# MAIN API FUNCTIONS
def enumerate_paths(network: Network, cap: int = DEFAULT_PATH_CAP) -> PathSet:
    """Enumerate simple origin-destination paths by depth first search.

    Paths are returned in lexicographic order of their edge index sequences. If the
    network has more than `cap` simple paths, only the first `cap` are kept, the
    `truncated` flag is set and a warning is issued.

    Raises:
        ValueError: If cap is smaller than one.
        NoPathError: If the destination cannot be reached.
    """
    if cap < 1:
        raise ValueError(f"'cap' must be at least 1, not {cap}")
    found = list(itertools.islice(_simple_paths(network), cap + 1))
    if not found:
        raise NoPathError(
            f"no path from node {network.origin} to {network.destination}"
        )

    truncated = len(found) > cap
    if truncated:
        warnings.warn(f"path enumeration truncated at {cap} paths")
        found = found[:cap]

    incidence = np.zeros((len(found), network.edge_count), dtype=bool)
    for row, path in enumerate(found):
        incidence[row, list(path)] = True
    incidence.setflags(write=False)
    return PathSet(tuple(found), incidence, truncated)


def cost_eval(network: Network, paths: PathSet, x) -> CostEvaluation:
    """Return edge loads, total network cost and marginal path costs of a routing flow.

    Raises:
        InfeasiblePointError: If x is not a routing flow of the network demand.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (len(paths),):
        raise InfeasiblePointError(f"expected a flow over {len(paths)} paths")
    nonnegative = np.all(x >= -FLOW_TOLERANCE)
    tolerance = FLOW_TOLERANCE * max(1.0, network.demand)
    balanced = abs(np.sum(x) - network.demand) <= tolerance
    if not (nonnegative and balanced):
        raise InfeasiblePointError("the flow must be nonnegative and sum to the demand")
    loads, total, marginal = network_costs(
        network.slopes, network.intercepts, paths.incidence, x
    )
    return CostEvaluation(loads, float(total), marginal)


def network_costs(slopes, intercepts, incidence, x):
    """Unchecked cost evaluation for one flow or a stack of flows."""
    incidence = np.asarray(incidence, dtype=float)
    loads = x @ incidence
    total = np.sum(loads * (slopes * loads + intercepts), axis=-1)
    marginal = (2.0 * slopes * loads + intercepts) @ incidence.T
    return loads, total, marginal


def path_covariance(network: Network, paths: PathSet, sigma_e=None) -> np.ndarray:
    """Return the path covariance with entries sum of sigma_e^2 over shared edges.

    Args:
        sigma_e: Edge volatilities; defaults to the sigma stored on the network edges.
    """
    factor = path_volatility(network, paths, sigma_e)
    return factor @ factor.T


def path_volatility(network: Network, paths: PathSet, sigma_e=None) -> np.ndarray:
    """Return the path by edge volatility matrix incidence * diag(sigma_e)."""
    if sigma_e is None:
        sigma_e = network.sigmas
    sigma_e = np.broadcast_to(np.asarray(sigma_e, dtype=float), (network.edge_count,))
    if np.any(sigma_e < 0) or not np.all(np.isfinite(sigma_e)):
        raise ValueError("edge volatilities must be finite and nonnegative")
    return paths.incidence * sigma_e


def random_network(
    nodes: int,
    extra_edges: int,
    seed: int,
    demand: float = 1.0,
    sigma: float = DEFAULT_EDGE_SIGMA,
) -> Network:
    """Return a seeded random network from node 0 to node `nodes - 1`.

    A random spanning path through all nodes guarantees that the destination can be
    reached; `extra_edges` further edges connect random distinct node pairs. Slopes and
    intercepts are drawn uniformly from (0, 1).
    """
    if nodes < 2:
        raise ValueError(f"'nodes' must be at least 2, not {nodes}")
    if extra_edges < 0:
        raise ValueError(f"'extra_edges' must be nonnegative, not {extra_edges}")
    rng = np.random.default_rng(seed)
    chain = [0, *rng.permutation(np.arange(1, nodes - 1)).tolist(), nodes - 1]
    pairs = list(zip(chain[:-1], chain[1:]))
    for _ in range(extra_edges):
        source, target = rng.choice(nodes, size=2, replace=False)
        pairs.append((int(source), int(target)))

    low = np.nextafter(0.0, 1.0)
    slopes = rng.uniform(low, 1.0, size=len(pairs))
    intercepts = rng.uniform(low, 1.0, size=len(pairs))
    edges = tuple(
        Edge(int(s), int(t), float(a), float(b), sigma)
        for (s, t), a, b in zip(pairs, slopes, intercepts)
    )
    return Network(nodes, edges, 0, nodes - 1, demand)


def read_network(path: Union[str, os.PathLike]) -> Network:
    """Read a network file.

    Raises:
        ValueError: If the file is malformed; the message names the line.
    """
    header: Optional[list[str]] = None
    edges = []
    with open(path, "r", encoding="utf-8") as file:
        for number, line in enumerate(file, start=1):
            tokens = line.split()
            if not tokens or tokens[0].startswith("#"):
                continue
            try:
                if header is None:
                    header = tokens
                    node_count, origin, destination, demand = _parse_header(tokens)
                else:
                    edges.append(_parse_edge(tokens))
            except ValueError as error:
                raise ValueError(f"{path}, line {number}: {error}") from error
    if header is None:
        raise ValueError(f"{path}: missing header line")
    return Network(node_count, tuple(edges), origin, destination, demand)


def write_network(network: Network, path: Union[str, os.PathLike]) -> None:
    """Write a network file that `read_network` reproduces exactly."""
    lines = [
        f"nodes {network.node_count}  od {network.origin} {network.destination}  "
        f"demand {network.demand!r}"
    ]
    for edge in network.edges:
        lines.append(
            f"{edge.source} {edge.target} "
            f"{edge.slope!r} {edge.intercept!r} {edge.sigma!r}"
        )
    with open(path, "w", encoding="utf-8") as file:
        file.write("\n".join(lines) + "\n")


def _simple_paths(network: Network) -> Iterator[tuple[int, ...]]:
    outgoing = network.outgoing()

    def extend(node: int, visited: set[int], prefix: list[int]):
        if node == network.destination:
            yield tuple(prefix)
            return
        for index in outgoing[node]:
            target = network.edges[index].target
            if target in visited:
                continue
            visited.add(target)
            prefix.append(index)
            yield from extend(target, visited, prefix)
            prefix.pop()
            visited.remove(target)

    yield from extend(network.origin, {network.origin}, [])


def _parse_header(tokens: list[str]) -> tuple[int, int, int, float]:
    keywords = [tokens[0], tokens[2], tokens[5]] if len(tokens) == 7 else []
    if keywords != ["nodes", "od", "demand"]:
        raise ValueError("expected a header 'nodes N od o d demand L'")
    return int(tokens[1]), int(tokens[3]), int(tokens[4]), float(tokens[6])


def _parse_edge(tokens: list[str]) -> Edge:
    if len(tokens) not in (4, 5):
        raise ValueError("expected an edge 'src dst a b sigma'")
    sigma = float(tokens[4]) if len(tokens) == 5 else 0.0
    source, target = int(tokens[0]), int(tokens[1])
    return Edge(source, target, float(tokens[2]), float(tokens[3]), sigma)
