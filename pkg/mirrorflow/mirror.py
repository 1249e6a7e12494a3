"""Regularizers, mirror maps, conjugates, Fenchel coupling and Bregman divergence.

A regularizer h is paired with a feasible region through `get_mirror`, which returns an
object implementing the `Mirror` protocol. The mirror methods work on stacks of points
and perform no feasibility checks, they are used in the integrator hot loop. The module
level functions (`reg_value`, `mirror_map`, `fenchel_coupling`, ...) validate their
inputs first.

Supported pairings:
- Euclidean with boxes, simplices and products of those (Q is the Euclidean projection)
- Entropic with simplices (Q is the softmax scaled by the simplex mass) and with boxes
  (Q is the coordinatewise logistic map onto [lower, upper])
- von Neumann with the spectrahedron (Q(Y) = exp(Y) / (1 + tr exp(Y)))
- any supported pairing blockwise on a `Product` region
"""

from __future__ import annotations
from enum import Enum
from typing import Protocol, Union

import numpy as np

from mirrorflow.errors import (
    BoundaryPointError,
    InfeasiblePointError,
    UnsupportedPairingError,
)
from mirrorflow.geometry import (
    Box,
    FeasibleRegion,
    Product,
    Simplex,
    Spectrahedron,
    pack_symmetric,
    unpack_symmetric,
)


FEASIBILITY_TOLERANCE = 1e-9


class Regularizer(Enum):
    EUCLIDEAN = "euclidean"
    ENTROPIC = "entropic"
    VON_NEUMANN = "von_neumann"

    @property
    def modulus(self) -> float:
        """Nominal strong convexity constant K for unit mass regions in their norm."""
        return 0.5 if self is Regularizer.VON_NEUMANN else 1.0

    @property
    def steep(self) -> bool:
        return self is not Regularizer.EUCLIDEAN


class Mirror(Protocol):
    """A regularizer bound to a feasible region."""

    regularizer: Regularizer
    region: FeasibleRegion

    @property
    def modulus(self) -> float: ...

    def value(self, x: np.ndarray) -> np.ndarray: ...

    def gradient(self, x: np.ndarray) -> np.ndarray: ...

    def mirror_map(self, y: np.ndarray) -> np.ndarray: ...

    def conjugate(self, y: np.ndarray) -> np.ndarray: ...

    def depth(self) -> float: ...

    def is_interior(self, x: np.ndarray) -> Union[bool, np.ndarray]: ...


class EuclideanMirror:
    """h(x) = ||x||^2 / 2, whose mirror map is the closest point projection."""

    regularizer = Regularizer.EUCLIDEAN

    def __init__(self, region: Union[Box, Simplex]):
        self.region = region

    @property
    def modulus(self) -> float:
        # the L1 norm of a simplex exceeds the L2 norm by up to sqrt(dim)
        if isinstance(self.region, Simplex):
            return 1.0 / self.region.dim
        return 1.0

    def value(self, x):
        return 0.5 * np.sum(np.square(x), axis=-1)

    def gradient(self, x):
        return np.array(x, dtype=float)

    def mirror_map(self, y):
        return self.region.project(y)

    def conjugate(self, y):
        x = self.mirror_map(y)
        return np.sum(y * x, axis=-1) - self.value(x)

    def depth(self) -> float:
        if isinstance(self.region, Simplex):
            mass, dim = self.region.mass, self.region.dim
            return 0.5 * mass**2 * (1.0 - 1.0 / dim)
        lower, upper = self.region.lower, self.region.upper
        largest = 0.5 * np.sum(np.maximum(lower**2, upper**2))
        smallest = self.value(self.region.project(np.zeros(self.region.dim)))
        return float(largest - smallest)

    def is_interior(self, x):
        return True


class EntropicSimplexMirror:
    """h(x) = sum x_i log(x_i / mass) on the scaled simplex (logit choice map)."""

    regularizer = Regularizer.ENTROPIC

    def __init__(self, region: Simplex):
        self.region = region
        self._mass = region.mass

    @property
    def modulus(self) -> float:
        return 1.0 / self._mass

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return np.sum(_xlogx(x), axis=-1) - np.log(self._mass) * np.sum(x, axis=-1)

    def gradient(self, x):
        return np.log(np.asarray(x, dtype=float) / self._mass) + 1.0

    def mirror_map(self, y):
        y = np.asarray(y, dtype=float)
        weights = np.exp(y - np.max(y, axis=-1, keepdims=True))
        return self._mass * weights / np.sum(weights, axis=-1, keepdims=True)

    def conjugate(self, y):
        return self._mass * _logsumexp(np.asarray(y, dtype=float))

    def depth(self) -> float:
        return self._mass * float(np.log(self.region.dim))

    def is_interior(self, x):
        return _reduce(np.all(np.asarray(x) > 0, axis=-1))


class EntropicBoxMirror:
    """Binary entropy on each coordinate of a box, rescaled to [lower, upper]."""

    regularizer = Regularizer.ENTROPIC

    def __init__(self, region: Box):
        if np.any(region.widths <= 0):
            raise UnsupportedPairingError(
                "the entropic regularizer needs a box with positive widths"
            )
        self.region = region
        self._lower = region.lower
        self._widths = region.widths

    @property
    def modulus(self) -> float:
        return 4.0 / float(np.max(self._widths))

    def value(self, x):
        s = (np.asarray(x, dtype=float) - self._lower) / self._widths
        return np.sum(self._widths * (_xlogx(s) + _xlogx(1.0 - s)), axis=-1)

    def gradient(self, x):
        s = (np.asarray(x, dtype=float) - self._lower) / self._widths
        return np.log(s) - np.log1p(-s)

    def mirror_map(self, y):
        logistic = 0.5 * (1.0 + np.tanh(0.5 * np.asarray(y, dtype=float)))
        return self._lower + self._widths * logistic

    def conjugate(self, y):
        y = np.asarray(y, dtype=float)
        return np.sum(self._lower * y + self._widths * np.logaddexp(0.0, y), axis=-1)

    def depth(self) -> float:
        return float(np.log(2.0) * np.sum(self._widths))

    def is_interior(self, x):
        x = np.asarray(x)
        inside = (x > self.region.lower) & (x < self.region.upper)
        return _reduce(np.all(inside, axis=-1))


class VonNeumannMirror:
    """h(X) = tr(X log X) + (1 - tr X) log(1 - tr X) on the spectrahedron."""

    regularizer = Regularizer.VON_NEUMANN

    def __init__(self, region: Spectrahedron):
        self.region = region
        self._order = region.order

    @property
    def modulus(self) -> float:
        return 0.5

    def value(self, x):
        spectrum = np.clip(self.region.eigenvalues(x), 0.0, None)
        remainder = np.clip(1.0 - np.sum(spectrum, axis=-1), 0.0, None)
        return np.sum(_xlogx(spectrum), axis=-1) + _xlogx(remainder)

    def gradient(self, x):
        spectrum, basis = np.linalg.eigh(self.region.unpack(x))
        remainder = 1.0 - np.sum(spectrum, axis=-1)
        scaled = basis * np.log(spectrum)[..., None, :]
        log_matrix = scaled @ np.swapaxes(basis, -1, -2)
        shift = np.log(remainder)[..., None, None] * np.eye(self._order)
        return pack_symmetric(log_matrix - shift)

    def mirror_map(self, y):
        spectrum, basis = np.linalg.eigh(unpack_symmetric(y, self._order))
        top = np.maximum(np.max(spectrum, axis=-1, keepdims=True), 0.0)
        weights = np.exp(spectrum - top)
        weights = weights / (np.exp(-top) + np.sum(weights, axis=-1, keepdims=True))
        matrix = (basis * weights[..., None, :]) @ np.swapaxes(basis, -1, -2)
        return pack_symmetric(matrix)

    def conjugate(self, y):
        spectrum = np.linalg.eigvalsh(unpack_symmetric(y, self._order))
        top = np.maximum(np.max(spectrum, axis=-1), 0.0)
        total = np.exp(-top) + np.sum(np.exp(spectrum - top[..., None]), axis=-1)
        return top + np.log(total)

    def depth(self) -> float:
        return float(np.log(self._order + 1))

    def is_interior(self, x):
        spectrum = self.region.eigenvalues(x)
        inside = (np.min(spectrum, axis=-1) > 0) & (np.sum(spectrum, axis=-1) < 1)
        return _reduce(inside)


class ProductMirror:
    """The same regularizer applied blockwise on a product region."""

    def __init__(self, regularizer: Regularizer, region: Product):
        self.regularizer = regularizer
        self.region = region
        self.blocks = [get_mirror(regularizer, block) for block in region.regions]

    @property
    def modulus(self) -> float:
        return min(block.modulus for block in self.blocks)

    def value(self, x):
        parts = self.region.split(x)
        return sum(block.value(part) for block, part in zip(self.blocks, parts))

    def gradient(self, x):
        parts = self.region.split(x)
        return np.concatenate(
            [block.gradient(part) for block, part in zip(self.blocks, parts)], axis=-1
        )

    def mirror_map(self, y):
        parts = self.region.split(y)
        return np.concatenate(
            [block.mirror_map(part) for block, part in zip(self.blocks, parts)], axis=-1
        )

    def conjugate(self, y):
        parts = self.region.split(y)
        return sum(block.conjugate(part) for block, part in zip(self.blocks, parts))

    def depth(self) -> float:
        return float(sum(block.depth() for block in self.blocks))

    def is_interior(self, x):
        parts = self.region.split(x)
        inside = [
            np.asarray(block.is_interior(part))
            for block, part in zip(self.blocks, parts)
        ]
        return _reduce(np.logical_and.reduce(inside))


_MIRROR_CLASSES = {
    (Regularizer.EUCLIDEAN, Box): EuclideanMirror,
    (Regularizer.EUCLIDEAN, Simplex): EuclideanMirror,
    (Regularizer.ENTROPIC, Simplex): EntropicSimplexMirror,
    (Regularizer.ENTROPIC, Box): EntropicBoxMirror,
    (Regularizer.VON_NEUMANN, Spectrahedron): VonNeumannMirror,
}


def get_mirror(reg: Union[Regularizer, str], region: FeasibleRegion) -> Mirror:
    """Bind a regularizer to a feasible region.

    Raises:
        UnsupportedPairingError: If the regularizer is not defined on the region.
    """
    reg = Regularizer(reg)
    if isinstance(region, Product):
        return ProductMirror(reg, region)
    try:
        mirror_class = _MIRROR_CLASSES[(reg, type(region))]
    except KeyError:
        raise UnsupportedPairingError(
            f"the {reg.value} regularizer is not supported on {type(region).__name__}"
        )
    return mirror_class(region)


# MAIN API FUNCTIONS
def reg_value(reg, region: FeasibleRegion, x) -> float:
    """Return h(x), using the convention 0 log 0 = 0 on the boundary."""
    _check_feasible(region, x, "x")
    return _as_float(get_mirror(reg, region).value(x))


def mirror_map(reg, region: FeasibleRegion, y) -> np.ndarray:
    """Return Q(y) = argmax over the region of <y, x> - h(x)."""
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("the dual vector must be finite")
    return get_mirror(reg, region).mirror_map(y)


def conjugate(reg, region: FeasibleRegion, y) -> float:
    """Return the convex conjugate h*(y) = <y, Q(y)> - h(Q(y))."""
    return _as_float(get_mirror(reg, region).conjugate(np.asarray(y, dtype=float)))


def fenchel_coupling(reg, region: FeasibleRegion, p, y) -> float:
    """Return F(p, y) = h(p) + h*(y) - <y, p>, which is nonnegative."""
    _check_feasible(region, p, "p")
    mirror = get_mirror(reg, region)
    y = np.asarray(y, dtype=float)
    coupling = mirror.value(p) + mirror.conjugate(y) - region.inner(y, p)
    return _as_float(coupling)


def bregman_divergence(reg, region: FeasibleRegion, p, x) -> float:
    """Return D(p, x) = h(p) - h(x) - <grad h(x), p - x>.

    Raises:
        BoundaryPointError: If x lies on the boundary and the regularizer is steep.
    """
    _check_feasible(region, p, "p")
    _check_feasible(region, x, "x")
    mirror = get_mirror(reg, region)
    if not np.all(mirror.is_interior(x)):
        raise BoundaryPointError(
            f"the {mirror.regularizer.value} regularizer is not differentiable at x"
        )
    p = np.asarray(p, dtype=float)
    x = np.asarray(x, dtype=float)
    linear = region.inner(mirror.gradient(x), p - x)
    return _as_float(mirror.value(p) - mirror.value(x) - linear)


def regularizer_depth(reg, region: FeasibleRegion) -> float:
    """Return Omega = max h - min h over the region."""
    return get_mirror(reg, region).depth()


def strong_convexity(reg, region: FeasibleRegion) -> float:
    """Return the strong convexity constant K of h with respect to the region norm."""
    return get_mirror(reg, region).modulus


def _check_feasible(region: FeasibleRegion, x, name: str) -> None:
    if not np.all(region.contains(x, FEASIBILITY_TOLERANCE)):
        raise InfeasiblePointError(f"'{name}' does not lie in the feasible region")


def _xlogx(x: np.ndarray) -> np.ndarray:
    positive = x > 0
    return np.where(positive, x * np.log(np.where(positive, x, 1.0)), 0.0)


def _logsumexp(y: np.ndarray) -> np.ndarray:
    top = np.max(y, axis=-1)
    return top + np.log(np.sum(np.exp(y - top[..., None]), axis=-1))


def _reduce(value):
    return np.asarray(value).item() if np.ndim(value) == 0 else value


def _as_float(value):
    return float(value) if np.ndim(value) == 0 else np.asarray(value)
