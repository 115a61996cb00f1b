import math
from collections import OrderedDict
from typing import Any, Callable, Dict

import numpy as np

from conegeom.bodies.lp_ball import (EllipsoidSpec, LpBallSpec, lp_ball_polar_volume,
                                     lp_ball_volume)
from conegeom.enums import BodyKind, Smoothness
from conegeom.errors import ConfigError, DomainError
from conegeom.geometry import BodyHandle, LinearImage, normalized, unit_rows
from conegeom.quadrature import ball_volume

_ROTATION_45 = np.array([[1.0, -1.0], [1.0, 1.0]]) / math.sqrt(2)


class EuclideanBall(BodyHandle):
    kind = BodyKind.ball

    def __init__(self, n: int, radius: float = 1.0):
        super().__init__(n)
        if not radius > 0:
            raise DomainError(f"Radius must be positive, got {radius}.")
        self.radius = float(radius)

    def support(self, u):
        return np.full(len(u), self.radius)

    def support_gradient(self, u):
        return self.radius * u

    def support_hessian(self, u):
        return self.radius * (np.eye(self.dimension)[None] - u[:, :, None] * u[:, None, :])

    def gauge(self, x):
        return np.linalg.norm(x, axis=1) / self.radius

    def gauge_gradient(self, x):
        return unit_rows(x) / self.radius

    def polar(self):
        return EuclideanBall(self.dimension, 1.0 / self.radius)

    def exact_volume(self):
        return ball_volume(self.dimension) * self.radius ** self.dimension

    def exact_polar_volume(self):
        return ball_volume(self.dimension) / self.radius ** self.dimension

    def circumradius(self):
        return self.radius

    def describe(self):
        return {'kind': 'ball', 'n': self.dimension, 'radius': self.radius}


class Ellipsoid(BodyHandle):
    """K = A(B_2^n) for a symmetric positive-definite A."""
    kind = BodyKind.ellipsoid

    def __init__(self, matrix):
        spec = matrix if isinstance(matrix, EllipsoidSpec) else EllipsoidSpec(matrix)
        super().__init__(spec.n)
        self.spec = spec
        self.matrix = spec.matrix
        self.square = self.matrix @ self.matrix
        self.inverse = np.linalg.inv(self.matrix)

    def support(self, u):
        return np.linalg.norm(u @ self.matrix, axis=1)

    def support_gradient(self, u):
        return (u @ self.square) / self.support(u)[:, None]

    def support_hessian(self, u):
        h = self.support(u)
        g = u @ self.square
        return (self.square[None] / h[:, None, None]
                - g[:, :, None] * g[:, None, :] / h[:, None, None] ** 3)

    def gauge(self, x):
        return np.linalg.norm(x @ self.inverse, axis=1)

    def gauge_gradient(self, x):
        y = x @ self.inverse
        return (y @ self.inverse) / np.linalg.norm(y, axis=1)[:, None]

    def polar(self):
        return Ellipsoid(self.inverse)

    def exact_volume(self):
        return self.spec.volume()

    def exact_polar_volume(self):
        return ball_volume(self.dimension) / float(np.linalg.det(self.matrix))

    def circumradius(self):
        return float(np.max(np.linalg.eigvalsh(self.matrix)))

    def describe(self):
        return {'kind': 'ellipsoid', 'matrix': self.matrix.tolist()}


class LpBall(BodyHandle):
    """B_r^n for 1 < r < inf; its support function is the conjugate norm ‖u‖_{r'}."""
    kind = BodyKind.lp_ball

    def __init__(self, n: int, r: float):
        spec = LpBallSpec(n, r)
        if spec.smoothness is not Smoothness.C2_plus:
            raise DomainError(f"Use Cube or CrossPolytope for r = {r}.")
        super().__init__(n)
        self.spec = spec
        self.r = float(r)
        self.s = spec.conjugate

    def support(self, u):
        return np.sum(np.abs(u) ** self.s, axis=1) ** (1 / self.s)

    def support_gradient(self, u):
        norm = self.support(u)
        return np.sign(u) * (np.abs(u) / norm[:, None]) ** (self.s - 1)

    def support_hessian(self, u):
        s = self.s
        norm = self.support(u)
        g = self.support_gradient(u)
        with np.errstate(divide='ignore'):
            diagonal = norm[:, None] ** (1 - s) * np.abs(u) ** (s - 2)
        hess = -g[:, :, None] * g[:, None, :] / norm[:, None, None]
        index = np.arange(self.dimension)
        hess[:, index, index] += diagonal
        return (s - 1) * hess

    def gauge(self, x):
        return np.sum(np.abs(x) ** self.r, axis=1) ** (1 / self.r)

    def gauge_gradient(self, x):
        norm = self.gauge(x)
        return np.sign(x) * (np.abs(x) / norm[:, None]) ** (self.r - 1)

    def polar(self):
        return LpBall(self.dimension, self.s)

    def exact_volume(self):
        return lp_ball_volume(self.spec)

    def exact_polar_volume(self):
        return lp_ball_polar_volume(self.spec)

    def circumradius(self):
        return max(1.0, self.dimension ** (0.5 - 1 / self.r))

    def describe(self):
        return {'kind': 'lp_ball', 'n': self.dimension, 'r': self.r}


class Cube(BodyHandle):
    """[-side/2, side/2]^n, unit volume by default."""
    kind = BodyKind.cube
    smoothness = Smoothness.polytope

    def __init__(self, n: int, side: float = 1.0):
        super().__init__(n)
        self.side = float(side)

    def support(self, u):
        return 0.5 * self.side * np.sum(np.abs(u), axis=1)

    def support_gradient(self, u):
        return 0.5 * self.side * np.sign(u)

    def gauge(self, x):
        return 2 * np.max(np.abs(x), axis=1) / self.side

    def gauge_gradient(self, x):
        index = np.argmax(np.abs(x), axis=1)
        grad = np.zeros_like(x)
        rows = np.arange(len(x))
        grad[rows, index] = 2 * np.sign(x[rows, index]) / self.side
        return grad

    def radial_frame(self):
        return _ROTATION_45 if self.dimension == 2 else np.eye(self.dimension)

    def polar(self):
        return CrossPolytope(self.dimension, 2.0 / self.side)

    def exact_volume(self):
        return self.side ** self.dimension

    def exact_polar_volume(self):
        return (2.0 / self.side) ** self.dimension * 2 ** self.dimension / math.factorial(self.dimension)

    def circumradius(self):
        return 0.5 * self.side * math.sqrt(self.dimension)

    def describe(self):
        return {'kind': 'cube', 'n': self.dimension, 'side': self.side}


class CrossPolytope(BodyHandle):
    """{x : ‖x‖_1 <= radius}."""
    kind = BodyKind.cross_polytope
    smoothness = Smoothness.polytope

    def __init__(self, n: int, radius: float = 1.0):
        super().__init__(n)
        self.radius = float(radius)

    def support(self, u):
        return self.radius * np.max(np.abs(u), axis=1)

    def support_gradient(self, u):
        index = np.argmax(np.abs(u), axis=1)
        grad = np.zeros_like(u)
        rows = np.arange(len(u))
        grad[rows, index] = self.radius * np.sign(u[rows, index])
        return grad

    def gauge(self, x):
        return np.sum(np.abs(x), axis=1) / self.radius

    def gauge_gradient(self, x):
        return np.sign(x) / self.radius

    def normal_frame(self):
        return _ROTATION_45 if self.dimension == 2 else np.eye(self.dimension)

    def polar(self):
        return Cube(self.dimension, 2.0 / self.radius)

    def exact_volume(self):
        return self.radius ** self.dimension * 2 ** self.dimension / math.factorial(self.dimension)

    def exact_polar_volume(self):
        return (2.0 / self.radius) ** self.dimension

    def circumradius(self):
        return self.radius

    def describe(self):
        return {'kind': 'cross_polytope', 'n': self.dimension, 'radius': self.radius}


def _lp_ball(config: Dict[str, Any]) -> BodyHandle:
    n, r = int(config['n']), float(config['r'])
    if r == 2:
        return EuclideanBall(n)
    if r == 1:
        return CrossPolytope(n)
    if math.isinf(r):
        return Cube(n, 2.0)
    return LpBall(n, r)


body_dicts: 'OrderedDict[BodyKind, Callable[[Dict[str, Any]], BodyHandle]]' = OrderedDict([
    (BodyKind.ball, lambda c: EuclideanBall(int(c['n']), float(c.get('radius', 1.0)))),
    (BodyKind.lp_ball, _lp_ball),
    (BodyKind.ellipsoid, lambda c: Ellipsoid(np.asarray(c['matrix'], dtype=float))),
    (BodyKind.cube, lambda c: Cube(int(c['n']), float(c.get('side', 1.0)))),
    (BodyKind.cross_polytope, lambda c: CrossPolytope(int(c['n']), float(c.get('radius', 1.0)))),
    (BodyKind.linear_image, lambda c: LinearImage(from_config(c['base']),
                                                  np.asarray(c['matrix'], dtype=float))),
    (BodyKind.normalized, lambda c: normalized(from_config(c['base']))),
    (BodyKind.polar, lambda c: from_config(c['base']).polar()),
])


def from_config(config: Dict[str, Any]) -> BodyHandle:
    """Builds a body from its declarative description.

    Example: ``{"kind": "normalized", "base": {"kind": "lp_ball", "n": 2, "r": 3.0}}``.

    :param config: Mapping with a `kind` key and the fields of that kind.
    :return: The body handle.
    """
    try:
        kind = BodyKind(config['kind'])
    except (KeyError, ValueError) as e:
        raise ConfigError(f"Unknown or missing body kind in {config}.") from e
    try:
        return body_dicts[kind](config)
    except KeyError as e:
        raise ConfigError(f"Body config {config} is missing the field {e}.") from e
