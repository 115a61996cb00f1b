"""Symmetric convex bodies and the differential geometry every other module consumes.

A body is described by its support function h_K and its Minkowski gauge g_K (so that the radial
function is ρ_K = 1/g_K). All body methods are vectorized over rows: they take arrays of shape
(m, n) and return arrays of shape (m,) or (m, n, ...). The module-level operations accept a single
:class:`UnitDirection` or an array of directions.
"""
import dataclasses
import logging
import warnings
from abc import ABC, abstractmethod
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from conegeom.enums import BodyKind, Smoothness
from conegeom.errors import (AccuracyWarning, DegenerateBody, DimensionMismatch, NonSmoothBody,
                             PolarNotInCatalog, SingularHessian, SingularMatrix)
from conegeom.quadrature import IntegralResult, SphereRule, integrate_sphere, qmc_rule, sphere_rule
from conegeom.config import QuadratureConfig

logger = logging.getLogger(__name__)

MEMBERSHIP_SLACK = 1e-12
FD_GRADIENT_STEP = 1e-6
FD_HESSIAN_STEP = 1e-4
SPREAD_SEED = 0


@dataclasses.dataclass(frozen=True)
class UnitDirection:
    coordinates: np.ndarray

    def __post_init__(self):
        coordinates = np.asarray(self.coordinates, dtype=float).reshape(-1)
        norm = np.linalg.norm(coordinates)
        if not np.isfinite(norm) or norm == 0:
            raise ValueError("A unit direction needs a finite nonzero vector.")
        object.__setattr__(self, 'coordinates', coordinates / norm)

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.coordinates.copy()
        return self.coordinates.astype(dtype)

    def __neg__(self) -> 'UnitDirection':
        return UnitDirection(-self.coordinates)

    @property
    def dimension(self) -> int:
        return self.coordinates.shape[0]


Directions = Union[UnitDirection, np.ndarray]


def unit_rows(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def as_rows(u: Directions, dimension: int, normalize: bool = True) -> Tuple[np.ndarray, bool]:
    """Turns a direction or an array of directions into an (m, n) array.

    :return: The rows and whether the input was a single direction.
    """
    rows = np.asarray(u, dtype=float)
    single = rows.ndim == 1
    rows = np.atleast_2d(rows)
    if rows.shape[-1] != dimension:
        raise DimensionMismatch(f"Expected directions in R^{dimension}, got shape {rows.shape}.")
    if normalize:
        rows = unit_rows(rows)
    return rows, single


def _scalar_or_array(values: np.ndarray, single: bool):
    return float(values[0]) if single else values


def extend_homogeneously(function, x: np.ndarray) -> np.ndarray:
    """Evaluates the 1-homogeneous extension |x|·φ(x/|x|) of a function on the sphere."""
    norm = np.linalg.norm(x, axis=-1)
    return norm * function(x / norm[:, None])


def fd_gradient(function, x: np.ndarray, step: float = FD_GRADIENT_STEP) -> np.ndarray:
    m, n = x.shape
    grad = np.empty((m, n))
    for i in range(n):
        shift = np.zeros(n)
        shift[i] = step
        grad[:, i] = (function(x + shift) - function(x - shift)) / (2 * step)
    return grad


def _second_differences(function, x: np.ndarray, step: np.ndarray) -> np.ndarray:
    m, n = x.shape
    eye = np.eye(n)
    center = function(x)
    hess = np.empty((m, n, n))
    s = step[:, None]
    for i in range(n):
        ei = s * eye[i]
        hess[:, i, i] = (function(x + ei) - 2 * center + function(x - ei)) / step ** 2
        for j in range(i + 1, n):
            ej = s * eye[j]
            mixed = (function(x + ei + ej) - function(x + ei - ej) - function(x - ei + ej)
                     + function(x - ei - ej)) / (4 * step ** 2)
            hess[:, i, j] = mixed
            hess[:, j, i] = mixed
    return hess


def fd_hessian(function, x: np.ndarray, scale: np.ndarray,
               step: float = FD_HESSIAN_STEP) -> np.ndarray:
    """Central-difference Hessian with step `step·scale`, Richardson-extrapolated once."""
    coarse = _second_differences(function, x, step * scale)
    fine = _second_differences(function, x, 0.5 * step * scale)
    return (4 * fine - coarse) / 3


class BodyHandle(ABC):
    """An origin-symmetric convex body with 0 in its interior.

    Subclasses implement :meth:`support` and :meth:`gauge`; gradients and the support Hessian fall
    back to finite differences when no closed form is given.
    """
    kind: BodyKind = BodyKind.ball
    smoothness: Smoothness = Smoothness.C2_plus

    def __init__(self, dimension: int):
        if dimension < 2:
            raise ValueError(f"Bodies live in dimension n >= 2, got {dimension}.")
        self._dimension = int(dimension)

    @property
    def dimension(self) -> int:
        return self._dimension

    @abstractmethod
    def support(self, u: np.ndarray) -> np.ndarray:
        """h_K at unit rows u."""

    @abstractmethod
    def gauge(self, x: np.ndarray) -> np.ndarray:
        """Minkowski gauge of arbitrary rows x."""

    def support_extension(self, x: np.ndarray) -> np.ndarray:
        return extend_homogeneously(self.support, x)

    def support_gradient(self, u: np.ndarray) -> np.ndarray:
        return fd_gradient(self.support_extension, u)

    def support_hessian(self, u: np.ndarray) -> np.ndarray:
        return fd_hessian(self.support_extension, u, self.support(u))

    def gauge_gradient(self, x: np.ndarray) -> np.ndarray:
        scale = np.linalg.norm(x, axis=-1, keepdims=True)
        return fd_gradient(self.gauge, x / scale)

    def radial(self, u: np.ndarray) -> np.ndarray:
        return 1.0 / self.gauge(u)

    def membership(self, x: np.ndarray) -> np.ndarray:
        return self.gauge(np.atleast_2d(x)) <= 1 + MEMBERSHIP_SLACK

    def normal_frame(self) -> np.ndarray:
        """Matrix whose image of the coordinate hyperplanes contains the normal-side kinks."""
        return np.eye(self.dimension)

    def radial_frame(self) -> np.ndarray:
        """Matrix whose image of the coordinate hyperplanes contains the radial-side kinks."""
        return np.eye(self.dimension)

    def polar(self) -> 'BodyHandle':
        raise PolarNotInCatalog(f"No analytic polar for {self.kind.value} bodies.")

    def exact_volume(self) -> Optional[float]:
        return None

    def exact_polar_volume(self) -> Optional[float]:
        return None

    def circumradius(self) -> float:
        # K sits in the box with half-widths h(e_i)
        return float(np.linalg.norm(self.support(np.eye(self.dimension))))

    def describe(self) -> Dict[str, Any]:
        return {'kind': self.kind.value, 'n': self.dimension}

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.describe()})"


@dataclasses.dataclass
class BoundaryPoint:
    """A batch of boundary points with their normals and Gauss curvatures."""
    x: np.ndarray
    normal: np.ndarray
    gauss_curvature: np.ndarray
    support_value: np.ndarray


def tangent_basis(u: np.ndarray) -> np.ndarray:
    """Orthonormal bases of u^⊥, shape (m, n, n-1), from the Householder reflection taking ±e_n to u."""
    m, n = u.shape
    sign = np.where(u[:, -1] >= 0, 1.0, -1.0)
    v = u.copy()
    v[:, -1] += sign
    reflection = np.eye(n)[None] - 2 * v[:, :, None] * v[:, None, :] / np.sum(v * v, axis=1)[:, None, None]
    return reflection[:, :, :-1]


def _check_smooth(body: BodyHandle) -> None:
    if body.smoothness is not Smoothness.C2_plus:
        raise NonSmoothBody(
            f"The curvature function needs a C2_plus body, got a {body.smoothness.value} body.")


def curvature_rows(body: BodyHandle, u: np.ndarray) -> np.ndarray:
    _check_smooth(body)
    hess = body.support_hessian(u)
    flat = ~np.all(np.isfinite(hess), axis=(1, 2))
    basis = tangent_basis(u)
    safe = np.where(flat[:, None, None], 0.0, hess)
    restricted = np.einsum('mia,mij,mjb->mab', basis, safe, basis)
    det = np.linalg.det(restricted)
    det = np.where(flat, np.inf, det)
    bad = ~(det > 0)
    if np.any(bad):
        index = int(np.argmax(bad))
        raise SingularHessian(
            f"Restricted support Hessian has determinant {det[index]:.3e} at u = {u[index]}.")
    return det


def curvature_function(body: BodyHandle, u: Directions):
    """Curvature function f_K(u), the reciprocal Gauss curvature at the point with normal u.

    It is the determinant of the support Hessian restricted to u^⊥. Flat points (zero Gauss
    curvature) give `inf`.

    :param body: A C2_plus body.
    :param u: A direction or an (m, n) array of directions.
    :return: A float for a single direction, otherwise an array of shape (m,).
    """
    rows, single = as_rows(u, body.dimension)
    return _scalar_or_array(curvature_rows(body, rows), single)


def boundary_point(body: BodyHandle, u: Directions) -> BoundaryPoint:
    """Boundary points with outer normals u."""
    rows, _ = as_rows(u, body.dimension)
    x = body.support_gradient(rows)
    if body.smoothness is Smoothness.C2_plus:
        kappa = 1.0 / curvature_rows(body, rows)
    else:
        kappa = np.zeros(len(rows))
    return BoundaryPoint(x=x, normal=rows, gauss_curvature=kappa, support_value=body.support(rows))


def radial_boundary_points(body: BodyHandle, omega: Directions) -> BoundaryPoint:
    """Boundary points ρ_K(ω)ω in radial directions ω, with normals from the gauge gradient."""
    rows, _ = as_rows(omega, body.dimension)
    x = body.radial(rows)[:, None] * rows
    normal = unit_rows(body.gauge_gradient(x))
    if body.smoothness is Smoothness.C2_plus:
        kappa = 1.0 / curvature_rows(body, normal)
    else:
        kappa = np.zeros(len(rows))
    return BoundaryPoint(x=x, normal=normal, gauss_curvature=kappa,
                         support_value=np.sum(x * normal, axis=1))


def polar_support(body: BodyHandle, u: Directions):
    """h_{K°}(u), from the catalog polar when there is one and from the gauge of K otherwise."""
    rows, single = as_rows(u, body.dimension)
    try:
        values = body.polar().support(rows)
    except PolarNotInCatalog:
        values = body.gauge(rows)
    if not np.all(np.isfinite(values) & (values > 0)):
        raise DegenerateBody("The radial function of the body vanishes or is not finite.")
    return _scalar_or_array(values, single)


def polar_support_search(body: BodyHandle, u: Directions, rule: Optional[SphereRule] = None):
    """h_{K°}(u) as the maximum of ⟨u, ρ_K(ω)ω⟩ over the nodes of a direction rule."""
    rows, single = as_rows(u, body.dimension)
    rule = rule or sphere_rule(body.dimension, frame=body.radial_frame())
    radii = body.radial(rule.nodes)
    if not np.all(np.isfinite(radii) & (radii > 0)):
        raise DegenerateBody("The radial function vanishes on a rule node.")
    points = radii[:, None] * rule.nodes
    return _scalar_or_array(np.max(rows @ points.T, axis=1), single)


def volume(body: BodyHandle, config: Optional[QuadratureConfig] = None,
           level: Optional[int] = None) -> IntegralResult:
    """|K| = (1/n)∫ ρ_K^n dσ."""
    n = body.dimension
    rule = sphere_rule(n, level=level, frame=body.radial_frame(), config=config)
    return integrate_sphere(lambda w: body.radial(w) ** n / n, rule, config=config)


def polar_volume(body: BodyHandle, config: Optional[QuadratureConfig] = None,
                 level: Optional[int] = None) -> IntegralResult:
    """|K°| = (1/n)∫ h_K^{-n} dσ."""
    n = body.dimension
    rule = sphere_rule(n, level=level, frame=body.normal_frame(), config=config)
    return integrate_sphere(lambda u: body.support(u) ** (-n) / n, rule, config=config)


def volume_value(body: BodyHandle, config: Optional[QuadratureConfig] = None) -> float:
    exact = body.exact_volume()
    return exact if exact is not None else volume(body, config).value


def polar_volume_value(body: BodyHandle, config: Optional[QuadratureConfig] = None) -> float:
    exact = body.exact_polar_volume()
    return exact if exact is not None else polar_volume(body, config).value


class LinearImage(BodyHandle):
    """The body T(K) for an invertible matrix T."""
    kind = BodyKind.linear_image

    def __init__(self, base: BodyHandle, matrix: np.ndarray, kind: Optional[BodyKind] = None):
        matrix = np.asarray(matrix, dtype=float)
        n = base.dimension
        if matrix.shape != (n, n):
            raise DimensionMismatch(f"Expected a {n}x{n} matrix, got shape {matrix.shape}.")
        det = np.linalg.det(matrix)
        if not np.isfinite(det) or abs(det) <= 1e-14 * max(1.0, np.linalg.norm(matrix)) ** n:
            raise SingularMatrix(f"The matrix is singular (det = {det:.3e}).")
        super().__init__(n)
        self.base = base
        self.matrix = matrix
        self.inverse = np.linalg.inv(matrix)
        self.det = abs(det)
        self.smoothness = base.smoothness
        if kind is not None:
            self.kind = kind

    def _pullback(self, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        y = u @ self.matrix
        norm = np.linalg.norm(y, axis=1)
        return y / norm[:, None], norm

    def support(self, u):
        direction, norm = self._pullback(u)
        return norm * self.base.support(direction)

    def support_gradient(self, u):
        direction, _ = self._pullback(u)
        return self.base.support_gradient(direction) @ self.matrix.T

    def support_hessian(self, u):
        direction, norm = self._pullback(u)
        hess = self.base.support_hessian(direction)
        return np.einsum('ij,mjk,lk->mil', self.matrix, hess, self.matrix) / norm[:, None, None]

    def gauge(self, x):
        return self.base.gauge(x @ self.inverse.T)

    def gauge_gradient(self, x):
        return self.base.gauge_gradient(x @ self.inverse.T) @ self.inverse

    def normal_frame(self):
        return self.inverse.T @ self.base.normal_frame()

    def radial_frame(self):
        return self.matrix @ self.base.radial_frame()

    def polar(self):
        return LinearImage(self.base.polar(), self.inverse.T)

    def exact_volume(self):
        base = self.base.exact_volume()
        return None if base is None else self.det * base

    def exact_polar_volume(self):
        base = self.base.exact_polar_volume()
        return None if base is None else base / self.det

    def circumradius(self):
        return float(np.linalg.norm(self.matrix, 2) * self.base.circumradius())

    def describe(self):
        if self.kind is BodyKind.normalized:
            return {'kind': 'normalized', 'base': self.base.describe()}
        return {'kind': 'linear_image', 'base': self.base.describe(), 'matrix': self.matrix.tolist()}


def linear_image(body: BodyHandle, T: np.ndarray) -> LinearImage:
    return LinearImage(body, T)


def normalized(body: BodyHandle, config: Optional[QuadratureConfig] = None) -> LinearImage:
    """The dilate of `body` with volume 1."""
    vol = volume_value(body, config)
    scale = vol ** (-1.0 / body.dimension)
    return LinearImage(body, scale * np.eye(body.dimension), kind=BodyKind.normalized)


class PolarBody(BodyHandle):
    """Numerical polar of a body without a catalog polar.

    The support of K° is the gauge of K and the gauge of K° is the support of K, so both are exact;
    only the curvature goes through finite differences.
    """
    kind = BodyKind.polar

    def __init__(self, body: BodyHandle):
        super().__init__(body.dimension)
        self.body = body
        self.smoothness = body.smoothness
        warnings.warn(AccuracyWarning(
            f"Using a numerical polar of {body.kind.value}: curvature by finite differences."))

    def support(self, u):
        return self.body.gauge(u)

    def support_gradient(self, u):
        return self.body.gauge_gradient(u)

    def gauge(self, x):
        return self.body.support_extension(x)

    def gauge_gradient(self, x):
        return self.body.support_gradient(unit_rows(x))

    def normal_frame(self):
        return self.body.radial_frame()

    def radial_frame(self):
        return self.body.normal_frame()

    def polar(self):
        return self.body

    def exact_volume(self):
        return self.body.exact_polar_volume()

    def exact_polar_volume(self):
        return self.body.exact_volume()

    def circumradius(self):
        return float(np.max(self.support(np.vstack([np.eye(self.dimension),
                                                   -np.eye(self.dimension)])))) * np.sqrt(self.dimension)

    def describe(self):
        return {'kind': 'polar', 'base': self.body.describe()}


def polar_body(body: BodyHandle, allow_numerical: bool = False) -> BodyHandle:
    """K° from the catalog, or the numerical polar when `allow_numerical` is set."""
    try:
        return body.polar()
    except PolarNotInCatalog:
        if not allow_numerical:
            raise
        return PolarBody(body)


def spread_directions(n: int, count: int) -> np.ndarray:
    """`count` well-spread unit vectors.

    Equispaced on the circle, a Fibonacci spiral on S², and the first `count` points of a fixed
    scrambled Sobol set mapped to S^{n-1} for n >= 4.
    """
    if n == 2:
        angles = 2 * np.pi * np.arange(count) / count
        return np.stack([np.cos(angles), np.sin(angles)], axis=1)
    if n >= 4:
        nodes, _ = qmc_rule(n, max(int(np.ceil(np.log2(count))), 1), seed=SPREAD_SEED)
        return nodes[:count]
    k = np.arange(count) + 0.5
    z = 1 - 2 * k / count
    phi = np.pi * (1 + np.sqrt(5)) * k
    ring = np.sqrt(1 - z ** 2)
    directions = np.zeros((count, n))
    directions[:, 0], directions[:, 1], directions[:, 2] = ring * np.cos(phi), ring * np.sin(phi), z
    return directions
