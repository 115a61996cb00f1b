"""Closed forms for l_r balls B_r^n = {x : ‖x‖_r <= 1} and ellipsoids A(B_2^n)."""
import dataclasses
import math
from typing import Union

import numpy as np
from scipy.special import gammaln

from conegeom.enums import Smoothness
from conegeom.errors import DomainError, ExcludedExponent, OffBoundary, UndefinedCurvature

BOUNDARY_TOL = 1e-10


@dataclasses.dataclass(frozen=True)
class LpBallSpec:
    n: int
    r: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"Dimension must be an integer >= 2, got {self.n}.")
        if not self.r >= 1:
            raise DomainError(f"The exponent r must lie in [1, inf], got {self.r}.")

    @property
    def conjugate(self) -> float:
        if self.r == 1:
            return math.inf
        if math.isinf(self.r):
            return 1.0
        return self.r / (self.r - 1)

    @property
    def smoothness(self) -> Smoothness:
        if 1 < self.r < math.inf:
            return Smoothness.C2_plus
        return Smoothness.polytope

    def polar(self) -> 'LpBallSpec':
        return LpBallSpec(self.n, self.conjugate)


@dataclasses.dataclass(frozen=True, eq=False)
class EllipsoidSpec:
    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DomainError(f"Ellipsoid matrix must be square, got shape {matrix.shape}.")
        if not np.allclose(matrix, matrix.T, rtol=1e-12, atol=1e-12):
            raise DomainError("Ellipsoid matrix must be symmetric.")
        try:
            np.linalg.cholesky(matrix)
        except np.linalg.LinAlgError as e:
            raise DomainError("Ellipsoid matrix must be positive definite.") from e
        object.__setattr__(self, 'matrix', 0.5 * (matrix + matrix.T))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def volume(self) -> float:
        return float(np.linalg.det(self.matrix)) * math.pi ** (self.n / 2) / math.gamma(self.n / 2 + 1)


def _check_smooth_exponent(spec: LpBallSpec) -> None:
    if not 1 < spec.r < math.inf:
        raise DomainError(f"This closed form needs 1 < r < inf, got r = {spec.r}.")


def lp_ball_volume(spec: LpBallSpec) -> float:
    """|B_r^n| = 2^n Γ(1+1/r)^n / Γ(1+n/r)."""
    if math.isinf(spec.r):
        return 2.0 ** spec.n
    n, r = spec.n, spec.r
    return math.exp(n * math.log(2) + n * gammaln(1 + 1 / r) - gammaln(1 + n / r))


def lp_ball_polar_volume(spec: LpBallSpec) -> float:
    """|(B_r^n)°| = (2^n (r-1)^{n-1} / (n r^{n-1}))·Γ((r-1)/r)^n / Γ(n(r-1)/r)."""
    _check_smooth_exponent(spec)
    n, r = spec.n, spec.r
    a = (r - 1) / r
    log_value = (n * math.log(2) + (n - 1) * math.log(r - 1) - math.log(n) - (n - 1) * math.log(r)
                 + n * gammaln(a) - gammaln(n * a))
    return math.exp(log_value)


def _check_boundary(spec: LpBallSpec, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != spec.n:
        raise OffBoundary(f"Expected a point of R^{spec.n}, got shape {x.shape}.")
    norm = np.sum(np.abs(x) ** spec.r, axis=-1) ** (1 / spec.r)
    if np.any(np.abs(norm - 1) > BOUNDARY_TOL):
        raise OffBoundary(f"Point with ‖x‖_r = {norm} is not on the boundary of B_{spec.r}^{spec.n}.")
    return x


def lp_ball_normal(spec: LpBallSpec, x: np.ndarray) -> np.ndarray:
    """Outer unit normal (sgn(x_i)|x_i|^{r-1})_i / (Σ|x_i|^{2r-2})^{1/2} at boundary points."""
    _check_smooth_exponent(spec)
    x = _check_boundary(spec, x)
    raw = np.sign(x) * np.abs(x) ** (spec.r - 1)
    return raw / np.sqrt(np.sum(np.abs(x) ** (2 * spec.r - 2), axis=-1, keepdims=True))


def lp_ball_boundary_curvature(spec: LpBallSpec, x: np.ndarray) -> Union[float, np.ndarray]:
    """Gauss curvature (r-1)^{n-1} ∏|x_i|^{r-2} / (Σ|x_i|^{2r-2})^{(n+1)/2} at boundary points.

    :param spec: The l_r ball, 1 < r < inf.
    :param x: A boundary point or an (m, n) array of boundary points.
    :return: The curvature, exactly 0 at points with a vanishing coordinate when r > 2.
    """
    _check_smooth_exponent(spec)
    x = _check_boundary(spec, x)
    n, r = spec.n, spec.r
    if r < 2 and np.any(x == 0):
        raise UndefinedCurvature(f"The curvature of B_{r}^{n} is singular where a coordinate vanishes.")
    ax = np.abs(x)
    numerator = (r - 1) ** (n - 1) * np.prod(ax ** (r - 2), axis=-1)
    kappa = numerator / np.sum(ax ** (2 * r - 2), axis=-1) ** ((n + 1) / 2)
    return float(kappa) if np.ndim(kappa) == 0 else kappa


def lp_ball_as_p(spec: LpBallSpec, p: float) -> float:
    """Closed form of as_p(B_r^n), including p = 0 and p = ±inf."""
    _check_smooth_exponent(spec)
    n, r = spec.n, spec.r
    if abs(p + n) < 1e-3:
        raise ExcludedExponent(f"p = {p} is too close to the excluded exponent -n = {-n}.")
    if math.isinf(p):
        return n * lp_ball_polar_volume(spec)
    a = (n + r * p - p) / (r * (n + p))
    if a <= 0:
        raise DomainError(f"as_p(B_{r}^{n}) diverges at p = {p}.")
    log_value = (n * math.log(2) + p * (n - 1) / (n + p) * math.log(r - 1) - (n - 1) * math.log(r)
                 + n * gammaln(a) - gammaln(n * a))
    return math.exp(log_value)
