"""L_p affine surface areas in sphere form.

as_p(K) = ∫ f_K(u)^{n/(n+p)} h_K(u)^{-n(p-1)/(n+p)} dσ(u), with as_0 = n|K| and as_{±∞} = n|K°|.
"""
import dataclasses
import math
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from conegeom.config import QuadratureConfig
from conegeom.enums import Smoothness
from conegeom.errors import DimensionMismatch, ExcludedExponent, NonSmoothBody
from conegeom.geometry import (BodyHandle, curvature_rows, polar_volume, radial_boundary_points,
                               volume)
from conegeom.quadrature import integrate_sphere, sphere_rule

EXCLUDED_WINDOW = 1e-3


@dataclasses.dataclass
class AspValue:
    p: float
    value: float
    error_estimate: float


def _check_exponent(p: float, n: int) -> None:
    if abs(p + n) < EXCLUDED_WINDOW:
        raise ExcludedExponent(f"as_p is not defined for p = -n = {-n} (got p = {p}).")


def _check_common_dimension(bodies: Sequence[BodyHandle]) -> int:
    dims = {body.dimension for body in bodies}
    if len(dims) != 1:
        raise DimensionMismatch(f"Bodies of different dimensions {sorted(dims)}.")
    n = dims.pop()
    if len(bodies) != n:
        raise DimensionMismatch(f"Mixed quantities in R^{n} take exactly {n} bodies, got {len(bodies)}.")
    return n


def asp_integrand(body: BodyHandle, p: float):
    n = body.dimension

    def integrand(u):
        log_f = np.log(curvature_rows(body, u))
        log_h = np.log(body.support(u))
        return np.exp((n * log_f - n * (p - 1) * log_h) / (n + p))

    return integrand


def as_p(body: BodyHandle, p: float, config: Optional[QuadratureConfig] = None) -> AspValue:
    """L_p affine surface area of `body`.

    :param body: The body; finite p != 0 needs a C2_plus body (polytopes give 0 for p > 0).
    :param p: Real exponent other than -n, or ±inf.
    :param config: Quadrature settings.
    :return: The value with its quadrature error estimate.
    """
    n = body.dimension
    if math.isinf(p):
        result = polar_volume(body, config)
        return AspValue(p, n * result.value, n * result.error_estimate)
    if p == 0:
        result = volume(body, config)
        return AspValue(p, n * result.value, n * result.error_estimate)
    _check_exponent(p, n)
    if body.smoothness is Smoothness.polytope and p > 0:
        return AspValue(p, 0.0, 0.0)
    if body.smoothness is not Smoothness.C2_plus:
        raise NonSmoothBody(f"as_p for p = {p} needs curvature, {body.kind.value} has none.")
    rule = sphere_rule(n, frame=body.normal_frame(), config=config)
    result = integrate_sphere(asp_integrand(body, p), rule, config=config)
    return AspValue(p, result.value, result.error_estimate)


def as_p_mixed(bodies: Sequence[BodyHandle], p: float,
               config: Optional[QuadratureConfig] = None) -> AspValue:
    """Mixed p-affine surface area ∫ [h_1^{1-p} f_1 ⋯ h_n^{1-p} f_n]^{1/(n+p)} dσ."""
    n = _check_common_dimension(bodies)
    if math.isinf(p):
        value = dual_mixed_volume(bodies, config)
        return AspValue(p, value, 0.0)
    _check_exponent(p, n)
    for body in bodies:
        if body.smoothness is not Smoothness.C2_plus:
            raise NonSmoothBody(f"Mixed affine surface areas need C2_plus bodies, got {body.kind.value}.")

    def integrand(u):
        total = np.zeros(len(u))
        for body in bodies:
            total += (1 - p) * np.log(body.support(u)) + np.log(curvature_rows(body, u))
        return np.exp(total / (n + p))

    rule = sphere_rule(n, frame=bodies[0].normal_frame(), config=config)
    result = integrate_sphere(integrand, rule, config=config)
    return AspValue(p, result.value, result.error_estimate)


def dual_mixed_volume(bodies: Sequence[BodyHandle], config: Optional[QuadratureConfig] = None) -> float:
    """as_∞(K_1, ..., K_n) = ∫ ∏ h_{K_i}^{-1} dσ = n·Ṽ(K_1°, ..., K_n°)."""
    n = _check_common_dimension(bodies)

    def integrand(u):
        return np.exp(-sum(np.log(body.support(u)) for body in bodies))

    rule = sphere_rule(n, frame=bodies[0].normal_frame(), config=config)
    return integrate_sphere(integrand, rule, config=config).value


def affine_surface_area_boundary(body: BodyHandle, config: Optional[QuadratureConfig] = None) -> float:
    """Classical affine surface area ∫_{∂K} κ^{1/(n+1)} dμ over the boundary.

    The boundary is parametrized radially, x = ρ_K(ω)ω, with surface element
    dμ = ρ_K(ω)^n / ⟨x, N_K(x)⟩ dσ(ω); this does not go through the normal sphere.
    """
    n = body.dimension
    if body.smoothness is not Smoothness.C2_plus:
        raise NonSmoothBody(f"Affine surface area needs curvature, {body.kind.value} has none.")

    def integrand(omega):
        points = radial_boundary_points(body, omega)
        rho = body.radial(omega)
        return points.gauss_curvature ** (1 / (n + 1)) * rho ** n / points.support_value

    rule = sphere_rule(n, frame=body.radial_frame(), config=config)
    return integrate_sphere(integrand, rule, config=config).value


def monotone_quantities(body: BodyHandle, grid: Sequence[float],
                        config: Optional[QuadratureConfig] = None) -> pd.DataFrame:
    """The three p-monotone normalizations of as_p over a grid of p > -n.

    Columns: `over_as_inf` = (as_p/as_∞)^{n+p} and `over_polar` = (as_p/n|K°|)^{n+p}, both
    nonincreasing in p; `over_volume` = (as_p/n|K|)^{(n+p)/p}, nondecreasing (NaN at p = 0).
    """
    n = body.dimension
    as_inf = as_p(body, math.inf, config).value
    polar = polar_volume(body, config).value
    vol = volume(body, config).value
    rows: List[dict] = []
    for p in grid:
        value = as_p(body, p, config).value
        rows.append({
            'p': p,
            'as_p': value,
            'over_as_inf': (value / as_inf) ** (n + p),
            'over_polar': (value / (n * polar)) ** (n + p),
            'over_volume': (value / (n * vol)) ** ((n + p) / p) if p != 0 else float('nan'),
        })
    return pd.DataFrame(rows)
