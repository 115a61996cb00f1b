"""The affine invariant Ω_K by several independent routes.

Entropy route: log Ω_K = (1/|K°|) ∫ h_K^{-n} log(f_K h_K^{n+1}) dσ.
p-limit route: Ω_K = lim (as_p(K)/(n|K°|))^{n+p}, p -> ∞; the dual route takes as_q(K°) with q -> 0.
Centroid route: the second limit of L_p centroid bodies (see :mod:`conegeom.centroid`).
"""
import dataclasses
import itertools
import logging
import math
from typing import Dict, Optional, Sequence

import numpy as np
from scipy.special import digamma

from conegeom.affine_surface import _check_common_dimension
from conegeom.asymptotics import LimitFit, fit_limit
from conegeom.config import FitConfig, QuadratureConfig, default_config
from conegeom.enums import BodyKind, OmegaRoute, Smoothness
from conegeom.errors import DomainError, NonSmoothBody, PolarNotInCatalog, VolumeNotNormalized
from conegeom.geometry import (BodyHandle, curvature_rows, polar_body, radial_boundary_points,
                               volume_value, polar_volume_value)
from conegeom.quadrature import ball_volume, integrate_sphere, sphere_rule
from conegeom.utils import default_p_grid

logger = logging.getLogger(__name__)

VOLUME_ONE_TOL = 1e-8


@dataclasses.dataclass
class OmegaReport:
    via_entropy: Optional[float] = None
    via_dual_entropy: Optional[float] = None
    via_p_limit: Optional[LimitFit] = None
    via_dual_p_limit: Optional[LimitFit] = None
    via_centroid_asymptotics: Optional[LimitFit] = None
    via_centroid_omega: Optional[float] = None
    closed_form: Optional[float] = None
    cross_route_max_rel_discrepancy: float = 0.0

    def estimates(self) -> Dict[str, float]:
        values = {
            OmegaRoute.entropy.value: self.via_entropy,
            OmegaRoute.dual_entropy.value: self.via_dual_entropy,
            OmegaRoute.p_limit.value: None if self.via_p_limit is None else self.via_p_limit.exp_limit,
            OmegaRoute.dual_p_limit.value:
                None if self.via_dual_p_limit is None else self.via_dual_p_limit.exp_limit,
            OmegaRoute.centroid.value: self.via_centroid_omega,
            OmegaRoute.closed_form.value: self.closed_form,
        }
        return {k: v for k, v in values.items() if v is not None}

    def to_dict(self) -> Dict:
        data = dataclasses.asdict(self)
        data['estimates'] = self.estimates()
        return data


def max_relative_gap(values: Sequence[float]) -> float:
    gaps = [abs(a - b) / max(abs(a), abs(b))
            for a, b in itertools.combinations(values, 2) if max(abs(a), abs(b)) > 0]
    return max(gaps, default=0.0)


def _require_smooth(body: BodyHandle) -> None:
    if body.smoothness is not Smoothness.C2_plus:
        raise NonSmoothBody(f"This Ω route needs a C2_plus body, got {body.smoothness.value}.")


def omega_entropy(body: BodyHandle, config: Optional[QuadratureConfig] = None) -> float:
    """Ω_K = exp((1/|K°|) ∫ h^{-n} log(f h^{n+1}) dσ); exactly 0 for polytopes."""
    if body.smoothness is Smoothness.polytope:
        return 0.0
    _require_smooth(body)
    n = body.dimension
    rule = sphere_rule(n, frame=body.normal_frame(), config=config)

    def integrand(u):
        h = body.support(u)
        return h ** (-n) * (np.log(curvature_rows(body, u)) + (n + 1) * np.log(h))

    log_integral = integrate_sphere(integrand, rule, config=config).value
    polar = integrate_sphere(lambda u: body.support(u) ** (-n) / n, rule, config=config).value
    return math.exp(log_integral / polar)


def omega_entropy_dual(body: BodyHandle, config: Optional[QuadratureConfig] = None,
                       allow_numerical_polar: bool = False) -> float:
    """Ω_K from data of K° only.

    log Ω_K = (1/|K°|) ∫_{∂K°} ⟨x, N⟩ log(κ_{K°}(x)/⟨x, N⟩^{n+1}) dμ, written over radial
    directions of K° with ⟨x, N⟩dμ = ρ_{K°}^n dσ.
    """
    if body.smoothness is Smoothness.polytope:
        return 0.0
    _require_smooth(body)
    polar = polar_body(body, allow_numerical_polar)
    n = body.dimension
    rule = sphere_rule(n, frame=polar.radial_frame(), config=config)

    def integrand(omega):
        points = radial_boundary_points(polar, omega)
        rho = polar.radial(omega)
        return rho ** n * (np.log(points.gauss_curvature) - (n + 1) * np.log(points.support_value))

    log_integral = integrate_sphere(integrand, rule, config=config).value
    polar_vol = integrate_sphere(lambda w: polar.radial(w) ** n / n, rule, config=config).value
    return math.exp(log_integral / polar_vol)


def _check_grid(grid: Sequence[float]) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) <= 0):
        raise ValueError("The p-grid must be increasing.")
    if grid[-1] < 2 ** 10:
        raise ValueError(f"The p-grid must reach at least 2^10, got max p = {grid[-1]}.")
    return grid


def _cumulant_samples(weights: np.ndarray, exponent: np.ndarray, scale: np.ndarray,
                      factor: np.ndarray) -> np.ndarray:
    """factor_k · log E_w[exp(scale_k · exponent)], stable for small scales."""
    total = np.sum(weights)
    return np.array([f * np.log1p(np.sum(weights * np.expm1(s * exponent)) / total)
                     for s, f in zip(scale, factor)])


def omega_p_limit(body: BodyHandle, grid: Optional[Sequence[float]] = None,
                  config: Optional[QuadratureConfig] = None,
                  fit_config: Optional[FitConfig] = None) -> LimitFit:
    """Extrapolates g(p) = (n+p) log(as_p(K)/(n|K°|)) to p -> ∞; the limit is log Ω_K.

    With ε = n/(n+p), as_p/(n|K°|) is the mean of exp(ε log(f h^{n+1})) under h^{-n}dσ, so every
    sample comes from one pass over one rule.
    """
    _require_smooth(body)
    grid = _check_grid(grid if grid is not None else default_p_grid())
    n = body.dimension
    rule = sphere_rule(n, frame=body.normal_frame(), config=config)
    h = body.support(rule.nodes)
    weights = rule.weights * h ** (-n)
    exponent = np.log(curvature_rows(body, rule.nodes)) + (n + 1) * np.log(h)
    samples = _cumulant_samples(weights, exponent, n / (n + grid), n + grid)
    return fit_limit(list(zip(grid, samples)), 'log_over_p', fit_config)


def omega_dual_p_limit(body: BodyHandle, grid: Optional[Sequence[float]] = None,
                       config: Optional[QuadratureConfig] = None,
                       fit_config: Optional[FitConfig] = None,
                       allow_numerical_polar: bool = False) -> LimitFit:
    """Extrapolates (n(n+q)/q) log(as_q(K°)/(n|K°|)) to q -> 0 from data of K°.

    n|K°| is taken as as_0(K°) on the same rule. The fit runs in p = n²/q with the same model as the
    direct route; the returned grid holds the q values in decreasing order.
    """
    _require_smooth(body)
    polar = polar_body(body, allow_numerical_polar)
    n = body.dimension
    if grid is None:
        grid = [n * n / p for p in default_p_grid()]
    q = np.asarray(grid, dtype=float)
    if np.any(q <= 0) or np.any(q > 1) or np.any(np.diff(q) >= 0):
        raise ValueError("The q-grid must decrease within (0, 1].")
    p = n * n / q
    _check_grid(p)
    rule = sphere_rule(n, frame=polar.normal_frame(), config=config)
    h = polar.support(rule.nodes)
    f = curvature_rows(polar, rule.nodes)
    weights = rule.weights * f * h
    exponent = np.log(f) + (n + 1) * np.log(h)
    samples = _cumulant_samples(weights, exponent, -q / (n + q), n * (n + q) / q)
    fit = fit_limit(list(zip(p, samples)), 'log_over_p', fit_config)
    return dataclasses.replace(fit, grid=q.tolist())


def omega_lp_closed_form(n: int, r: float) -> float:
    """Ω of the l_r ball: exp(-(n²(r-2)/r)(ψ((r-1)/r) - ψ(n(r-1)/r))) / (r-1)^{n(n-1)}."""
    if not 1 < r < math.inf:
        raise DomainError(f"The closed form needs 1 < r < inf, got r = {r}.")
    a = (r - 1) / r
    log_omega = -(n * n * (r - 2) / r) * (digamma(a) - digamma(n * a)) - n * (n - 1) * math.log(r - 1)
    return math.exp(log_omega)


def omega_closed_form(body: BodyHandle) -> Optional[float]:
    """Ω from the catalog closed forms and the law Ω_{TK} = |det T|^{2n} Ω_K, if available."""
    n = body.dimension
    if body.smoothness is Smoothness.polytope:
        return 0.0
    if body.kind is BodyKind.ball:
        return body.radius ** (2 * n * n)
    if body.kind is BodyKind.ellipsoid:
        return float(np.linalg.det(body.matrix)) ** (2 * n)
    if body.kind is BodyKind.lp_ball:
        return omega_lp_closed_form(n, body.r)
    if body.kind in {BodyKind.linear_image, BodyKind.normalized}:
        base = omega_closed_form(body.base)
        return None if base is None else body.det ** (2 * n) * base
    return None


def omega_mixed(bodies: Sequence[BodyHandle], config: Optional[QuadratureConfig] = None) -> float:
    """Ω_{K_1..K_n} = exp((1/as_∞) ∫ Σ log[f_i h_i^{n+1}] / ∏ h_i dσ)."""
    n = _check_common_dimension(bodies)
    for body in bodies:
        _require_smooth(body)
    rule = sphere_rule(n, frame=bodies[0].normal_frame(), config=config)

    def weight(u):
        return np.exp(-sum(np.log(body.support(u)) for body in bodies))

    def integrand(u):
        total = sum(np.log(curvature_rows(body, u)) + (n + 1) * np.log(body.support(u))
                    for body in bodies)
        return total * weight(u)

    log_integral = integrate_sphere(integrand, rule, config=config).value
    as_inf = integrate_sphere(weight, rule, config=config).value
    return math.exp(log_integral / as_inf)


def omega_mixed_p_limit(bodies: Sequence[BodyHandle], grid: Optional[Sequence[float]] = None,
                        config: Optional[QuadratureConfig] = None,
                        fit_config: Optional[FitConfig] = None) -> LimitFit:
    """Extrapolates (n+p) log(as_p(K_1..K_n)/as_∞(K_1..K_n)) to p -> ∞."""
    n = _check_common_dimension(bodies)
    for body in bodies:
        _require_smooth(body)
    grid = _check_grid(grid if grid is not None else default_p_grid())
    rule = sphere_rule(n, frame=bodies[0].normal_frame(), config=config)
    u = rule.nodes
    log_h = [np.log(body.support(u)) for body in bodies]
    weights = rule.weights * np.exp(-sum(log_h))
    exponent = sum(np.log(curvature_rows(body, u)) + (n + 1) * lh for body, lh in zip(bodies, log_h))
    samples = _cumulant_samples(weights, exponent, 1 / (n + grid), n + grid)
    return fit_limit(list(zip(grid, samples)), 'log_over_p', fit_config)


def information_inequality_slack(body: BodyHandle, omega: Optional[float] = None,
                                 config: Optional[QuadratureConfig] = None) -> float:
    """1 - Ω_K/(|K|/|K°|)^n; nonnegative, zero exactly for ellipsoids."""
    omega = omega_entropy(body, config) if omega is None else omega
    ratio = volume_value(body, config) / polar_volume_value(body, config)
    return 1 - omega / ratio ** body.dimension


def as_p_bound_slack(body: BodyHandle, p: float, omega: Optional[float] = None,
                     config: Optional[QuadratureConfig] = None) -> float:
    """1 - Ω_K/(as_p(K)/(n|K°|))^{n+p}."""
    from conegeom.affine_surface import as_p
    n = body.dimension
    omega = omega_entropy(body, config) if omega is None else omega
    bound = (as_p(body, p, config).value / (n * polar_volume_value(body, config))) ** (n + p)
    return 1 - omega / bound


def polar_product_slack(body: BodyHandle, config: Optional[QuadratureConfig] = None,
                        allow_numerical_polar: bool = False) -> float:
    """1 - Ω_K Ω_{K°}."""
    polar = polar_body(body, allow_numerical_polar)
    return 1 - omega_entropy(body, config) * omega_entropy(polar, config)


def isoperimetric_slack(body: BodyHandle, config: Optional[QuadratureConfig] = None,
                        allow_numerical_polar: bool = False) -> float:
    """1 - Ω_{K°}/|B_2^n|^{2n} for a volume-1 body; zero for the normalized ball."""
    vol = volume_value(body, config)
    if abs(vol - 1) > VOLUME_ONE_TOL:
        raise VolumeNotNormalized(f"The isoperimetric bound needs |K| = 1, got {vol:.12g}.")
    polar = polar_body(body, allow_numerical_polar)
    n = body.dimension
    return 1 - omega_entropy(polar, config) / ball_volume(n) ** (2 * n)


def omega_from_second_limit(limit: float, polar_vol: float, n: int) -> float:
    """Solves limit = -(|K°|/2) log(Ω 2^{n(n+1)} π^{n(n-1)}) for Ω."""
    return math.exp(-2 * limit / polar_vol - n * (n + 1) * math.log(2) - n * (n - 1) * math.log(math.pi))


def omega_report(body: BodyHandle, routes: Optional[Sequence[str]] = None,
                 grid: Optional[Sequence[float]] = None,
                 config: Optional[QuadratureConfig] = None,
                 fit_config: Optional[FitConfig] = None,
                 allow_numerical_polar: bool = False) -> OmegaReport:
    """Ω_K by the requested routes, with the largest pairwise relative gap between them.

    :param routes: Values of :class:`OmegaRoute`; all except the centroid route by default.
    """
    routes = [OmegaRoute(r) for r in (routes or [r.value for r in OmegaRoute
                                                  if r is not OmegaRoute.centroid])]
    config = config or default_config()
    report = OmegaReport()
    if OmegaRoute.closed_form in routes:
        report.closed_form = omega_closed_form(body)
    if body.smoothness is Smoothness.polytope:
        report.via_entropy = 0.0
        return report
    if OmegaRoute.entropy in routes:
        report.via_entropy = omega_entropy(body, config)
    if OmegaRoute.dual_entropy in routes:
        try:
            report.via_dual_entropy = omega_entropy_dual(body, config, allow_numerical_polar)
        except PolarNotInCatalog:
            logger.info("No catalog polar for %s, skipping the dual entropy route.", body)
    if OmegaRoute.p_limit in routes:
        report.via_p_limit = omega_p_limit(body, grid, config, fit_config)
    if OmegaRoute.dual_p_limit in routes:
        try:
            q_grid = None if grid is None else sorted((body.dimension ** 2 / p for p in grid),
                                                      reverse=True)
            report.via_dual_p_limit = omega_dual_p_limit(body, q_grid, config, fit_config,
                                                         allow_numerical_polar)
        except PolarNotInCatalog:
            logger.info("No catalog polar for %s, skipping the dual p-limit route.", body)
    if OmegaRoute.centroid in routes:
        from conegeom.centroid import theorem1_second_limit
        from conegeom.geometry import normalized
        n = body.dimension
        unit = normalized(body, config)
        second = theorem1_second_limit(unit, grid, config=config, fit_config=fit_config)
        report.via_centroid_asymptotics = second.fit
        omega_unit = omega_from_second_limit(second.fit.limit, second.polar_volume, n)
        report.via_centroid_omega = omega_unit / unit.det ** (2 * n)
    report.cross_route_max_rel_discrepancy = max_relative_gap(list(report.estimates().values()))
    return report
