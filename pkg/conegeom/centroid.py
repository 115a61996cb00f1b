"""L_p centroid bodies, floating bodies and their large-p behaviour.

For a volume-1 symmetric body K the centroid body Z_p(K) has support function

    h_{Z_p(K)}(θ)^p = ∫_K |⟨x, θ⟩|^p dx = (1/(n+p)) ∫ ρ_K(ω)^{n+p} |⟨ω, θ⟩|^p dσ(ω).

The sphere integral is evaluated after dividing by h_K(θ)^p, so every factor ρ|⟨ω, θ⟩|/h_K(θ) is at
most 1. In the plane each direction θ gets a rule with panel breaks at θ^⊥, where |⟨ω, θ⟩|^p is not
smooth. For p above `large_p_threshold` the rule is concentrated around the boundary point ∇h_K(θ),
where the integrand lives.
"""
import dataclasses
import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import optimize
from scipy.special import gammaln, logsumexp
from tqdm import tqdm

from conegeom.asymptotics import LimitFit, fit_limit
from conegeom.config import FitConfig, QuadratureConfig, default_config, default_grids
from conegeom.enums import BodyKind, Smoothness
from conegeom.errors import (ExponentTooSmall, NonSmoothBody, OptimizationFailure, OutOfRange,
                             RootFindFailure, VolumeNotNormalized)
from conegeom.geometry import (BodyHandle, as_rows, curvature_rows, polar_volume_value,
                               spread_directions, tangent_basis, unit_rows, volume_value,
                               _scalar_or_array)
from conegeom.quadrature import (IntegralResult, SphereRule, ball_volume, cap_volume, circle_rule,
                                 concentrated_rule, integrate_sphere, ray_exit, section_volume,
                                 slab_volume, slice_center, sphere_rule)
from conegeom.utils import default_p_grid

logger = logging.getLogger(__name__)

VOLUME_ONE_TOL = 1e-8
CHUNK_ENTRIES = 2 ** 21
RADIAL_NODES = 24


def check_volume_one(body: BodyHandle, config: Optional[QuadratureConfig] = None) -> None:
    vol = volume_value(body, config)
    if abs(vol - 1) > VOLUME_ONE_TOL:
        raise VolumeNotNormalized(f"Centroid bodies here need |K| = 1, got {vol:.12g}; "
                                  f"wrap the body with `normalized`.")


def _log_moments(body: BodyHandle, p: float, thetas: np.ndarray, rule: SphereRule,
                 h: np.ndarray) -> np.ndarray:
    """log ∫ ρ^n (ρ|⟨ω, θ⟩|/h_K(θ))^p dσ for rows θ on one rule."""
    n = body.dimension
    rho = body.radial(rule.nodes)
    log_base = n * np.log(rho) + np.log(rule.weights)
    out = np.empty(len(thetas))
    step = max(1, CHUNK_ENTRIES // len(rule))
    for start in range(0, len(thetas), step):
        block = slice(start, start + step)
        reach = rho[None] * np.abs(thetas[block] @ rule.nodes.T) / h[block, None]
        with np.errstate(divide='ignore'):
            out[block] = logsumexp(p * np.log(reach) + log_base[None], axis=1)
    return out


def _planar_rule(body: BodyHandle, theta: np.ndarray, config: QuadratureConfig) -> SphereRule:
    frame = body.radial_frame()
    pulled = frame.T @ theta
    kink = math.atan2(pulled[1], pulled[0]) + math.pi / 2
    return circle_rule([kink, kink + math.pi], frame=frame, level=config.max_level(2), config=config)


def zp_support_rows(body: BodyHandle, p: float, thetas: np.ndarray,
                    config: Optional[QuadratureConfig] = None) -> np.ndarray:
    config = config or default_config()
    n = body.dimension
    h = body.support(thetas)
    if math.isinf(p):
        return h
    if p > config.large_p_threshold and n in (2, 3):
        centers = unit_rows(body.support_gradient(thetas))
        logs = np.array([_log_moments(body, p, theta[None], concentrated_rule(center, 1 / math.sqrt(p)),
                                      h[k:k + 1])[0]
                         for k, (theta, center) in enumerate(zip(thetas, centers))])
    elif n == 2:
        logs = np.array([_log_moments(body, p, theta[None], _planar_rule(body, theta, config),
                                      h[k:k + 1])[0]
                         for k, theta in enumerate(thetas)])
    else:
        rule = sphere_rule(n, frame=body.radial_frame(), config=config)
        logs = _log_moments(body, p, thetas, rule, h)
    return h * np.exp((logs - math.log(n + p)) / p)


def zp_support(body: BodyHandle, p: float, theta, config: Optional[QuadratureConfig] = None):
    """Support function of the L_p centroid body Z_p(K).

    :param body: A symmetric body of volume 1.
    :param p: Exponent, p >= 1 or inf (Z_∞(K) = K).
    :param theta: A direction or an (m, n) array of directions.
    :param config: Quadrature settings; `large_p_threshold` switches to concentrated rules.
    :return: A float for one direction, otherwise an array.
    """
    if p < 1:
        raise ExponentTooSmall(f"Centroid bodies need p >= 1, got p = {p}.")
    check_volume_one(body, config)
    rows, single = as_rows(theta, body.dimension)
    return _scalar_or_array(zp_support_rows(body, p, rows, config), single)


class CentroidBodyHandle(BodyHandle):
    """Z_p(K) as a body handle; only the support function is exact."""
    kind = BodyKind.centroid
    smoothness = Smoothness.generic

    def __init__(self, base: BodyHandle, p: float, config: Optional[QuadratureConfig] = None):
        super().__init__(base.dimension)
        if p < 1:
            raise ExponentTooSmall(f"Centroid bodies need p >= 1, got p = {p}.")
        check_volume_one(base, config)
        self.base = base
        self.p = p
        self.config = config or default_config()
        self._directions = None
        self._direction_support = None

    def support(self, u):
        return zp_support_rows(self.base, self.p, u, self.config)

    def gauge(self, x):
        # g_Z(x) = sup_θ ⟨x, θ⟩ / h_Z(θ), over a fixed direction rule
        if self._directions is None:
            self._directions = sphere_rule(self.dimension, level=0, config=self.config).nodes
            self._direction_support = self.support(self._directions)
        return np.max((x @ self._directions.T) / self._direction_support[None], axis=1)

    def normal_frame(self):
        return self.base.normal_frame()

    def circumradius(self):
        return self.base.circumradius()

    def describe(self):
        return {'kind': 'centroid', 'p': self.p, 'base': self.base.describe()}


def _polar_gap_rule(body: BodyHandle, config: QuadratureConfig) -> Tuple[SphereRule, bool]:
    n = body.dimension
    if n == 2:
        return sphere_rule(n, frame=body.normal_frame(), config=config), True
    return sphere_rule(n, level=0, frame=body.normal_frame(), config=config), False


def zp_polar_volume_result(body: BodyHandle, p: float,
                           config: Optional[QuadratureConfig] = None) -> IntegralResult:
    """|Z_p°(K)| with its quadrature error estimate, which is NaN when the rule is not refined."""
    if math.isinf(p):
        return IntegralResult(value=polar_volume_value(body, config), error_estimate=0.0, nodes_used=0)
    config = config or default_config()
    n = body.dimension
    handle = CentroidBodyHandle(body, p, config)
    rule, refine = _polar_gap_rule(body, config)
    return integrate_sphere(lambda u: handle.support(u) ** (-n) / n, rule, config=config,
                            estimate_error=refine)


def zp_polar_volume(body: BodyHandle, p: float, config: Optional[QuadratureConfig] = None) -> float:
    """|Z_p°(K)| = (1/n) ∫ h_{Z_p(K)}^{-n} dσ."""
    return zp_polar_volume_result(body, p, config).value


def zp_polar_volume_gap(body: BodyHandle, p: float, config: Optional[QuadratureConfig] = None) -> float:
    """|Z_p°(K)| - |K°| = (1/n) ∫ (h_{Z_p}^{-n} - h_K^{-n}) dσ on one rule."""
    config = config or default_config()
    n = body.dimension
    handle = CentroidBodyHandle(body, p, config)
    rule, refine = _polar_gap_rule(body, config)

    def integrand(u):
        return (handle.support(u) ** (-n) - body.support(u) ** (-n)) / n

    return integrate_sphere(integrand, rule, config=config, estimate_error=refine).value


def ball_zp_polar_volume(n: int, p: float) -> float:
    """|Z_p°| of the volume-1 Euclidean ball B̃, in closed form.

    Z_p(B̃) is the ball of radius R·(π^{(n-1)/2} Γ((p+1)/2) R^n / Γ((n+p)/2 + 1))^{1/p} with
    R = |B_2^n|^{-1/n}. Every volume-1 ellipsoid has the same value.
    """
    log_ball = math.log(ball_volume(n))
    log_radius = -log_ball / n
    if math.isinf(p):
        return math.exp(log_ball - n * log_radius)
    log_h = ((n + p) * log_radius + 0.5 * (n - 1) * math.log(math.pi) + gammaln(0.5 * (p + 1))
             - gammaln(0.5 * (n + p) + 1)) / p
    return math.exp(log_ball - n * log_h)


def santalo_ratio(body: BodyHandle, p: float, config: Optional[QuadratureConfig] = None) -> float:
    """|Z_p°(K)| / |Z_p°(B̃_2^n)|, at most 1 with equality for ellipsoids."""
    return zp_polar_volume(body, p, config) / ball_zp_polar_volume(body.dimension, p)


def zp_moment_matrix(body: BodyHandle, config: Optional[QuadratureConfig] = None) -> np.ndarray:
    """M = ∫_K x xᵀ dx = (1/(n+2)) ∫ ρ^{n+2} ω ωᵀ dσ, so that h_{Z_2}(θ)² = θᵀMθ."""
    check_volume_one(body, config)
    n = body.dimension
    rule = sphere_rule(n, frame=body.radial_frame(), config=config)
    weights = rule.weights * body.radial(rule.nodes) ** (n + 2) / (n + 2)
    return np.einsum('m,mi,mj->ij', weights, rule.nodes, rule.nodes)


@dataclasses.dataclass
class QuadraticFit:
    matrix: np.ndarray
    max_residual: float


def zp2_quadratic_form(body: BodyHandle, directions: int = 100,
                       config: Optional[QuadratureConfig] = None) -> QuadraticFit:
    """Fits h_{Z_2}(θ)² = θᵀQθ over spread directions; Z_2(K) is an ellipsoid, so the fit is exact."""
    n = body.dimension
    thetas = spread_directions(n, directions)
    h = zp_support(body, 2, thetas, config)
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    design = np.stack([thetas[:, i] * thetas[:, j] * (1 if i == j else 2) for i, j in pairs], axis=1)
    coefficients = np.linalg.lstsq(design, h ** 2, rcond=None)[0]
    matrix = np.zeros((n, n))
    for (i, j), c in zip(pairs, coefficients):
        matrix[i, j] = matrix[j, i] = c
    fitted = np.sqrt(np.einsum('mi,ij,mj->m', thetas, matrix, thetas))
    return QuadraticFit(matrix=matrix, max_residual=float(np.max(np.abs(fitted - h))))


def isotropic_constant(body: BodyHandle, config: Optional[QuadratureConfig] = None) -> float:
    """L_K = (|Z_2(K)|/|B_2^n|)^{1/n} = det(M)^{1/(2n)}."""
    matrix = zp_moment_matrix(body, config)
    return float(np.linalg.det(matrix)) ** (1 / (2 * body.dimension))


def inverse_lyz_ratio(body: BodyHandle, p: float, nodes: int = 512,
                      config: Optional[QuadratureConfig] = None) -> float:
    """|Z_p(K)|^{1/n} / (√(p/(n+p)) L_K) in the plane, with |Z_p| = ½∫(h² - h'²) dφ.

    Diagnostic only; its bounds hold with unspecified constants.
    """
    if body.dimension != 2:
        raise ValueError(f"The planar area formula needs n = 2, got n = {body.dimension}.")
    phi = 2 * math.pi * np.arange(nodes) / nodes
    h = zp_support(body, p, np.stack([np.cos(phi), np.sin(phi)], axis=1), config)
    spectrum = np.fft.rfft(h)
    derivative = np.fft.irfft(1j * np.arange(len(spectrum)) * spectrum, n=nodes)
    area = 0.5 * np.sum(h ** 2 - derivative ** 2) * (2 * math.pi / nodes)
    return math.sqrt(area) / (math.sqrt(p / (2 + p)) * isotropic_constant(body, config))


def _check_limit_grid(grid: Optional[Sequence[float]]) -> np.ndarray:
    grid = np.asarray(grid if grid is not None else _default_grid(), dtype=float)
    if np.any(np.diff(grid) <= 0):
        raise ValueError("The p-grid must be increasing.")
    if grid[-1] < 2 ** 14:
        raise ValueError(f"Centroid limits need p up to 2^14, got max p = {grid[-1]}.")
    return grid


def _default_grid() -> List[float]:
    return default_p_grid()


def _check_limit_body(body: BodyHandle, config: Optional[QuadratureConfig]) -> None:
    if body.smoothness is not Smoothness.C2_plus:
        raise NonSmoothBody(f"Centroid limits need a C2_plus body, got {body.smoothness.value}.")
    check_volume_one(body, config)


def _gaps(body: BodyHandle, grid: np.ndarray, config: QuadratureConfig, progress: bool) -> np.ndarray:
    return np.array([zp_polar_volume_gap(body, p, config)
                     for p in tqdm(grid, desc='Z_p polar volumes', disable=not progress)])


def theorem1_first_limit(body: BodyHandle, grid: Optional[Sequence[float]] = None,
                         config: Optional[QuadratureConfig] = None,
                         fit_config: Optional[FitConfig] = None, progress: bool = False) -> LimitFit:
    """Extrapolates (p/log p)(|Z_p°(K)| - |K°|), whose limit is (n(n+1)/2)|K°|."""
    config = config or default_config()
    _check_limit_body(body, config)
    grid = _check_limit_grid(grid)
    samples = grid / np.log(grid) * _gaps(body, grid, config, progress)
    return fit_limit(list(zip(grid, samples)), 'first_limit', fit_config)


def second_limit_integral(body: BodyHandle, config: Optional[QuadratureConfig] = None) -> float:
    """-½ ∫ h^{-n} log(2^{n+1} π^{n-1} h^{n+1} f) dσ."""
    n = body.dimension
    shift = (n + 1) * math.log(2) + (n - 1) * math.log(math.pi)

    def integrand(u):
        h = body.support(u)
        return -0.5 * h ** (-n) * (shift + (n + 1) * np.log(h) + np.log(curvature_rows(body, u)))

    rule = sphere_rule(n, frame=body.normal_frame(), config=config)
    return integrate_sphere(integrand, rule, config=config).value


def second_limit_omega_form(omega: float, polar_vol: float, n: int) -> float:
    """-(|K°|/2) log(Ω_K 2^{n(n+1)} π^{n(n-1)})."""
    return -0.5 * polar_vol * (math.log(omega) + n * (n + 1) * math.log(2)
                               + n * (n - 1) * math.log(math.pi))


@dataclasses.dataclass
class SecondLimitResult:
    fit: Optional[LimitFit]
    integral_rhs: float
    omega_rhs: float
    rhs_residual: float
    polar_volume: float

    @property
    def relative_error(self) -> float:
        return abs(self.fit.limit - self.integral_rhs) / abs(self.integral_rhs)

    def to_dict(self) -> Dict:
        return dataclasses.asdict(self)


def theorem1_second_limit(body: BodyHandle, grid: Optional[Sequence[float]] = None,
                          config: Optional[QuadratureConfig] = None,
                          fit_config: Optional[FitConfig] = None, extrapolate: bool = True,
                          progress: bool = False) -> SecondLimitResult:
    """Second-order term of |Z_p°(K)| and its two closed right-hand sides.

    Samples p(|Z_p°| - |K°|) - (n(n+1)/2) log p |K°| are extrapolated to p -> ∞. The right-hand
    side is evaluated as a curvature integral and, separately, through Ω_K. With
    `extrapolate=False` only the two right-hand sides are computed.
    """
    from conegeom.omega import omega_entropy
    config = config or default_config()
    _check_limit_body(body, config)
    n = body.dimension
    polar_vol = polar_volume_value(body, config)
    integral = second_limit_integral(body, config)
    omega_form = second_limit_omega_form(omega_entropy(body, config), polar_vol, n)
    fit = None
    if extrapolate:
        grid = _check_limit_grid(grid)
        samples = grid * _gaps(body, grid, config, progress) - 0.5 * n * (n + 1) * np.log(grid) * polar_vol
        fit = fit_limit(list(zip(grid, samples)), 'second_limit', fit_config)
    return SecondLimitResult(fit=fit, integral_rhs=integral, omega_rhs=omega_form,
                             rhs_residual=abs(integral - omega_form), polar_volume=polar_vol)


@dataclasses.dataclass
class FloatingBodySupport:
    body: BodyHandle
    delta: float
    thetas: np.ndarray
    values: np.ndarray


def _check_delta(delta: float) -> None:
    if not 0 < delta < 1:
        raise OutOfRange(f"δ must lie in (0, 1), got {delta}.")


def floating_support(body: BodyHandle, delta: float, theta,
                     config: Optional[QuadratureConfig] = None) -> float:
    """t_θ with vol{x ∈ K : |⟨x, θ⟩| <= t_θ} = 1 - δ, that is 2·cap(t_θ) = δ."""
    _check_delta(delta)
    check_volume_one(body, config)
    theta = np.asarray(theta, dtype=float)
    theta = theta / np.linalg.norm(theta)
    if theta.shape[0] > 3:
        raise ValueError("Floating bodies use deterministic cap volumes, n <= 3.")
    h = float(body.support(theta[None])[0])
    try:
        t = optimize.brentq(lambda s: 2 * cap_volume(body, theta, s, config) - delta, 0.0, h,
                            xtol=1e-13, rtol=1e-14)
    except (ValueError, RuntimeError) as e:
        raise RootFindFailure(f"Floating support root find failed for δ = {delta}: {e}") from e
    logger.debug("floating support δ=%g: t=%.14g, h=%.14g", delta, t, h)
    return t


def floating_body_support(body: BodyHandle, delta: float, thetas: np.ndarray,
                          config: Optional[QuadratureConfig] = None) -> FloatingBodySupport:
    values = np.array([floating_support(body, delta, theta, config) for theta in thetas])
    return FloatingBodySupport(body=body, delta=delta, thetas=thetas, values=values)


def slab_deficit(body: BodyHandle, delta: float, theta, t: float,
                 config: Optional[QuadratureConfig] = None) -> float:
    """vol{|⟨x, θ⟩| <= t} - (1 - δ), zero at the floating support."""
    return slab_volume(body, theta, t, config) - (1 - delta)


@dataclasses.dataclass
class SandwichResult:
    table: pd.DataFrame
    c1: float
    c2: float


def sandwich_ratios(body: BodyHandle, delta_grid: Optional[Sequence[float]] = None,
                    directions: Optional[int] = None, config: Optional[QuadratureConfig] = None,
                    progress: bool = False) -> SandwichResult:
    """h_{K_δ}(θ) / h_{Z_{log(1/δ)}(K)}(θ) over δ and directions; c1, c2 are the extreme ratios."""
    grids = default_grids()
    delta_grid = delta_grid if delta_grid is not None else grids['delta']
    thetas = spread_directions(body.dimension, directions or grids['sandwich_directions'])
    rows = []
    for delta in tqdm(delta_grid, desc='sandwich', disable=not progress):
        if not 0 < delta <= math.exp(-1) + 1e-15:
            raise OutOfRange(f"The sandwich needs δ in (0, 1/e], got {delta}.")
        p = max(1.0, math.log(1 / delta))
        centroid = zp_support(body, p, thetas, config)
        for k, theta in enumerate(thetas):
            floating = floating_support(body, delta, theta, config)
            rows.append({'delta': delta, 'p': p, 'direction': k, 'floating': floating,
                         'centroid': centroid[k], 'ratio': floating / centroid[k]})
    table = pd.DataFrame(rows)
    return SandwichResult(table=table, c1=float(table['ratio'].min()), c2=float(table['ratio'].max()))


class LogLaplace:
    """Λ_K(u) = log ∫_K e^{⟨y, u⟩} dy and its Legendre transform Λ*_K, for a volume-1 body.

    The integral runs over a sphere rule times Gauss nodes along each ray, in log space.
    """

    def __init__(self, body: BodyHandle, config: Optional[QuadratureConfig] = None):
        check_volume_one(body, config)
        if body.dimension > 3:
            raise ValueError("The log-Laplace transform is tabulated for n <= 3.")
        self.body = body
        self.config = config or default_config()
        n = body.dimension
        rule = sphere_rule(n, frame=body.radial_frame(), config=self.config)
        rho = body.radial(rule.nodes)
        t, w = np.polynomial.legendre.leggauss(RADIAL_NODES)
        t, w = 0.5 * (t + 1), 0.5 * w
        radius = rho[:, None] * t[None]
        self.points = (radius[:, :, None] * rule.nodes[:, None, :]).reshape(-1, n)
        log_weights = (np.log(rule.weights)[:, None] + n * np.log(rho)[:, None]
                       + np.log(w * t ** (n - 1))[None])
        self.log_weights = log_weights.ravel()

    def __call__(self, u: np.ndarray) -> Tuple[float, np.ndarray]:
        """Λ(u) and its gradient, the barycenter of the tilted measure."""
        logs = self.log_weights + self.points @ np.asarray(u, dtype=float)
        value = logsumexp(logs)
        tilt = np.exp(logs - value)
        return float(value), tilt @ self.points

    def conjugate(self, x: np.ndarray) -> float:
        """Λ*(x) = sup_u ⟨x, u⟩ - Λ(u)."""
        x = np.asarray(x, dtype=float)

        def objective(u):
            value, gradient = self(u)
            return value - x @ u, gradient - x

        result = optimize.minimize(objective, np.zeros(self.body.dimension), jac=True,
                                   method='BFGS', options={'gtol': 1e-10, 'maxiter': 500})
        if np.linalg.norm(result.jac) > 1e-6:
            raise OptimizationFailure(f"Λ* ascent stopped at |∇| = {np.linalg.norm(result.jac):.3e} "
                                      f"({result.message}).")
        return float(-result.fun)

    def level_support(self, r: float, theta: np.ndarray) -> float:
        """h_{B_r}(θ) = inf_{t>0} (r + Λ(tθ))/t for B_r = {Λ* <= r}."""
        theta = unit_rows(np.asarray(theta, dtype=float))
        h = float(self.body.support(theta[None])[0])

        def ratio(s):
            t = math.exp(s)
            return (r + self(t * theta)[0]) / t

        grid = np.linspace(-4.0, math.log(200 * (r + self.body.dimension) / h), 64)
        values = [ratio(s) for s in grid]
        best = int(np.argmin(values))
        low, high = grid[max(best - 1, 0)], grid[min(best + 1, len(grid) - 1)]
        result = optimize.minimize_scalar(ratio, bounds=(low, high), method='bounded',
                                          options={'xatol': 1e-10})
        if not result.success:
            raise OptimizationFailure(f"Level-set support search failed: {result.message}")
        return float(min(result.fun, values[best]))

    def level_radius(self, r: float, theta: np.ndarray, xtol: float = 1e-10) -> float:
        """Largest t with Λ*(tθ) <= r; points where the ascent diverges count as outside."""
        theta = unit_rows(np.asarray(theta, dtype=float))
        rho = float(self.body.radial(theta[None])[0])

        def inside(t):
            try:
                return self.conjugate(t * theta) <= r
            except OptimizationFailure:
                return False

        low, high = 0.0, rho / 16
        while high < rho and inside(high):
            low, high = high, min(2 * high, rho)
        while high - low > xtol * rho:
            middle = 0.5 * (low + high)
            if inside(middle):
                low = middle
            else:
                high = middle
        return 0.5 * (low + high)


def log_laplace_conjugate(body: BodyHandle, x, config: Optional[QuadratureConfig] = None) -> float:
    return LogLaplace(body, config).conjugate(np.asarray(x, dtype=float))


def log_laplace_level_support(body: BodyHandle, r: float, theta,
                              config: Optional[QuadratureConfig] = None) -> float:
    """Support of the level set {x : Λ*_K(x) <= r} in direction θ, for r >= 1."""
    if r < 1:
        raise OutOfRange(f"Level sets are taken at r >= 1, got r = {r}.")
    return LogLaplace(body, config).level_support(r, theta)


def log_laplace_level_radius(body: BodyHandle, r: float, theta,
                             config: Optional[QuadratureConfig] = None) -> float:
    if r < 1:
        raise OutOfRange(f"Level sets are taken at r >= 1, got r = {r}.")
    return LogLaplace(body, config).level_radius(r, theta)


def _second_form(body: BodyHandle, normals: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """II(v, v) at the boundary points with the given normals (Weingarten map = inverse of D²h)."""
    basis = tangent_basis(normals)
    restricted = np.einsum('mia,mij,mjb->mab', basis, body.support_hessian(normals), basis)
    local = np.einsum('mia,mi->ma', basis, vectors)
    return np.einsum('ma,mab,mb->m', local, np.linalg.inv(restricted), local)


def section_derivatives(body: BodyHandle, theta, t: float,
                        config: Optional[QuadratureConfig] = None) -> Tuple[float, float]:
    """f'(t) and f''(t) for the section function f(t) = |K ∩ {⟨x, θ⟩ = t}|, as boundary integrals.

    With α the angle between N_K and θ along the section boundary:
    f' = -∫ cos α / sin α ds, and f'' = -∫ [II(w, w)/sin³α - k cos²α/sin²α] ds, where k is the
    curvature of the section curve and w the unit tangent of ∂K orthogonal to it. In the plane the
    integrals are sums over the two endpoints: f' = -Σ cot α_i, f'' = -Σ κ_i / sin³α_i.
    """
    if body.smoothness is not Smoothness.C2_plus:
        raise NonSmoothBody(f"Section derivatives need a C2_plus body, got {body.smoothness.value}.")
    config = config or default_config()
    theta = np.asarray(theta, dtype=float)
    theta = theta / np.linalg.norm(theta)
    n = theta.shape[0]
    center, h = slice_center(body, theta, t)
    if abs(t) >= h:
        raise OutOfRange(f"Section derivatives need |t| < h_K(θ) = {h:.6g}, got {t}.")
    if n == 2:
        e = np.array([[-theta[1], theta[0]], [theta[1], -theta[0]]])
        x = center + ray_exit(body, np.tile(center, (2, 1)), e)[:, None] * e
        normal = unit_rows(body.gauge_gradient(x))
        cos_a = normal @ theta
        sin_a = np.sqrt(1 - cos_a ** 2)
        kappa = 1.0 / curvature_rows(body, normal)
        return float(-np.sum(cos_a / sin_a)), float(-np.sum(kappa / sin_a ** 3))
    if n != 3:
        raise ValueError(f"Section derivatives are implemented for n = 2, 3, got n = {n}.")
    basis = tangent_basis(theta[None])[0]
    m = config.section_nodes
    phi = 2 * math.pi * np.arange(m) / m
    e = np.cos(phi)[:, None] * basis[:, 0] + np.sin(phi)[:, None] * basis[:, 1]
    e_perp = -np.sin(phi)[:, None] * basis[:, 0] + np.cos(phi)[:, None] * basis[:, 1]
    lam = ray_exit(body, np.tile(center, (m, 1)), e)
    x = center + lam[:, None] * e
    normal = unit_rows(body.gauge_gradient(x))
    cos_a = normal @ theta
    sin_a = np.sqrt(1 - cos_a ** 2)
    dlam = -lam * np.sum(normal * e_perp, axis=1) / np.sum(normal * e, axis=1)
    ds = np.sqrt(dlam ** 2 + lam ** 2) * (2 * math.pi / m)
    tau = unit_rows(np.cross(normal, theta))
    w = np.cross(normal, tau)
    k_slice = _second_form(body, normal, tau) / sin_a
    first = -np.sum(cos_a / sin_a * ds)
    second = -np.sum((_second_form(body, normal, w) / sin_a ** 3 - k_slice * cos_a ** 2 / sin_a ** 2) * ds)
    return float(first), float(second)


def tp_maximizer(body: BodyHandle, theta, p: float, config: Optional[QuadratureConfig] = None) -> float:
    """The maximizer t_p of t^p f(t) on [0, h_K(θ)], a root of p f(t) + t f'(t).

    The root is bracketed on [0, h(1 - 1e-12)] and checked to be the only sign change on a
    geometric grid of h - t.
    """
    theta = np.asarray(theta, dtype=float)
    theta = theta / np.linalg.norm(theta)
    h = float(body.support(theta[None])[0])

    def stationarity(t):
        return p * section_volume(body, theta, t, config) + t * section_derivatives(body, theta, t, config)[0]

    top = h * (1 - 1e-12)
    grid = np.concatenate([[0.0], h - h * 0.5 ** np.arange(1, 40), [top]])
    signs = np.sign([stationarity(t) for t in grid])
    changes = int(np.sum(signs[:-1] != signs[1:]))
    if changes != 1:
        raise RootFindFailure(f"Expected one stationary point of t^p f(t) for p = {p}, found {changes}.")
    try:
        t = optimize.brentq(stationarity, 0.0, top, xtol=1e-14, rtol=1e-14)
    except ValueError as e:
        raise RootFindFailure(f"t_p root find failed for p = {p}: {e}") from e
    logger.debug("t_p for p=%g: %.14g (h=%.14g)", p, t, h)
    return t
