"""Cone measures, the boundary densities p and q, and their relative entropies.

On ∂K with surface measure μ,

    p(x) = κ_K(x) / (⟨x, N_K(x)⟩^n · n|K°|),    q(x) = ⟨x, N_K(x)⟩ / (n|K|),

are probability densities. Q = qμ is the cone measure of K and P = pμ is the pullback of the cone
measure of K° under the normal maps. In sphere coordinates (normal parametrization dμ = f_K dσ)

    D_KL(P‖Q) = (1/(n|K°|)) ∫ h^{-n} [log(|K|/|K°|) - log(f h^{n+1})] dσ(u),

and with the radial parametrization ⟨x, N⟩dμ = ρ^n dσ(ω)

    D_KL(Q‖P) = (1/(n|K|)) ∫ ρ^n [log(|K°|/|K|) + log(f(u) h(u)^{n+1})] dσ(ω),  u = N_K(ρ(ω)ω).
"""
import dataclasses
import logging
import math
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy import optimize
from scipy.stats import gennorm
from tqdm import tqdm

from conegeom.bodies.catalog import CrossPolytope, Ellipsoid, EuclideanBall, LpBall
from conegeom.bodies.lp_ball import LpBallSpec
from conegeom.config import QuadratureConfig, default_config, default_grids
from conegeom.enums import BodyKind, Smoothness
from conegeom.errors import DomainError, NonSmoothBody, RootFindFailure, UnsupportedBody
from conegeom.geometry import (BodyHandle, curvature_rows, polar_body, polar_volume_value,
                               radial_boundary_points, spread_directions, unit_rows,
                               volume_value)
from conegeom.omega import omega_entropy
from conegeom.quadrature import cap_rule, integrate_sphere, sphere_rule, stream_rng

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True, eq=False)
class Cap:
    """The spherical cap {u : angle(u, center) < half_angle}."""
    center: np.ndarray
    half_angle: float

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float)
        object.__setattr__(self, 'center', center / np.linalg.norm(center))
        if not 0 < self.half_angle <= math.pi:
            raise DomainError(f"Cap half angle must lie in (0, π], got {self.half_angle}.")

    def contains(self, u: np.ndarray) -> np.ndarray:
        return unit_rows(np.atleast_2d(u)) @ self.center > math.cos(self.half_angle)

    def to_dict(self) -> Dict:
        return {'center': self.center.tolist(), 'half_angle': self.half_angle}


@dataclasses.dataclass(frozen=True)
class CapUnion:
    caps: List[Cap]

    def contains(self, u: np.ndarray) -> np.ndarray:
        return np.any([cap.contains(u) for cap in self.caps], axis=0)


Region = Union[Cap, CapUnion, None]


def default_caps(n: int, count: Optional[int] = None, half_angle: Optional[float] = None) -> List[Cap]:
    """Equispaced caps on the circle (n = 2) or on a Fibonacci spiral (n >= 3)."""
    grids = default_grids()
    count = count or grids['caps']
    half_angle = half_angle or grids['cap_half_angle']
    centers = spread_directions(n, count)
    return [Cap(center, half_angle) for center in centers]


@dataclasses.dataclass
class DensityPair:
    body: BodyHandle
    volume: float
    polar_volume: float

    def _normal_data(self, x: np.ndarray):
        x = np.atleast_2d(x)
        normal = unit_rows(self.body.gauge_gradient(x))
        return 1.0 / curvature_rows(self.body, normal), np.sum(x * normal, axis=1)

    def p_density(self, x: np.ndarray) -> np.ndarray:
        kappa, support = self._normal_data(x)
        n = self.body.dimension
        return kappa / (support ** n * n * self.polar_volume)

    def q_density(self, x: np.ndarray) -> np.ndarray:
        _, support = self._normal_data(x)
        return support / (self.body.dimension * self.volume)

    def masses(self, config: Optional[QuadratureConfig] = None):
        """(∫ p dμ, ∫ q dμ), both 1 up to quadrature error."""
        n = self.body.dimension
        rule = sphere_rule(n, frame=self.body.radial_frame(), config=config)

        def surface(omega):
            points = radial_boundary_points(self.body, omega)
            return points.x, self.body.radial(omega) ** n / points.support_value

        def p_mass(omega):
            x, element = surface(omega)
            return self.p_density(x) * element

        def q_mass(omega):
            x, element = surface(omega)
            return self.q_density(x) * element

        return (integrate_sphere(p_mass, rule, config=config).value,
                integrate_sphere(q_mass, rule, config=config).value)


def densities(body: BodyHandle, config: Optional[QuadratureConfig] = None) -> DensityPair:
    if body.smoothness is not Smoothness.C2_plus:
        raise NonSmoothBody(f"The density p needs curvature, {body.kind.value} has none.")
    return DensityPair(body, volume_value(body, config), polar_volume_value(body, config))


def kl_p_q(body: BodyHandle, config: Optional[QuadratureConfig] = None) -> float:
    """D_KL(P‖Q) by quadrature over normals."""
    pair = densities(body, config)
    n = body.dimension
    shift = math.log(pair.volume / pair.polar_volume)

    def integrand(u):
        h = body.support(u)
        log_term = np.log(curvature_rows(body, u)) + (n + 1) * np.log(h)
        return h ** (-n) * (shift - log_term) / (n * pair.polar_volume)

    rule = sphere_rule(n, frame=body.normal_frame(), config=config)
    return integrate_sphere(integrand, rule, config=config).value


def kl_q_p(body: BodyHandle, config: Optional[QuadratureConfig] = None) -> float:
    """D_KL(Q‖P) by quadrature over radial directions."""
    pair = densities(body, config)
    n = body.dimension
    shift = math.log(pair.polar_volume / pair.volume)

    def integrand(omega):
        points = radial_boundary_points(body, omega)
        rho = body.radial(omega)
        log_term = -np.log(points.gauss_curvature) + (n + 1) * np.log(points.support_value)
        return rho ** n * (shift + log_term) / (n * pair.volume)

    rule = sphere_rule(n, frame=body.radial_frame(), config=config)
    return integrate_sphere(integrand, rule, config=config).value


def kl_identity_residuals(body: BodyHandle, config: Optional[QuadratureConfig] = None,
                          allow_numerical_polar: bool = False) -> Dict[str, float]:
    """Residuals of the two divergence identities and of the cone-measure form of Ω.

    D_KL(P‖Q) = log(|K|/|K°|) - (1/n) log Ω_K,  D_KL(Q‖P) = log(|K°|/|K|) - (1/n) log Ω_{K°},
    and Ω_K^{1/n} = (|K°|/|K|) exp(-D_KL(P‖Q)).
    """
    n = body.dimension
    vol, polar_vol = volume_value(body, config), polar_volume_value(body, config)
    omega = omega_entropy(body, config)
    omega_polar = omega_entropy(polar_body(body, allow_numerical_polar), config)
    pq, qp = kl_p_q(body, config), kl_q_p(body, config)
    return {
        'kl_pq': pq - (math.log(vol / polar_vol) - math.log(omega) / n),
        'kl_qp': qp - (math.log(polar_vol / vol) - math.log(omega_polar) / n),
        'omega_from_kl': omega ** (1 / n) - polar_vol / vol * math.exp(-pq),
    }


def _region_integral(body: BodyHandle, integrand, region: Region, frame: np.ndarray,
                     config: Optional[QuadratureConfig]) -> float:
    n = body.dimension
    if isinstance(region, Cap) and n <= 3:
        return integrate_sphere(integrand, cap_rule(region.center, region.half_angle),
                                config=config).value
    rule = sphere_rule(n, frame=frame, config=config)
    if region is None:
        return integrate_sphere(integrand, rule, config=config).value
    return integrate_sphere(lambda u: integrand(u) * region.contains(u), rule, config=config,
                            estimate_error=False).value


def cone_measure(body: BodyHandle, region: Region = None, on: str = 'radial',
                 config: Optional[QuadratureConfig] = None) -> float:
    """Normalized cone measure cm_K of a boundary set given by a cap of directions.

    :param body: The body.
    :param region: A cap or a union of caps; None means all of ∂K.
    :param on: 'radial' if the region constrains x/|x|, 'normal' if it constrains N_K(x).
    :param config: Quadrature settings.
    :return: A value in [0, 1].
    """
    n = body.dimension
    vol = volume_value(body, config)
    if on == 'radial':
        def integrand(omega):
            return body.radial(omega) ** n / (n * vol)
        frame = body.radial_frame()
    elif on == 'normal':
        def integrand(u):
            return body.support(u) * curvature_rows(body, u) / (n * vol)
        frame = body.normal_frame()
    else:
        raise ValueError(f"`on` must be 'radial' or 'normal', got {on}.")
    return _region_integral(body, integrand, region, frame, config)


def p_measure(body: BodyHandle, region: Region,
              config: Optional[QuadratureConfig] = None) -> float:
    """P(A) for the boundary set A with normals in `region`: (1/(n|K°|)) ∫_region h^{-n} dσ."""
    n = body.dimension
    polar_vol = polar_volume_value(body, config)
    return _region_integral(body, lambda u: body.support(u) ** (-n) / (n * polar_vol), region,
                            body.normal_frame(), config)


@dataclasses.dataclass
class ConeSample:
    """A batch of boundary points distributed according to the cone measure."""
    points: np.ndarray
    stream: int
    weight: float

    def __len__(self) -> int:
        return len(self.points)


def _lp_sphere_sample(spec: LpBallSpec, count: int, rng: np.random.Generator) -> np.ndarray:
    if math.isinf(spec.r):
        raise DomainError("Cone-measure sampling needs 1 <= r < inf.")
    raw = gennorm.rvs(spec.r, size=(count, spec.n), random_state=rng)
    return raw / np.sum(np.abs(raw) ** spec.r, axis=1, keepdims=True) ** (1 / spec.r)


def _body_sample(body: BodyHandle, count: int, rng: np.random.Generator,
                 allow_resampling: bool) -> np.ndarray:
    n = body.dimension
    if isinstance(body, EuclideanBall):
        return body.radius * _lp_sphere_sample(LpBallSpec(n, 2.0), count, rng)
    if isinstance(body, CrossPolytope):
        return body.radius * _lp_sphere_sample(LpBallSpec(n, 1.0), count, rng)
    if isinstance(body, LpBall):
        return _lp_sphere_sample(body.spec, count, rng)
    if isinstance(body, Ellipsoid):
        return _lp_sphere_sample(LpBallSpec(n, 2.0), count, rng) @ body.matrix.T
    if body.kind in {BodyKind.linear_image, BodyKind.normalized}:
        # linear maps carry cones to cones and scale all volumes alike
        return _body_sample(body.base, count, rng, allow_resampling) @ body.matrix.T
    if not allow_resampling:
        raise UnsupportedBody(f"No exact cone-measure sampler for {body.kind.value}.")
    gauss = rng.standard_normal((4 * count, n))
    omega = unit_rows(gauss)
    rho = body.radial(omega)
    weights = rho ** n / np.sum(rho ** n)
    index = rng.choice(len(omega), size=count, p=weights)
    return rho[index, None] * omega[index]


def sample_cone_measure(spec: Union[LpBallSpec, BodyHandle], count: int, seed: int = 0,
                        stream: int = 0, allow_resampling: bool = False) -> ConeSample:
    """Samples of the cone measure of an l_r ball (generalized Gaussian coordinates).

    Linear images of l_r balls and ellipsoids are sampled exactly by mapping. Other bodies raise
    UnsupportedBody unless `allow_resampling`, which resamples Gaussian directions with weights ρ^n.
    """
    rng = stream_rng(seed, stream)
    if isinstance(spec, LpBallSpec):
        points = _lp_sphere_sample(spec, int(count), rng)
    else:
        points = _body_sample(spec, int(count), rng, allow_resampling)
    return ConeSample(points=points, stream=stream, weight=1.0 / count)


def _normal_map(body: BodyHandle, x: np.ndarray) -> np.ndarray:
    return unit_rows(body.gauge_gradient(x))


def _composite_normal(body: BodyHandle, polar: BodyHandle, y: np.ndarray) -> np.ndarray:
    """For y on ∂K°: N_K at the point of ∂K in the direction N_{K°}(y)."""
    v = _normal_map(polar, y)
    x = body.radial(v)[:, None] * v
    return _normal_map(body, x)


def _mapped_arc(body: BodyHandle, polar: BodyHandle, cap: Cap):
    """Radial angles on ∂K° bounding {y : N_K(N_{K°}(y)-point) ∈ cap}, for n = 2."""
    center = math.atan2(cap.center[1], cap.center[0])

    def composite_angle(phi):
        omega = np.array([[math.cos(phi), math.sin(phi)]])
        y = polar.radial(omega)[:, None] * omega
        normal = _composite_normal(body, polar, y)[0]
        return math.atan2(normal[1], normal[0])

    def edge(target):
        def offset(phi):
            return (composite_angle(phi) - target + math.pi) % (2 * math.pi) - math.pi
        try:
            return optimize.brentq(offset, target - 0.5, target + 0.5, xtol=1e-14)
        except ValueError as e:
            raise RootFindFailure(f"Could not bracket the mapped cap edge at {target:.6g}.") from e

    return edge(center - cap.half_angle), edge(center + cap.half_angle)


def mapped_cone_measure(body: BodyHandle, cap: Cap, config: Optional[QuadratureConfig] = None) -> float:
    """cm_{K°} of the boundary set of K° whose image under the normal maps has normals in `cap`.

    Computed from data of K° (its radial function and normals) and the normals of K only.
    """
    polar = body.polar()
    n = body.dimension
    polar_vol = volume_value(polar, config)

    def integrand(omega):
        return polar.radial(omega) ** n / (n * polar_vol)

    if n == 2:
        low, high = _mapped_arc(body, polar, cap)
        middle = 0.5 * (low + high)
        arc = Cap(np.array([math.cos(middle), math.sin(middle)]), 0.5 * (high - low))
        return integrate_sphere(integrand, cap_rule(arc.center, arc.half_angle), config=config).value

    def indicator(omega):
        y = polar.radial(omega)[:, None] * omega
        return integrand(omega) * cap.contains(_composite_normal(body, polar, y))

    rule = sphere_rule(n, frame=polar.radial_frame(), config=config)
    return integrate_sphere(indicator, rule, config=config, estimate_error=False).value


def pushforward_table(body: BodyHandle, caps: Optional[Sequence[Cap]] = None,
                      config: Optional[QuadratureConfig] = None,
                      mc_samples: Optional[int] = None, seed: int = 0) -> pd.DataFrame:
    """Per cap: P(A) by quadrature against cm_{K°} of the mapped set, and optionally an MC frequency."""
    if body.smoothness is not Smoothness.C2_plus:
        raise NonSmoothBody("The pushforward check needs injective normal maps.")
    caps = caps if caps is not None else default_caps(body.dimension)
    polar = body.polar()
    if mc_samples:
        config = config or default_config()
        if mc_samples > config.mc_max_samples:
            raise DomainError(f"mc_samples = {mc_samples} exceeds {config.mc_max_samples}.")
        sample = sample_cone_measure(polar, mc_samples, seed=seed)
        normals = _composite_normal(body, polar, sample.points)
    rows = []
    for index, cap in enumerate(caps):
        p_value = p_measure(body, cap, config)
        mapped = mapped_cone_measure(body, cap, config)
        row = {'cap': index, 'half_angle': cap.half_angle, 'p_measure': p_value,
               'polar_cone_measure': mapped, 'residual': abs(p_value - mapped)}
        if mc_samples:
            frequency = float(np.mean(cap.contains(normals)))
            sigma = math.sqrt(max(p_value * (1 - p_value), 1e-300) / mc_samples)
            row.update({'mc_frequency': frequency, 'z_score': (frequency - p_value) / sigma})
        rows.append(row)
    return pd.DataFrame(rows)


def pushforward_check(body: BodyHandle, caps: Optional[Sequence[Cap]] = None,
                      config: Optional[QuadratureConfig] = None) -> float:
    """Largest |P(A) - cm_{K°}(N_{K°}^{-1}(N_K(A)))| over the caps."""
    return float(pushforward_table(body, caps, config)['residual'].max())


@dataclasses.dataclass
class EntropyReport:
    kl_pq: float
    kl_qp: float
    identity_residuals: Dict[str, float]
    cap_table: List[Dict]

    def to_dict(self) -> Dict:
        return dataclasses.asdict(self)


def entropy_report(body: BodyHandle, caps: int = 8, mc_samples: Optional[int] = None,
                   seed: int = 0, config: Optional[QuadratureConfig] = None,
                   progress: bool = False) -> EntropyReport:
    """Both divergences, their identity residuals, and the cap table of the pushforward check."""
    steps = tqdm(total=3, desc='entropy', disable=not progress)
    pq, qp = kl_p_q(body, config), kl_q_p(body, config)
    steps.update()
    residuals = kl_identity_residuals(body, config)
    steps.update()
    table = pushforward_table(body, default_caps(body.dimension, caps), config, mc_samples, seed)
    steps.update()
    steps.close()
    return EntropyReport(kl_pq=pq, kl_qp=qp, identity_residuals=residuals,
                         cap_table=table.to_dict(orient='records'))
