"""Numerical integration on the sphere and along slices of a body.

Product rules (n <= 4) are built from geometrically graded Gauss-Legendre panels in hyperspherical
coordinates. Every coordinate hyperplane sits on a panel boundary, so integrands with algebraic
singularities there (curvature of l_r balls) converge without excluding nodes. A rule can be
transported by a frame matrix A (u = Av/|Av|), which moves those panel boundaries onto A's image of
the coordinate hyperplanes. For n >= 5 the rule is a scrambled Sobol point set mapped to the sphere.
"""
import dataclasses
import logging
import math
import warnings
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize, special
from scipy.stats import qmc

from conegeom.config import QuadratureConfig, default_config
from conegeom.enums import RuleKind
from conegeom.errors import (NonFiniteIntegrand, OutOfRange, QuadratureBudgetExceeded,
                             QuadratureWarning, RootFindFailure)

logger = logging.getLogger(__name__)

GRADING_RATIO = 0.15

# (grading depth, Gauss order) per refinement level
PANEL_LEVELS = {
    2: [(6, 8), (9, 12), (12, 16), (15, 20), (18, 24)],
    3: [(4, 6), (6, 8), (8, 10), (10, 12)],
    4: [(2, 4), (3, 5), (4, 6)],
}

CONCENTRATED_ORDER = 12
CONCENTRATED_AZIMUTH = 32


def sphere_area(n: int) -> float:
    """Surface area of S^{n-1}, that is n|B_2^n|."""
    return 2 * math.pi ** (n / 2) / math.gamma(n / 2)


def ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


@dataclasses.dataclass(frozen=True, eq=False)
class SphereRule:
    dimension: int
    nodes: np.ndarray
    weights: np.ndarray
    kind: RuleKind
    level: int = 0
    frame: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.weights)

    def refined(self, config: Optional[QuadratureConfig] = None) -> 'SphereRule':
        return sphere_rule(self.dimension, self.level + 1, self.frame, config)

    def coarsened(self, config: Optional[QuadratureConfig] = None) -> 'SphereRule':
        return sphere_rule(self.dimension, self.level - 1, self.frame, config)

    def reflected(self) -> 'SphereRule':
        """The same rule under the relabeling u -> -u."""
        return dataclasses.replace(self, nodes=-self.nodes)


@dataclasses.dataclass
class IntegralResult:
    value: float
    error_estimate: float
    nodes_used: int


def graded_panels(a: float, b: float, depth: int, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [a, b], graded geometrically toward both ends."""
    half = 0.5 * (b - a)
    offsets = half * GRADING_RATIO ** np.arange(depth, 0, -1)
    breaks = np.concatenate([[a], a + offsets, [a + half], b - offsets[::-1], [b]])
    x, w = np.polynomial.legendre.leggauss(order)
    left, right = breaks[:-1, None], breaks[1:, None]
    nodes = 0.5 * (right - left) * x[None] + 0.5 * (right + left)
    weights = 0.5 * (right - left) * w[None]
    return nodes.ravel(), weights.ravel()


def _angle_rule(pieces: int, span: float, depth: int, order: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = [], []
    for k in range(pieces):
        x, w = graded_panels(k * span, (k + 1) * span, depth, order)
        nodes.append(x)
        weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


def _product_rule(n: int, depth: int, order: int) -> Tuple[np.ndarray, np.ndarray]:
    # azimuth split into quadrants, polar angles split at pi/2
    phi, w_phi = _angle_rule(4, math.pi / 2, depth, order)
    if n == 2:
        return np.stack([np.cos(phi), np.sin(phi)], axis=1), w_phi
    psi, w_psi = _angle_rule(2, math.pi / 2, depth, order)
    grids = np.meshgrid(*([psi] * (n - 2) + [phi]), indexing='ij')
    wgrids = np.meshgrid(*([w_psi] * (n - 2) + [w_phi]), indexing='ij')
    angles = [g.ravel() for g in grids]
    weights = np.prod([g.ravel() for g in wgrids], axis=0)
    nodes = np.empty((len(weights), n))
    running = np.ones(len(weights))
    for k in range(n - 2):
        nodes[:, k] = running * np.cos(angles[k])
        sin_k = np.sin(angles[k])
        weights = weights * sin_k ** (n - 2 - k)
        running = running * sin_k
    nodes[:, n - 2] = running * np.cos(angles[-1])
    nodes[:, n - 1] = running * np.sin(angles[-1])
    return nodes, weights


def qmc_rule(n: int, log2_points: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    sampler = qmc.Sobol(d=n, scramble=True, seed=seed)
    cube = np.clip(sampler.random_base2(m=log2_points), 1e-15, 1 - 1e-15)
    gauss = special.ndtri(cube)
    nodes = gauss / np.linalg.norm(gauss, axis=1, keepdims=True)
    return nodes, np.full(len(nodes), sphere_area(n) / len(nodes))


def transport(nodes: np.ndarray, weights: np.ndarray,
              frame: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Pushes a rule forward by v -> Av/|Av|, with Jacobian |det A|/|Av|^n."""
    image = nodes @ frame.T
    norm = np.linalg.norm(image, axis=1)
    n = nodes.shape[1]
    return image / norm[:, None], weights * abs(np.linalg.det(frame)) / norm ** n


def sphere_rule(n: int, level: Optional[int] = None, frame: Optional[np.ndarray] = None,
                config: Optional[QuadratureConfig] = None) -> SphereRule:
    """Builds the sphere rule of dimension `n` at a refinement level.

    :param n: Dimension of the ambient space, the rule lives on S^{n-1}.
    :param level: Refinement level; defaults to the configured level for `n`.
    :param frame: Optional invertible matrix transporting the rule.
    :param config: Quadrature settings.
    :return: The rule.
    """
    config = config or default_config()
    if level is None:
        level = config.default_level(n)
    if n in PANEL_LEVELS:
        levels = PANEL_LEVELS[n]
        level = int(min(max(level, 0), len(levels) - 1))
        depth, order = levels[level]
        nodes, weights = _product_rule(n, depth, order)
        kind = RuleKind.product_gauss
    else:
        level = max(int(level), 0)
        nodes, weights = qmc_rule(n, config.qmc_log2_points + level, config.seed)
        kind = RuleKind.quasi_monte_carlo
    if frame is not None and kind is RuleKind.product_gauss and not np.allclose(frame, np.eye(n)):
        nodes, weights = transport(nodes, weights, np.asarray(frame, dtype=float))
    return SphereRule(dimension=n, nodes=nodes, weights=weights, kind=kind, level=level, frame=frame)


def circle_rule(cuts: Sequence[float] = (), frame: Optional[np.ndarray] = None,
                level: Optional[int] = None, config: Optional[QuadratureConfig] = None) -> SphereRule:
    """Rule on S^1 with graded panels between the coordinate axes and the extra angles `cuts`.

    Angles are taken in frame coordinates, so a cut at angle a places a panel boundary at the image
    of (cos a, sin a) under `frame`.
    """
    config = config or default_config()
    level = config.default_level(2) if level is None else level
    depth, order = PANEL_LEVELS[2][int(min(max(level, 0), len(PANEL_LEVELS[2]) - 1))]
    angles = np.concatenate([np.arange(4) * math.pi / 2, np.asarray(cuts, dtype=float)])
    angles = np.unique(np.mod(angles, 2 * math.pi))
    angles = np.append(angles, angles[0] + 2 * math.pi)
    pieces = [graded_panels(a, b, depth, order) for a, b in zip(angles[:-1], angles[1:]) if b - a > 1e-12]
    phi = np.concatenate([piece[0] for piece in pieces])
    weights = np.concatenate([piece[1] for piece in pieces])
    nodes = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    if frame is not None and not np.allclose(frame, np.eye(2)):
        nodes, weights = transport(nodes, weights, np.asarray(frame, dtype=float))
    return SphereRule(dimension=2, nodes=nodes, weights=weights, kind=RuleKind.product_gauss,
                      level=level, frame=frame)


def concentrated_rule(center: np.ndarray, scale: float) -> SphereRule:
    """Rule on the hemisphere around `center`, graded on the angular scale `scale`.

    Weights are doubled, so it integrates even integrands over the whole sphere. Used for
    integrands concentrating near ±center (n = 2, 3).
    """
    center = np.asarray(center, dtype=float)
    center = center / np.linalg.norm(center)
    n = center.shape[0]
    top = math.pi / 2
    breaks = [0.0]
    step = scale / 8
    while step < top:
        breaks.append(step)
        step *= 2
    breaks.append(top)
    breaks = np.array(breaks)
    x, w = np.polynomial.legendre.leggauss(CONCENTRATED_ORDER)
    left, right = breaks[:-1, None], breaks[1:, None]
    angle = (0.5 * (right - left) * x[None] + 0.5 * (right + left)).ravel()
    angle_w = (0.5 * (right - left) * w[None]).ravel()
    if n == 2:
        normal = np.array([-center[1], center[0]])
        alpha = np.concatenate([angle, -angle])
        nodes = np.cos(alpha)[:, None] * center + np.sin(alpha)[:, None] * normal
        weights = 2 * np.concatenate([angle_w, angle_w])
    elif n == 3:
        from conegeom.geometry import tangent_basis
        basis = tangent_basis(center[None])[0]
        phi = 2 * math.pi * np.arange(CONCENTRATED_AZIMUTH) / CONCENTRATED_AZIMUTH
        psi, ph = np.meshgrid(angle, phi, indexing='ij')
        wpsi = np.repeat(angle_w * np.sin(angle), CONCENTRATED_AZIMUTH)
        psi, ph = psi.ravel(), ph.ravel()
        nodes = (np.cos(psi)[:, None] * center
                 + np.sin(psi)[:, None] * (np.cos(ph)[:, None] * basis[:, 0]
                                           + np.sin(ph)[:, None] * basis[:, 1]))
        weights = 2 * wpsi * (2 * math.pi / CONCENTRATED_AZIMUTH)
    else:
        raise ValueError(f"Concentrated rules exist for n = 2, 3, got n = {n}.")
    return SphereRule(dimension=n, nodes=nodes, weights=weights, kind=RuleKind.concentrated)


def cap_rule(center: np.ndarray, half_angle: float, panels: int = 8) -> SphereRule:
    """Rule on the cap {ω : angle(ω, center) < half_angle}, for n = 2, 3."""
    center = np.asarray(center, dtype=float)
    center = center / np.linalg.norm(center)
    n = center.shape[0]
    if not 0 < half_angle <= math.pi:
        raise ValueError(f"Cap half angle must lie in (0, π], got {half_angle}.")
    x, w = np.polynomial.legendre.leggauss(CONCENTRATED_ORDER)
    breaks = np.linspace(0.0, half_angle, panels + 1)
    left, right = breaks[:-1, None], breaks[1:, None]
    angle = (0.5 * (right - left) * x[None] + 0.5 * (right + left)).ravel()
    angle_w = (0.5 * (right - left) * w[None]).ravel()
    if n == 2:
        normal = np.array([-center[1], center[0]])
        alpha = np.concatenate([angle, -angle])
        nodes = np.cos(alpha)[:, None] * center + np.sin(alpha)[:, None] * normal
        weights = np.concatenate([angle_w, angle_w])
    elif n == 3:
        from conegeom.geometry import tangent_basis
        basis = tangent_basis(center[None])[0]
        phi = 2 * math.pi * np.arange(CONCENTRATED_AZIMUTH) / CONCENTRATED_AZIMUTH
        psi, ph = np.meshgrid(angle, phi, indexing='ij')
        wpsi = np.repeat(angle_w * np.sin(angle), CONCENTRATED_AZIMUTH)
        psi, ph = psi.ravel(), ph.ravel()
        nodes = (np.cos(psi)[:, None] * center
                 + np.sin(psi)[:, None] * (np.cos(ph)[:, None] * basis[:, 0]
                                           + np.sin(ph)[:, None] * basis[:, 1]))
        weights = wpsi * (2 * math.pi / CONCENTRATED_AZIMUTH)
    else:
        raise ValueError(f"Cap rules exist for n = 2, 3, got n = {n}.")
    return SphereRule(dimension=n, nodes=nodes, weights=weights, kind=RuleKind.concentrated)


def evaluate_rule(f: Callable[[np.ndarray], np.ndarray], rule: SphereRule) -> float:
    values = np.asarray(f(rule.nodes), dtype=float)
    finite = np.isfinite(values)
    if not np.all(finite):
        index = int(np.argmin(finite))
        raise NonFiniteIntegrand(
            f"Integrand is {values[index]} at node {rule.nodes[index]}.", node=rule.nodes[index])
    # numpy reduces with pairwise summation, so the sum is deterministic for a fixed rule
    return float(np.sum(rule.weights * values))


def _mc_error(f: Callable[[np.ndarray], np.ndarray], rule: SphereRule) -> float:
    values = np.asarray(f(rule.nodes), dtype=float) * rule.weights * len(rule)
    return float(3 * np.std(values) / math.sqrt(len(rule)))


def integrate_sphere(f: Callable[[np.ndarray], np.ndarray], rule, config: Optional[QuadratureConfig] = None,
                     estimate_error: bool = True) -> IntegralResult:
    """Integrates `f` over S^{n-1}, refining the rule until the error estimate meets the tolerance.

    :param f: Vectorized integrand taking an (m, n) array of unit rows.
    :param rule: A :class:`SphereRule`, or a dimension for the default rule.
    :param config: Quadrature settings (tolerance, maximum level, strictness).
    :param estimate_error: If False, evaluates the given rule once and reports a NaN error.
    :return: The integral with its error estimate.
    """
    config = config or default_config()
    if isinstance(rule, int):
        rule = sphere_rule(rule, config=config)
    value = evaluate_rule(f, rule)
    used = len(rule)
    if not estimate_error:
        return IntegralResult(value, float('nan'), used)
    if rule.kind is RuleKind.quasi_monte_carlo:
        return IntegralResult(value, _mc_error(f, rule), used)
    if rule.kind is RuleKind.concentrated:
        return IntegralResult(value, float('nan'), used)

    tol = config.sphere_tol
    current = rule
    if current.level > 0:
        coarse = current.coarsened(config)
        error = abs(value - evaluate_rule(f, coarse))
        used += len(coarse)
    else:
        error = math.inf
    while error > tol * max(1.0, abs(value)) and current.level < min(
            config.max_level(rule.dimension), len(PANEL_LEVELS[rule.dimension]) - 1):
        current = current.refined(config)
        finer = evaluate_rule(f, current)
        used += len(current)
        error = abs(finer - value)
        value = finer
        logger.debug("sphere rule level %d: value %.16g, error %.3e", current.level, value, error)
    if error > tol * max(1.0, abs(value)):
        message = (f"Sphere quadrature reached level {current.level} with error estimate "
                   f"{error:.3e} above the tolerance {tol:.1e}.")
        if config.strict:
            raise QuadratureBudgetExceeded(message)
        warnings.warn(QuadratureWarning(message))
    return IntegralResult(value, error, used)


def stream_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by (seed, stream)."""
    return np.random.Generator(np.random.Philox(key=(int(seed) << 64) + int(stream)))


def ray_exit(body, origins: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """Distances λ >= 0 with origin + λ·direction on the boundary, for interior origins.

    Newton iterations on λ -> g_K(c + λe) - 1 start outside the body; the function is convex, so
    the iterates decrease monotonically to the exit point.
    """
    origins = np.atleast_2d(origins)
    directions = np.atleast_2d(directions)
    if np.allclose(origins, 0.0):
        return body.radial(directions / np.linalg.norm(directions, axis=1, keepdims=True)) \
            / np.linalg.norm(directions, axis=1)
    start = np.full(len(directions), 2.5 * body.circumradius() / np.min(
        np.linalg.norm(directions, axis=1)))

    def excess(lam):
        return body.gauge(origins + lam[:, None] * directions) - 1.0

    def slope(lam):
        grad = body.gauge_gradient(origins + lam[:, None] * directions)
        return np.sum(grad * directions, axis=1)

    try:
        lam = optimize.newton(excess, start, fprime=slope, tol=1e-14, maxiter=100)
    except RuntimeError as e:
        raise RootFindFailure(f"Ray exit did not converge: {e}") from e
    return np.asarray(lam, dtype=float)


def slice_center(body, theta: np.ndarray, t: float) -> Tuple[np.ndarray, float]:
    h = float(body.support(theta[None])[0])
    if abs(t) > h:
        raise OutOfRange(f"|t| = {abs(t):.6g} exceeds h_K(θ) = {h:.6g}.")
    top = body.support_gradient(theta[None])[0]
    return (t / h) * top, h


def section_volume(body, theta, t: float, config: Optional[QuadratureConfig] = None,
                   stream: int = 0) -> float:
    """(n-1)-volume of the section K ∩ {⟨x, θ⟩ = t}.

    :param body: The body.
    :param theta: Unit normal of the hyperplane.
    :param t: Offset, with |t| <= h_K(θ).
    :param config: Quadrature settings.
    :param stream: RNG stream for n >= 4.
    :return: The section volume.
    """
    config = config or default_config()
    theta = np.asarray(theta, dtype=float)
    theta = theta / np.linalg.norm(theta)
    n = theta.shape[0]
    center, h = slice_center(body, theta, t)
    if abs(t) == h:
        return 0.0
    if n == 2:
        e = np.array([[-theta[1], theta[0]], [theta[1], -theta[0]]])
        return float(np.sum(ray_exit(body, np.tile(center, (2, 1)), e)))
    from conegeom.geometry import tangent_basis
    basis = tangent_basis(theta[None])[0]
    if n == 3:
        m = config.section_nodes
        phi = 2 * math.pi * np.arange(m) / m
        e = np.cos(phi)[:, None] * basis[:, 0] + np.sin(phi)[:, None] * basis[:, 1]
        lam = ray_exit(body, np.tile(center, (m, 1)), e)
        return float(0.5 * np.sum(lam ** 2) * (2 * math.pi / m))
    rng = stream_rng(config.seed, stream)
    count = min(config.mc_chunk, 20000)
    gauss = rng.standard_normal((count, n - 1))
    local = gauss / np.linalg.norm(gauss, axis=1, keepdims=True)
    e = local @ basis.T
    lam = ray_exit(body, np.tile(center, (count, 1)), e)
    return float(sphere_area(n - 1) / (n - 1) * np.mean(lam ** (n - 1)))


def cap_volume(body, theta, t: float, config: Optional[QuadratureConfig] = None,
               stream: int = 0) -> float:
    """vol{x ∈ K : ⟨x, θ⟩ >= t} for 0 <= t <= h_K(θ).

    For n <= 3 the sections are integrated over [t, h] after the substitution s = h - (h-t)v²,
    which removes the square-root behaviour of the section at the top of the cap. For n >= 4 the
    volume is a Monte Carlo average over directions of the exact radial integral of each ray.
    """
    config = config or default_config()
    theta = np.asarray(theta, dtype=float)
    theta = theta / np.linalg.norm(theta)
    n = theta.shape[0]
    h = float(body.support(theta[None])[0])
    if t < 0 or t > h:
        raise OutOfRange(f"Cap offset t = {t:.6g} must lie in [0, {h:.6g}].")
    if t == h:
        return 0.0
    if n <= 3:
        v, w = np.polynomial.legendre.leggauss(config.cap_nodes)
        v, w = 0.5 * (v + 1), 0.5 * w
        depth = h - t
        sections = np.array([section_volume(body, theta, h - depth * vk ** 2, config) for vk in v])
        return float(np.sum(w * sections * 2 * depth * v))
    rng = stream_rng(config.seed, stream)
    count = min(config.mc_chunk, 200000)
    gauss = rng.standard_normal((count, n))
    omega = gauss / np.linalg.norm(gauss, axis=1, keepdims=True)
    rho = body.radial(omega)
    c = omega @ theta
    with np.errstate(divide='ignore'):
        start = np.where(c > 0, t / c, np.inf)
    contribution = np.where(start < rho, (rho ** n - np.minimum(start, rho) ** n) / n, 0.0)
    return float(sphere_area(n) * np.mean(contribution))


def slab_volume(body, theta, t: float, config: Optional[QuadratureConfig] = None) -> float:
    """vol{x ∈ K : |⟨x, θ⟩| <= t}, integrating sections over [-t, t]."""
    config = config or default_config()
    theta = np.asarray(theta, dtype=float)
    theta = theta / np.linalg.norm(theta)
    h = float(body.support(theta[None])[0])
    if t < 0:
        raise OutOfRange(f"Slab half-width t = {t:.6g} must be nonnegative.")
    t = min(t, h)
    if theta.shape[0] > 3:
        from conegeom.geometry import volume_value
        return volume_value(body, config) - 2 * cap_volume(body, theta, t, config)
    s, w = np.polynomial.legendre.leggauss(config.cap_nodes)
    s, w = 0.5 * t * (s + 1), 0.5 * t * w
    sections = np.array([section_volume(body, theta, sk, config) for sk in s])
    return float(2 * np.sum(w * sections))
