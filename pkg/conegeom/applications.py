"""Two computations built on Ω: the positive-orthant l_r integral and the surface-body identity."""
import dataclasses
import logging
import math
from typing import Dict, Optional

import numpy as np
from scipy.special import digamma, gammaln
from tqdm import tqdm

from conegeom.config import QuadratureConfig, default_config
from conegeom.enums import Smoothness
from conegeom.errors import BudgetExceeded, DomainError, NonSmoothBody
from conegeom.geometry import BodyHandle, polar_volume_value, radial_boundary_points
from conegeom.omega import omega_closed_form, omega_entropy
from conegeom.quadrature import integrate_sphere, sphere_rule, stream_rng

logger = logging.getLogger(__name__)

SECTION5_VARIANTS = ('derived', 'displayed')


def _check_section5(n: int, r: float) -> None:
    if n < 2:
        raise DomainError(f"`n` must be at least 2, got {n}.")
    if not 1 < r < math.inf:
        raise DomainError(f"`r` must lie in (1, inf), got {r}.")


def section5_closed_form(n: int, r: float, variant: str = 'derived') -> float:
    """Closed form of ∫ ∏_{i<n} x_i^{r-2} log[(r-1)^{n-1} ∏_{i≤n} x_i^{r-2}] x_n^{-1} dx.

    The integral runs over the part of B_r^{n-1} with nonnegative coordinates, with
    x_n = (1 - Σ_{i<n} x_i^r)^{1/r}. With α = (r-1)/r the derived value is
    (1/r^{n-1}) Γ(α)^n/Γ(nα) [(n(r-2)/r)(ψ(α) - ψ(nα)) + (n-1) log(r-1)].
    The displayed variant has a leading factor n and log r in place of log(r-1).
    """
    _check_section5(n, r)
    if variant not in SECTION5_VARIANTS:
        raise ValueError(f"`variant` must be one of {SECTION5_VARIANTS}, got {variant!r}.")
    a = (r - 1) / r
    prefactor = math.exp(n * gammaln(a) - gammaln(n * a) - (n - 1) * math.log(r))
    digamma_term = (n * (r - 2) / r) * (digamma(a) - digamma(n * a))
    if variant == 'derived':
        return prefactor * (digamma_term + (n - 1) * math.log(r - 1))
    return n * prefactor * (digamma_term + (n - 1) * math.log(r))


@dataclasses.dataclass
class Section5Result:
    n: int
    r: float
    mc_value: float
    std_error: float
    closed_form: float
    samples: int
    seed: int

    @property
    def rel_error(self) -> float:
        if self.closed_form == 0:
            return abs(self.mc_value)
        return abs(self.mc_value - self.closed_form) / abs(self.closed_form)

    @property
    def z_score(self) -> float:
        if self.std_error == 0:
            return 0.0 if self.mc_value == self.closed_form else math.inf
        return (self.mc_value - self.closed_form) / self.std_error

    def to_dict(self) -> Dict:
        data = dataclasses.asdict(self)
        data['rel_error'] = self.rel_error
        data['z_score'] = self.z_score
        return data


def _section5_chunk(n: int, r: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Importance weights F/q for one chunk.

    The proposal draws y ~ Dirichlet(α, ..., α) and sets x_i = y_i^{1/r}, so (x_1..x_n) lies on the
    positive part of the unit l_r sphere and the x_n^{-1} singularity is absorbed by the density.
    """
    a = (r - 1) / r
    gammas = rng.standard_gamma(a, size=(size, n))
    log_y = np.log(gammas) - np.log(np.sum(gammas, axis=1, keepdims=True))
    log_x = log_y / r
    log_term = (n - 1) * math.log(r - 1) + (r - 2) * np.sum(log_x, axis=1)
    log_f = (r - 2) * np.sum(log_x[:, :-1], axis=1) - log_x[:, -1]
    log_q = (gammaln(n * a) - n * gammaln(a) + (a - 1) * np.sum(log_y, axis=1)
             + (n - 1) * math.log(r) + (r - 1) * np.sum(log_x[:, :-1], axis=1))
    return log_term * np.exp(log_f - log_q)


def section5_integral(n: int, r: float, mc_budget: Optional[int] = None, seed: Optional[int] = None,
                      config: Optional[QuadratureConfig] = None, progress: bool = False) -> Section5Result:
    """Monte Carlo estimate of the positive-orthant l_r integral next to its closed form.

    Chunk k draws from the stream (seed, k), so the estimate does not depend on the chunk order.

    :param mc_budget: Number of samples; the configured `mc_samples` by default.
    :param seed: Seed of the sampler; the configured seed by default.
    :return: Estimate, standard error and the derived closed form.
    """
    _check_section5(n, r)
    config = config or default_config()
    budget = int(config.mc_samples if mc_budget is None else mc_budget)
    seed = config.seed if seed is None else int(seed)
    if budget <= 0 or budget > config.mc_max_samples:
        raise BudgetExceeded(f"`mc_budget` must lie in [1, {config.mc_max_samples}], got {budget}.")
    total, total_sq = 0.0, 0.0
    chunks = range(0, budget, config.mc_chunk)
    for k, start in enumerate(tqdm(chunks, disable=not progress, desc=f"section5 n={n} r={r}")):
        size = min(config.mc_chunk, budget - start)
        weights = _section5_chunk(n, r, size, stream_rng(seed, k))
        if not np.all(np.isfinite(weights)):
            raise BudgetExceeded(f"Non-finite sample weights for n = {n}, r = {r}; "
                                 f"the proposal underflows this close to r = 1.")
        total += float(np.sum(weights))
        total_sq += float(np.sum(weights ** 2))
    mean = total / budget
    variance = max(total_sq / budget - mean ** 2, 0.0)
    std_error = math.sqrt(variance / budget)
    result = Section5Result(n=n, r=r, mc_value=mean, std_error=std_error,
                            closed_form=section5_closed_form(n, r), samples=budget, seed=seed)
    logger.debug("section5 n=%d r=%g: %.10g ± %.2e vs %.10g", n, r, mean, std_error,
                 result.closed_form)
    return result


@dataclasses.dataclass
class SurfaceBodyResult:
    quadrature_value: float
    omega_value: float
    omega: float
    polar_volume: float

    @property
    def residual(self) -> float:
        return abs(self.quadrature_value - self.omega_value)

    def to_dict(self) -> Dict:
        data = dataclasses.asdict(self)
        data['residual'] = self.residual
        return data


def surface_body_rhs(body: BodyHandle, config: Optional[QuadratureConfig] = None) -> SurfaceBodyResult:
    """Both sides of ∫_{∂K} (κ/⟨x,N⟩^n) log(κ/⟨x,N⟩^{n+1}) dμ = |K°| log(1/Ω_K).

    The left side integrates over the radially parametrized boundary; the right side takes Ω from
    the closed form when the body has one and from the entropy route otherwise.
    """
    if body.smoothness is not Smoothness.C2_plus:
        raise NonSmoothBody(f"The surface-body identity needs a C2_plus body, got "
                            f"{body.smoothness.value}.")
    n = body.dimension

    def integrand(omega):
        points = radial_boundary_points(body, omega)
        kappa, h = points.gauss_curvature, points.support_value
        surface_element = body.radial(omega) ** n / h
        return kappa / h ** n * (np.log(kappa) - (n + 1) * np.log(h)) * surface_element

    rule = sphere_rule(n, frame=body.radial_frame(), config=config)
    quadrature_value = integrate_sphere(integrand, rule, config=config).value
    omega = omega_closed_form(body)
    if omega is None:
        omega = omega_entropy(body, config)
    polar_vol = polar_volume_value(body, config)
    return SurfaceBodyResult(quadrature_value=quadrature_value, omega_value=-polar_vol * math.log(omega),
                             omega=omega, polar_volume=polar_vol)
