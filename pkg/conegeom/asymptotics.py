"""Large-p expansions of Beta-function powers, Stirling brackets, and limit fitting.

Extended precision (mpmath) is used only inside this module; everything it returns to the rest of
the package is a plain float, except the `exact` sides which stay `mpmath.mpf`.
"""
import dataclasses
import logging
import math
import warnings
from collections import OrderedDict
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np
import pandas as pd

from conegeom.config import FitConfig, default_fit_config
from conegeom.errors import DomainError, FitUnreliable, FitWarning

logger = logging.getLogger(__name__)

WORKING_DPS = 40

# 1 + 1/(12x) + 1/(288x^2) - 139/(51840x^3) - 571/(2488320x^4) as (numerator, denominator) pairs
STIRLING_COEFFICIENTS = ((1, 1), (1, 12), (1, 288), (-139, 51840), (-571, 2488320))

BRACKETS = ('derived', 'displayed')


@dataclasses.dataclass
class LimitFit:
    grid: List[float]
    samples: List[float]
    model: str
    coefficients: List[float]
    limit: float
    fit_residual: float
    reliable: bool = True

    @property
    def exp_limit(self) -> float:
        """exp(limit), for fits made on the log scale."""
        return math.exp(self.limit)

    def to_dict(self) -> Dict:
        return dataclasses.asdict(self)


@dataclasses.dataclass
class ExpansionResult:
    n: int
    p: float
    a: float
    exact: mpmath.mpf
    expansion: float
    residual: float

    @property
    def scaled_residual(self) -> float:
        return self.p ** 2 * self.residual


def _log(p):
    return np.log(p)


FIT_MODELS: 'OrderedDict[str, List[Callable[[np.ndarray], np.ndarray]]]' = OrderedDict([
    ('log_over_p', [np.ones_like, lambda p: _log(p) / p, lambda p: 1 / p]),
    ('inverse_log', [np.ones_like, lambda p: 1 / _log(p)]),
    ('first_limit', [np.ones_like, lambda p: 1 / _log(p), lambda p: _log(p) / p, lambda p: 1 / p]),
    ('second_limit', [np.ones_like, lambda p: _log(p) ** 2 / p, lambda p: _log(p) / p,
                      lambda p: 1 / p]),
    ('power', [np.ones_like, lambda p: 1 / p, lambda p: 1 / p ** 2]),
])


def make_terms(model: str, p: np.ndarray) -> np.ndarray:
    try:
        terms = FIT_MODELS[model]
    except KeyError as e:
        raise ValueError(f"Unknown fit model {model}, must be one of {list(FIT_MODELS)}.") from e
    p = np.asarray(p, dtype=float)
    return np.stack([term(p) for term in terms], axis=1)


def fit_limit(samples: Sequence[Tuple[float, float]], model: str = 'log_over_p',
              config: Optional[FitConfig] = None) -> LimitFit:
    """Least-squares fit of (p, value) samples to a model whose constant term is the limit.

    :param samples: At least 4 pairs (p, value) with increasing p.
    :param model: A key of `FIT_MODELS`.
    :param config: Fit threshold; with `strict` an unreliable fit raises instead of warning.
    :return: The fit record.
    """
    config = config or default_fit_config()
    if len(samples) < 4:
        raise ValueError(f"Limit fits need at least 4 samples, got {len(samples)}.")
    grid = np.array([s[0] for s in samples], dtype=float)
    values = np.array([s[1] for s in samples], dtype=float)
    if np.any(np.diff(grid) <= 0):
        raise ValueError("Sample abscissae must be strictly increasing.")
    terms = make_terms(model, grid)
    coefficients = np.linalg.lstsq(terms, values, rcond=None)[0]
    residual = float(np.max(np.abs(terms @ coefficients - values)))
    limit = float(coefficients[0])
    reliable = residual <= config.threshold(limit)
    logger.debug("fit %s: limit %.12g, residual %.3e", model, limit, residual)
    fit = LimitFit(grid=grid.tolist(), samples=values.tolist(), model=model,
                   coefficients=coefficients.tolist(), limit=limit, fit_residual=residual,
                   reliable=reliable)
    if not reliable:
        message = (f"Fit residual {residual:.3e} exceeds {config.threshold(limit):.3e} "
                   f"for model {model}.")
        if config.strict:
            raise FitUnreliable(message)
        warnings.warn(FitWarning(message))
    return fit


def beta_power_exact(n: int, p: float) -> mpmath.mpf:
    """B(p+1, (n+1)/2)^{n/p} from log-Gamma at 40 digits."""
    if p <= 0:
        raise DomainError(f"p must be positive, got {p}.")
    with mpmath.workdps(WORKING_DPS):
        p_ = mpmath.mpf(p)
        b = mpmath.mpf(n + 1) / 2
        log_beta = mpmath.loggamma(p_ + 1) + mpmath.loggamma(b) - mpmath.loggamma(p_ + 1 + b)
        return +mpmath.exp(n / p_ * log_beta)


def _bracket_constant(n: int, a: float, bracket: str) -> mpmath.mpf:
    if bracket == 'derived':
        constant = mpmath.mpf((n + 1) * (n + 3)) / 4
    elif bracket == 'displayed':
        constant = mpmath.mpf((n + 1) * (n * n + 3 * n + 6)) / 4
    else:
        raise ValueError(f"`bracket` must be one of {BRACKETS}, got {bracket}.")
    return constant + mpmath.mpf((n + 1) * (n - 1)) / 2 * a


def _expansion(n: int, p: float, a: float, bracket: str, order: int) -> mpmath.mpf:
    with mpmath.workdps(WORKING_DPS):
        p_ = mpmath.mpf(p)
        L = mpmath.log(p_)
        G = mpmath.loggamma(mpmath.mpf(n + 1) / 2)
        value = 1 - n * (n + 1) * L / (2 * p_) + n * G / p_
        if order >= 2:
            value += (n ** 2 * (n + 1) ** 2 * L ** 2 / (8 * p_ ** 2)
                      - n ** 2 * (n + 1) * G * L / (2 * p_ ** 2)
                      + n / (2 * p_ ** 2) * (n * G ** 2 - _bracket_constant(n, a, bracket)))
        return value


def beta_power_expansion(n: int, p: float, bracket: str = 'derived', order: int = 2) -> float:
    """Large-p expansion of B(p+1, (n+1)/2)^{n/p}.

    :param n: Dimension.
    :param p: Exponent, p >= 16.
    :param bracket: 'derived' uses the constant 1/p² term (n+1)(n+3)/4 that follows from the
        log-Gamma series; 'displayed' uses (n+1)(n²+3n+6)/4.
    :param order: 2 keeps all 1/p² terms, 1 truncates after the 1/p terms.
    """
    return float(_expansion(n, p, 0.0, bracket, order))


def weighted_beta_exact(n: int, p: float, a: float) -> mpmath.mpf:
    """(∫_0^1 u^p (1-u)^{(n-1)/2} (1-a(1-u))^{(n-1)/2} du)^{n/p} by adaptive quadrature."""
    if not 0 <= a <= 1:
        raise DomainError(f"a must lie in [0, 1], got {a}.")
    with mpmath.workdps(WORKING_DPS):
        p_ = mpmath.mpf(p)
        beta = mpmath.mpf(n - 1) / 2
        a_ = mpmath.mpf(a)

        # v = 1 - u puts the mass near v ~ 1/p
        def integrand(v):
            return v ** beta * (1 - v) ** p_ * (1 - a_ * v) ** beta

        points = [mpmath.mpf(0)]
        edge = mpmath.mpf(1) / (4 * p_)
        while edge < 1:
            points.append(edge)
            edge *= 2
        points.append(mpmath.mpf(1))
        integral = mpmath.quad(integrand, points)
        return +mpmath.exp(n / p_ * mpmath.log(integral))


def weighted_beta_expansion(n: int, p: float, a: float,
                            bracket: str = 'derived') -> Tuple[mpmath.mpf, float]:
    """Exact weighted Beta power and its large-p expansion.

    :return: (exact, expansion).
    """
    return weighted_beta_exact(n, p, a), float(_expansion(n, p, a, bracket, 2))


def expansion_result(n: int, p: float, a: float = 0.0, bracket: str = 'derived') -> ExpansionResult:
    if a == 0:
        exact = beta_power_exact(n, p)
    else:
        exact = weighted_beta_exact(n, p, a)
    with mpmath.workdps(WORKING_DPS):
        expansion = _expansion(n, p, a, bracket, 2)
        residual = float(exact - expansion)
    return ExpansionResult(n=n, p=p, a=a, exact=exact, expansion=float(expansion), residual=residual)


def expansion_table(n_values: Sequence[int], a_values: Sequence[float], grid: Sequence[float],
                    bracket: str = 'derived') -> pd.DataFrame:
    rows = []
    for n in n_values:
        for a in a_values:
            for p in grid:
                result = expansion_result(n, p, a, bracket)
                rows.append({'n': n, 'a': a, 'p': p, 'exact': mpmath.nstr(result.exact, 30),
                             'expansion': result.expansion, 'residual': result.residual,
                             'p2residual': result.scaled_residual})
    return pd.DataFrame(rows)


def residual_decays(table: pd.DataFrame) -> bool:
    """Whether p²|residual| is nonincreasing along p for every (n, a) group."""
    for _, group in table.groupby(['n', 'a']):
        scaled = np.abs(group.sort_values('p')['p2residual'].to_numpy())
        if np.any(np.diff(scaled) > 0):
            return False
    return True


def stirling_terms(x: float, terms: int = 3) -> mpmath.mpf:
    """√(2π) x^{x-1/2} e^{-x} [1 + 1/(12x) + 1/(288x²) + ...] with `terms` bracket terms (1 to 5)."""
    if not 1 <= terms <= len(STIRLING_COEFFICIENTS):
        raise ValueError(f"`terms` must lie in [1, {len(STIRLING_COEFFICIENTS)}], got {terms}.")
    with mpmath.workdps(WORKING_DPS):
        x_ = mpmath.mpf(x)
        bracket = mpmath.fsum(mpmath.mpf(a) / b / x_ ** k
                              for k, (a, b) in enumerate(STIRLING_COEFFICIENTS[:terms]))
        return +(mpmath.sqrt(2 * mpmath.pi) * x_ ** (x_ - mpmath.mpf(1) / 2) * mpmath.exp(-x_) * bracket)


def stirling_residual(x: float, terms: int = 3) -> float:
    """Relative error of :func:`stirling_terms` against Γ(x)."""
    with mpmath.workdps(WORKING_DPS):
        return float(stirling_terms(x, terms) / mpmath.gamma(mpmath.mpf(x)) - 1)
