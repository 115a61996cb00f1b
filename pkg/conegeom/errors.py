"""Exceptions and warnings raised by conegeom.

Every error derives from :class:`ConegeomError`. Errors that signal an exhausted numerical budget
(quadrature, Monte Carlo, fits, root finding) also derive from :class:`NumericalBudgetError`, which
the CLI maps to exit status 2.
"""
from typing import Optional

import numpy as np


class ConegeomError(Exception):
    pass


class NumericalBudgetError(ConegeomError):
    pass


class ConfigError(ConegeomError, ValueError):
    pass


class NonSmoothBody(ConegeomError):
    pass


class SingularHessian(ConegeomError):
    pass


class DegenerateBody(ConegeomError):
    pass


class QuadratureBudgetExceeded(NumericalBudgetError):
    pass


class NonFiniteIntegrand(ConegeomError):

    def __init__(self, message: str, node: Optional[np.ndarray] = None):
        super().__init__(message)
        self.node = node


class SingularMatrix(ConegeomError, ValueError):
    pass


class OffBoundary(ConegeomError, ValueError):
    pass


class UndefinedCurvature(ConegeomError):
    pass


class ExcludedExponent(ConegeomError, ValueError):
    pass


class DimensionMismatch(ConegeomError, ValueError):
    pass


class PolarNotInCatalog(ConegeomError):
    pass


class FitUnreliable(NumericalBudgetError):
    pass


class DomainError(ConegeomError, ValueError):
    pass


class OutOfRange(ConegeomError, ValueError):
    pass


class ExponentTooSmall(ConegeomError, ValueError):
    pass


class VolumeNotNormalized(ConegeomError, ValueError):
    pass


class RootFindFailure(NumericalBudgetError):
    pass


class OptimizationFailure(NumericalBudgetError):
    pass


class UnsupportedBody(ConegeomError):
    pass


class BudgetExceeded(NumericalBudgetError):
    pass


class QuadratureWarning(UserWarning):
    pass


class AccuracyWarning(UserWarning):
    pass


class FitWarning(UserWarning):
    pass
