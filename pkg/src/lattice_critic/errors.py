"""Exception types shared across the package."""

from __future__ import annotations


class LatticeCriticError(Exception):
    """Base class for all numerical failures raised by this package."""


class PoleError(LatticeCriticError):
    """The requested point is a pole of the function."""


class DomainError(LatticeCriticError, ValueError):
    """Arguments lie outside the validated domain of an evaluator."""


class NoConvergence(LatticeCriticError):
    """An iterative method exhausted its budget without meeting tolerance."""


class PoleOrZeroTooClose(LatticeCriticError):
    """A finite-difference stencil touched a zero or pole of the function."""


class PoleSentinel(PoleError):
    """A ratio hit a vanishing denominator (pole of U_K, F, ...)."""


class BranchError(LatticeCriticError):
    """Both reconstruction branches have vanishing denominators."""


class UnsupportedFunction(LatticeCriticError, ValueError):
    """The function has no real rotation on the critical line."""


class LostBracket(LatticeCriticError):
    """Bracket endpoints no longer have opposite signs."""


class WindingNotOne(LatticeCriticError):
    """A seed box does not enclose exactly one zero."""

    def __init__(self, winding: int, message: str | None = None):
        self.winding = winding
        super().__init__(message or f"contour winding number is {winding}, expected 1")


class DegenerateDerivative(LatticeCriticError):
    """An argument derivative is too small to decide its sign."""


class MissedZeroWarning(UserWarning):
    """Sign-change count disagrees with the argument-principle count."""
