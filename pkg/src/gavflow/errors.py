"""Exception types, each mapped to a CLI exit code."""

from __future__ import annotations


class GavflowError(Exception):
    exit_code = 1


class VerificationError(GavflowError):
    """A computed quantity disagrees with its reference or oracle."""

    exit_code = 1


class ConfigurationError(GavflowError, ValueError):
    """Invalid parameters (tube radius, cut-off levels, orders, ...)."""

    exit_code = 2


class NumericDomainError(GavflowError, ValueError):
    """A point or level lies outside the region where a quantity is defined."""

    exit_code = 3


class DerivationError(VerificationError):
    """The exact matching equations are inconsistent at some monomial."""


class SingularReversionError(GavflowError, ArithmeticError):
    """Series reversion with a vanishing linear coefficient."""

    exit_code = 3


class ConvergenceError(NumericDomainError):
    """Newton iteration failed to converge."""


class NoMotionError(NumericDomainError):
    """The initial point sits where the cut-off vanishes."""


class IntegrationError(NumericDomainError):
    """Step size collapsed or the integrator reported failure."""
