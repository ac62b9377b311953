"""Exception types shared across the package."""

from __future__ import annotations


class FluxtuneError(Exception):
    """Base class for all package errors."""


class ParameterError(FluxtuneError, ValueError):
    """A parameter lies outside its physical domain.

    Attributes
    ----------
    field : str
        Name (or dotted path) of the offending field.
    """

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class FluxDomainError(ParameterError):
    """A flux bias point lies outside the supported domain."""


class ClassificationError(FluxtuneError):
    """Eigenstates could not be assigned to |g>, |e>, |psi_->."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        self.diagnostics = dict(diagnostics or {})
        super().__init__(message)


class UnreachableTargetError(FluxtuneError):
    """No f' on the tuning branch gives the requested splitting."""

    def __init__(self, message: str, f: float | None = None, target: float | None = None):
        self.f = f
        self.target = target
        super().__init__(message)


class DegeneracyError(FluxtuneError, ZeroDivisionError):
    """A second-order formula hit a vanishing energy denominator."""
