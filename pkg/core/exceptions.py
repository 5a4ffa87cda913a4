"""Exception hierarchy and helpers for the co-design toolkit.

This module provides a consistent exception model used by core components:

- ``CCDError`` as the base class with error code, context and root cause.
- Domain-specific subclasses for config/validation/feasibility/solver/
  simulation/output failures.
- Utility helpers to wrap numerical library exceptions and to format errors.
"""

from __future__ import annotations

from typing import Any, Mapping, TypeVar

TCCDError = TypeVar("TCCDError", bound="CCDError")


class CCDError(Exception):
    """Base exception for all toolkit-level errors.

    Attributes:
        message: Human-readable error message.
        code: Stable error code for programmatic processing.
        context: Extra metadata useful for debugging and logging.
        cause: Original exception that triggered this error.
    """

    default_code = "CCD_ERROR"

    def __init__(
        self,
        message: str,
        code: str | None = None,
        context: Mapping[str, Any] | None = None,
        cause: Exception | None = None,
    ) -> None:
        self.message: str = message
        self.code: str = code if code is not None else self.default_code
        self.context: dict[str, Any] = dict(context) if context is not None else {}
        self.cause: Exception | None = cause

        super().__init__(message)

        if cause is not None:
            self.__cause__ = cause

    def __str__(self) -> str:
        """Return a formatted, readable exception string."""
        return format_exception(self)


class ConfigError(CCDError):
    """Run-file parsing or validation error."""

    default_code = "CONFIG_ERROR"


class ValidationError(CCDError):
    """Invalid design point, weights or argument."""

    default_code = "VALIDATION_ERROR"


class FeasibilityError(CCDError):
    """A design point lies outside the feasible set D."""

    default_code = "FEASIBILITY_ERROR"


class SolverError(CCDError):
    """Dense linear-algebra failure (eigenvalues, Lyapunov solve)."""

    default_code = "SOLVER_ERROR"


class LineSearchStalledError(SolverError):
    """Armijo backtracking exhausted its budget without an acceptable step."""

    default_code = "LINE_SEARCH_STALLED"


class SimulationError(CCDError):
    """Time-integration failure of the semi-discrete PDE."""

    default_code = "SIMULATION_ERROR"


class OutputError(CCDError):
    """Result files could not be written."""

    default_code = "OUTPUT_ERROR"


def wrap_exception(
    exc: Exception,
    error_class: type[TCCDError],
    message: str,
    *,
    code: str | None = None,
    context: Mapping[str, Any] | None = None,
) -> TCCDError:
    """Wrap an external exception with a toolkit exception class.

    Args:
        exc: Original exception raised by numpy/scipy or a lower layer.
        error_class: Target ``CCDError`` subclass to construct.
        message: Message for the wrapped exception.
        code: Optional explicit error code overriding class default.
        context: Optional context payload.

    Returns:
        An instance of ``error_class`` that chains ``exc`` as its cause.
    """
    return error_class(message, code=code, context=context, cause=exc)


def format_exception(exc: BaseException) -> str:
    """Format exception into a readable one-line text.

    For ``CCDError`` it includes code, message, context and cause.
    For generic exceptions, it returns ``<Type>: <message>``.
    """
    if isinstance(exc, CCDError):
        base = f"[{exc.code}] {exc.message}"
        context_part = ""
        if exc.context:
            context_items = ", ".join(
                f"{key}={value!r}" for key, value in sorted(exc.context.items())
            )
            context_part = f" | context: {context_items}"

        cause_part = ""
        if exc.cause is not None:
            cause_part = f" | cause: {type(exc.cause).__name__}: {exc.cause}"

        return f"{base}{context_part}{cause_part}"

    return f"{type(exc).__name__}: {exc}"


__all__ = [
    "CCDError",
    "ConfigError",
    "ValidationError",
    "FeasibilityError",
    "SolverError",
    "LineSearchStalledError",
    "SimulationError",
    "OutputError",
    "wrap_exception",
    "format_exception",
]
