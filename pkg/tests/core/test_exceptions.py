"""Unit tests for the exception hierarchy."""

from __future__ import annotations

import numpy as np
import pytest

from core.exceptions import (
    CCDError,
    ConfigError,
    FeasibilityError,
    LineSearchStalledError,
    OutputError,
    SimulationError,
    SolverError,
    ValidationError,
    format_exception,
    wrap_exception,
)


def test_ccd_error_base_fields() -> None:
    """CCDError should keep message/code/context/cause fields."""
    err = CCDError("base failure", code="BASE_001", context={"module": "lyapunov"})

    assert err.message == "base failure"
    assert err.code == "BASE_001"
    assert err.context == {"module": "lyapunov"}
    assert err.cause is None


@pytest.mark.parametrize(
    ("error_class", "code"),
    [
        (ConfigError, "CONFIG_ERROR"),
        (ValidationError, "VALIDATION_ERROR"),
        (FeasibilityError, "FEASIBILITY_ERROR"),
        (SolverError, "SOLVER_ERROR"),
        (LineSearchStalledError, "LINE_SEARCH_STALLED"),
        (SimulationError, "SIMULATION_ERROR"),
        (OutputError, "OUTPUT_ERROR"),
    ],
)
def test_subclass_default_codes(error_class: type[CCDError], code: str) -> None:
    err = error_class("boom")

    assert isinstance(err, CCDError)
    assert err.code == code


def test_line_search_stall_is_a_solver_error() -> None:
    with pytest.raises(SolverError):
        raise LineSearchStalledError("no step")


def test_exception_chain_with_cause() -> None:
    root = np.linalg.LinAlgError("singular matrix")
    err = SolverError("Schur back-substitution failed", cause=root)

    assert err.cause is root
    assert err.__cause__ is root


def test_format_exception_includes_context() -> None:
    err = FeasibilityError(
        "start point is outside the feasible set",
        context={"violations": ["m3=90 >= -0"]},
    )

    formatted = format_exception(err)

    assert formatted.startswith("[FEASIBILITY_ERROR] start point")
    assert "violations=['m3=90 >= -0']" in formatted


def test_wrap_linalg_exception() -> None:
    external = np.linalg.LinAlgError("eigenvalues did not converge")

    wrapped = wrap_exception(
        external,
        SolverError,
        "eigenvalue iteration did not converge",
        context={"size": 4},
    )

    assert isinstance(wrapped, SolverError)
    assert wrapped.context == {"size": 4}
    assert wrapped.__cause__ is external
    assert "cause: LinAlgError: eigenvalues did not converge" in str(wrapped)


def test_wrap_exception_with_custom_code() -> None:
    wrapped = wrap_exception(
        ValueError("dt too large"), SimulationError, "step failed", code="SIM_001"
    )

    assert wrapped.code == "SIM_001"


def test_format_exception_for_generic_exception() -> None:
    formatted = format_exception(KeyError("sigma"))

    assert formatted.startswith("KeyError")
    assert "sigma" in formatted
