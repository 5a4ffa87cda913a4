"""Unit tests for analytic cost gradients."""

from __future__ import annotations

import numpy as np
import pytest

from core.discretization import GridConfig, X0Mode, assemble
from core.exceptions import FeasibilityError
from core.lyapunov import cost_jf, solve_lyapunov
from core.model import DesignObjective, DesignPoint, FreeMask, Weights
from core.sensitivity import (
    Gradient,
    finite_difference_gradient,
    gradient_jf,
    param_derivatives,
    sensitivity_p_design,
    sensitivity_p_gain,
)

ALL_FREE: FreeMask = (True, True, True, True)


def _random_feasible_point(rng: np.random.Generator) -> DesignPoint:
    # k1 > 0 keeps kbar = 0 and k2 < -1/2 makes every margin negative;
    # b < 0 makes every Gershgorin disc of A sit left of the imaginary axis.
    return DesignPoint(
        a=float(rng.uniform(0.5, 3.0)),
        b=float(rng.uniform(-1.0, -0.05)),
        k1=float(rng.uniform(0.1, 3.0)),
        k2=float(rng.uniform(-3.0, -0.6)),
        free_mask=ALL_FREE,
    )


def _analytic(
    point: DesignPoint,
    weights: Weights,
    grid: GridConfig,
    x0_mode: X0Mode = X0Mode.IDENTITY,
) -> tuple[Gradient, float]:
    system = assemble(point, weights, grid, x0_mode)
    jf, solution = cost_jf(system, point, weights)
    return gradient_jf(point, weights, system, solution), jf


def test_reaction_derivative_is_identity() -> None:
    derivs = param_derivatives(DesignPoint(3.0, -1.0, 2.0, -2.0), GridConfig(n=3))

    np.testing.assert_array_equal(derivs.dA_db, np.eye(3))


def test_gain_derivative_entries() -> None:
    left = param_derivatives(DesignPoint(1.0, 0.0, 1.0, 0.0), GridConfig(n=3))
    right = param_derivatives(DesignPoint(2.0, 0.0, 0.0, 0.0), GridConfig(n=3))

    assert left.dA_dk1[0, 0] == -2.0
    assert np.count_nonzero(left.dA_dk1) == 1
    assert right.dA_dk2[2, 2] == 4.0
    assert np.count_nonzero(right.dA_dk2) == 1


def test_gain_derivatives_match_input_matrix() -> None:
    point = DesignPoint(2.5, -0.3, 1.2, -1.7)
    grid = GridConfig(n=9)
    derivs = param_derivatives(point, grid)
    system = assemble(point, Weights(), grid)

    np.testing.assert_array_equal(derivs.dA_dk1, system.B @ derivs.dK_dk1)
    np.testing.assert_array_equal(derivs.dA_dk2, system.B @ derivs.dK_dk2)


def test_diffusion_derivative_pattern() -> None:
    point = DesignPoint(4.0, 0.0, 1.5, -2.0)
    grid = GridConfig(n=7)
    derivs = param_derivatives(point, grid)
    a_mat = assemble(point, Weights(), grid).A

    np.testing.assert_array_equal(derivs.dA_da != 0.0, a_mat != 0.0)
    # with b = 0 the closed loop is linear in a
    np.testing.assert_allclose(point.a * derivs.dA_da, a_mat, rtol=1e-14)


def test_scalar_design_sensitivity() -> None:
    a_mat = np.array([[-1.0]])
    p_mat = solve_lyapunov(a_mat, np.array([[1.0]])).P

    dp = sensitivity_p_design(a_mat, p_mat, np.array([[1.0]]))

    assert dp[0, 0] == pytest.approx(0.5)


def test_zero_forcing_gives_zero_sensitivity() -> None:
    point = DesignPoint(2.0, -0.5, 1.0, -1.0)
    system = assemble(point, Weights(r=1.0), GridConfig(n=5))
    p_mat = solve_lyapunov(system.A, system.q_tilde).P
    zero = np.zeros((5, 5))

    np.testing.assert_array_equal(sensitivity_p_design(system.A, p_mat, zero), zero)
    dp = sensitivity_p_gain(
        system.A, p_mat, zero, system.K, np.zeros((2, 5)), np.zeros((2, 2))
    )
    np.testing.assert_array_equal(dp, zero)


def test_sensitivity_is_linear_in_forcing() -> None:
    point = DesignPoint(2.0, -0.5, 1.0, -1.0)
    system = assemble(point, Weights(r=1.0), GridConfig(n=6))
    p_mat = solve_lyapunov(system.A, system.q_tilde).P
    derivs = param_derivatives(point, system.grid)

    single = sensitivity_p_design(system.A, p_mat, derivs.dA_da)
    double = sensitivity_p_design(system.A, p_mat, 2.0 * derivs.dA_da)

    np.testing.assert_allclose(double, 2.0 * single, rtol=1e-12, atol=0.0)
    np.testing.assert_array_equal(single, single.T)


def test_gradient_matches_finite_differences_on_random_points() -> None:
    rng = np.random.default_rng(42)
    weights = Weights(q=1.0, r=1.0)
    for index in range(100):
        grid = GridConfig(n=(4, 8, 16)[index % 3])
        point = _random_feasible_point(rng)

        analytic, jf = _analytic(point, weights, grid)
        numeric = finite_difference_gradient(point, weights, grid)

        np.testing.assert_allclose(
            analytic.g, numeric.g, rtol=1e-5, atol=1e-8 * max(1.0, jf)
        )


def test_gradient_matches_finite_differences_for_outer_product_mode() -> None:
    point = DesignPoint(1.5, -0.4, 0.8, -1.2, free_mask=ALL_FREE)
    grid = GridConfig(n=10)
    weights = Weights(q=1.0, r=10.0)

    analytic, jf = _analytic(point, weights, grid, X0Mode.OUTER_PRODUCT)
    numeric = finite_difference_gradient(
        point, weights, grid, x0_mode=X0Mode.OUTER_PRODUCT
    )

    np.testing.assert_allclose(
        analytic.g, numeric.g, rtol=1e-5, atol=1e-8 * max(1.0, jf)
    )


def test_design_objective_adds_two_a() -> None:
    mask: FreeMask = (True, False, True, True)
    point = DesignPoint(10.0, 0.0, 7.0, -5.0, free_mask=mask)
    grid = GridConfig(n=12)

    plain, _ = _analytic(point, Weights(), grid)
    squared, _ = _analytic(point, Weights(objective=DesignObjective.SQUARE_OF_A), grid)

    assert squared.g[0] - plain.g[0] == pytest.approx(20.0)
    assert squared.g[1] == 0.0


def test_single_free_gain_has_one_nonzero_entry() -> None:
    point = DesignPoint(10.0, 0.0, 7.0, -5.0, free_mask=(False, False, False, True))

    gradient, _ = _analytic(point, Weights(), GridConfig(n=12))

    assert np.count_nonzero(gradient.g) == 1
    assert gradient.g[3] != 0.0
    assert gradient.norm == pytest.approx(abs(gradient.g[3]))


def test_masked_gradient_zeroes_frozen_entries() -> None:
    gradient = Gradient.masked(
        np.array([3.0, 4.0, 12.0, -1.0]), (False, True, True, False)
    )

    np.testing.assert_array_equal(gradient.g, [0.0, 4.0, 12.0, 0.0])
    assert gradient.norm == pytest.approx(np.hypot(4.0, 12.0))
    assert gradient.as_dict() == {"a": 0.0, "b": 4.0, "k1": 12.0, "k2": 0.0}


def test_finite_difference_outside_feasible_set_fails() -> None:
    point = DesignPoint(10.0, 0.0, 0.0, 0.0, free_mask=(False, False, True, False))

    with pytest.raises(FeasibilityError):
        finite_difference_gradient(point, Weights(), GridConfig(n=6))
