"""Analytic gradient of the reformulated cost.

Differentiating ``A^T P + P A + Qtilde = 0`` with respect to a parameter
``theta`` gives another Lyapunov equation for ``dP/dtheta`` with the same
``A``:

    A^T dP + dP A + dA^T P + P dA + dK^T Rd K + K^T Rd dK = 0

(the gain terms vanish for plant parameters). The cost gradient is then
``df_d/dtheta + tr(dP X0)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discretization import DiscreteSystem, GridConfig, X0Mode, assemble
from .exceptions import FeasibilityError
from .lyapunov import LyapunovSolution, assess_feasibility, cost_jf, solve_sensitivity
from .model import PARAM_NAMES, DesignPoint, FloatArray, FreeMask, Weights

_MAX_STEP_HALVINGS = 40


@dataclass(frozen=True, slots=True)
class ParamDerivatives:
    """Parameter derivatives of ``A`` and ``K``."""

    dA_da: FloatArray
    dA_db: FloatArray
    dA_dk1: FloatArray
    dA_dk2: FloatArray
    dK_dk1: FloatArray
    dK_dk2: FloatArray


@dataclass(frozen=True, slots=True)
class Gradient:
    """Cost gradient over ``(a, b, k1, k2)`` with frozen entries zeroed."""

    g: FloatArray
    free_mask: FreeMask

    @classmethod
    def masked(cls, raw: FloatArray, free_mask: FreeMask) -> Gradient:
        values = np.where(np.asarray(free_mask), np.asarray(raw, dtype=float), 0.0)
        return cls(g=values, free_mask=free_mask)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.g[np.asarray(self.free_mask)]))

    def as_dict(self) -> dict[str, float]:
        return {name: float(v) for name, v in zip(PARAM_NAMES, self.g)}


def param_derivatives(point: DesignPoint, grid: GridConfig) -> ParamDerivatives:
    """Derivatives of the closed-loop matrix entries."""
    n, dxi = grid.n, grid.dxi
    h2 = dxi * dxi

    main = np.full(n, -2.0)
    main[0] = -1.0 - point.k1 * dxi
    main[-1] = -1.0 + point.k2 * dxi
    off = np.ones(n - 1)
    da_da = (np.diag(main) + np.diag(off, 1) + np.diag(off, -1)) / h2

    da_dk1 = np.zeros((n, n))
    da_dk1[0, 0] = -point.a / dxi
    da_dk2 = np.zeros((n, n))
    da_dk2[-1, -1] = point.a / dxi

    dk_dk1 = np.zeros((2, n))
    dk_dk1[0, 0] = 1.0
    dk_dk2 = np.zeros((2, n))
    dk_dk2[1, -1] = 1.0

    return ParamDerivatives(
        dA_da=da_da,
        dA_db=np.eye(n),
        dA_dk1=da_dk1,
        dA_dk2=da_dk2,
        dK_dk1=dk_dk1,
        dK_dk2=dk_dk2,
    )


def sensitivity_p_design(
    a_mat: FloatArray, p_mat: FloatArray, da: FloatArray
) -> FloatArray:
    """``dP/dd_j`` for a plant parameter."""
    return solve_sensitivity(a_mat, da.T @ p_mat + p_mat @ da)


def sensitivity_p_gain(
    a_mat: FloatArray,
    p_mat: FloatArray,
    da: FloatArray,
    k_mat: FloatArray,
    dk: FloatArray,
    rd: FloatArray,
) -> FloatArray:
    """``dP/dk_i`` for a boundary gain.

    The gain forcing is the symmetric pair ``dK^T Rd K + K^T Rd dK``; ``K`` is
    ``2 x N`` so only this ordering composes.
    """
    forcing = da.T @ p_mat + p_mat @ da + dk.T @ rd @ k_mat + k_mat.T @ rd @ dk
    return solve_sensitivity(a_mat, forcing)


def gradient_jf(
    point: DesignPoint,
    weights: Weights,
    system: DiscreteSystem,
    solution: LyapunovSolution,
) -> Gradient:
    """Gradient of ``Jf`` at ``point`` from the already computed ``P``."""
    derivs = param_derivatives(point, system.grid)
    a_mat, p_mat = system.A, solution.P
    raw = weights.objective.gradient(point)
    mask = point.free_mask

    if mask[0]:
        dp = sensitivity_p_design(a_mat, p_mat, derivs.dA_da)
        raw[0] += _weighted_trace(dp, system)
    if mask[1]:
        dp = sensitivity_p_design(a_mat, p_mat, derivs.dA_db)
        raw[1] += _weighted_trace(dp, system)
    if mask[2]:
        dp = sensitivity_p_gain(
            a_mat, p_mat, derivs.dA_dk1, system.K, derivs.dK_dk1, system.Rd
        )
        raw[2] += _weighted_trace(dp, system)
    if mask[3]:
        dp = sensitivity_p_gain(
            a_mat, p_mat, derivs.dA_dk2, system.K, derivs.dK_dk2, system.Rd
        )
        raw[3] += _weighted_trace(dp, system)

    return Gradient.masked(raw, mask)


def _weighted_trace(dp: FloatArray, system: DiscreteSystem) -> float:
    # tr(dP X0); reduces to tr(dP) for X0 = I.
    return float(np.sum(dp * system.X0.T))


def finite_difference_gradient(
    point: DesignPoint,
    weights: Weights,
    grid: GridConfig,
    *,
    h: float = 1.0e-5,
    x0_mode: X0Mode = X0Mode.IDENTITY,
) -> Gradient:
    """Central-difference oracle for :func:`gradient_jf`.

    The step for coordinate ``j`` is ``h * max(1, |theta_j|)``, halved until
    both stencil points lie in D.
    """
    base = point.as_vector()
    raw = np.zeros(4)
    for j in point.free_indices:
        step = h * max(1.0, abs(base[j]))
        for _ in range(_MAX_STEP_HALVINGS):
            plus = _shifted(point, base, j, step)
            minus = _shifted(point, base, j, -step)
            if all(assess_feasibility(p, grid).in_d for p in (plus, minus)):
                break
            step *= 0.5
        else:
            raise FeasibilityError(
                "finite-difference stencil never entered D",
                context={"param": PARAM_NAMES[j], "point": base.tolist()},
            )
        j_plus, _ = cost_jf(assemble(plus, weights, grid, x0_mode), plus, weights)
        j_minus, _ = cost_jf(assemble(minus, weights, grid, x0_mode), minus, weights)
        raw[j] = (j_plus - j_minus) / (2.0 * step)
    return Gradient.masked(raw, point.free_mask)


def _shifted(
    point: DesignPoint, base: FloatArray, index: int, step: float
) -> DesignPoint:
    values = base.copy()
    values[index] += step
    return point.with_vector(values)
