"""Method-of-lines discretization of the boundary-controlled plant.

Central differences on a uniform grid of ``N`` nodes with ghost nodes
eliminated through first-order boundary differences give ``Xdot = A X`` with
``A = A0 + B K``. The quadratic cost becomes ``integral X^T (Qd + K^T Rd K) X``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .model import DesignPoint, FloatArray, Weights

BESSEL_FIRST_ZERO = 2.405
_BESSEL_TERMS = 20


class GridConfig(BaseModel):
    """Uniform spatial grid on ``[0, 1]``."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    n: int = Field(default=26, ge=3)

    @property
    def dxi(self) -> float:
        return 1.0 / (self.n - 1)

    def nodes(self) -> FloatArray:
        """Grid abscissae ``xi_i = i * dxi``."""
        return np.arange(self.n, dtype=float) * self.dxi


class X0Mode(str, Enum):
    """Initial-condition covariance used in ``tr(P X0)``."""

    IDENTITY = "identity"
    OUTER_PRODUCT = "outer_product"


@dataclass(frozen=True, slots=True)
class DiscreteSystem:
    """Semi-discrete closed loop at one grid resolution.

    Attributes:
        A: Closed-loop matrix, ``N x N``.
        A0: Open-loop matrix (no boundary feedback).
        B: Boundary input matrix, ``N x 2``.
        K: Gain selector, ``2 x N``.
        Qd: Trapezoid state weight, diagonal.
        Rd: Control weight, ``r I_2``.
        X0: Initial covariance.
        grid: Grid the matrices were built on.
    """

    A: FloatArray
    A0: FloatArray
    B: FloatArray
    K: FloatArray
    Qd: FloatArray
    Rd: FloatArray
    X0: FloatArray
    grid: GridConfig

    @property
    def q_tilde(self) -> FloatArray:
        """Total state weight ``Qd + K^T Rd K``."""
        return self.Qd + self.K.T @ self.Rd @ self.K


def bessel_j0(x: float) -> float:
    """Order-zero Bessel function of the first kind by its power series.

    ``sum_m (-1)^m (x/2)^(2m) / (m!)^2`` truncated at 20 terms; accurate to
    well below 1e-10 on ``[0, 3]`` and usable up to ``|x| <= 10``.
    """
    half_sq = (0.5 * x) ** 2
    term = 1.0
    total = 1.0
    for m in range(1, _BESSEL_TERMS):
        term *= -half_sq / (m * m)
        total += term
    return total


def sample_initial_field(grid: GridConfig) -> FloatArray:
    """Sample ``x0(xi) = J0(2.405 xi)`` on the grid nodes."""
    return np.array([bessel_j0(BESSEL_FIRST_ZERO * xi) for xi in grid.nodes()])


def open_loop_matrix(point: DesignPoint, grid: GridConfig) -> FloatArray:
    """Plant matrix ``A0`` with zero-flux boundaries."""
    n, dxi = grid.n, grid.dxi
    h2 = dxi * dxi
    main = np.full(n, -2.0 * point.a + point.b * h2)
    main[0] = -point.a + point.b * h2
    main[-1] = -point.a + point.b * h2
    off = np.full(n - 1, point.a)
    return (np.diag(main) + np.diag(off, 1) + np.diag(off, -1)) / h2


def input_matrix(point: DesignPoint, grid: GridConfig) -> FloatArray:
    """Boundary actuation matrix ``B``."""
    b_mat = np.zeros((grid.n, 2))
    b_mat[0, 0] = -point.a / grid.dxi
    b_mat[-1, 1] = point.a / grid.dxi
    return b_mat


def gain_matrix(point: DesignPoint, grid: GridConfig) -> FloatArray:
    """Static output gain ``K``; ``u = K X = (k1 x_1, k2 x_N)``."""
    k_mat = np.zeros((2, grid.n))
    k_mat[0, 0] = point.k1
    k_mat[1, -1] = point.k2
    return k_mat


def state_weight(weights: Weights, grid: GridConfig) -> FloatArray:
    """``Qd = q (dxi/2) diag(1/2, 1, ..., 1, 1/2)``."""
    diag = np.ones(grid.n)
    diag[0] = diag[-1] = 0.5
    return np.diag(weights.q * 0.5 * grid.dxi * diag)


def assemble(
    point: DesignPoint,
    weights: Weights,
    grid: GridConfig,
    x0_mode: X0Mode = X0Mode.IDENTITY,
) -> DiscreteSystem:
    """Build the semi-discrete system for ``point`` on ``grid``."""
    a0 = open_loop_matrix(point, grid)
    b_mat = input_matrix(point, grid)
    k_mat = gain_matrix(point, grid)

    # Closed loop entries are written out directly; A0 + B K agrees to rounding.
    h2 = grid.dxi * grid.dxi
    a_mat = a0.copy()
    a_mat[0, 0] = (-point.a - point.a * point.k1 * grid.dxi + point.b * h2) / h2
    a_mat[-1, -1] = (-point.a + point.a * point.k2 * grid.dxi + point.b * h2) / h2

    if x0_mode is X0Mode.IDENTITY:
        x0 = np.eye(grid.n)
    else:
        field = sample_initial_field(grid)
        x0 = np.outer(field, field)

    return DiscreteSystem(
        A=a_mat,
        A0=a0,
        B=b_mat,
        K=k_mat,
        Qd=state_weight(weights, grid),
        Rd=weights.r * np.eye(2),
        X0=x0,
        grid=grid,
    )

