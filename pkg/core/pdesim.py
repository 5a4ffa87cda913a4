"""Time-domain validation of designed gains.

Integrates the semi-discrete closed loop with an implicit scheme, tracks the
energy ``V = 1/2 int x^2`` and evaluates the original double-integral cost
by the trapezoid rule in space and time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field
from scipy.integrate import trapezoid

from .discretization import GridConfig, assemble, sample_initial_field
from .exceptions import SimulationError, wrap_exception
from .logger import get_logger
from .lyapunov import assess_feasibility
from .model import DesignPoint, FloatArray, Weights

logger = get_logger(__name__)

DECAY_RATIO = 1.0e-4
TRANSIENT_STEPS = 5
ENERGY_TOL = 1.0e-10


class TimeScheme(str, Enum):
    CRANK_NICOLSON = "crank_nicolson"
    BACKWARD_EULER = "backward_euler"


class SimConfig(BaseModel):
    """Time grid and scheme for the validation run.

    ``startup_steps`` intervals at the start are each covered by two
    backward-Euler half-steps before Crank-Nicolson takes over, which damps
    the stiff boundary modes Crank-Nicolson alone would carry along.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    t_final: float = Field(default=200.0, gt=0.0)
    nt: int = Field(default=500, ge=1)
    n: int = Field(default=26, ge=3)
    scheme: TimeScheme = TimeScheme.CRANK_NICOLSON
    startup_steps: int = Field(default=2, ge=0)

    @property
    def dt(self) -> float:
        return self.t_final / self.nt

    @property
    def grid(self) -> GridConfig:
        return GridConfig(n=self.n)


@dataclass(frozen=True, slots=True)
class FieldSolution:
    """Space-time samples ``x[i, j] = x(xi_i, t_j)``."""

    xi: FloatArray
    t: FloatArray
    x: FloatArray
    energy: FloatArray
    j_control: float | None = None
    j_total: float | None = None

    def final_ratio(self) -> float:
        """``||X(T)|| / ||X(0)||``."""
        start = float(np.linalg.norm(self.x[:, 0]))
        return float(np.linalg.norm(self.x[:, -1])) / start if start > 0 else 0.0


@dataclass(slots=True)
class StabilityCheck:
    """Decay verdict; truthy iff ``passed``."""

    passed: bool
    violations: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.passed


def energy(xi: FloatArray, x: FloatArray) -> FloatArray:
    """``V(t_j) = 1/2 trapz_xi(x^2)`` for every time slice."""
    return 0.5 * trapezoid(x * x, xi, axis=0)


def simulate_matrix(a_mat: FloatArray, x0: FloatArray, sim: SimConfig) -> FieldSolution:
    """Integrate ``Xdot = A X`` from ``x0`` on the uniform time grid of ``sim``.

    Raises:
        SimulationError: A step matrix is singular for this ``dt``.
    """
    n = a_mat.shape[0]
    dt = sim.dt
    eye = np.eye(n)
    x = np.empty((n, sim.nt + 1))
    x[:, 0] = x0

    if sim.scheme is TimeScheme.CRANK_NICOLSON:
        lhs, rhs = eye - 0.5 * dt * a_mat, eye + 0.5 * dt * a_mat
        startup = min(sim.startup_steps, sim.nt)
    else:
        lhs, rhs = eye - dt * a_mat, eye
        startup = 0
    step_lu = _factor(lhs, dt)
    half_lu = _factor(eye - 0.5 * dt * a_mat, dt) if startup else None

    for j in range(sim.nt):
        if half_lu is not None and j < startup:
            mid = scipy.linalg.lu_solve(half_lu, x[:, j], check_finite=False)
            x[:, j + 1] = scipy.linalg.lu_solve(half_lu, mid, check_finite=False)
        else:
            x[:, j + 1] = scipy.linalg.lu_solve(
                step_lu, rhs @ x[:, j], check_finite=False
            )

    if not np.all(np.isfinite(x)):
        raise SimulationError("field became non-finite", context={"dt": dt})

    xi = np.linspace(0.0, 1.0, n)
    t = np.linspace(0.0, sim.t_final, sim.nt + 1)
    return FieldSolution(xi=xi, t=t, x=x, energy=energy(xi, x))


def _factor(matrix: FloatArray, dt: float) -> tuple[FloatArray, FloatArray]:
    try:
        with np.errstate(all="ignore"):
            lu, piv = scipy.linalg.lu_factor(matrix, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise wrap_exception(
            exc, SimulationError, "step matrix factorization failed", context={"dt": dt}
        ) from exc
    if np.any(np.abs(np.diag(lu)) <= np.finfo(float).eps * np.abs(lu).max()):
        raise SimulationError("step matrix is singular", context={"dt": dt})
    return lu, piv


def simulate(point: DesignPoint, sim: SimConfig) -> FieldSolution:
    """Simulate the closed loop at ``point`` from the Bessel initial field.

    Feasibility is not required, so unstable or marginal designs can be shown.
    """
    grid = sim.grid
    system = assemble(point, Weights(q=1.0, r=1.0), grid)
    return simulate_matrix(system.A, sample_initial_field(grid), sim)


def cost_quadrature(
    sol: FieldSolution, point: DesignPoint, weights: Weights
) -> tuple[float, float]:
    """Original cost by trapezoid in space and time.

    The running cost is ``trapz_xi(q x^2) + r (k1^2 x(0)^2 + k2^2 x(1)^2)``;
    returns ``(J_control, J_control + f_d(d))``.
    """
    spatial = trapezoid(weights.q * sol.x * sol.x, sol.xi, axis=0)
    boundary = weights.r * (
        (point.k1 * sol.x[0, :]) ** 2 + (point.k2 * sol.x[-1, :]) ** 2
    )
    j_control = float(trapezoid(spatial + boundary, sol.t))
    return j_control, j_control + weights.objective.value(point)


def semidiscrete_cost(sol: FieldSolution, q_tilde: FloatArray) -> float:
    """``trapz_t(X^T Qtilde X)`` over the stored slices."""
    integrand = np.einsum("it,ij,jt->t", sol.x, q_tilde, sol.x)
    return float(trapezoid(integrand, sol.t))


def assess_decay(sol: FieldSolution) -> StabilityCheck:
    """Check the final norm ratio and non-increasing energy after the transient."""
    violations: list[str] = []
    ratio = sol.final_ratio()
    if not ratio <= DECAY_RATIO:
        violations.append(f"final norm ratio {ratio:.3e} > {DECAY_RATIO:.0e}")

    v = sol.energy
    for j in range(TRANSIENT_STEPS, v.size - 1):
        if v[j + 1] > v[j] + ENERGY_TOL:
            violations.append(
                f"energy increased at t={sol.t[j + 1]:.6g}: "
                f"{v[j]:.6e} -> {v[j + 1]:.6e}"
            )
            break

    return StabilityCheck(passed=not violations, violations=violations)


def verify_corollary2(point: DesignPoint, sim: SimConfig) -> StabilityCheck:
    """Empirical check that a point in D stabilizes the PDE."""
    report = assess_feasibility(point, sim.grid)
    if not report.in_d:
        violations = ["design point not in D"] + report.violations()
        logger.warning("stability check skipped", extra={"violations": violations})
        return StabilityCheck(passed=False, violations=violations)

    check = assess_decay(simulate(point, sim))
    if not check:
        logger.warning("stability check failed", extra={"violations": check.violations})
    return check
