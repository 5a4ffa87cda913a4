"""Constrained gradient descent over the feasible set D.

The outer loop keeps descending while either the free-gradient norm or the
last cost change is above its tolerance. Each step is chosen by Armijo
backtracking from ``s0``; trial points outside D are rejected before any
Lyapunov solve and consume a backtrack exactly like a failed decrease test.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field
from enum import Enum
from typing import Protocol

from pydantic import BaseModel, ConfigDict, Field

from .discretization import DiscreteSystem, GridConfig, X0Mode, assemble
from .exceptions import FeasibilityError, LineSearchStalledError
from .logger import get_logger
from .lyapunov import LyapunovSolution, assess_feasibility, cost_jf
from .model import DesignPoint, Weights
from .sensitivity import Gradient, gradient_jf

logger = get_logger(__name__)


class OptimizerConfig(BaseModel):
    """Descent and line-search parameters."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    sigma: float = Field(default=0.3, gt=0.0, lt=1.0)
    beta: float = Field(default=0.3, gt=0.0, lt=1.0)
    eps: float = Field(default=1.0e-3, gt=0.0)
    eps1: float = Field(default=1.0e-6, gt=0.0)
    max_iters: int = Field(default=10_000, ge=1)
    max_backtracks: int = Field(default=60, ge=1)
    s0: float = Field(default=1.0, gt=0.0)


class TerminationStatus(str, Enum):
    """Why the descent loop ended."""

    GRAD_TOLERANCE_MET = "GradToleranceMet"
    COST_CHANGE_TOLERANCE_MET = "CostChangeToleranceMet"
    MAX_ITERS = "MaxIters"
    LINE_SEARCH_STALLED = "LineSearchStalled"


@dataclass(frozen=True, slots=True)
class IterateRow:
    """One accepted iterate; ``step`` is the step that produced it."""

    iter: int
    a: float
    b: float
    k1: float
    k2: float
    jf: float
    grad_norm: float
    step: float
    backtracks: int

    @property
    def point_values(self) -> tuple[float, float, float, float]:
        return (self.a, self.b, self.k1, self.k2)


@dataclass(slots=True)
class IterateTrace:
    """Rows of accepted iterates; row 0 is the start point."""

    rows: list[IterateRow] = field(default_factory=list)
    status: TerminationStatus | None = None

    @property
    def accepted_steps(self) -> int:
        return max(len(self.rows) - 1, 0)


@dataclass(frozen=True, slots=True)
class StepResult:
    """Outcome of one Armijo line search."""

    point: DesignPoint
    jf: float
    step: float
    backtracks: int


@dataclass(frozen=True, slots=True)
class CCDResult:
    """Final point and full trace of a descent run."""

    point: DesignPoint
    trace: IterateTrace

    @property
    def jf(self) -> float:
        return self.trace.rows[-1].jf


class CostEvaluator(Protocol):
    """Evaluation context consumed by :func:`armijo_step` and :func:`run_ccd`."""

    def feasible(self, point: DesignPoint) -> bool:
        """Whether ``point`` lies in D."""

    def cost(self, point: DesignPoint) -> float:
        """Cost at a feasible ``point``."""

    def gradient(self, point: DesignPoint) -> Gradient:
        """Gradient at a feasible ``point``."""


class LyapunovEvaluator:
    """Default evaluator: assemble, Lyapunov cost and analytic gradient.

    The most recent solve is kept so the accepted trial point is not solved
    again when its gradient is requested.
    """

    def __init__(
        self,
        weights: Weights,
        grid: GridConfig,
        x0_mode: X0Mode = X0Mode.IDENTITY,
    ) -> None:
        self.weights = weights
        self.grid = grid
        self.x0_mode = x0_mode
        self._last: (
            tuple[DesignPoint, DiscreteSystem, float, LyapunovSolution] | None
        ) = None
        self.solves = 0

    def feasible(self, point: DesignPoint) -> bool:
        return assess_feasibility(point, self.grid).in_d

    def cost(self, point: DesignPoint) -> float:
        return self._evaluate(point)[1]

    def gradient(self, point: DesignPoint) -> Gradient:
        system, _, solution = self._evaluate(point)
        return gradient_jf(point, self.weights, system, solution)

    def _evaluate(
        self, point: DesignPoint
    ) -> tuple[DiscreteSystem, float, LyapunovSolution]:
        if self._last is not None and self._last[0] == point:
            _, system, jf, solution = self._last
            return system, jf, solution
        system = assemble(point, self.weights, self.grid, self.x0_mode)
        jf, solution = cost_jf(system, point, self.weights)
        self.solves += 1
        self._last = (point, system, jf, solution)
        return system, jf, solution


def armijo_step(
    point: DesignPoint,
    jf: float,
    gradient: Gradient,
    cfg: OptimizerConfig,
    evaluator: CostEvaluator,
) -> StepResult:
    """Backtrack ``s = s0, beta s0, ...`` until a feasible sufficient decrease.

    Raises:
        LineSearchStalledError: ``max_backtracks`` trials were rejected.
    """
    base = point.as_vector()
    slope = gradient.norm**2
    step = cfg.s0
    for backtracks in range(cfg.max_backtracks):
        trial = point.with_vector(base - step * gradient.g)
        if evaluator.feasible(trial):
            trial_jf = evaluator.cost(trial)
            if trial_jf <= jf - cfg.sigma * step * slope:
                return StepResult(
                    point=trial, jf=trial_jf, step=step, backtracks=backtracks
                )
        step *= cfg.beta

    raise LineSearchStalledError(
        "no acceptable step within the backtracking budget",
        context={"max_backtracks": cfg.max_backtracks, "last_step": step},
    )


def run_ccd(
    p0: DesignPoint,
    weights: Weights,
    grid: GridConfig,
    cfg: OptimizerConfig | None = None,
    *,
    x0_mode: X0Mode = X0Mode.IDENTITY,
    evaluator: CostEvaluator | None = None,
    on_iterate: Callable[[IterateRow], None] | None = None,
) -> CCDResult:
    """Gradient descent from ``p0`` with Armijo steps, staying inside D.

    Raises:
        FeasibilityError: ``p0`` is not in D; context lists the violations.
    """
    cfg = cfg or OptimizerConfig()
    p0.require_free()
    if evaluator is None:
        report = assess_feasibility(p0, grid)
        if not report.in_d:
            raise FeasibilityError(
                "start point is outside the feasible set",
                context={"violations": report.violations()},
            )
        evaluator = LyapunovEvaluator(weights, grid, x0_mode)
    elif not evaluator.feasible(p0):
        raise FeasibilityError("start point is outside the feasible set")

    point = p0
    jf = evaluator.cost(point)
    jf_prev = -1.0
    grad = evaluator.gradient(point)
    trace = IterateTrace()
    _record(trace, 0, point, jf, grad, 0.0, 0, on_iterate)

    while grad.norm >= cfg.eps or abs(jf - jf_prev) >= cfg.eps1:
        if grad.norm == 0.0:
            trace.status = TerminationStatus.GRAD_TOLERANCE_MET
            break
        if trace.accepted_steps >= cfg.max_iters:
            trace.status = TerminationStatus.MAX_ITERS
            break
        try:
            result = armijo_step(point, jf, grad, cfg, evaluator)
        except LineSearchStalledError as exc:
            logger.info(
                "line search stalled",
                extra={"iteration": trace.accepted_steps, "detail": exc.message},
            )
            trace.status = TerminationStatus.LINE_SEARCH_STALLED
            break
        grad_was_small = grad.norm < cfg.eps
        point, jf_prev, jf = result.point, jf, result.jf
        grad = evaluator.gradient(point)
        _record(
            trace,
            trace.accepted_steps + 1,
            point,
            jf,
            grad,
            result.step,
            result.backtracks,
            on_iterate,
        )
        if grad.norm < cfg.eps and abs(jf - jf_prev) < cfg.eps1:
            # Whichever test was still open on the previous row ended the run.
            trace.status = (
                TerminationStatus.COST_CHANGE_TOLERANCE_MET
                if grad_was_small
                else TerminationStatus.GRAD_TOLERANCE_MET
            )
    else:
        trace.status = trace.status or TerminationStatus.GRAD_TOLERANCE_MET

    logger.info(
        "descent finished",
        extra={
            "status": trace.status.value if trace.status else None,
            "iterations": trace.accepted_steps,
            "jf": jf,
        },
    )
    return CCDResult(point=point, trace=trace)


def _record(
    trace: IterateTrace,
    iteration: int,
    point: DesignPoint,
    jf: float,
    grad: Gradient,
    step: float,
    backtracks: int,
    on_iterate: Callable[[IterateRow], None] | None,
) -> None:
    row = IterateRow(
        iter=iteration,
        a=point.a,
        b=point.b,
        k1=point.k1,
        k2=point.k2,
        jf=jf,
        grad_norm=grad.norm,
        step=step,
        backtracks=backtracks,
    )
    trace.rows.append(row)
    logger.debug(
        "iterate accepted",
        extra={
            "iteration": iteration,
            "jf": jf,
            "grad_norm": row.grad_norm,
            "step": step,
            "backtracks": backtracks,
        },
    )
    if on_iterate is not None:
        on_iterate(row)
