"""Case orchestration: descent, time-domain validation and output files.

Each case owns ``<output_dir>/<name>/``. Files are first written to a
temporary sibling directory and renamed into place once all of them exist,
so a failed run leaves no partial output behind.
"""

from __future__ import annotations

import json
import os
import shutil
import tempfile
from collections.abc import Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .config import RunSpec, render_config
from .discretization import GridConfig, assemble
from .exceptions import ConfigError, FeasibilityError, OutputError
from .logger import bind_context, get_logger
from .lyapunov import assess_feasibility, cost_jf
from .model import PARAM_NAMES, DesignObjective, DesignPoint, FeasibilityReport
from .optimizer import CCDResult, IterateTrace, run_ccd
from .pdesim import (
    FieldSolution,
    StabilityCheck,
    cost_quadrature,
    simulate,
    verify_corollary2,
)
from .sensitivity import Gradient, finite_difference_gradient, gradient_jf

logger = get_logger(__name__)

TRACE_HEADER = ("iter", "a", "b", "k1", "k2", "Jf", "grad_norm", "step", "backtracks")


@dataclass(frozen=True, slots=True)
class PointCosts:
    """Design values with reformulated and simulated costs."""

    point: DesignPoint
    jf: float
    j_total: float
    j_control: float

    def as_dict(self) -> dict[str, float]:
        return {
            "a": self.point.a,
            "b": self.point.b,
            "k1": self.point.k1,
            "k2": self.point.k2,
            "Jf": self.jf,
            "J": self.j_total,
            "J_u": self.j_control,
        }


@dataclass(frozen=True, slots=True)
class CalibrationResult:
    """``Jf`` at the start point for each grid size, and the closest match."""

    target: float
    table: list[tuple[int, float]]
    best_n: int
    skipped: list[int] = field(default_factory=list)

    @property
    def best_jf(self) -> float:
        return dict(self.table)[self.best_n]

    @property
    def relative_gap(self) -> float:
        return abs(self.best_jf - self.target) / abs(self.target)

    def as_dict(self) -> dict[str, Any]:
        return {
            "target": self.target,
            "best_n": self.best_n,
            "relative_gap": self.relative_gap,
            "table": [{"N": n, "Jf0": jf} for n, jf in self.table],
            "skipped": list(self.skipped),
        }


@dataclass(frozen=True, slots=True)
class GradientCheck:
    """Analytic gradient next to its finite-difference estimate."""

    analytic: Gradient
    finite_difference: Gradient

    def relative_errors(self) -> dict[str, float]:
        errors: dict[str, float] = {}
        for j in range(4):
            if not self.analytic.free_mask[j]:
                continue
            exact = float(self.analytic.g[j])
            approx = float(self.finite_difference.g[j])
            errors[PARAM_NAMES[j]] = abs(exact - approx) / max(abs(exact), 1.0e-12)
        return errors


@dataclass(frozen=True, slots=True)
class CaseReport:
    """Everything a finished case produced."""

    spec: RunSpec
    result: CCDResult
    initial: PointCosts
    optimal: PointCosts
    margins: FeasibilityReport
    stability: StabilityCheck
    calibration: CalibrationResult | None
    output_path: Path

    @property
    def trace(self) -> IterateTrace:
        return self.result.trace

    def summary(self) -> dict[str, Any]:
        """Content of ``summary.json``."""
        t_final = self.spec.t_final
        objective = self.spec.objective
        return {
            "case": self.spec.case,
            "homogeneous": self.spec.homogeneous,
            "N": self.spec.n,
            "initial": self.initial.as_dict(),
            "optimal": self.optimal.as_dict(),
            "margins": {
                "m1": self.margins.m1,
                "m2": self.margins.m2,
                "m3": self.margins.m3,
                "max_re_eig": self.margins.max_re_eig,
            },
            "status": self.trace.status.value if self.trace.status else None,
            "iterations": self.trace.accepted_steps,
            "corollary2_ok": self.stability.passed,
            "corollary2_violations": list(self.stability.violations),
            "calibration": self.calibration.as_dict() if self.calibration else None,
            "design_cost_horizon_scaled": {
                "initial": t_final * objective.value(self.initial.point),
                "optimal": t_final * objective.value(self.optimal.point),
            },
        }


def start_point_jf(spec: RunSpec, n: int) -> float:
    """``Jf`` at the configured start point on an ``n``-node grid."""
    grid = GridConfig(n=n)
    point = spec.design_point()
    report = assess_feasibility(point, grid)
    if not report.in_d:
        raise FeasibilityError(
            "start point is outside the feasible set",
            context={"n": n, "violations": report.violations()},
        )
    weights = spec.weights()
    jf, _ = cost_jf(assemble(point, weights, grid, spec.x0_mode), point, weights)
    return jf


def calibrate_grid(
    spec: RunSpec,
    n_values: Iterable[int] | None = None,
    target: float | None = None,
) -> CalibrationResult:
    """Pick the grid size whose start-point ``Jf`` is closest to ``target``.

    Raises:
        ConfigError: No target configured or given.
        FeasibilityError: The start point is infeasible on every grid.
    """
    target = target if target is not None else spec.calibrate_target
    if target is None:
        raise ConfigError(
            "calibration needs a target Jf0", context={"key": "calibrate_target"}
        )
    if n_values is None:
        n_values = range(spec.calibrate_min_n, spec.calibrate_max_n + 1)

    table: list[tuple[int, float]] = []
    skipped: list[int] = []
    for n in n_values:
        try:
            table.append((n, start_point_jf(spec, n)))
        except FeasibilityError:
            skipped.append(n)
    if not table:
        raise FeasibilityError(
            "start point infeasible on every calibration grid",
            context={"n_values": skipped},
        )

    best_n = min(table, key=lambda row: (abs(row[1] - target), row[0]))[0]
    result = CalibrationResult(
        target=target, table=table, best_n=best_n, skipped=skipped
    )
    logger.info(
        "grid calibrated",
        extra={
            "best_n": best_n,
            "jf0": result.best_jf,
            "relative_gap": result.relative_gap,
        },
    )
    return result


def gradient_check(spec: RunSpec, *, h: float = 1.0e-5) -> GradientCheck:
    """Analytic versus central-difference gradient at the start point."""
    point, weights, grid = spec.design_point(), spec.weights(), spec.grid()
    report = assess_feasibility(point, grid)
    if not report.in_d:
        raise FeasibilityError(
            "start point is outside the feasible set",
            context={"violations": report.violations()},
        )
    system = assemble(point, weights, grid, spec.x0_mode)
    _, solution = cost_jf(system, point, weights)
    return GradientCheck(
        analytic=gradient_jf(point, weights, system, solution),
        finite_difference=finite_difference_gradient(
            point, weights, grid, h=h, x0_mode=spec.x0_mode
        ),
    )


def run_case(spec: RunSpec, *, output_dir: Path | None = None) -> CaseReport:
    """Run descent and validation for one spec and write its output files.

    Raises:
        CCDError: Any failure of the numerical modules or of the output writes.
    """
    log = bind_context(logger, case=spec.name)
    log.debug("run spec", extra={"document": render_config(spec)})

    calibration = None
    if spec.calibrate_target is not None:
        calibration = calibrate_grid(spec)
        spec = spec.model_copy(update={"n": calibration.best_n})

    weights, grid, sim = spec.weights(), spec.grid(), spec.sim_config()
    p0 = spec.design_point()
    result = run_ccd(p0, weights, grid, spec.optimizer_config(), x0_mode=spec.x0_mode)

    field_initial = simulate(p0, sim)
    field_optimal = simulate(result.point, sim)
    initial = _point_costs(p0, result.trace.rows[0].jf, field_initial, spec)
    optimal = _point_costs(result.point, result.jf, field_optimal, spec)
    stability = verify_corollary2(result.point, sim)
    margins = assess_feasibility(result.point, grid)

    if spec.objective is DesignObjective.SQUARE_OF_A:
        log.info(
            "horizon-scaled design cost",
            extra={
                "j0_alt": initial.j_control + spec.t_final * spec.objective.value(p0),
                "jstar_alt": optimal.j_control
                + spec.t_final * spec.objective.value(result.point),
            },
        )

    target = Path(output_dir) if output_dir is not None else spec.output_dir
    report = CaseReport(
        spec=spec,
        result=result,
        initial=initial,
        optimal=optimal,
        margins=margins,
        stability=stability,
        calibration=calibration,
        output_path=target / spec.name,
    )
    files: dict[str, str] = {
        "trace.csv": render_trace(result.trace),
        "summary.json": render_summary(report.summary()),
    }
    if spec.emit_field:
        files["field.csv"] = render_field(field_optimal)
    if spec.emit_field_initial:
        files["field_initial.csv"] = render_field(field_initial)
    write_outputs(report.output_path, files)

    log.info(
        "case finished",
        extra={
            "status": report.summary()["status"],
            "iterations": result.trace.accepted_steps,
            "jf_star": result.jf,
            "corollary2_ok": stability.passed,
        },
    )
    return report


def run_many(specs: Sequence[RunSpec], jobs: int = 1) -> list[CaseReport]:
    """Run independent cases, in parallel when ``jobs > 1``; order is kept."""
    targets = [spec.output_dir / spec.name for spec in specs]
    if len(set(targets)) != len(targets):
        raise ConfigError("cases must write to distinct output directories")
    if jobs <= 1 or len(specs) <= 1:
        return [run_case(spec) for spec in specs]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_case, specs))


def _point_costs(
    point: DesignPoint, jf: float, sol: FieldSolution, spec: RunSpec
) -> PointCosts:
    j_control, j_total = cost_quadrature(sol, point, spec.weights())
    return PointCosts(point=point, jf=jf, j_total=j_total, j_control=j_control)


def _fmt(value: float) -> str:
    return format(value, ".17g")


def render_trace(trace: IterateTrace) -> str:
    lines = [",".join(TRACE_HEADER)]
    for row in trace.rows:
        numbers = (row.a, row.b, row.k1, row.k2, row.jf, row.grad_norm, row.step)
        values = [_fmt(v) for v in numbers]
        lines.append(",".join([str(row.iter), *values, str(row.backtracks)]))
    return "\n".join(lines) + "\n"


def render_field(sol: FieldSolution) -> str:
    lines = [",".join(["t", *(_fmt(x) for x in sol.xi)])]
    for j, t in enumerate(sol.t):
        lines.append(",".join([_fmt(t), *(_fmt(x) for x in sol.x[:, j])]))
    return "\n".join(lines) + "\n"


def render_summary(summary: dict[str, Any]) -> str:
    return json.dumps(summary, indent=2, default=_json_default) + "\n"


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


def write_outputs(target: Path, files: dict[str, str]) -> None:
    """Write ``files`` into ``target`` atomically (temp dir, then rename).

    Raises:
        OutputError: The parent directory cannot be created or written.
    """
    parent = target.parent
    try:
        parent.mkdir(parents=True, exist_ok=True)
        staging = Path(tempfile.mkdtemp(prefix=f".{target.name}-", dir=parent))
    except OSError as exc:
        raise OutputError(
            "output directory is not writable", context={"path": str(parent)}, cause=exc
        ) from exc

    try:
        for name, content in files.items():
            with open(staging / name, "w", encoding="utf-8", newline="") as handle:
                handle.write(content)
        if target.exists():
            shutil.rmtree(target)
        os.replace(staging, target)
    except OSError as exc:
        shutil.rmtree(staging, ignore_errors=True)
        raise OutputError(
            "failed to write case outputs", context={"path": str(target)}, cause=exc
        ) from exc
