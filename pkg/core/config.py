"""Run-file configuration for co-design cases.

Run files are flat TOML documents (``key = value`` lines, ``#`` comments);
keys are case-insensitive. Every knob defaults to the reference scenario, so an
empty document plus ``case``/``homogeneous`` describes a complete run.
"""

from __future__ import annotations

import json
import os
import re
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Literal

import pydantic
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .discretization import GridConfig, X0Mode
from .exceptions import ConfigError
from .lyapunov import assess_feasibility
from .model import DesignObjective, DesignPoint, FreeMask, Weights
from .optimizer import OptimizerConfig
from .pdesim import SimConfig, TimeScheme

ENV_PREFIX = "CCD__"

CASE_MASKS: dict[int, FreeMask] = {
    1: (False, False, True, True),
    2: (True, False, True, True),
    3: (True, False, True, True),
}

PRESETS: dict[str, dict[str, Any]] = {
    "case1-hom": {"case": 1, "homogeneous": True},
    "case2-hom": {"case": 2, "homogeneous": True},
    "case3-hom": {"case": 3, "homogeneous": True},
    "case1-nonhom": {"case": 1, "homogeneous": False},
    "case2-nonhom": {"case": 2, "homogeneous": False},
    "case3-nonhom": {"case": 3, "homogeneous": False},
}


class RunSpec(BaseModel):
    """One co-design run: problem, optimizer, validation and output knobs."""

    model_config = ConfigDict(extra="forbid", frozen=True, allow_inf_nan=False)

    name: str = "custom"
    case: Literal[1, 2, 3] = 1
    homogeneous: bool = True

    # start point; b defaults to 0 (homogeneous) or -1
    a0: float = 10.0
    b: float | None = None
    k1: float = 7.0
    k2: float = -5.0

    q: float = Field(default=1.0, ge=0.0)
    r: float = Field(default=1.0e4, gt=0.0)
    n: int = Field(default=26, ge=3)
    x0_mode: X0Mode = X0Mode.IDENTITY

    sigma: float = Field(default=0.3, gt=0.0, lt=1.0)
    beta: float = Field(default=0.3, gt=0.0, lt=1.0)
    eps: float = Field(default=1.0e-3, gt=0.0)
    eps1: float = Field(default=1.0e-6, gt=0.0)
    max_iters: int = Field(default=10_000, ge=1)
    max_backtracks: int = Field(default=60, ge=1)
    s0: float = Field(default=1.0, gt=0.0)

    t_final: float = Field(default=200.0, gt=0.0)
    nt: int = Field(default=500, ge=1)
    sim_n: int = Field(default=26, ge=3)
    scheme: TimeScheme = TimeScheme.CRANK_NICOLSON
    startup_steps: int = Field(default=2, ge=0)

    calibrate_target: float | None = Field(default=None, gt=0.0)
    calibrate_min_n: int = Field(default=20, ge=3)
    calibrate_max_n: int = Field(default=32, ge=3)

    output_dir: Path = Path("runs")
    emit_field: bool = True
    emit_field_initial: bool = False

    @model_validator(mode="after")
    def _validate_consistency(self) -> "RunSpec":
        if self.homogeneous and self.b not in (None, 0.0):
            raise ValueError("homogeneous runs require b = 0")
        if self.calibrate_min_n > self.calibrate_max_n:
            raise ValueError("calibrate_min_n must be <= calibrate_max_n")
        return self

    @property
    def plant_b(self) -> float:
        if self.b is not None:
            return self.b
        return 0.0 if self.homogeneous else -1.0

    @property
    def free_mask(self) -> FreeMask:
        return CASE_MASKS[self.case]

    @property
    def objective(self) -> DesignObjective:
        return DesignObjective.SQUARE_OF_A if self.case == 3 else DesignObjective.ZERO

    def design_point(self) -> DesignPoint:
        return DesignPoint(
            a=self.a0, b=self.plant_b, k1=self.k1, k2=self.k2, free_mask=self.free_mask
        )

    def weights(self) -> Weights:
        return Weights(q=self.q, r=self.r, objective=self.objective)

    def grid(self) -> GridConfig:
        return GridConfig(n=self.n)

    def optimizer_config(self) -> OptimizerConfig:
        return OptimizerConfig(
            sigma=self.sigma,
            beta=self.beta,
            eps=self.eps,
            eps1=self.eps1,
            max_iters=self.max_iters,
            max_backtracks=self.max_backtracks,
            s0=self.s0,
        )

    def sim_config(self) -> SimConfig:
        return SimConfig(
            t_final=self.t_final,
            nt=self.nt,
            n=self.sim_n,
            scheme=self.scheme,
            startup_steps=self.startup_steps,
        )


class ConfigManager:
    """Load and validate run files, with ``CCD__<KEY>`` environment overrides."""

    def __init__(self, defaults: RunSpec | None = None) -> None:
        self._defaults = defaults or RunSpec()

    @property
    def defaults(self) -> RunSpec:
        """Return default run spec."""
        return self._defaults

    def load(self, path: str | Path, *, check_feasibility: bool = True) -> RunSpec:
        """Load a run file, apply environment overrides and validate."""
        config_path = Path(path)
        text = config_path.read_text(encoding="utf-8")
        data = _load_document(text)
        data.setdefault("name", config_path.stem)
        return self.from_dict(data, text=text, check_feasibility=check_feasibility)

    def from_dict(
        self,
        data: dict[str, Any],
        *,
        text: str = "",
        check_feasibility: bool = True,
    ) -> RunSpec:
        """Validate a flat mapping merged onto defaults and env vars."""
        merged = self._defaults.model_dump(mode="json", exclude_unset=True)
        merged.update(_lower_keys(data))
        merged.update(_env_overrides())
        return _validate(merged, text, check_feasibility)


def parse_config(text: str, *, check_feasibility: bool = True) -> RunSpec:
    """Parse a run document (no environment overrides).

    Raises:
        ConfigError: Malformed document, unknown key, invalid value (with line
            number) or, when ``check_feasibility``, a start point outside D.
    """
    return _validate(_load_document(text), text, check_feasibility)


def render_config(spec: RunSpec) -> str:
    """Canonical document for ``spec``; ``parse_config`` inverts it exactly."""
    lines = [f"# run spec: {spec.name}"]
    for key in RunSpec.model_fields:
        value = getattr(spec, key)
        if value is None:
            continue
        lines.append(f"{key} = {_render_value(value)}")
    return "\n".join(lines) + "\n"


def preset_spec(name: str, **overrides: Any) -> RunSpec:
    """Built-in reference scenario, optionally with overrides."""
    try:
        base = PRESETS[name]
    except KeyError:
        raise ConfigError(
            f"unknown preset '{name}'", context={"known": sorted(PRESETS)}
        ) from None
    return _validate({**base, "name": name, **_lower_keys(overrides)}, "", False)


def _load_document(text: str) -> dict[str, Any]:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed run document: {exc}", cause=exc) from exc

    for key, value in raw.items():
        if isinstance(value, dict):
            raise ConfigError(
                f"tables are not supported, found [{key}]", context={"key": key}
            )
    return _lower_keys(raw)


def _lower_keys(data: dict[str, Any]) -> dict[str, Any]:
    lowered: dict[str, Any] = {}
    for key, value in data.items():
        norm = key.lower()
        if norm in lowered:
            raise ConfigError(f"duplicate key '{norm}'", context={"key": norm})
        lowered[norm] = value
    return lowered


def _validate(data: dict[str, Any], text: str, check_feasibility: bool) -> RunSpec:
    unknown = sorted(set(data) - set(RunSpec.model_fields))
    if unknown:
        raise ConfigError(f"unknown key '{unknown[0]}'", context={"key": unknown[0]})

    try:
        spec = RunSpec.model_validate(data)
    except pydantic.ValidationError as exc:
        first = exc.errors()[0]
        key = str(first["loc"][0]) if first["loc"] else ""
        line = _line_of(text, key) if key else None
        where = f" (line {line})" if line is not None else ""
        message = f"invalid value for '{key}'{where}: {first['msg']}"
        raise ConfigError(
            message if key else first["msg"],
            context={"key": key, "line": line},
            cause=exc,
        ) from exc

    if check_feasibility:
        report = assess_feasibility(spec.design_point(), spec.grid())
        if not report.in_d:
            raise ConfigError(
                "initial point is outside the feasible set",
                context={"violations": report.violations()},
            )
    return spec


def _line_of(text: str, key: str) -> int | None:
    pattern = re.compile(
        rf"^[ \t]*{re.escape(key)}[ \t]*=", re.IGNORECASE | re.MULTILINE
    )
    match = pattern.search(text)
    if match is None:
        return None
    return text.count("\n", 0, match.start()) + 1


def _render_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        text = format(value, ".17g")
        if not any(ch in text for ch in ".en"):
            text += ".0"
        return text
    if isinstance(value, (X0Mode, TimeScheme)):
        return json.dumps(value.value)
    return json.dumps(str(value))


def _env_overrides() -> dict[str, Any]:
    """Collect ``CCD__KEY=value`` overrides (values parsed as JSON when possible)."""
    overrides: dict[str, Any] = {}
    for key, raw_value in os.environ.items():
        if not key.startswith(ENV_PREFIX):
            continue
        name = key[len(ENV_PREFIX) :].strip("_").lower()
        if name:
            overrides[name] = _parse_env_value(raw_value)
    return overrides


def _parse_env_value(raw: str) -> Any:
    lowered = raw.strip().lower()
    if lowered in {"true", "false"}:
        return lowered == "true"

    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw
