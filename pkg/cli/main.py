"""Command line interface for the parabolic co-design toolkit."""

from __future__ import annotations

from pathlib import Path
from typing import Any

import click

from core.config import PRESETS, ConfigManager, RunSpec, preset_spec, render_config
from core.exceptions import CCDError
from core.logger import setup_logging
from core.lyapunov import assess_feasibility
from core.runner import calibrate_grid, gradient_check, run_many

_PRESET_CHOICE = click.Choice(sorted(PRESETS))


@click.group()
@click.version_option(version="0.1.0", prog_name="ccd")
@click.option("--log-level", default="WARNING", show_default=True, help="Log level")
@click.option("--log-json", is_flag=True, help="Emit logs as JSON lines")
def cli(log_level: str, log_json: bool) -> None:
    """Parabolic PDE control co-design CLI"""
    setup_logging({"level": log_level, "json_format": log_json})


@cli.command()
@click.option("--preset", "-p", "presets", multiple=True, type=_PRESET_CHOICE)
@click.option(
    "--config", "-c", "configs", multiple=True, type=click.Path(exists=True)
)
@click.option("--out", "-o", type=click.Path(file_okay=False), help="Output root")
@click.option("--emit-field/--no-emit-field", default=None, help="Write field.csv")
@click.option("--emit-field-initial", is_flag=True, help="Write field_initial.csv")
@click.option("--jobs", "-j", default=1, show_default=True, type=click.IntRange(1))
def run(
    presets: tuple[str, ...],
    configs: tuple[str, ...],
    out: str | None,
    emit_field: bool | None,
    emit_field_initial: bool,
    jobs: int,
) -> None:
    """Optimize and validate one or more cases"""
    if not presets and not configs:
        raise click.UsageError("give at least one --preset or --config")

    overrides: dict[str, Any] = {}
    if out is not None:
        overrides["output_dir"] = Path(out)
    if emit_field is not None:
        overrides["emit_field"] = emit_field
    if emit_field_initial:
        overrides["emit_field_initial"] = True

    try:
        specs = [_with_overrides(preset_spec(name), overrides) for name in presets]
        specs += [
            _with_overrides(ConfigManager().load(path), overrides) for path in configs
        ]
        reports = run_many(specs, jobs=jobs)
    except CCDError as exc:
        raise click.ClickException(str(exc)) from exc

    for report in reports:
        summary = report.summary()
        optimal = summary["optimal"]
        click.echo(
            f"{report.spec.name}: status={summary['status']} "
            f"iterations={summary['iterations']} "
            f"a={optimal['a']:.6g} k1={optimal['k1']:.6g} k2={optimal['k2']:.6g} "
            f"Jf={optimal['Jf']:.6g} J={optimal['J']:.6g} "
            f"corollary2_ok={str(summary['corollary2_ok']).lower()}"
        )
        click.echo(f"  -> {report.output_path}")


@cli.command()
@click.option("--preset", "-p", type=_PRESET_CHOICE)
@click.option("--config", "-c", type=click.Path(exists=True))
def check(preset: str | None, config: str | None) -> None:
    """Report stability margins and the Hurwitz test at the start point"""
    spec = _single_spec(preset, config)
    try:
        report = assess_feasibility(spec.design_point(), spec.grid())
    except CCDError as exc:
        raise click.ClickException(str(exc)) from exc

    click.echo(f"kbar={report.kbar:.6g}")
    for name, value in zip(("m1", "m2", "m3"), report.margins):
        click.echo(f"{name}={value:.6g}")
    click.echo(f"max_re_eig={report.max_re_eig:.6g}")
    click.echo(f"in_D={str(report.in_d).lower()}")
    if not report.in_d:
        for violation in report.violations():
            click.echo(f"violation: {violation}", err=True)
        raise SystemExit(1)


@cli.command()
@click.option("--preset", "-p", type=_PRESET_CHOICE)
@click.option("--config", "-c", type=click.Path(exists=True))
@click.option("--h", "step", default=1.0e-5, show_default=True, help="FD step")
@click.option("--tol", default=1.0e-4, show_default=True, help="Max relative error")
def gradcheck(preset: str | None, config: str | None, step: float, tol: float) -> None:
    """Compare the analytic gradient with central differences"""
    spec = _single_spec(preset, config)
    try:
        result = gradient_check(spec, h=step)
    except CCDError as exc:
        raise click.ClickException(str(exc)) from exc

    errors = result.relative_errors()
    exact = result.analytic.as_dict()
    approx = result.finite_difference.as_dict()
    for name, err in errors.items():
        click.echo(
            f"{name}: analytic={exact[name]:.10g} fd={approx[name]:.10g} "
            f"rel_err={err:.3e}"
        )
    if any(err > tol for err in errors.values()):
        click.echo(f"gradient check failed (tol={tol:g})", err=True)
        raise SystemExit(1)
    click.echo("gradient check passed")


@cli.command()
@click.option("--preset", "-p", type=_PRESET_CHOICE)
@click.option("--config", "-c", type=click.Path(exists=True))
@click.option("--target", type=float, help="Target start-point Jf")
@click.option("--min-n", type=click.IntRange(3), help="Smallest grid size")
@click.option("--max-n", type=click.IntRange(3), help="Largest grid size")
def calibrate(
    preset: str | None,
    config: str | None,
    target: float | None,
    min_n: int | None,
    max_n: int | None,
) -> None:
    """Sweep grid sizes and pick the one matching a target start-point Jf"""
    spec = _single_spec(preset, config)
    low = min_n if min_n is not None else spec.calibrate_min_n
    high = max_n if max_n is not None else spec.calibrate_max_n
    try:
        result = calibrate_grid(spec, range(low, high + 1), target)
    except CCDError as exc:
        raise click.ClickException(str(exc)) from exc

    click.echo("N,Jf0")
    for n, jf in result.table:
        click.echo(f"{n},{jf:.10g}")
    click.echo(
        f"best N={result.best_n} Jf0={result.best_jf:.10g} "
        f"gap={result.relative_gap:.3%}"
    )


@cli.command("show-config")
@click.option("--preset", "-p", type=_PRESET_CHOICE)
@click.option("--config", "-c", type=click.Path(exists=True))
def show_config(preset: str | None, config: str | None) -> None:
    """Print the canonical run document"""
    click.echo(render_config(_single_spec(preset, config)), nl=False)


def _single_spec(preset: str | None, config: str | None) -> RunSpec:
    if (preset is None) == (config is None):
        raise click.UsageError("give exactly one of --preset or --config")
    try:
        if preset is not None:
            return preset_spec(preset)
        return ConfigManager().load(config or "", check_feasibility=False)
    except CCDError as exc:
        raise click.ClickException(str(exc)) from exc


def _with_overrides(spec: RunSpec, overrides: dict[str, Any]) -> RunSpec:
    if not overrides:
        return spec
    return RunSpec.model_validate({**spec.model_dump(exclude_unset=True), **overrides})


if __name__ == "__main__":
    cli()
