"""Unit tests for run-file configuration."""

from __future__ import annotations

from pathlib import Path

import pytest

from core.config import (
    PRESETS,
    ConfigManager,
    RunSpec,
    parse_config,
    preset_spec,
    render_config,
)
from core.discretization import X0Mode
from core.exceptions import ConfigError
from core.model import DesignObjective
from core.pdesim import TimeScheme


def _write_toml(path: Path, content: str) -> None:
    path.write_text(content.strip() + "\n", encoding="utf-8")


def test_minimal_document_gives_reference_defaults() -> None:
    spec = parse_config("case = 1\nhomogeneous = true\n")

    assert (spec.q, spec.r) == (1.0, 1.0e4)
    assert (spec.eps, spec.eps1, spec.sigma, spec.beta) == (1e-3, 1e-6, 0.3, 0.3)
    assert (spec.a0, spec.k1, spec.k2, spec.plant_b) == (10.0, 7.0, -5.0, 0.0)
    assert (spec.n, spec.t_final, spec.nt) == (26, 200.0, 500)
    assert spec.x0_mode is X0Mode.IDENTITY
    assert spec.free_mask == (False, False, True, True)
    assert spec.objective is DesignObjective.ZERO


def test_nonhomogeneous_reaction_defaults_to_minus_one() -> None:
    spec = parse_config("case = 2\nhomogeneous = false\n")

    assert spec.plant_b == -1.0
    assert spec.b is None
    assert spec.design_point().b == -1.0
    assert spec.free_mask == (True, False, True, True)


def test_case_three_uses_square_of_a() -> None:
    spec = parse_config("case = 3")

    assert spec.objective is DesignObjective.SQUARE_OF_A
    assert spec.weights().objective is DesignObjective.SQUARE_OF_A


def test_sigma_out_of_range_reports_line() -> None:
    with pytest.raises(ConfigError) as excinfo:
        parse_config("# case 1\ncase = 1\nsigma = 1.5\n")

    assert excinfo.value.context["key"] == "sigma"
    assert excinfo.value.context["line"] == 3
    assert "line 3" in excinfo.value.message


def test_unknown_case_is_rejected() -> None:
    with pytest.raises(ConfigError) as excinfo:
        parse_config("case = 4")

    assert excinfo.value.context["key"] == "case"


def test_type_mismatch_reports_line() -> None:
    with pytest.raises(ConfigError) as excinfo:
        parse_config('case = 1\n\nn = "many"\n')

    assert excinfo.value.context == {"key": "n", "line": 3}


def test_unknown_key_is_named() -> None:
    with pytest.raises(ConfigError) as excinfo:
        parse_config("case = 1\ngamma = 2.0\n")

    assert "gamma" in excinfo.value.message
    assert excinfo.value.context["key"] == "gamma"


def test_keys_are_case_insensitive() -> None:
    spec = parse_config("CASE = 2\nSigma = 0.2\n")

    assert spec.case == 2
    assert spec.sigma == 0.2


def test_keys_colliding_after_lowercasing_are_rejected() -> None:
    with pytest.raises(ConfigError):
        parse_config("sigma = 0.2\nSIGMA = 0.3\n")


def test_tables_are_rejected() -> None:
    with pytest.raises(ConfigError):
        parse_config("[optimizer]\nsigma = 0.2\n")


def test_malformed_document_is_rejected() -> None:
    with pytest.raises(ConfigError) as excinfo:
        parse_config("case = = 1")

    assert excinfo.value.cause is not None


def test_non_finite_values_are_rejected() -> None:
    with pytest.raises(ConfigError):
        parse_config("k1 = inf")


def test_infeasible_start_lists_violations() -> None:
    text = "case = 1\nk1 = 0.0\nk2 = 0.0\n"

    with pytest.raises(ConfigError) as excinfo:
        parse_config(text)

    assert any(v.startswith("m3=") for v in excinfo.value.context["violations"])
    assert parse_config(text, check_feasibility=False).k2 == 0.0


def test_homogeneous_run_rejects_reaction_term() -> None:
    with pytest.raises(ConfigError):
        parse_config("homogeneous = true\nb = -1.0\n")


def test_calibration_range_must_be_ordered() -> None:
    with pytest.raises(ConfigError):
        parse_config("calibrate_min_n = 30\ncalibrate_max_n = 20\n")


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_round_trip(name: str) -> None:
    spec = preset_spec(name)

    assert parse_config(render_config(spec)) == spec


def test_custom_spec_round_trips_exactly() -> None:
    spec = RunSpec(
        name="odd values",
        case=3,
        homogeneous=False,
        b=-0.1,
        a0=1.0 / 3.0,
        k1=0.1,
        k2=-2.0 / 3.0,
        r=123456.789,
        eps1=1e-7,
        x0_mode=X0Mode.OUTER_PRODUCT,
        scheme=TimeScheme.BACKWARD_EULER,
        calibrate_target=276.6,
        output_dir=Path("out dir/ü"),
        emit_field_initial=True,
    )

    text = render_config(spec)

    assert "a0 = 0.33333333333333331" in text
    assert parse_config(text, check_feasibility=False) == spec


def test_preset_overrides_and_unknown_name() -> None:
    spec = preset_spec("case2-nonhom", n=12)

    assert spec.name == "case2-nonhom"
    assert (spec.case, spec.homogeneous, spec.n) == (2, False, 12)
    with pytest.raises(ConfigError):
        preset_spec("case4-hom")


def test_builders_forward_settings() -> None:
    spec = parse_config(
        "case = 2\nsigma = 0.2\nmax_backtracks = 7\nnt = 100\nsim_n = 11\n"
    )

    cfg = spec.optimizer_config()
    sim = spec.sim_config()

    assert (cfg.sigma, cfg.max_backtracks) == (0.2, 7)
    assert (sim.nt, sim.n, sim.dt) == (100, 11, 2.0)
    assert spec.grid().n == 26


def test_manager_load_uses_file_stem_as_name(tmp_path: Path) -> None:
    config_file = tmp_path / "my-case.toml"
    _write_toml(config_file, "case = 2\nhomogeneous = false\n")

    spec = ConfigManager().load(config_file)

    assert spec.name == "my-case"
    assert spec.case == 2


def test_manager_applies_env_overrides(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    config_file = tmp_path / "run.toml"
    _write_toml(config_file, "case = 1\nsigma = 0.3\n")
    monkeypatch.setenv("CCD__SIGMA", "0.25")
    monkeypatch.setenv("CCD__EMIT_FIELD", "false")
    monkeypatch.setenv("CCD__OUTPUT_DIR", "results")

    spec = ConfigManager().load(config_file)

    assert spec.sigma == 0.25
    assert spec.emit_field is False
    assert spec.output_dir == Path("results")


def test_manager_merges_onto_defaults() -> None:
    manager = ConfigManager(RunSpec(n=12, r=100.0))

    spec = manager.from_dict({"Case": 2, "homogeneous": False})

    assert (spec.n, spec.r, spec.case, spec.plant_b) == (12, 100.0, 2, -1.0)


@pytest.mark.parametrize(
    "path",
    sorted((Path(__file__).resolve().parents[2] / "config").glob("*.toml")),
    ids=lambda p: p.name,
)
def test_shipped_run_files_are_valid(path: Path) -> None:
    spec = ConfigManager().load(path)

    assert spec.name == path.stem
