"""Tests for scenario files and presets."""
import math
from dataclasses import fields

import pytest

from fringe_lab.config import LabConfig
from fringe_lab.errors import ConfigError
from fringe_lab.fringe import PhaseConvention
from fringe_lab.scenario import SCENARIOS, LabSection, ScenarioConfig, SolenoidSection, load_scenario, preset_yaml


def write(tmp_path, text):
    path = tmp_path / "scenario.yaml"
    path.write_text(text)
    return str(path)


@pytest.mark.parametrize("name", SCENARIOS)
def test_every_preset_validates(name):
    config = ScenarioConfig.from_preset(name)
    assert config.scenario == name
    assert config.grid.dims == (1 if name in {"madelung", "gausson"} else 2)


@pytest.mark.parametrize("name", SCENARIOS)
def test_preset_yaml_loads_back(tmp_path, name):
    path = write(tmp_path, preset_yaml(name))
    assert load_scenario(path).resolved() == ScenarioConfig.from_preset(name).resolved()


def test_gausson_preset():
    config = ScenarioConfig.from_preset("gausson")
    cfg = config.evolve_config()
    assert config.fields.b == 0.25
    assert cfg.n_steps == 2000
    assert cfg.record_stride == 100
    assert not cfg.absorber_enabled
    assert cfg.x_screen is None


def test_default_geometry_follows_solver_setup():
    config = ScenarioConfig.from_preset("fringe")
    geometry = config.slit_geometry("standard")
    assert geometry.L == pytest.approx(23.0)
    assert geometry.d0 == pytest.approx(7.0)
    assert geometry.wavelength == pytest.approx(2 * math.pi / 10.0)
    assert geometry.convention is PhaseConvention.STANDARD


def test_duration_from_transit_time():
    config = ScenarioConfig.from_preset("evolve2d")
    assert config.transit_time() == pytest.approx(3.6)
    assert config.n_steps() == 9000

    refined = config.evolve_config(dt_scale=0.5)
    assert refined.dt == pytest.approx(2.0e-4)
    assert refined.n_steps == 18000
    assert refined.x_screen == 15.0


def test_file_overrides_preset(tmp_path):
    path = write(tmp_path, "scenario: fringe\ngeometry:\n  delta: 6.0\n")
    config = load_scenario(path)
    assert config.geometry.delta == 6.0
    assert config.fields.flux_sweep is not None


def test_command_line_name_wins(tmp_path):
    path = write(tmp_path, "scenario: fringe\n")
    assert load_scenario(path, "ab").scenario == "ab"


def test_unknown_key_reports_line(tmp_path):
    path = write(tmp_path, "scenario: fringe\ngeometry:\n  delta: 4.0\n  slitt_width: 0.5\n")
    with pytest.raises(ConfigError) as info:
        load_scenario(path)
    assert info.value.line == 4
    assert "geometry.slitt_width" in str(info.value)
    assert str(info.value).startswith("line 4:")


def test_misspelled_lab_setting_reports_line(tmp_path):
    path = write(tmp_path, "scenario: fringe\nlab:\n  output_dri: elsewhere\n  svg_plot: false\n")
    with pytest.raises(ConfigError) as info:
        load_scenario(path)
    assert info.value.line == 3
    assert "lab.output_dri" in str(info.value)


def test_lab_section_mirrors_lab_config():
    assert set(LabSection.model_fields) == {f.name for f in fields(LabConfig)}
    suite = ScenarioConfig.from_preset("suite", {"lab": {"sweep_workers": 2}})
    assert suite.derive("gausson").lab.sweep_workers == 2


def test_bad_value_reports_line(tmp_path):
    path = write(tmp_path, "scenario: fringe\ngeometry:\n  delta: -1.0\n")
    with pytest.raises(ConfigError) as info:
        load_scenario(path)
    assert info.value.line == 3


def test_unknown_top_level_section(tmp_path):
    path = write(tmp_path, "scenario: fringe\nsolver:\n  method: rk4\n")
    with pytest.raises(ConfigError) as info:
        load_scenario(path)
    assert info.value.line == 2


def test_unknown_scenario_name(tmp_path):
    path = write(tmp_path, "units:\n  hbar: 1.0\nscenario: triple-slit\n")
    with pytest.raises(ConfigError) as info:
        load_scenario(path)
    assert info.value.line == 3


@pytest.mark.parametrize("text", ["scenario: [fringe\n", "- fringe\n- ab\n"])
def test_malformed_files(tmp_path, text):
    with pytest.raises(ConfigError):
        load_scenario(write(tmp_path, text))


def test_missing_file_and_name(tmp_path):
    with pytest.raises(ConfigError, match="does not exist"):
        load_scenario(str(tmp_path / "absent.yaml"))
    with pytest.raises(ConfigError, match="no scenario"):
        load_scenario(write(tmp_path, "units:\n  hbar: 1.0\n"))


@pytest.mark.parametrize("name, overrides, fragment", [
    ("evolve2d", {"grid": {"ny": None, "y_min": None, "y_max": None}}, "2D grid"),
    ("gausson", {"grid": {"ny": 64, "y_min": -4.0, "y_max": 4.0}}, "1D grid"),
    ("gausson", {"fields": {"b": 0.0}}, "b > 0"),
    ("evolve2d", {"geometry": {"screen_x": -10.0}}, "downstream"),
    ("ab", {"fields": {"solenoid": None}}, "solenoid"),
    ("madelung", {"evolve": {"t_end": 1.0}}, "n_steps or t_end"),
    ("fringe", {"grid": {"x_min": 5.0, "x_max": -5.0}}, "x_max"),
])
def test_rejected_scenarios(name, overrides, fragment):
    with pytest.raises(ConfigError, match=fragment):
        ScenarioConfig.from_preset(name, overrides)


def test_unknown_preset():
    with pytest.raises(ConfigError, match="unknown scenario"):
        ScenarioConfig.from_preset("triple-slit")


def test_derive_carries_units_and_b():
    suite = ScenarioConfig.from_preset("suite", {"units": {"mass": 2.0}, "fields": {"b": 0.4}})

    gausson = suite.derive("gausson")
    assert gausson.grid.dims == 1
    assert gausson.units.mass == 2.0
    assert gausson.fields.b == 0.4

    ab = suite.derive("ab")
    assert ab.grid.dims == 2
    assert ab.fields.solenoid is not None


def test_solenoid_radius_change_keeps_flux():
    section = SolenoidSection(radius=0.5, field=4.0)
    wider = section.build(radius=1.0)
    assert wider.field * wider.radius ** 2 == pytest.approx(section.field * section.radius ** 2)
