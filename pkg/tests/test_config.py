"""Tests for run-level configuration."""
import pytest

from fringe_lab.config import DEFAULTS, LabConfig, find_config_file, get_config
from fringe_lab.errors import ConfigError

ENV_VARS = [
    "FRINGE_LAB_OUTPUT_DIR",
    "FRINGE_LAB_CSV_PRECISION",
    "FRINGE_LAB_SVG_PLOTS",
    "FRINGE_LAB_CONVENTION",
    "FRINGE_LAB_SWEEP_WORKERS",
    "FRINGE_LAB_FFT_WORKERS",
    "FRINGE_LAB_LOG_LEVEL",
]


@pytest.fixture(autouse=True)
def clean_env(monkeypatch, tmp_path):
    for name in ENV_VARS:
        monkeypatch.delenv(name, raising=False)
    monkeypatch.chdir(tmp_path)


def test_defaults_are_valid():
    config = LabConfig()
    assert config.validate() == []
    assert config.to_dict() == DEFAULTS


def test_from_env(monkeypatch):
    monkeypatch.setenv("FRINGE_LAB_OUTPUT_DIR", "/tmp/runs")
    monkeypatch.setenv("FRINGE_LAB_CSV_PRECISION", "12")
    monkeypatch.setenv("FRINGE_LAB_SVG_PLOTS", "off")
    monkeypatch.setenv("FRINGE_LAB_CONVENTION", "half")

    config = LabConfig.from_env()
    assert config.output_dir == "/tmp/runs"
    assert config.csv_precision == 12
    assert config.svg_plots is False
    assert config.default_convention == "half"


def test_yaml_lab_section(tmp_path):
    path = tmp_path / "scenario.yaml"
    path.write_text("scenario: fringe\nlab:\n  output_dir: runs\n  sweep_workers: 2\n")

    config = LabConfig.from_yaml(str(path))
    assert config.output_dir == "runs"
    assert config.sweep_workers == 2
    assert config.fft_workers == DEFAULTS["fft_workers"]


def test_file_without_lab_section(tmp_path):
    path = tmp_path / "scenario.yaml"
    path.write_text("scenario: fringe\n")
    assert LabConfig.from_yaml(str(path)).to_dict() == DEFAULTS


def test_env_overrides_file(monkeypatch, tmp_path):
    path = tmp_path / "scenario.yaml"
    path.write_text("lab:\n  output_dir: runs\n  csv_precision: 10\n")
    monkeypatch.setenv("FRINGE_LAB_CSV_PRECISION", "8")

    config = get_config(str(path))
    assert config.output_dir == "runs"
    assert config.csv_precision == 8


def test_default_file_in_working_directory(tmp_path):
    (tmp_path / "fringe-lab.yaml").write_text("lab:\n  log_level: DEBUG\n")
    assert get_config().log_level == "DEBUG"


def test_missing_file_falls_back_to_defaults(tmp_path):
    assert get_config(str(tmp_path / "absent.yaml")).to_dict() == DEFAULTS


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="output_dri"):
        LabConfig.from_dict({"output_dir": "x", "output_dri": "y"})


def test_misspelled_yaml_setting_reports_its_line(tmp_path):
    path = tmp_path / "scenario.yaml"
    path.write_text("scenario: fringe\nlab:\n  output_dir: runs\n  svg_plot: false\n")

    with pytest.raises(ConfigError, match="lab.svg_plot") as excinfo:
        LabConfig.from_yaml(str(path))
    assert excinfo.value.line == 4


def test_find_config_file_in_working_directory(tmp_path):
    (tmp_path / "fringe-lab.yml").write_text("scenario: fringe\n")
    assert find_config_file() == "fringe-lab.yml"


def test_merge_keeps_base_for_default_overrides():
    base = LabConfig(output_dir="base", sweep_workers=8)
    override = LabConfig(output_dir="override")

    merged = LabConfig._merge(base, override)
    assert merged.output_dir == "override"
    assert merged.sweep_workers == 8


@pytest.mark.parametrize("field, value, fragment", [
    ("output_dir", "", "output_dir"),
    ("csv_precision", 3, "csv_precision"),
    ("default_convention", "sideways", "default_convention"),
    ("sweep_workers", 0, "sweep_workers"),
    ("fft_workers", 0, "fft_workers"),
    ("log_level", "LOUD", "log_level"),
])
def test_validate_errors(field, value, fragment):
    config = LabConfig(**{field: value})
    errors = config.validate()
    assert len(errors) == 1
    assert fragment in errors[0]
