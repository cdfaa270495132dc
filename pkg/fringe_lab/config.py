"""Run-level configuration for fringe-lab.

Settings come from, in increasing priority:
- built-in defaults
- the ``lab:`` section of a scenario YAML file
- FRINGE_LAB_* environment variables
- command-line options

Physics parameters live in the scenario file (see ``scenario.py``); this
module only covers how runs are executed and written out.
"""
import logging
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Callable, Dict, Optional

import yaml

from .errors import ConfigError
from .fringe import PhaseConvention
from .scenario import yaml_line


DEFAULTS = {
    # Output
    "output_dir": "results",
    "csv_precision": 17,
    "svg_plots": True,

    # Analytic defaults
    "default_convention": PhaseConvention.STANDARD.value,

    # Parallelism
    "sweep_workers": 4,
    "fft_workers": 1,

    # Logging
    "log_level": "INFO",
    "log_format": "%(asctime)s %(levelname)-8s %(name)s: %(message)s",
}

DEFAULT_CONFIG_PATHS = [
    Path("fringe-lab.yaml"),
    Path("fringe-lab.yml"),
    Path.home() / ".fringe-lab" / "config.yaml",
]

ENV_PREFIX = "FRINGE_LAB_"


def find_config_file() -> Optional[str]:
    """First existing entry of ``DEFAULT_CONFIG_PATHS``, if any."""
    return next((str(p) for p in DEFAULT_CONFIG_PATHS if p.exists()), None)


def _parse_bool(value: str) -> bool:
    return value.strip().lower() in {"1", "true", "yes", "on"}


# field -> (environment variable suffix, parser)
ENV_FIELDS: Dict[str, tuple[str, Callable[[str], Any]]] = {
    "output_dir": ("OUTPUT_DIR", str),
    "csv_precision": ("CSV_PRECISION", int),
    "svg_plots": ("SVG_PLOTS", _parse_bool),
    "default_convention": ("CONVENTION", str),
    "sweep_workers": ("SWEEP_WORKERS", int),
    "fft_workers": ("FFT_WORKERS", int),
    "log_level": ("LOG_LEVEL", str),
}


def env_var(field_name: str) -> str:
    """Environment variable that overrides ``field_name``."""
    suffix = ENV_FIELDS.get(field_name, (field_name.upper(), str))[0]
    return ENV_PREFIX + suffix


@dataclass
class LabConfig:
    """Execution settings shared by every scenario."""

    # Output
    output_dir: str = DEFAULTS["output_dir"]
    csv_precision: int = DEFAULTS["csv_precision"]
    svg_plots: bool = DEFAULTS["svg_plots"]

    # Analytic defaults
    default_convention: str = DEFAULTS["default_convention"]

    # Parallelism
    sweep_workers: int = DEFAULTS["sweep_workers"]
    fft_workers: int = DEFAULTS["fft_workers"]

    # Logging
    log_level: str = DEFAULTS["log_level"]
    log_format: str = DEFAULTS["log_format"]

    @classmethod
    def from_env(cls) -> "LabConfig":
        """Settings found in FRINGE_LAB_* variables, e.g. FRINGE_LAB_OUTPUT_DIR=/tmp/runs."""
        found = {}
        for name, (_, parse) in ENV_FIELDS.items():
            raw = os.environ.get(env_var(name))
            if raw:
                found[name] = parse(raw)
        return cls(**found)

    @classmethod
    def from_yaml(cls, path: str) -> "LabConfig":
        """Read the ``lab:`` section of a scenario file; unknown keys are rejected."""
        text = Path(path).read_text()
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"invalid YAML in {path}: {e}") from e
        section = (data.get("lab") or {}) if isinstance(data, dict) else {}
        if not isinstance(section, dict):
            raise ConfigError("lab: expected a mapping of settings", yaml_line(text, ("lab",)))
        unknown = cls.unknown_keys(section)
        if unknown:
            raise ConfigError(f"lab.{unknown[0]}: unknown setting", yaml_line(text, ("lab", unknown[0])))
        return cls.from_dict({key: value for key, value in section.items() if value is not None})

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "LabConfig":
        """Build from a mapping of settings."""
        unknown = cls.unknown_keys(data)
        if unknown:
            raise ConfigError(f"unknown lab setting(s): {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def unknown_keys(cls, data: Dict[str, Any]) -> list[str]:
        known = {f.name for f in fields(cls)}
        return sorted(key for key in data if key not in known)

    @classmethod
    def load(cls, config_path: Optional[str] = None) -> "LabConfig":
        """Merge defaults, the config file and the environment.

        Without ``config_path`` the first existing entry of
        ``DEFAULT_CONFIG_PATHS`` is used; a given path that does not exist
        contributes nothing.
        """
        config = cls()

        if config_path is None:
            config_path = find_config_file()
        if config_path and Path(config_path).exists():
            config = cls._merge(config, cls.from_yaml(config_path))

        return cls._merge(config, cls.from_env())

    @classmethod
    def _merge(cls, base: "LabConfig", override: "LabConfig") -> "LabConfig":
        """``base`` updated with every setting ``override`` changes from its default."""
        changed = {
            f.name: getattr(override, f.name)
            for f in fields(cls)
            if getattr(override, f.name) is not None and getattr(override, f.name) != DEFAULTS.get(f.name)
        }
        return replace(base, **changed)

    def validate(self) -> list[str]:
        errors = []

        if not self.output_dir:
            errors.append("output_dir is required")

        if not 6 <= self.csv_precision <= 17:
            errors.append(f"csv_precision {self.csv_precision} should be between 6 and 17 digits")

        if self.default_convention not in {c.value for c in PhaseConvention}:
            errors.append(f"default_convention '{self.default_convention}' must be 'half' or 'standard'")

        if self.sweep_workers < 1:
            errors.append("sweep_workers must be >= 1")

        if self.fft_workers < 1:
            errors.append("fft_workers must be >= 1")

        if not isinstance(logging.getLevelName(self.log_level.upper()), int):
            errors.append(f"log_level '{self.log_level}' is not a logging level")

        return errors

    def to_dict(self) -> Dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def setup_logging(self):
        """Plain stream logging for programmatic use; the CLI installs rich instead."""
        level = self.log_level.upper()
        if not isinstance(logging.getLevelName(level), int):
            level = "INFO"
        logging.basicConfig(level=level, format=self.log_format)


def get_config(config_path: Optional[str] = None) -> LabConfig:
    """Load the merged run configuration."""
    return LabConfig.load(config_path)
