"""Scenario files: strict pydantic schema, presets and line-anchored errors.

A scenario file is YAML with the sections ``units``, ``grid``, ``packet``,
``geometry``, ``fields``, ``evolve`` and ``output``, plus an optional
``lab`` section read by :class:`fringe_lab.config.LabConfig`. Unknown keys
are rejected at every level. The file is deep-merged over the preset of the
scenario it names, so a file only has to state what it changes.
"""
import copy
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigError
from .fringe import PhaseConvention, SlitGeometry, SolenoidSpec
from .grid import Grid, UnitsConfig, make_plane_grid, make_uniform_grid
from .solver import EvolveConfig

logger = logging.getLogger(__name__)

ScenarioName = Literal["fringe", "ab", "evolve2d", "madelung", "gausson", "suite"]
SCENARIOS = ("fringe", "ab", "evolve2d", "madelung", "gausson", "suite")
TWO_D_SCENARIOS = {"ab", "evolve2d", "suite"}

FloatOrPair = Union[float, List[float]]


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class UnitsSection(StrictModel):
    hbar: float = Field(1.0, gt=0)
    mass: float = Field(1.0, gt=0)
    charge: float = Field(1.0, gt=0)

    def build(self) -> UnitsConfig:
        return UnitsConfig(self.hbar, self.mass, self.charge)


class GridSection(StrictModel):
    x_min: float = -25.6
    x_max: float = 25.6
    nx: int = Field(512, ge=8)
    y_min: Optional[float] = -25.6
    y_max: Optional[float] = 25.6
    ny: Optional[int] = Field(512, ge=8)

    @property
    def dims(self) -> int:
        return 1 if self.ny is None else 2

    @model_validator(mode="after")
    def _check_bounds(self):
        if self.x_max <= self.x_min:
            raise ValueError("x_max must exceed x_min")
        if self.ny is not None and (self.y_min is None or self.y_max is None or self.y_max <= self.y_min):
            raise ValueError("a 2D grid needs y_min < y_max")
        return self

    def build(self) -> Grid:
        if self.dims == 1:
            return make_uniform_grid(self.x_min, self.x_max, self.nx)
        return make_plane_grid(self.x_min, self.x_max, self.nx, self.y_min, self.y_max, self.ny)


class PacketSection(StrictModel):
    """Gaussian packet; scalars for x0/k0 act on x, a scalar sigma on every axis."""

    x0: FloatOrPair = -15.0
    k0: FloatOrPair = 10.0
    sigma: FloatOrPair = [1.5, 3.0]

    @property
    def kx(self) -> float:
        return float(self.k0[0] if isinstance(self.k0, list) else self.k0)

    @property
    def center_x(self) -> float:
        return float(self.x0[0] if isinstance(self.x0, list) else self.x0)

    @property
    def sigma_x(self) -> float:
        return float(self.sigma[0] if isinstance(self.sigma, list) else self.sigma)


class GeometrySection(StrictModel):
    """Slit geometry shared by the analytic model and the 2D solver.

    ``L``, ``d0`` and ``wavelength`` default to the values implied by the
    solver setup: screen_x - barrier_x, barrier_x - packet x0 and 2 pi / k0.
    """

    delta: float = Field(4.0, gt=0)
    slit_width: float = Field(0.6, gt=0)
    barrier_x: float = -8.0
    barrier_thickness: float = Field(0.8, gt=0)
    wall_height: float = Field(1.0e3, gt=0)
    edge_cells: int = Field(2, ge=0)
    open_slits: Tuple[bool, bool] = (True, True)
    screen_x: float = 15.0
    L: Optional[float] = Field(None, gt=0)
    d0: Optional[float] = Field(None, gt=0)
    wavelength: Optional[float] = Field(None, gt=0)
    I0: float = Field(1.0, ge=0)
    convention: Optional[PhaseConvention] = None
    theta_max: float = Field(0.5, gt=0, lt=math.pi / 2)
    theta_points: int = Field(1001, ge=3)


class SolenoidSection(StrictModel):
    radius: float = Field(0.5, gt=0)
    field: float = 4.0
    center: Tuple[float, float] = (-6.5, 0.0)

    def build(self, radius: Optional[float] = None) -> SolenoidSpec:
        """Solenoid spec; a different ``radius`` keeps the flux fixed."""
        if radius is None:
            return SolenoidSpec(self.radius, self.field, self.center)
        return SolenoidSpec(radius, self.field * (self.radius / radius) ** 2, self.center)


class FluxSweepSection(StrictModel):
    """Solenoid fluxes B pi R^2 from ``start`` to ``stop`` inclusive."""

    start: float = 0.0
    stop: float = 4.0 * math.pi
    steps: int = Field(9, ge=2)


class FieldsSection(StrictModel):
    """External fields and the log nonlinearity.

    ``b`` is in energy units. Laboratory bounds put it below 3e-15 eV, far
    too weak to see on a desk-scale grid; natural-unit runs use b of order 1.
    """

    B_ext: float = 0.0
    solenoid: Optional[SolenoidSection] = None
    alternate_radius: Optional[float] = Field(None, gt=0)
    flux_sweep: Optional[FluxSweepSection] = None
    harmonic_omega: Optional[float] = Field(None, gt=0)
    b: float = 0.25
    log_clamp: float = Field(1.0e-30, gt=0)


class AbsorberSection(StrictModel):
    enabled: bool = True
    width: int = Field(24, ge=8)
    strength: float = Field(100.0, ge=0)


class EvolveSection(StrictModel):
    """Time stepping; without ``n_steps`` or ``t_end`` the run lasts until the packet clears the screen."""

    dt: float = Field(4.0e-4, gt=0)
    n_steps: Optional[int] = Field(None, ge=1)
    t_end: Optional[float] = Field(None, gt=0)
    record_stride: int = Field(10, ge=1)
    absorber: AbsorberSection = AbsorberSection()
    refinement_check: bool = True

    @model_validator(mode="after")
    def _one_duration(self):
        if self.n_steps is not None and self.t_end is not None:
            raise ValueError("give either n_steps or t_end, not both")
        return self


class OutputSection(StrictModel):
    svg: Optional[bool] = None
    precision: Optional[int] = Field(None, ge=6, le=17)
    wavefunctions: bool = False


class LabSection(StrictModel):
    """Run settings; unset keys fall back to the environment and built-in defaults."""

    output_dir: Optional[str] = None
    csv_precision: Optional[int] = None
    svg_plots: Optional[bool] = None
    default_convention: Optional[str] = None
    sweep_workers: Optional[int] = None
    fft_workers: Optional[int] = None
    log_level: Optional[str] = None
    log_format: Optional[str] = None


PRESETS: Dict[str, Dict[str, Any]] = {
    "fringe": {
        "fields": {"flux_sweep": {}},
    },
    "evolve2d": {},
    "ab": {
        "fields": {"solenoid": {}, "alternate_radius": 0.7},
    },
    "suite": {
        "fields": {"solenoid": {}},
    },
    "madelung": {
        "grid": {"x_min": -40.0, "x_max": 40.0, "nx": 1024, "y_min": None, "y_max": None, "ny": None},
        "packet": {"x0": -5.0, "k0": 2.0, "sigma": 1.0},
        "evolve": {"dt": 1.0e-3, "n_steps": 400, "record_stride": 10, "absorber": {"enabled": False}},
    },
    "gausson": {
        "grid": {"x_min": -40.0, "x_max": 40.0, "nx": 1024, "y_min": None, "y_max": None, "ny": None},
        "packet": {"x0": -5.0, "k0": 1.0, "sigma": 1.0},
        "fields": {"b": 0.25},
        "evolve": {"dt": 5.0e-3, "t_end": 10.0, "record_stride": 100, "absorber": {"enabled": False}},
    },
}


class ScenarioConfig(StrictModel):
    scenario: ScenarioName
    units: UnitsSection = UnitsSection()
    grid: GridSection = GridSection()
    packet: PacketSection = PacketSection()
    geometry: GeometrySection = GeometrySection()
    fields: FieldsSection = FieldsSection()
    evolve: EvolveSection = EvolveSection()
    output: OutputSection = OutputSection()
    lab: LabSection = LabSection()

    @model_validator(mode="after")
    def _check_scenario(self):
        if self.scenario in TWO_D_SCENARIOS and self.grid.dims != 2:
            raise ValueError(f"scenario '{self.scenario}' needs a 2D grid (set ny, y_min, y_max)")
        if self.scenario == "gausson" and self.grid.dims != 1:
            raise ValueError("the gausson scenario runs on a 1D grid (set ny to null)")
        if self.scenario == "gausson" and not self.fields.b > 0:
            raise ValueError("the gausson scenario needs b > 0")
        if self.scenario in TWO_D_SCENARIOS and self.geometry.screen_x <= self.geometry.barrier_x:
            raise ValueError("screen_x must lie downstream of barrier_x")
        if self.scenario == "ab" and self.fields.solenoid is None:
            raise ValueError("the ab scenario needs a fields.solenoid section")
        return self

    @staticmethod
    def preset(name: str) -> Dict[str, Any]:
        if name not in PRESETS:
            raise ConfigError(f"unknown scenario '{name}'; choose one of {', '.join(SCENARIOS)}")
        return {"scenario": name, **copy.deepcopy(PRESETS[name])}

    @classmethod
    def from_preset(cls, name: str, overrides: Optional[Dict[str, Any]] = None) -> "ScenarioConfig":
        data = _deep_merge(cls.preset(name), overrides or {})
        data["scenario"] = name
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            raise ConfigError(_format_error(e)) from e

    def derive(self, name: str) -> "ScenarioConfig":
        """Preset ``name`` carrying this scenario's units, output and log-nonlinearity strength."""
        overrides = {
            "units": self.units.model_dump(),
            "output": self.output.model_dump(),
            "lab": self.lab.model_dump(exclude_none=True),
            "fields": {"b": self.fields.b, "log_clamp": self.fields.log_clamp},
        }
        if name in TWO_D_SCENARIOS:
            overrides.update(self.model_dump(include={"grid", "packet", "geometry", "evolve"}))
            overrides["fields"] = self.fields.model_dump()
        return ScenarioConfig.from_preset(name, overrides)

    def resolved(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")

    # --- derived physics objects ---------------------------------------------

    @property
    def screen_distance(self) -> float:
        g = self.geometry
        return g.L if g.L is not None else g.screen_x - g.barrier_x

    @property
    def wavelength(self) -> float:
        return self.geometry.wavelength if self.geometry.wavelength is not None else 2.0 * math.pi / abs(self.packet.kx)

    def slit_geometry(self, convention: Union[str, PhaseConvention]) -> SlitGeometry:
        g = self.geometry
        d0 = g.d0 if g.d0 is not None else max(g.barrier_x - self.packet.center_x, g.delta / 2)
        return SlitGeometry(self.screen_distance, g.delta, d0, self.wavelength, g.I0, PhaseConvention(convention))

    def transit_time(self) -> float:
        """Time for the packet tail (x0 - 4 sigma) to reach the screen."""
        speed = self.units.hbar * abs(self.packet.kx) / self.units.mass
        if speed == 0:
            raise ConfigError("packet.k0 is zero; set evolve.n_steps or evolve.t_end explicitly")
        distance = self.geometry.screen_x - self.packet.center_x + 4.0 * self.packet.sigma_x
        return distance / speed

    def n_steps(self) -> int:
        e = self.evolve
        if e.n_steps is not None:
            return e.n_steps
        duration = e.t_end if e.t_end is not None else self.transit_time()
        return max(1, int(round(duration / e.dt)))

    def evolve_config(self, dt_scale: float = 1.0) -> EvolveConfig:
        e = self.evolve
        dt = e.dt * dt_scale
        n_steps = int(round(self.n_steps() / dt_scale))
        x_screen = self.geometry.screen_x if self.grid.dims == 2 else None
        return EvolveConfig(dt, n_steps, e.record_stride, e.absorber.enabled, e.absorber.width,
                            e.absorber.strength, x_screen)


def _deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    result = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(result.get(key), dict):
            result[key] = _deep_merge(result[key], value)
        else:
            result[key] = copy.deepcopy(value)
    return result


def yaml_line(text: str, loc: Tuple[Union[str, int], ...]) -> Optional[int]:
    """1-based line of the deepest node along ``loc`` present in the YAML text."""
    try:
        node = yaml.compose(text)
    except yaml.YAMLError:
        return None
    line = None
    for key in loc:
        if isinstance(node, yaml.MappingNode):
            match = next(((k, v) for k, v in node.value if k.value == str(key)), None)
            if match is None:
                break
            line = match[0].start_mark.line + 1
            node = match[1]
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
            line = node.start_mark.line + 1
        else:
            break
    return line


def _format_error(error: ValidationError, text: Optional[str] = None) -> Union[str, Tuple[str, Optional[int]]]:
    first = error.errors()[0]
    loc = tuple(first["loc"])
    where = ".".join(str(part) for part in loc) or "scenario"
    message = f"{where}: {first['msg']}"
    if len(error.errors()) > 1:
        message += f" (and {len(error.errors()) - 1} more)"
    if text is None:
        return message
    return message, yaml_line(text, loc)


def load_scenario(path: Optional[str] = None, scenario: Optional[str] = None) -> ScenarioConfig:
    """Load a scenario file over its preset; ``scenario`` overrides the file's own name."""
    text = ""
    data: Dict[str, Any] = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"scenario file '{path}' does not exist")
        text = p.read_text()
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as e:
            mark = getattr(e, "problem_mark", None)
            raise ConfigError(f"invalid YAML: {getattr(e, 'problem', e)}",
                              mark.line + 1 if mark is not None else None) from e
        if not isinstance(data, dict):
            raise ConfigError("a scenario file must be a mapping of sections", 1)

    name = scenario or data.get("scenario")
    if name is None:
        raise ConfigError("no scenario given; name one on the command line or set 'scenario:' in the file")
    if name not in SCENARIOS:
        raise ConfigError(f"unknown scenario '{name}'; choose one of {', '.join(SCENARIOS)}",
                          yaml_line(text, ("scenario",)))

    merged = _deep_merge(ScenarioConfig.preset(name), data)
    merged["scenario"] = name
    try:
        config = ScenarioConfig.model_validate(merged)
    except ValidationError as e:
        message, line = _format_error(e, text)
        raise ConfigError(message, line) from e
    logger.debug(f"Loaded scenario '{name}' from {path or 'preset'}")
    return config


def preset_yaml(name: str) -> str:
    """Documented YAML for the fully resolved preset ``name``."""
    config = ScenarioConfig.from_preset(name)
    body = yaml.safe_dump(config.resolved(), sort_keys=False, default_flow_style=None)
    header = (
        f"# fringe-lab scenario: {name}\n"
        "# Natural units (hbar = m = e = 1) unless overridden in 'units'.\n"
        "# fields.b is the log-nonlinearity strength in energy units: physical bounds\n"
        "# place it below 3e-15 eV, desk-scale runs use b of order 1.\n"
        "# Optional 'lab' keys: output_dir, csv_precision, svg_plots, default_convention,\n"
        "# sweep_workers, fft_workers, log_level.\n"
    )
    return header + body
