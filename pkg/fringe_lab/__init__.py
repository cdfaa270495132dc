"""fringe-lab - two-slit, Aharonov-Bohm and gausson experiments on a spectral Schrodinger solver."""

__version__ = "0.1.0"

from .errors import ConfigError, LabError, NumericalAbort, VerdictFailure
from .grid import Grid, UnitsConfig, make_plane_grid, make_uniform_grid
from .wavefunction import Wavefunction, gaussian_packet, norm2
from .fringe import PhaseConvention, SlitGeometry, SolenoidSpec
from .solver import EvolveConfig, Trajectory, evolve
from .lognls import GaussonParams, evolve_lognls, make_gausson
from .report import VerdictReport
from .orchestrator import ExperimentOrchestrator
from .config import LabConfig, get_config
from .scenario import ScenarioConfig, load_scenario

__all__ = [
    "ConfigError",
    "LabError",
    "NumericalAbort",
    "VerdictFailure",
    "Grid",
    "UnitsConfig",
    "make_plane_grid",
    "make_uniform_grid",
    "Wavefunction",
    "gaussian_packet",
    "norm2",
    "PhaseConvention",
    "SlitGeometry",
    "SolenoidSpec",
    "EvolveConfig",
    "Trajectory",
    "evolve",
    "GaussonParams",
    "evolve_lognls",
    "make_gausson",
    "VerdictReport",
    "ExperimentOrchestrator",
    "LabConfig",
    "get_config",
    "ScenarioConfig",
    "load_scenario",
]
