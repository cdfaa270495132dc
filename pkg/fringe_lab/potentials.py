"""Scalar and vector potentials sampled on a grid.

Walls are high finite potentials with cosine-smoothed edges so the spectral
solver does not ring. Whenever the solenoid vector potential is active its
core is covered by a wall, which keeps the density away from the field.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .fringe import SolenoidSpec, solenoid_A_cartesian
from .grid import Grid

logger = logging.getLogger(__name__)

DEFAULT_WALL_HEIGHT = 1.0e3
DEFAULT_EDGE_CELLS = 2


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """Scalar potential V and optional vector potential components on ``grid``."""

    grid: Grid
    scalar: np.ndarray
    vector: Optional[Tuple[np.ndarray, ...]] = None
    label: str = "free"
    core_mask: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        scalar = np.array(self.scalar, dtype=float)
        if scalar.shape != self.grid.shape:
            raise ValueError(f"scalar potential shape {scalar.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(scalar)):
            raise ValueError("scalar potential must be finite everywhere")
        scalar.flags.writeable = False
        object.__setattr__(self, "scalar", scalar)
        if self.vector is not None:
            if len(self.vector) != self.grid.dims:
                raise ValueError(f"vector potential needs {self.grid.dims} components")
            components = []
            for component in self.vector:
                component = np.array(component, dtype=float)
                if component.shape != self.grid.shape or not np.all(np.isfinite(component)):
                    raise ValueError("vector potential components must be finite and match the grid")
                component.flags.writeable = False
                components.append(component)
            object.__setattr__(self, "vector", tuple(components))

    @property
    def has_vector(self) -> bool:
        return self.vector is not None and any(np.any(c != 0) for c in self.vector)

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.scalar)))

    def combine(self, other: "PotentialSpec") -> "PotentialSpec":
        """Sum of two potentials on the same grid."""
        if other.grid != self.grid:
            raise ValueError("cannot combine potentials on different grids")
        if self.vector is None:
            vector = other.vector
        elif other.vector is None:
            vector = self.vector
        else:
            vector = tuple(a + b for a, b in zip(self.vector, other.vector))
        masks = [m for m in (self.core_mask, other.core_mask) if m is not None]
        core = np.logical_or.reduce(masks) if masks else None
        labels = [label for label in (self.label, other.label) if label != "free"]
        return PotentialSpec(self.grid, self.scalar + other.scalar, vector, "+".join(labels) or "free", core)


def _inside(distance: np.ndarray, taper: float) -> np.ndarray:
    """1 where distance <= -taper/2, 0 where distance >= taper/2, cosine ramp between."""
    if taper <= 0:
        return (distance < 0).astype(float)
    t = np.clip(0.5 - distance / taper, 0.0, 1.0)
    return 0.5 * (1.0 - np.cos(np.pi * t))


def free_potential(grid: Grid) -> PotentialSpec:
    return PotentialSpec(grid, np.zeros(grid.shape))


def harmonic_potential(grid: Grid, omega: float, mass: float = 1.0, center: float = 0.0) -> PotentialSpec:
    """V = m omega^2 (x - center)^2 / 2 summed over axes."""
    scalar = sum(0.5 * mass * omega ** 2 * (coords - center) ** 2 for coords in grid.mesh)
    return PotentialSpec(grid, scalar, label="harmonic")


def double_slit_barrier(
    grid: Grid,
    barrier_x: float,
    thickness: float,
    delta: float,
    slit_width: float,
    wall_height: float = DEFAULT_WALL_HEIGHT,
    edge_cells: int = DEFAULT_EDGE_CELLS,
    open_slits: Sequence[bool] = (True, True),
) -> PotentialSpec:
    """Wall across x = barrier_x with gaps of ``slit_width`` centred on y = +-delta/2.

    ``open_slits`` is (upper, lower); closing one gives the single-slit control.
    """
    if grid.dims != 2:
        raise ValueError("the slit barrier needs a 2D grid")
    if slit_width <= 0 or thickness <= 0 or delta <= 0:
        raise ValueError("slit width, barrier thickness and slit separation must be positive")
    if delta <= slit_width:
        raise ValueError(f"slit separation {delta} must exceed slit width {slit_width}")
    x, y = grid.mesh
    hx, hy = grid.spacings
    slab = _inside(np.abs(x - barrier_x) - thickness / 2, edge_cells * hx)
    opening = np.zeros(grid.shape)
    for is_open, center in zip(open_slits, (delta / 2, -delta / 2)):
        if is_open:
            opening = np.maximum(opening, _inside(np.abs(y - center) - slit_width / 2, edge_cells * hy))
    label = "double-slit" if all(open_slits) else "single-slit"
    return PotentialSpec(grid, wall_height * slab * (1.0 - opening), label=label)


def solenoid_core(
    grid: Grid,
    spec: SolenoidSpec,
    wall_height: float = DEFAULT_WALL_HEIGHT,
    edge_cells: int = DEFAULT_EDGE_CELLS,
) -> PotentialSpec:
    """Impenetrable disk over r < R (no field)."""
    if grid.dims != 2:
        raise ValueError("the solenoid core needs a 2D grid")
    x, y = grid.mesh
    r = np.hypot(x - spec.center[0], y - spec.center[1])
    # the ramp sits just outside R so the wall is full height wherever B != 0
    taper = edge_cells * min(grid.spacings)
    disk = _inside(r - spec.radius - taper / 2, taper)
    return PotentialSpec(grid, wall_height * disk, label="solenoid-core", core_mask=r < spec.radius)


def solenoid_vector_potential(
    grid: Grid,
    spec: SolenoidSpec,
    wall_height: float = DEFAULT_WALL_HEIGHT,
    edge_cells: int = DEFAULT_EDGE_CELLS,
) -> PotentialSpec:
    """Solenoid vector potential together with the wall masking its core."""
    ax, ay = solenoid_A_cartesian(grid.mesh[0], grid.mesh[1], spec)
    core = solenoid_core(grid, spec, wall_height, edge_cells)
    return PotentialSpec(grid, core.scalar, (ax, ay), "solenoid", core.core_mask)


def landau_vector_potential(
    grid: Grid,
    B: float,
    x_range: Optional[Tuple[float, float]] = None,
) -> PotentialSpec:
    """Landau gauge A = (-B y, 0); with ``x_range`` the field is confined to that strip."""
    if grid.dims != 2:
        raise ValueError("the Landau gauge needs a 2D grid")
    x, y = grid.mesh
    strip = np.ones(grid.shape) if x_range is None else ((x >= x_range[0]) & (x <= x_range[1])).astype(float)
    return PotentialSpec(grid, np.zeros(grid.shape), (-B * y * strip, np.zeros(grid.shape)), "landau")
