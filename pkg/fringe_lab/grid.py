"""Uniform periodic grids, spectral derivatives and the units policy.

Grids are periodic for spectral evolution; hard walls are modelled with
potentials, never with the grid topology.
"""
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Tuple

import numpy as np
from scipy import fft

logger = logging.getLogger(__name__)

MIN_POINTS = 8


@dataclass(frozen=True)
class UnitsConfig:
    """Natural units: hbar = m = e = 1 unless overridden."""

    hbar: float = 1.0
    mass: float = 1.0
    charge: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "mass", "charge"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be a positive finite number, got {value}")


@dataclass(frozen=True)
class Axis:
    """One periodic axis: samples at min + i*h for i in [0, n)."""

    min: float
    max: float
    n: int

    @property
    def spacing(self) -> float:
        return (self.max - self.min) / self.n

    @property
    def length(self) -> float:
        return self.max - self.min

    @cached_property
    def coordinates(self) -> np.ndarray:
        # min + i*h directly, no cumulative sum
        coords = self.min + np.arange(self.n) * self.spacing
        coords.flags.writeable = False
        return coords

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        k = 2.0 * np.pi * fft.fftfreq(self.n, d=self.spacing)
        k.flags.writeable = False
        return k

    def index_of(self, value: float) -> float:
        """Fractional sample index of a coordinate."""
        return (value - self.min) / self.spacing

    def to_dict(self) -> dict:
        return {"min": self.min, "max": self.max, "n": self.n}


@dataclass(frozen=True)
class Grid:
    """A 1D or 2D uniform grid. Arrays on it are indexed ``[ix]`` or ``[ix, iy]``."""

    axes: Tuple[Axis, ...]

    def __post_init__(self):
        if len(self.axes) not in (1, 2):
            raise ValueError(f"only 1D and 2D grids are supported, got {len(self.axes)} axes")

    @property
    def dims(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(axis.n for axis in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def spacings(self) -> Tuple[float, ...]:
        return tuple(axis.spacing for axis in self.axes)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacings))

    @cached_property
    def mesh(self) -> Tuple[np.ndarray, ...]:
        """Coordinate arrays broadcast to the full grid shape."""
        return tuple(np.meshgrid(*(a.coordinates for a in self.axes), indexing="ij"))

    @cached_property
    def wavenumber_mesh(self) -> Tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*(a.wavenumbers for a in self.axes), indexing="ij"))

    @cached_property
    def k_squared(self) -> np.ndarray:
        return sum(k ** 2 for k in self.wavenumber_mesh)

    def derivative(self, values: np.ndarray, axis: int = 0, order: int = 1) -> np.ndarray:
        """Spectral derivative along one axis."""
        k = self.axes[axis].wavenumbers
        shape = [1] * self.dims
        shape[axis] = k.size
        factor = (1j * k.reshape(shape)) ** order
        if order % 2 == 0:
            # Nyquist mode keeps its real even-order factor
            factor = factor.real
        elif k.size % 2 == 0:
            nyquist = [slice(None)] * self.dims
            nyquist[axis] = k.size // 2
            factor = factor.copy()
            factor[tuple(nyquist)] = 0.0
        result = fft.ifft(fft.fft(values, axis=axis) * factor, axis=axis)
        return result if np.iscomplexobj(values) else result.real

    def gradient(self, values: np.ndarray) -> Tuple[np.ndarray, ...]:
        return tuple(self.derivative(values, axis=a) for a in range(self.dims))

    def laplacian(self, values: np.ndarray) -> np.ndarray:
        result = fft.ifftn(-self.k_squared * fft.fftn(values))
        return result if np.iscomplexobj(values) else result.real

    def to_dict(self) -> dict:
        return {"dims": self.dims, "axes": [axis.to_dict() for axis in self.axes]}

    @classmethod
    def from_dict(cls, data: dict) -> "Grid":
        return cls(tuple(Axis(float(a["min"]), float(a["max"]), int(a["n"])) for a in data["axes"]))


def _make_axis(min_value: float, max_value: float, n: int) -> Axis:
    if not (math.isfinite(min_value) and math.isfinite(max_value)):
        raise ValueError(f"grid bounds must be finite, got [{min_value}, {max_value}]")
    if max_value <= min_value:
        raise ValueError(f"grid max ({max_value}) must exceed min ({min_value})")
    if int(n) != n or n < MIN_POINTS:
        raise ValueError(f"grid needs an integer point count >= {MIN_POINTS}, got {n}")
    n = int(n)
    if n & (n - 1):
        logger.warning(f"Grid point count {n} is not a power of two; FFTs will be slower")
    return Axis(float(min_value), float(max_value), n)


def make_uniform_grid(min_value: float, max_value: float, n: int) -> Grid:
    """Build a 1D periodic grid with spacing (max - min) / n."""
    return Grid((_make_axis(min_value, max_value, n),))


def make_plane_grid(
    x_min: float, x_max: float, nx: int,
    y_min: float, y_max: float, ny: int,
) -> Grid:
    """Build a 2D periodic grid; axis 0 is x (propagation), axis 1 is y (transverse)."""
    return Grid((_make_axis(x_min, x_max, nx), _make_axis(y_min, y_max, ny)))
