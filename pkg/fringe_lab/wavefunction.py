"""Wavefunctions on a grid and the Gaussian initial condition."""
import logging
import math
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Mapping, Sequence, Union

import numpy as np
from scipy import fft, special

from .grid import Grid

logger = logging.getLogger(__name__)

# fraction of the continuum norm allowed outside the grid before flagging
CLIP_TOLERANCE = 1e-6

Number = Union[float, int]


@dataclass(frozen=True, eq=False)
class Wavefunction:
    """Complex amplitude sampled on ``grid`` at time ``time``.

    The array is copied on construction and made read-only.
    """

    values: np.ndarray
    grid: Grid
    time: float = 0.0
    metadata: Mapping = field(default_factory=dict)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.complex128)
        if values.shape != self.grid.shape:
            raise ValueError(f"wavefunction shape {values.shape} does not match grid {self.grid.shape}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "metadata", MappingProxyType(dict(self.metadata)))
        total = norm2(self)
        if not math.isfinite(total) or total <= 0:
            raise ValueError(f"wavefunction squared norm must be finite and positive, got {total}")

    def with_values(self, values: np.ndarray, time: float = None) -> "Wavefunction":
        return replace(self, values=values, time=self.time if time is None else time)

    def scaled(self, factor: complex) -> "Wavefunction":
        return self.with_values(self.values * factor)

    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def expectation_position(self, axis: int = 0) -> float:
        n = self.density()
        return float(np.sum(self.grid.mesh[axis] * n) / np.sum(n))

    def position_variance(self, axis: int = 0) -> float:
        n = self.density()
        mean = np.sum(self.grid.mesh[axis] * n) / np.sum(n)
        return float(np.sum((self.grid.mesh[axis] - mean) ** 2 * n) / np.sum(n))

    def expectation_wavenumber(self, axis: int = 0) -> float:
        """Mean wavenumber from the momentum-space distribution."""
        weight = np.abs(fft.fftn(self.values)) ** 2
        return float(np.sum(self.grid.wavenumber_mesh[axis] * weight) / np.sum(weight))


def norm2(psi: Wavefunction) -> float:
    """Left-Riemann squared norm: sum |psi|^2 * h^dims."""
    return float(np.sum(np.abs(psi.values) ** 2) * psi.grid.cell_volume)


def _per_axis(value: Union[Number, Sequence[Number]], dims: int, name: str) -> tuple:
    if np.ndim(value) == 0:
        return (float(value),) * dims if name == "sigma" else (float(value),) + (0.0,) * (dims - 1)
    values = tuple(float(v) for v in value)
    if len(values) != dims:
        raise ValueError(f"{name} needs {dims} components, got {len(values)}")
    return values


def gaussian_packet(
    grid: Grid,
    x0: Union[Number, Sequence[Number]],
    k0: Union[Number, Sequence[Number]],
    sigma: Union[Number, Sequence[Number]],
) -> Wavefunction:
    """Normalized Gaussian packet exp(-(x-x0)^2/(4 sigma^2)) exp(i k0 x) at t = 0.

    On 2D grids scalars for ``x0``/``k0`` apply to the x axis only; scalar
    ``sigma`` applies to both axes.
    """
    centers = _per_axis(x0, grid.dims, "x0")
    wavenumbers = _per_axis(k0, grid.dims, "k0")
    widths = _per_axis(sigma, grid.dims, "sigma")
    if any(s <= 0 or not math.isfinite(s) for s in widths):
        raise ValueError(f"sigma must be positive, got {widths}")

    log_amplitude = np.zeros(grid.shape)
    phase = np.zeros(grid.shape)
    clipped = 0.0
    for axis, (center, k, width) in enumerate(zip(centers, wavenumbers, widths)):
        coords = grid.mesh[axis]
        log_amplitude = log_amplitude - (coords - center) ** 2 / (4.0 * width ** 2)
        phase = phase + k * coords
        ax = grid.axes[axis]
        # |psi|^2 is a normal density with standard deviation sigma
        outside = special.ndtr((ax.min - center) / width) + special.ndtr((center - ax.max) / width)
        clipped = max(clipped, float(outside))

    values = np.exp(log_amplitude + 1j * phase)
    values /= math.sqrt(np.sum(np.abs(values) ** 2) * grid.cell_volume)

    metadata = {"x0": centers, "k0": wavenumbers, "sigma": widths, "clipped": clipped > CLIP_TOLERANCE}
    if clipped > CLIP_TOLERANCE:
        logger.warning(f"Gaussian packet clipped by the grid: {clipped:.2e} of its norm lies outside")
        metadata["clipped_fraction"] = clipped
    return Wavefunction(values, grid, 0.0, metadata)
