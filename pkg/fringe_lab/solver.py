"""Split-operator time evolution, screen accumulation and fringe measurements.

Kinetic steps with a vector potential use a per-axis gauge transform: along
axis a, (p_a - e A_a)^2 = e^{i chi} p_a^2 e^{-i chi} with
chi = (e/hbar) * integral of A_a along that axis, so every factor stays
diagonal in one momentum coordinate and the step remains unitary. The gauge
factors jump at the periodic seam, which is harmless because the absorber
keeps the state away from the domain edges.
"""
import logging
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, List, Mapping, Optional, Tuple

import numpy as np
from scipy import fft, integrate, ndimage, signal

from .errors import ConfigError, NumericalAbort
from .grid import Grid, UnitsConfig
from .potentials import PotentialSpec
from .wavefunction import Wavefunction, norm2

logger = logging.getLogger(__name__)

# dt * max|V| / hbar must stay below this
STABILITY_LIMIT = 0.5
MIN_ABSORBER_CELLS = 8

Nonlinearity = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class EvolveConfig:
    dt: float
    n_steps: int
    record_stride: int = 1
    absorber_enabled: bool = False
    absorber_width: int = 16
    absorber_strength: float = 100.0
    x_screen: Optional[float] = None
    # False keeps only the first and last frame; observers see every record
    keep_frames: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.n_steps < 1 or self.record_stride < 1:
            raise ValueError("n_steps and record_stride must be at least 1")
        if self.absorber_enabled and self.absorber_width < MIN_ABSORBER_CELLS:
            raise ValueError(f"absorber width must be at least {MIN_ABSORBER_CELLS} cells")
        if self.absorber_strength < 0:
            raise ValueError("absorber strength must be non-negative")

    @property
    def duration(self) -> float:
        return self.dt * self.n_steps


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Frames recorded every ``record_stride`` steps, starting with the initial state."""

    frames: Tuple[Wavefunction, ...]
    dt_record: float
    metadata: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        object.__setattr__(self, "metadata", MappingProxyType(dict(self.metadata)))
        if not self.frames:
            raise ValueError("a trajectory needs at least one frame")

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def grid(self) -> Grid:
        return self.frames[0].grid

    @property
    def times(self) -> np.ndarray:
        return np.array([frame.time for frame in self.frames])

    @property
    def final(self) -> Wavefunction:
        return self.frames[-1]

    def values(self) -> np.ndarray:
        return np.stack([frame.values for frame in self.frames])

    def densities(self) -> np.ndarray:
        return np.abs(self.values()) ** 2

    def norms(self) -> np.ndarray:
        return np.array([norm2(frame) for frame in self.frames])

    def centroids(self, axis: int = 0) -> np.ndarray:
        return np.array([frame.expectation_position(axis) for frame in self.frames])

    def second_moments(self, axis: int = 0) -> np.ndarray:
        """Central second moment of |psi|^2 along ``axis`` for every frame."""
        return np.array([frame.position_variance(axis) for frame in self.frames])


def absorber_mask(grid: Grid, width: int, strength: float, dt: float) -> np.ndarray:
    """Per-step damping factor, 1 in the interior and < 1 within ``width`` cells of an edge."""
    mask = np.ones(grid.shape)
    for axis, ax in enumerate(grid.axes):
        index = np.arange(ax.n)
        depth = np.maximum(width - np.minimum(index, ax.n - 1 - index), 0) / width
        profile = np.exp(-strength * dt * depth ** 2)
        shape = [1] * grid.dims
        shape[axis] = ax.n
        mask = mask * profile.reshape(shape)
    return mask


class SplitOperatorPropagator:
    """Strang splitting V/2, K, V/2 with optional nonlinearity and absorber."""

    def __init__(
        self,
        potential: PotentialSpec,
        dt: float,
        units: UnitsConfig = UnitsConfig(),
        nonlinearity: Optional[Nonlinearity] = None,
        absorber: Optional[np.ndarray] = None,
    ):
        self.grid = potential.grid
        self.potential = potential
        self.dt = dt
        self.units = units
        self.nonlinearity = nonlinearity
        self.absorber = absorber
        self._half_potential = np.exp(-0.5j * dt * potential.scalar / units.hbar)
        self._build_kinetic()

    def _kinetic_factor(self, axis: Optional[int], tau: float) -> np.ndarray:
        hbar, mass = self.units.hbar, self.units.mass
        if axis is None:
            return np.exp(-1j * tau * hbar * self.grid.k_squared / (2.0 * mass))
        k = self.grid.axes[axis].wavenumbers
        shape = [1] * self.grid.dims
        shape[axis] = k.size
        return np.exp(-1j * tau * hbar * k.reshape(shape) ** 2 / (2.0 * mass))

    def _build_kinetic(self):
        if not self.potential.has_vector:
            self._full_kinetic = self._kinetic_factor(None, self.dt)
            self._axis_steps = None
            return
        self._full_kinetic = None
        gauges = []
        for axis, component in enumerate(self.potential.vector):
            if np.any(component != 0):
                chi = integrate.cumulative_trapezoid(
                    component, dx=self.grid.spacings[axis], axis=axis, initial=0)
                gauges.append(np.exp(1j * self.units.charge * chi / self.units.hbar))
            else:
                gauges.append(None)
        if self.grid.dims == 1:
            self._axis_steps = [(0, self._kinetic_factor(0, self.dt), gauges[0])]
        else:
            half_x = self._kinetic_factor(0, self.dt / 2)
            self._axis_steps = [
                (0, half_x, gauges[0]),
                (1, self._kinetic_factor(1, self.dt), gauges[1]),
                (0, half_x, gauges[0]),
            ]

    def _potential_half_step(self, values: np.ndarray) -> np.ndarray:
        values = values * self._half_potential
        if self.nonlinearity is not None:
            extra = self.nonlinearity(np.abs(values) ** 2)
            values = values * np.exp(-0.5j * self.dt * extra / self.units.hbar)
        return values

    def _kinetic_step(self, values: np.ndarray) -> np.ndarray:
        if self._full_kinetic is not None:
            return fft.ifftn(fft.fftn(values) * self._full_kinetic)
        for axis, factor, gauge in self._axis_steps:
            if gauge is not None:
                values = values * np.conj(gauge)
            values = fft.ifft(fft.fft(values, axis=axis) * factor, axis=axis)
            if gauge is not None:
                values = values * gauge
        return values

    def step(self, values: np.ndarray) -> np.ndarray:
        values = self._potential_half_step(values)
        values = self._kinetic_step(values)
        values = self._potential_half_step(values)
        if self.absorber is not None:
            values = values * self.absorber
        return values


def check_stability(potential: PotentialSpec, dt: float, units: UnitsConfig):
    ratio = dt * potential.max_abs / units.hbar
    if ratio >= STABILITY_LIMIT:
        raise ConfigError(
            f"time step too large for the potential: dt*max|V|/hbar = {ratio:.3g} "
            f"(limit {STABILITY_LIMIT}); reduce dt below {STABILITY_LIMIT * units.hbar / potential.max_abs:.3g}")


def evolve(
    psi0: Wavefunction,
    pot: PotentialSpec,
    cfg: EvolveConfig,
    units: UnitsConfig = UnitsConfig(),
    nonlinearity: Optional[Nonlinearity] = None,
    progress_callback: Optional[Callable[[int, int], None]] = None,
    on_record: Optional[Callable[[Wavefunction], None]] = None,
) -> Trajectory:
    """Evolve ``psi0`` for ``cfg.n_steps`` steps and return the recorded frames.

    ``on_record`` is called with the initial state and every ``record_stride``-th
    state, whether or not ``cfg.keep_frames`` holds on to them.
    """
    if pot.grid != psi0.grid:
        raise ValueError("potential and wavefunction live on different grids")
    check_stability(pot, cfg.dt, units)
    if abs(norm2(psi0) - 1.0) > 1e-6:
        logger.warning(f"Initial state is not normalized (norm {norm2(psi0):.6g})")

    absorber = None
    if cfg.absorber_enabled:
        absorber = absorber_mask(psi0.grid, cfg.absorber_width, cfg.absorber_strength, cfg.dt)
    propagator = SplitOperatorPropagator(pot, cfg.dt, units, nonlinearity, absorber)

    logger.info(f"Evolving {psi0.grid.shape} grid for {cfg.n_steps} steps (dt={cfg.dt}, potential={pot.label})")
    frames: List[Wavefunction] = [psi0]
    if on_record:
        on_record(psi0)
    values = np.array(psi0.values)
    for step in range(1, cfg.n_steps + 1):
        values = propagator.step(values)
        if step % cfg.record_stride == 0 or step == cfg.n_steps:
            if not np.all(np.isfinite(values)):
                raise NumericalAbort(step)
            if step % cfg.record_stride == 0:
                frame = Wavefunction(values, psi0.grid, psi0.time + step * cfg.dt)
                if on_record:
                    on_record(frame)
                if cfg.keep_frames:
                    frames.append(frame)
                else:
                    frames[1:] = [frame]
            if progress_callback:
                progress_callback(step, cfg.n_steps)

    metadata = {"dt": cfg.dt, "n_steps": cfg.n_steps, "record_stride": cfg.record_stride,
                "potential": pot.label, "absorber": cfg.absorber_enabled, "keep_frames": cfg.keep_frames}
    dt_record = cfg.dt * cfg.record_stride
    if not cfg.keep_frames and len(frames) == 2:
        dt_record = frames[1].time - frames[0].time
    return Trajectory(tuple(frames), dt_record, metadata)


# --- screen patterns -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ScreenPattern:
    s: np.ndarray
    intensity: np.ndarray
    x_screen: float
    metadata: Mapping = field(default_factory=dict)

    def __post_init__(self):
        s = np.array(self.s, dtype=float)
        intensity = np.array(self.intensity, dtype=float)
        if s.shape != intensity.shape or s.ndim != 1:
            raise ValueError("s and intensity must be 1D arrays of equal length")
        if np.any(intensity < 0):
            raise ValueError("screen intensity must be non-negative")
        s.flags.writeable = False
        intensity.flags.writeable = False
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "intensity", intensity)
        object.__setattr__(self, "metadata", MappingProxyType(dict(self.metadata)))

    @property
    def spacing(self) -> float:
        return float(self.s[1] - self.s[0])


class ScreenAccumulator:
    """Running time integral of |psi|^2 along the line x = x_screen.

    Feed it recorded frames one at a time (``evolve(..., on_record=acc.add)``);
    only one screen line is held, never the frames themselves.
    """

    def __init__(self, grid: Grid, x_screen: float, dt_record: float):
        if grid.dims != 2:
            raise ValueError("screen patterns need a 2D trajectory")
        x_axis = grid.axes[0]
        if not (x_axis.min <= x_screen <= x_axis.coordinates[-1]):
            raise ValueError(f"x_screen={x_screen} lies outside the grid [{x_axis.min}, {x_axis.coordinates[-1]}]")
        position = x_axis.index_of(x_screen)
        self.grid = grid
        self.x_screen = x_screen
        self.dt_record = dt_record
        self.frames = 0
        self._i0 = min(int(math.floor(position)), x_axis.n - 2)
        self._frac = position - self._i0
        self._line = np.zeros(grid.axes[1].n)

    def add(self, frame: Wavefunction):
        if frame.grid != self.grid:
            raise ValueError("frame lives on a different grid than the screen")
        near = np.abs(frame.values[self._i0]) ** 2
        far = np.abs(frame.values[self._i0 + 1]) ** 2
        self._line += (1.0 - self._frac) * near + self._frac * far
        self.frames += 1

    def pattern(self, metadata: Optional[Mapping] = None) -> ScreenPattern:
        intensity = np.maximum(self._line * self.dt_record, 0.0)
        return ScreenPattern(self.grid.axes[1].coordinates, intensity, self.x_screen, dict(metadata or {}))


def screen_pattern(trajectory: Trajectory, x_screen: float) -> ScreenPattern:
    """Time-integrated density along the line x = x_screen."""
    screen = ScreenAccumulator(trajectory.grid, x_screen, trajectory.dt_record)
    for frame in trajectory.frames:
        screen.add(frame)
    return screen.pattern(trajectory.metadata)


def _parabolic_offset(left: float, center: float, right: float) -> float:
    denominator = left - 2.0 * center + right
    if denominator == 0:
        return 0.0
    return 0.5 * (left - right) / denominator


def _fringe_period_cells(intensity: np.ndarray, min_cycles: int) -> Optional[float]:
    spectrum = np.abs(fft.rfft(intensity - intensity.mean()))
    if spectrum.size <= min_cycles + 1:
        return None
    index = min_cycles + int(np.argmax(spectrum[min_cycles:]))
    return intensity.size / index


def fringe_shift_measure(
    pattern_B: ScreenPattern,
    pattern_0: ScreenPattern,
    detrend: bool = True,
    min_cycles: int = 4,
) -> float:
    """Shift of ``pattern_B`` relative to ``pattern_0``; positive means toward +s.

    Both patterns are optionally detrended with a one-fringe boxcar, then the
    circular cross-correlation peak is refined with a parabola.
    """
    if pattern_B.s.shape != pattern_0.s.shape or not np.allclose(pattern_B.s, pattern_0.s):
        raise ValueError("patterns must share the same s grid")
    for label, pattern in (("shifted", pattern_B), ("reference", pattern_0)):
        if np.ptp(pattern.intensity) <= 1e-12 * max(np.max(pattern.intensity), 1e-300):
            raise ValueError(f"{label} pattern is flat; no shift can be measured")

    shifted, reference = pattern_B.intensity, pattern_0.intensity
    if detrend:
        period = _fringe_period_cells(reference, min_cycles)
        if period is not None and period >= 3:
            size = int(round(period))
            shifted = shifted - ndimage.uniform_filter1d(shifted, size, mode="wrap")
            reference = reference - ndimage.uniform_filter1d(reference, size, mode="wrap")

    correlation = fft.irfft(fft.rfft(shifted) * np.conj(fft.rfft(reference)), n=shifted.size)
    peak = int(np.argmax(correlation))
    n = correlation.size
    offset = _parabolic_offset(correlation[(peak - 1) % n], correlation[peak], correlation[(peak + 1) % n])
    lag = peak if peak < n // 2 else peak - n
    return (lag + offset) * pattern_0.spacing


def _refined_peak(s: np.ndarray, intensity: np.ndarray, index: int) -> float:
    if index == 0 or index == intensity.size - 1:
        return float(s[index])
    offset = _parabolic_offset(intensity[index - 1], intensity[index], intensity[index + 1])
    return float(s[index] + offset * (s[1] - s[0]))


def measure_fringe_spacing(pattern: ScreenPattern, prominence: float = 0.05) -> float:
    """Mean distance from the brightest fringe to its two neighbours."""
    peaks, _ = signal.find_peaks(pattern.intensity, prominence=prominence * np.max(pattern.intensity))
    if peaks.size < 3:
        raise ValueError(f"need at least three fringes to measure a spacing, found {peaks.size}")
    brightest = int(np.argmax(pattern.intensity[peaks]))
    if brightest == 0 or brightest == peaks.size - 1:
        raise ValueError("the brightest fringe has no neighbour on one side")
    left = _refined_peak(pattern.s, pattern.intensity, peaks[brightest - 1])
    right = _refined_peak(pattern.s, pattern.intensity, peaks[brightest + 1])
    return 0.5 * (right - left)

