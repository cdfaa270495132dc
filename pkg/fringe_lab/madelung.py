"""Hydrodynamic (Madelung) view of wavefunctions and residual diagnostics.

Velocities come from the probability current, so nothing here needs a
phase unwrap except the 1D action field S. Spatial derivatives are
spectral, time derivatives are centred differences on recorded frames.
Points where the density falls below ``rel_floor * max(n)`` are masked
and carry NaN in the field arrays.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple, Union

import numpy as np

from .grid import Grid, UnitsConfig
from .potentials import PotentialSpec
from .solver import Trajectory
from .wavefunction import Wavefunction

logger = logging.getLogger(__name__)

DEFAULT_REL_FLOOR = 1.0e-12
# wrapped phase steps beyond this (between neighbours or frames) are under-resolved
MAX_PHASE_STEP = 0.5 * math.pi

PotentialLike = Union[None, np.ndarray, PotentialSpec]


@dataclass(frozen=True, eq=False)
class HydroFields:
    """Density, velocity and quantum potential of one wavefunction.

    ``S`` is only populated on 1D grids; ``S_mask`` marks where its unwrap
    is trustworthy.
    """

    grid: Grid
    time: float
    n: np.ndarray
    v: Tuple[np.ndarray, ...]
    V_q: np.ndarray
    rho: np.ndarray
    mask: np.ndarray
    S: Optional[np.ndarray] = None
    S_mask: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def unwrap_ok(self) -> bool:
        return self.S_mask is not None and bool(np.all(self.S_mask[self.mask]))

    def to_columns(self) -> Dict[str, np.ndarray]:
        names = ("x", "y")[: self.grid.dims]
        columns = {name: coords.ravel() for name, coords in zip(names, self.grid.mesh)}
        columns["n"] = self.n.ravel()
        for name, component in zip(("v_x", "v_y"), self.v):
            columns[name] = component.ravel()
        columns["V_q"] = self.V_q.ravel()
        if self.S is not None:
            columns["S"] = self.S.ravel()
        columns["mask"] = self.mask.ravel().astype(float)
        return columns


@dataclass(frozen=True, eq=False)
class ResidualReport:
    """Residual field on the interior frames plus its scalar summary.

    ``field`` has shape (frames, *grid) for scalar residuals and
    (frames, dims, *grid) for the Euler residual.
    """

    name: str
    times: np.ndarray
    field: np.ndarray
    mask: np.ndarray
    summary: float

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "summary": self.summary,
            "frames": int(self.times.size),
            "masked_fraction": float(1.0 - self.mask.mean()),
        }


def _density_mask(n: np.ndarray, rel_floor: float) -> np.ndarray:
    return n > rel_floor * np.max(n)


def _current(values: np.ndarray, grads: Tuple[np.ndarray, ...], units: UnitsConfig) -> Tuple[np.ndarray, ...]:
    """Probability current hbar Im(psi* grad psi) / m."""
    return tuple(units.hbar * np.imag(np.conj(values) * g) / units.mass for g in grads)


def _quantum_potential(amplitude: np.ndarray, grid: Grid, units: UnitsConfig, mask: np.ndarray) -> np.ndarray:
    """-(hbar^2/2m) lap(sqrt n)/sqrt n, evaluated only where ``mask`` holds."""
    safe = np.where(mask, amplitude, 1.0)
    return -(units.hbar ** 2) / (2.0 * units.mass) * grid.laplacian(amplitude) / safe


def decompose(psi: Wavefunction, units: UnitsConfig = UnitsConfig(),
              rel_floor: float = DEFAULT_REL_FLOOR) -> HydroFields:
    grid = psi.grid
    n = psi.density()
    mask = _density_mask(n, rel_floor)
    safe_n = np.where(mask, n, 1.0)
    grads = grid.gradient(psi.values)
    v = tuple(np.where(mask, j / safe_n, np.nan) for j in _current(psi.values, grads, units))

    V_q = np.where(mask, _quantum_potential(np.sqrt(n), grid, units, mask), np.nan)

    S = S_mask = None
    if grid.dims == 1:
        phase = np.angle(psi.values)
        S = units.hbar * np.unwrap(phase)
        steps = np.abs(np.angle(psi.values[1:] * np.conj(psi.values[:-1])))
        reliable = np.ones(grid.shape, dtype=bool)
        reliable[1:] &= steps < MAX_PHASE_STEP
        reliable[:-1] &= steps < MAX_PHASE_STEP
        S_mask = mask & reliable
        if not np.all(S_mask[mask]):
            logger.warning(f"Phase unwrap unreliable at {int(np.sum(mask & ~reliable))} supported points "
                           f"(t={psi.time:g}); S is masked there")

    return HydroFields(grid, psi.time, n, v, V_q, n * units.mass, mask, S, S_mask)


def recompose(fields: HydroFields, units: UnitsConfig = UnitsConfig()) -> Wavefunction:
    """sqrt(n) e^{iS/hbar}; 1D only."""
    if fields.S is None:
        raise ValueError("recompose needs the action field S, which exists only on 1D grids")
    values = np.sqrt(fields.n) * np.exp(1j * fields.S / units.hbar)
    return Wavefunction(values, fields.grid, fields.time)


# --- residuals ---------------------------------------------------------------

def _check_frames(trajectory: Trajectory):
    if len(trajectory) < 3:
        raise ValueError(f"residuals need at least 3 frames, got {len(trajectory)}")
    steps = np.diff(trajectory.times)
    if not np.allclose(steps, trajectory.dt_record, rtol=1e-9, atol=0.0):
        raise ValueError("residuals need uniformly spaced frames")


def _scalar_field(V: PotentialLike, grid: Grid) -> np.ndarray:
    if V is None:
        return np.zeros(grid.shape)
    if isinstance(V, PotentialSpec):
        if V.grid != grid:
            raise ValueError("potential and trajectory live on different grids")
        return np.asarray(V.scalar)
    V = np.asarray(V, dtype=float)
    if V.shape != grid.shape:
        raise ValueError(f"potential shape {V.shape} does not match grid {grid.shape}")
    return V


def _finite_difference_gradient(V: np.ndarray, grid: Grid) -> Tuple[np.ndarray, ...]:
    if grid.dims == 1:
        return (np.gradient(V, grid.spacings[0], edge_order=2),)
    return tuple(np.gradient(V, *grid.spacings, edge_order=2))


def _summarize(name: str, times: np.ndarray, residual: np.ndarray, mask: np.ndarray, grid: Grid) -> ResidualReport:
    squared = residual ** 2
    if squared.ndim > mask.ndim:
        squared = squared.sum(axis=1)
    per_frame = np.where(mask, squared, 0.0).reshape(mask.shape[0], -1).sum(axis=1) * grid.cell_volume
    summary = float(math.sqrt(per_frame.mean()))
    if mask.ndim < residual.ndim:
        shown = np.where(mask[:, None], residual, np.nan)
    else:
        shown = np.where(mask, residual, np.nan)
    logger.debug(f"{name} residual summary {summary:.3e} over {times.size} frames")
    return ResidualReport(name, times, shown, mask, summary)


def continuity_residual(trajectory: Trajectory, units: UnitsConfig = UnitsConfig(),
                        rel_floor: float = DEFAULT_REL_FLOOR) -> ResidualReport:
    """dn/dt + div(n v) on every interior frame."""
    _check_frames(trajectory)
    grid = trajectory.grid
    values = trajectory.values()
    n = np.abs(values) ** 2
    dt = trajectory.dt_record

    residuals, masks = [], []
    for t in range(1, len(trajectory) - 1):
        current = _current(values[t], grid.gradient(values[t]), units)
        divergence = sum(grid.derivative(j, axis=a) for a, j in enumerate(current))
        residuals.append((n[t + 1] - n[t - 1]) / (2.0 * dt) + divergence)
        masks.append(_density_mask(n[t], rel_floor))
    return _summarize("continuity", trajectory.times[1:-1], np.array(residuals), np.array(masks), grid)


def hj_residual(trajectory: Trajectory, V: PotentialLike = None, units: UnitsConfig = UnitsConfig(),
                rel_floor: float = DEFAULT_REL_FLOOR, nonlinearity=None) -> ResidualReport:
    """dS/dt + |grad S|^2/(2m) + V + V_q on every interior frame (1D).

    dS/dt is the centred difference of the phase unwrapped along time; points
    whose phase advances by a quarter turn or more between frames are masked.
    ``nonlinearity`` adds a state-dependent potential U(n).
    """
    _check_frames(trajectory)
    grid = trajectory.grid
    if grid.dims != 1:
        raise ValueError("the Hamilton-Jacobi residual is defined on 1D trajectories")
    V = _scalar_field(V, grid)
    values = trajectory.values()
    n = np.abs(values) ** 2
    dt = trajectory.dt_record
    hbar, mass = units.hbar, units.mass

    residuals, masks = [], []
    for t in range(1, len(trajectory) - 1):
        before = np.angle(values[t] * np.conj(values[t - 1]))
        after = np.angle(values[t + 1] * np.conj(values[t]))
        advance = before + after
        mask = _density_mask(n[t - 1], rel_floor) & _density_mask(n[t], rel_floor) & _density_mask(n[t + 1], rel_floor)
        resolved = (np.abs(before) < MAX_PHASE_STEP) & (np.abs(after) < MAX_PHASE_STEP)
        if np.any(mask & ~resolved):
            logger.warning(f"Phase advance between frames unresolved at {int(np.sum(mask & ~resolved))} points; "
                           f"reduce the record stride")
        mask &= resolved

        safe_n = np.where(mask, n[t], 1.0)
        (j,) = _current(values[t], grid.gradient(values[t]), units)
        grad_S = mass * j / safe_n
        V_q = _quantum_potential(np.sqrt(n[t]), grid, units, mask)
        residual = hbar * advance / (2.0 * dt) + grad_S ** 2 / (2.0 * mass) + V + V_q
        if nonlinearity is not None:
            residual = residual + nonlinearity(n[t])
        residuals.append(residual)
        masks.append(mask)
    return _summarize("hamilton-jacobi", trajectory.times[1:-1], np.array(residuals), np.array(masks), grid)


def _velocity(values: np.ndarray, grid: Grid, units: UnitsConfig, mask: np.ndarray) -> Tuple[np.ndarray, ...]:
    safe = np.where(mask, values, 1.0)
    return tuple(units.hbar * np.imag(g / safe) / units.mass for g in grid.gradient(values))


def _velocity_and_gradient(values: np.ndarray, grid: Grid, units: UnitsConfig, mask: np.ndarray):
    """v and dv_i/dx_j from (hbar/m) Im(d_i d_j psi / psi - d_i psi d_j psi / psi^2)."""
    dims = grid.dims
    safe = np.where(mask, values, 1.0)
    first = grid.gradient(values)
    scale = units.hbar / units.mass
    v = tuple(scale * np.imag(g / safe) for g in first)
    dv = [[None] * dims for _ in range(dims)]
    for i in range(dims):
        for j in range(i, dims):
            second = grid.derivative(first[i], axis=j)
            dv[i][j] = dv[j][i] = scale * np.imag(second / safe - first[i] * first[j] / safe ** 2)
    return v, dv


def euler_residual(trajectory: Trajectory, V: PotentialLike = None, units: UnitsConfig = UnitsConfig(),
                   rel_floor: float = DEFAULT_REL_FLOOR, nonlinearity=None) -> ResidualReport:
    """dv/dt + (v.grad)v + grad(V + V_q + U)/m on every interior frame.

    ``nonlinearity`` is an optional state-dependent potential U(n) exposing
    ``gradient(amplitude, grid, mask)``; without it the linear Euler form is checked.
    """
    _check_frames(trajectory)
    grid = trajectory.grid
    dims = grid.dims
    grad_V = _finite_difference_gradient(_scalar_field(V, grid), grid)
    values = trajectory.values()
    n = np.abs(values) ** 2
    masks_all = [_density_mask(frame, rel_floor) for frame in n]
    dt = trajectory.dt_record
    hbar, mass = units.hbar, units.mass

    residuals, masks = [], []
    for t in range(1, len(trajectory) - 1):
        mask = masks_all[t - 1] & masks_all[t] & masks_all[t + 1]
        v_prev = _velocity(values[t - 1], grid, units, mask)
        v_next = _velocity(values[t + 1], grid, units, mask)
        v, dv = _velocity_and_gradient(values[t], grid, units, mask)

        amplitude = np.sqrt(n[t])
        safe_amp = np.where(mask, amplitude, 1.0)
        lap = grid.laplacian(amplitude)
        grad_amp = grid.gradient(amplitude)
        nonlinear = nonlinearity.gradient(amplitude, grid, mask) if nonlinearity is not None else None

        components = []
        for i in range(dims):
            grad_lap = grid.derivative(lap, axis=i)
            grad_Vq = -(hbar ** 2) / (2.0 * mass) * (grad_lap / safe_amp - lap * grad_amp[i] / safe_amp ** 2)
            force = grad_V[i] + grad_Vq
            if nonlinear is not None:
                force = force + nonlinear[i]
            advection = sum(v[j] * dv[i][j] for j in range(dims))
            components.append((v_next[i] - v_prev[i]) / (2.0 * dt) + advection + force / mass)
        residuals.append(np.stack(components))
        masks.append(mask)
    return _summarize("euler", trajectory.times[1:-1], np.array(residuals), np.array(masks), grid)
