"""Closed-form two-slit intensities, magnetic phases and loop-flux quadrature.

Two phase conventions are exposed. ``HALF`` assigns pi*d/lambda to a
path of length d; ``STANDARD`` uses the action phase 2*pi*d/lambda, which is
what the time-dependent solver reproduces. All magnetic terms enter as
e*Phi/hbar.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Sequence, Tuple, Union

import numpy as np

from .grid import UnitsConfig

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

MIN_LOOP_SEGMENTS = 16


class PhaseConvention(str, Enum):
    HALF = "half"
    STANDARD = "standard"

    @property
    def cycles_per_wavelength(self) -> float:
        """Phase per unit length, in units of pi/lambda."""
        return 1.0 if self is PhaseConvention.HALF else 2.0


@dataclass(frozen=True)
class SlitGeometry:
    L: float
    delta: float
    d0: float
    wavelength: float
    I0: float = 1.0
    convention: PhaseConvention = PhaseConvention.HALF

    def __post_init__(self):
        object.__setattr__(self, "convention", PhaseConvention(self.convention))
        if self.L <= 0 or self.delta <= 0 or self.wavelength <= 0:
            raise ValueError("L, delta and wavelength must be positive")
        if self.I0 < 0:
            raise ValueError(f"I0 must be non-negative, got {self.I0}")
        if self.delta >= self.L:
            raise ValueError(f"slit separation {self.delta} must be smaller than L={self.L}")
        if self.d0 < self.delta / 2:
            raise ValueError(f"source distance d0={self.d0} cannot be shorter than delta/2")

    @property
    def phase_per_length(self) -> float:
        return self.convention.cycles_per_wavelength * math.pi / self.wavelength

    def with_convention(self, convention: Union[str, PhaseConvention]) -> "SlitGeometry":
        return SlitGeometry(self.L, self.delta, self.d0, self.wavelength, self.I0, PhaseConvention(convention))


@dataclass(frozen=True)
class SolenoidSpec:
    radius: float
    field: float
    center: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"solenoid radius must be positive, got {self.radius}")

    @property
    def flux(self) -> float:
        return self.field * math.pi * self.radius ** 2


@dataclass(frozen=True)
class UniformField:
    """Homogeneous B_z in the symmetric gauge A = B/2 * (-y, x)."""

    field: float


class PathLengths(NamedTuple):
    d1: float
    d2: float
    d1_approx: float
    d2_approx: float
    sin_theta: float


class CurlEstimate(NamedTuple):
    value: float
    reliable: bool


# --- two-slit geometry -------------------------------------------------------

def path_lengths(geom: SlitGeometry, s: ArrayLike) -> PathLengths:
    """Exact and first-order path lengths from the slits to screen point s."""
    s = np.asarray(s, dtype=float)
    half = geom.delta / 2
    d1 = np.sqrt(geom.L ** 2 + (s - half) ** 2)
    d2 = np.sqrt(geom.L ** 2 + (s + half) ** 2)
    axial = np.sqrt(geom.L ** 2 + s ** 2)
    sin_theta = s / axial
    return PathLengths(d1, d2, axial - half * sin_theta, axial + half * sin_theta, sin_theta)


def path_phase(geom: SlitGeometry, branch: int, s: float, line_integral_A: float,
               units: UnitsConfig = UnitsConfig()) -> complex:
    """Phase factor accumulated along source -> slit ``branch`` -> screen point s."""
    if branch not in (1, 2):
        raise ValueError(f"branch must be 1 or 2, got {branch}")
    lengths = path_lengths(geom, s)
    d = lengths.d1 if branch == 1 else lengths.d2
    phase = geom.phase_per_length * (geom.d0 + float(d)) + units.charge * line_integral_A / units.hbar
    return complex(np.exp(1j * phase))


def superpose_two_path(I0: ArrayLike, delta_phase: ArrayLike) -> ArrayLike:
    """|1 + e^{i delta}|^2 * I0 written as 4 I0 cos^2(delta/2)."""
    if np.any(np.asarray(I0) < 0):
        raise ValueError("I0 must be non-negative")
    return 4.0 * np.asarray(I0) * np.cos(np.asarray(delta_phase) / 2.0) ** 2


def _geometric_argument(theta: ArrayLike, geom: SlitGeometry) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if np.any(np.abs(theta) >= math.pi / 2):
        raise ValueError("|theta| must be below pi/2")
    return geom.phase_per_length * geom.delta * np.sin(theta) / 2.0


def _intensity(theta: ArrayLike, geom: SlitGeometry, magnetic_phase: float) -> ArrayLike:
    argument = _geometric_argument(theta, geom) + magnetic_phase / 2.0
    result = 4.0 * geom.I0 * np.cos(argument) ** 2
    return float(result) if np.ndim(result) == 0 else result


def two_slit_intensity(theta: ArrayLike, geom: SlitGeometry) -> ArrayLike:
    return _intensity(theta, geom, 0.0)


def magnetic_shift_intensity(theta: ArrayLike, geom: SlitGeometry, B: float, S_area: float,
                             units: UnitsConfig = UnitsConfig()) -> ArrayLike:
    """Pattern shifted by the flux B*S_area threading the two-path circuit."""
    if S_area < 0:
        raise ValueError(f"S_area must be non-negative, got {S_area}")
    return _intensity(theta, geom, units.charge * B * S_area / units.hbar)


def ab_intensity(theta: ArrayLike, geom: SlitGeometry, spec: SolenoidSpec,
                 units: UnitsConfig = UnitsConfig()) -> ArrayLike:
    """Pattern shifted by the solenoid flux B*pi*R^2."""
    return _intensity(theta, geom, units.charge * spec.flux / units.hbar)


def combined_intensity(theta: ArrayLike, geom: SlitGeometry, spec: SolenoidSpec, B_ext: float,
                       S_area: float, units: UnitsConfig = UnitsConfig()) -> ArrayLike:
    if S_area < 0:
        raise ValueError(f"S_area must be non-negative, got {S_area}")
    flux = spec.flux + B_ext * S_area
    return _intensity(theta, geom, units.charge * flux / units.hbar)


def predict_fringe_shift(geom: SlitGeometry, total_phase_shift: float) -> float:
    """Screen displacement that cancels a relative phase shift (small angles)."""
    return -total_phase_shift * geom.wavelength * geom.L / (
        geom.convention.cycles_per_wavelength * math.pi * geom.delta)


def fringe_spacing(geom: SlitGeometry) -> float:
    """Distance between neighbouring maxima on the screen (small angles)."""
    return 2.0 * geom.wavelength * geom.L / (geom.convention.cycles_per_wavelength * geom.delta)


def circuit_area(geom: SlitGeometry, s: float = 0.0, include_source: bool = True) -> float:
    """Area of the circuit S A2 P A1 (or of A2 P A1 when ``include_source`` is False).

    Slits sit at x = 0, y = +-delta/2; the source on the axis at distance d0
    from either slit; the screen point P at (L, s).
    """
    half = geom.delta / 2
    slit_upper, slit_lower = (0.0, half), (0.0, -half)
    screen = (geom.L, s)
    if include_source:
        source = (-math.sqrt(geom.d0 ** 2 - half ** 2), 0.0)
        vertices = [source, slit_lower, screen, slit_upper]
    else:
        vertices = [slit_lower, screen, slit_upper]
    return abs(_shoelace(np.array(vertices)))


# --- solenoid and loop integrals ---------------------------------------------

def solenoid_A(r: ArrayLike, spec: SolenoidSpec) -> ArrayLike:
    """Azimuthal vector potential of an infinite solenoid."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("radius must be non-negative")
    R, B = spec.radius, spec.field
    outside = np.divide(B * R ** 2, 2.0 * r, out=np.zeros_like(r), where=r >= R)
    result = np.where(r < R, B * r / 2.0, outside)
    return float(result) if result.ndim == 0 else result


def solenoid_A_cartesian(x: ArrayLike, y: ArrayLike, spec: SolenoidSpec) -> Tuple[np.ndarray, np.ndarray]:
    """Cartesian (A_x, A_y) of the solenoid potential."""
    dx = np.asarray(x, dtype=float) - spec.center[0]
    dy = np.asarray(y, dtype=float) - spec.center[1]
    r2 = dx ** 2 + dy ** 2
    R2 = spec.radius ** 2
    # A_phi / r: B/2 inside, B R^2 / (2 r^2) outside
    scale = np.where(r2 < R2, spec.field / 2.0,
                     np.divide(spec.field * R2, 2.0 * r2, out=np.zeros_like(r2), where=r2 >= R2))
    return -scale * dy, scale * dx


def _vector_potential(source: Union[SolenoidSpec, UniformField], x, y):
    if isinstance(source, SolenoidSpec):
        return solenoid_A_cartesian(x, y, source)
    x, y = np.asarray(x, float), np.asarray(y, float)
    return -source.field * y / 2.0, source.field * x / 2.0


def curl_A_z(point: Sequence[float], spec: SolenoidSpec, h: float) -> CurlEstimate:
    """Central-difference curl of the solenoid potential at ``point``."""
    if h <= 0:
        raise ValueError(f"h must be positive, got {h}")
    x, y = float(point[0]), float(point[1])
    _, ay_plus = solenoid_A_cartesian(x + h, y, spec)
    _, ay_minus = solenoid_A_cartesian(x - h, y, spec)
    ax_plus, _ = solenoid_A_cartesian(x, y + h, spec)
    ax_minus, _ = solenoid_A_cartesian(x, y - h, spec)
    value = float((ay_plus - ay_minus) / (2 * h) - (ax_plus - ax_minus) / (2 * h))
    r = math.hypot(x - spec.center[0], y - spec.center[1])
    reliable = abs(r - spec.radius) > math.sqrt(2.0) * h
    if not reliable:
        logger.warning(f"curl at r={r:.6g} is within the stencil of the solenoid wall r={spec.radius}")
    return CurlEstimate(value, reliable)


@dataclass(frozen=True, eq=False)
class LoopPath:
    """Closed polyline; ``points[0]`` must equal ``points[-1]``."""

    points: np.ndarray

    def __post_init__(self):
        points = np.array(self.points, dtype=float)
        if points.ndim != 2 or points.shape[1] != 2:
            raise ValueError(f"loop points must have shape (N, 2), got {points.shape}")
        if not np.array_equal(points[0], points[-1]):
            raise ValueError("loop is open: first point must equal last point")
        if len(points) - 1 < MIN_LOOP_SEGMENTS:
            raise ValueError(f"loop needs at least {MIN_LOOP_SEGMENTS} segments, got {len(points) - 1}")
        points.flags.writeable = False
        object.__setattr__(self, "points", points)

    @property
    def segments(self) -> int:
        return len(self.points) - 1

    @property
    def counterclockwise(self) -> bool:
        return _shoelace(self.points[:-1]) > 0

    @property
    def signed_area(self) -> float:
        return _shoelace(self.points[:-1])

    def reversed(self) -> "LoopPath":
        return LoopPath(self.points[::-1])


def _shoelace(vertices: np.ndarray) -> float:
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def circle_loop(center: Sequence[float], radius: float, segments: int = 4096) -> LoopPath:
    """Counterclockwise regular polygon inscribed in a circle."""
    angles = 2.0 * np.pi * np.arange(segments) / segments
    points = np.column_stack([center[0] + radius * np.cos(angles), center[1] + radius * np.sin(angles)])
    return LoopPath(np.vstack([points, points[:1]]))


def polygon_loop(vertices: Sequence[Sequence[float]], per_edge: int = 64) -> LoopPath:
    """Closed polygon with every edge split into ``per_edge`` equal segments."""
    vertices = np.asarray(vertices, dtype=float)
    closed = np.vstack([vertices, vertices[:1]])
    t = np.arange(per_edge)[:, None] / per_edge
    pieces = [start + t * (end - start) for start, end in zip(closed[:-1], closed[1:])]
    points = np.vstack(pieces)
    return LoopPath(np.vstack([points, points[:1]]))


def loop_flux(source: Union[SolenoidSpec, UniformField], loop: LoopPath) -> float:
    """Composite-midpoint line integral of A around ``loop``."""
    start, end = loop.points[:-1], loop.points[1:]
    mid = 0.5 * (start + end)
    step = end - start
    ax, ay = _vector_potential(source, mid[:, 0], mid[:, 1])
    return float(np.sum(ax * step[:, 0] + ay * step[:, 1]))
