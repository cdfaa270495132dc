"""Logarithmic nonlinear Schroedinger equation and its gausson soliton.

The nonlinear potential is U = -b ln|psi|^2, so b > 0 is the localizing
regime. With that sign the gausson

    psi = c e^{a/B} exp(-(B/4)(x - v t + d)^2) exp(i(k x - omega t))

solves the equation with B = 4 m b / hbar^2, v = hbar k / m and
A = 2 m omega / hbar - k^2 + (2 m b / hbar^2) ln c^2, a = B/2 - A. Once the
state is normalized, ln c^2 drops out of the normalization constraint, which
then fixes omega; the amplitude c e^{a/B} = (B / 2 pi)^{1/4} is the same for
every c.
"""
import logging
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Dict, Mapping, Optional, Tuple

import numpy as np

from .errors import ConfigError
from .grid import Grid, UnitsConfig
from .madelung import DEFAULT_REL_FLOOR, PotentialLike, ResidualReport, euler_residual
from .potentials import PotentialSpec, free_potential
from .solver import EvolveConfig, Trajectory, evolve
from .wavefunction import Wavefunction, norm2

logger = logging.getLogger(__name__)

LOG_CLAMP = 1.0e-30
# |b| dt / hbar above this is rejected
NONLINEAR_STABILITY_LIMIT = 0.5
NORMALIZATION_TOLERANCE = 1.0e-12
RIGIDITY_TOLERANCE = 0.01


@dataclass(frozen=True)
class GaussonParams:
    c: float
    k: float
    omega: float
    b: float
    m: float = 1.0
    d: float = 0.0
    hbar: float = 1.0

    @property
    def B(self) -> float:
        return 4.0 * self.m * self.b / self.hbar ** 2

    @property
    def A(self) -> float:
        return (2.0 * self.m * self.omega / self.hbar - self.k ** 2
                + 2.0 * self.m * self.b / self.hbar ** 2 * math.log(self.c ** 2))

    @property
    def a(self) -> float:
        return self.B / 2.0 - self.A

    @property
    def v(self) -> float:
        return self.hbar * self.k / self.m

    @property
    def amplitude(self) -> float:
        """Peak modulus c e^{a/B}."""
        return self.c * math.exp(self.a / self.B)

    @property
    def variance(self) -> float:
        """Second central moment of |psi|^2."""
        return 1.0 / self.B

    def normalization_residual(self) -> float:
        """c^2 e^{2a/B} - sqrt(B / 2 pi); zero for a normalized gausson."""
        return self.c ** 2 * math.exp(2.0 * self.a / self.B) - math.sqrt(self.B / (2.0 * math.pi))

    def to_dict(self) -> dict:
        return {"c": self.c, "k": self.k, "omega": self.omega, "b": self.b, "m": self.m, "d": self.d,
                "hbar": self.hbar, "A": self.A, "B": self.B, "a": self.a, "v": self.v}


def gausson_frequency(k: float, b: float, m: float = 1.0, hbar: float = 1.0) -> float:
    """omega fixed by normalization: (hbar/2m)[k^2 + (B/2)(1 - ln(B/2pi)/2)]."""
    B = 4.0 * m * b / hbar ** 2
    return hbar / (2.0 * m) * (k ** 2 + 0.5 * B * (1.0 - 0.5 * math.log(B / (2.0 * math.pi))))


def make_gausson(
    k: float,
    b: float,
    m: Optional[float] = None,
    units: UnitsConfig = UnitsConfig(),
    omega: Optional[float] = None,
    c: float = 1.0,
    d: float = 0.0,
) -> GaussonParams:
    """Build normalized gausson parameters; ``m`` defaults to ``units.mass``.

    ``omega`` is derived unless supplied, in which case it must satisfy the
    normalization constraint.
    """
    m = units.mass if m is None else m
    if not b > 0:
        raise ValueError(f"a localized gausson needs b > 0, got b={b}")
    if not m > 0:
        raise ValueError(f"mass must be positive, got {m}")
    if not c > 0:
        raise ValueError(f"c must be real and positive, got {c}")

    derived = gausson_frequency(k, b, m, units.hbar)
    params = GaussonParams(c, k, derived if omega is None else float(omega), b, m, d, units.hbar)
    residual = params.normalization_residual()
    scale = math.sqrt(params.B / (2.0 * math.pi))
    if abs(residual) > NORMALIZATION_TOLERANCE * scale:
        raise ValueError(
            f"omega={omega} is inconsistent with a normalized gausson: normalization residual "
            f"{residual:.3e}; the consistent value is omega={derived!r}")
    return params


def gausson_value(x, t: float, p: GaussonParams):
    xi = np.asarray(x) - p.v * t + p.d
    return p.amplitude * np.exp(-0.25 * p.B * xi ** 2) * np.exp(1j * (p.k * np.asarray(x) - p.omega * t))


def gausson_envelope(xi, p: GaussonParams, width_scale: float = 1.0):
    """Real envelope G(xi) = e^{a/B} exp(-(B/4) xi^2); ``width_scale`` stretches it."""
    xi = np.asarray(xi, dtype=float) / width_scale
    return math.exp(p.a / p.B) * np.exp(-0.25 * p.B * xi ** 2)


def gausson_wavefunction(grid: Grid, p: GaussonParams, t: float = 0.0) -> Wavefunction:
    if grid.dims != 1:
        raise ValueError("the gausson is a 1D solution")
    values = gausson_value(grid.axes[0].coordinates, t, p)
    return Wavefunction(values, grid, t, {"kind": "gausson", "b": p.b, "k": p.k, "omega": p.omega})


def ode_residual_G(p: GaussonParams, grid: Grid, envelope: Optional[np.ndarray] = None) -> float:
    """max |G'' + A G + B ln(G) G| over interior points where G > 1e-15.

    G'' uses a fourth-order central difference; the default envelope is the
    closed form centred at the origin.
    """
    if grid.dims != 1:
        raise ValueError("the envelope equation is 1D")
    h = grid.spacings[0]
    G = gausson_envelope(grid.axes[0].coordinates, p) if envelope is None else np.asarray(envelope, float)
    second = (-G[4:] + 16.0 * G[3:-1] - 30.0 * G[2:-2] + 16.0 * G[1:-3] - G[:-4]) / (12.0 * h ** 2)
    interior = G[2:-2]
    valid = interior > 1e-15
    if not np.any(valid):
        raise ValueError("envelope vanishes on the whole grid")
    g = interior[valid]
    residual = second[valid] + p.A * g + p.B * np.log(g) * g
    return float(np.max(np.abs(residual)))


def delta_m_density(xi, m: float, b: float, units: UnitsConfig = UnitsConfig()):
    """sqrt(m alpha / pi) exp(-alpha m xi^2) with alpha = 2 b / hbar^2."""
    if not m > 0 or not b > 0:
        raise ValueError(f"delta_m needs m > 0 and b > 0, got m={m}, b={b}")
    alpha = 2.0 * b / units.hbar ** 2
    return math.sqrt(m * alpha / math.pi) * np.exp(-alpha * m * np.asarray(xi, dtype=float) ** 2)


class LogNonlinearity:
    """U(n) = -b ln(max(n, clamp)) as a state-dependent potential."""

    def __init__(self, b: float, clamp: float = LOG_CLAMP):
        if not clamp > 0:
            raise ValueError("the log clamp must be positive")
        self.b = float(b)
        self.clamp = clamp

    def __call__(self, density: np.ndarray) -> np.ndarray:
        return -self.b * np.log(np.maximum(density, self.clamp))

    def gradient(self, amplitude: np.ndarray, grid: Grid, mask: np.ndarray) -> Tuple[np.ndarray, ...]:
        """grad U = -b grad(n)/n = -2b grad(sqrt n)/sqrt n."""
        safe = np.where(mask, amplitude, 1.0)
        return tuple(-2.0 * self.b * g / safe for g in grid.gradient(amplitude))

    def __repr__(self) -> str:
        return f"LogNonlinearity(b={self.b}, clamp={self.clamp})"


def evolve_lognls(
    psi0: Wavefunction,
    b: float,
    V: Optional[PotentialSpec],
    cfg: EvolveConfig,
    units: UnitsConfig = UnitsConfig(),
    clamp: float = LOG_CLAMP,
    progress_callback: Optional[Callable[[int, int], None]] = None,
) -> Trajectory:
    """Split-operator evolution with the extra potential -b ln|psi|^2."""
    if abs(norm2(psi0) - 1.0) > 1e-6:
        raise ValueError(f"the log nonlinearity is not scale invariant; psi0 must be normalized "
                         f"(norm {norm2(psi0):.8g})")
    ratio = abs(b) * cfg.dt / units.hbar
    if ratio > NONLINEAR_STABILITY_LIMIT:
        raise ConfigError(f"|b| dt / hbar = {ratio:.3g} exceeds {NONLINEAR_STABILITY_LIMIT}; reduce dt or |b|")
    if psi0.grid.dims != 1:
        logger.info("Running the log nonlinearity on a 2D grid; no analytic reference applies")
    pot = free_potential(psi0.grid) if V is None else V
    nonlinearity = LogNonlinearity(b, clamp) if b != 0 else None
    trajectory = evolve(psi0, pot, cfg, units, nonlinearity, progress_callback)
    return Trajectory(trajectory.frames, trajectory.dt_record,
                      {**trajectory.metadata, "b": b, "clamp": clamp})


def lognls_hydro_residual(
    trajectory: Trajectory,
    b: float,
    V: PotentialLike = None,
    units: UnitsConfig = UnitsConfig(),
    include_log: bool = True,
    rel_floor: float = DEFAULT_REL_FLOOR,
) -> ResidualReport:
    """Euler residual with the gradient of the log potential; ``include_log=False`` drops it.

    Written in mass density rho = m n the log argument is (rho/m) = n, so
    the same residual covers both forms.
    """
    nonlinearity = LogNonlinearity(b) if include_log else None
    report = euler_residual(trajectory, V, units, rel_floor, nonlinearity)
    name = "lognls-euler" if include_log else "lognls-euler-without-log"
    return ResidualReport(name, report.times, report.field, report.mask, report.summary)


@dataclass(frozen=True, eq=False)
class RigidityReport:
    times: np.ndarray
    centroids: np.ndarray
    second_moments: np.ndarray
    l2_errors: np.ndarray
    expected_speed: float
    metadata: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "metadata", MappingProxyType(dict(self.metadata)))

    @property
    def centroid_speed(self) -> float:
        slope, _ = np.polyfit(self.times, self.centroids, 1)
        return float(slope)

    @property
    def speed_error(self) -> float:
        if self.expected_speed == 0:
            return abs(self.centroid_speed)
        return abs(self.centroid_speed - self.expected_speed) / abs(self.expected_speed)

    @property
    def moment_drift(self) -> float:
        return float(np.max(np.abs(self.second_moments / self.second_moments[0] - 1.0)))

    @property
    def width_growth(self) -> float:
        """Final over initial width, sqrt of the second-moment ratio."""
        return float(math.sqrt(self.second_moments[-1] / self.second_moments[0]))

    @property
    def max_l2_error(self) -> float:
        return float(np.max(self.l2_errors))

    @property
    def rigid(self) -> bool:
        return self.moment_drift < RIGIDITY_TOLERANCE

    @property
    def monotonic_growth(self) -> bool:
        return bool(np.all(np.diff(self.second_moments) > 0))

    def to_columns(self) -> Dict[str, np.ndarray]:
        return {"t": self.times, "centroid": self.centroids, "second_moment": self.second_moments,
                "L2_error_vs_analytic": self.l2_errors}

    def to_dict(self) -> dict:
        return {
            "centroid_speed": self.centroid_speed,
            "expected_speed": self.expected_speed,
            "speed_error": self.speed_error,
            "moment_drift": self.moment_drift,
            "width_growth": self.width_growth,
            "max_l2_error": self.max_l2_error,
            "rigid": self.rigid,
            "monotonic_growth": self.monotonic_growth,
            **self.metadata,
        }


def rigidity_report(trajectory: Trajectory, p: GaussonParams) -> RigidityReport:
    """Compare recorded densities against the translating analytic gausson ``p``."""
    grid = trajectory.grid
    if grid.dims != 1:
        raise ValueError("rigidity is measured on 1D trajectories")
    x = grid.axes[0].coordinates
    h = grid.spacings[0]
    errors = []
    for frame in trajectory.frames:
        exact = np.abs(gausson_value(x, frame.time, p)) ** 2
        errors.append(math.sqrt(np.sum((frame.density() - exact) ** 2) * h))
    report = RigidityReport(
        trajectory.times, trajectory.centroids(0), trajectory.second_moments(0), np.array(errors), p.v,
        {"b": trajectory.metadata.get("b", p.b)})
    logger.info(f"Gausson rigidity: speed {report.centroid_speed:.6g} (expected {p.v:.6g}), "
                f"moment drift {report.moment_drift:.2e}, max L2 error {report.max_l2_error:.2e}")
    return report
