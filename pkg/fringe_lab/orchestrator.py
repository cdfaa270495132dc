"""Scenario orchestration: builds states and potentials, fans out runs, records verdicts."""
import asyncio
import logging
import math
import platform
import time
from dataclasses import replace
from datetime import datetime, timezone
from typing import Any, Callable, Dict, Optional

import numpy as np
import scipy
from scipy import fft

from . import __version__
from .artifacts import ArtifactWriter
from .config import LabConfig
from .errors import ConfigError
from .fringe import (
    PhaseConvention,
    SlitGeometry,
    SolenoidSpec,
    ab_intensity,
    circuit_area,
    combined_intensity,
    fringe_spacing,
    magnetic_shift_intensity,
    predict_fringe_shift,
    two_slit_intensity,
)
from .grid import Grid
from .lognls import (
    evolve_lognls,
    gausson_envelope,
    gausson_wavefunction,
    lognls_hydro_residual,
    make_gausson,
    ode_residual_G,
    rigidity_report,
)
from .madelung import continuity_residual, decompose, euler_residual, hj_residual
from .potentials import (
    PotentialSpec,
    double_slit_barrier,
    free_potential,
    harmonic_potential,
    landau_vector_potential,
    solenoid_core,
    solenoid_vector_potential,
)
from .report import VerdictReport
from .scenario import GridSection, ScenarioConfig
from .solver import (
    EvolveConfig,
    ScreenAccumulator,
    ScreenPattern,
    Trajectory,
    evolve,
    fringe_shift_measure,
    measure_fringe_spacing,
)
from .wavefunction import Wavefunction, gaussian_packet, norm2

logger = logging.getLogger(__name__)

# label, completed steps, total steps
ProgressCallback = Callable[[str, int, int], None]

SPACING_TOLERANCE = 0.05
SHIFT_TOLERANCE = 0.10
TOPOLOGY_TOLERANCE = 0.02
RESIDUAL_ORDER_TOLERANCE = 0.5
GAUSSON_SPEED_TOLERANCE = 1e-3
GAUSSON_L2_TOLERANCE = 1e-3
CONTROL_GROWTH = 1.2


class ExperimentOrchestrator:
    """Runs the named scenarios of one invocation and writes their artifacts."""

    def __init__(
        self,
        scenario: ScenarioConfig,
        writer: ArtifactWriter,
        report: Optional[VerdictReport] = None,
        lab: Optional[LabConfig] = None,
        convention: Optional[str] = None,
        semaphore: Optional[asyncio.Semaphore] = None,
    ):
        self.scenario = scenario
        self.writer = writer
        self.lab = lab or LabConfig()
        self.report = report or VerdictReport(scenario.scenario, writer.digest)
        self.units = scenario.units.build()
        self.convention = PhaseConvention(
            convention or scenario.geometry.convention or self.lab.default_convention)
        # sub-orchestrators of a suite share the parent's bound on concurrent jobs
        self._semaphore = semaphore if semaphore is not None else asyncio.Semaphore(self.lab.sweep_workers)

    # --- job plumbing ----------------------------------------------------------

    async def _in_thread(self, fn: Callable, *args, **kwargs):
        """Runs ``fn`` in a worker thread, bounded by ``sweep_workers``."""
        def job():
            with fft.set_workers(self.lab.fft_workers):
                return fn(*args, **kwargs)

        async with self._semaphore:
            return await asyncio.to_thread(job)

    @staticmethod
    def _bind(progress_callback: Optional[ProgressCallback], label: str) -> Optional[Callable[[int, int], None]]:
        if progress_callback is None:
            return None
        return lambda step, total: progress_callback(label, step, total)

    async def _evolve(self, label: str, psi0: Wavefunction, pot: PotentialSpec, cfg: EvolveConfig,
                      progress_callback: Optional[ProgressCallback],
                      on_record: Optional[Callable[[Wavefunction], None]] = None) -> Trajectory:
        logger.info(f"[{label}] {cfg.n_steps} steps on {psi0.grid.shape} ({pot.label})")
        return await self._in_thread(evolve, psi0, pot, cfg, self.units, None, self._bind(progress_callback, label),
                                     on_record)

    def _geometry(self, convention: Optional[PhaseConvention] = None) -> SlitGeometry:
        return self.scenario.slit_geometry(convention or self.convention)

    def _packet(self, grid: Grid) -> Wavefunction:
        p = self.scenario.packet
        return gaussian_packet(grid, p.x0, p.k0, p.sigma)

    def _barrier(self, grid: Grid) -> PotentialSpec:
        g = self.scenario.geometry
        return double_slit_barrier(grid, g.barrier_x, g.barrier_thickness, g.delta, g.slit_width,
                                   g.wall_height, g.edge_cells, g.open_slits)

    async def _screen_run(self, label: str, grid: Grid, pot: PotentialSpec,
                          progress_callback: Optional[ProgressCallback]) -> ScreenPattern:
        cfg = replace(self.scenario.evolve_config(), keep_frames=False)
        screen = ScreenAccumulator(grid, cfg.x_screen, cfg.dt * cfg.record_stride)
        trajectory = await self._evolve(label, self._packet(grid), pot, cfg, progress_callback, screen.add)
        pattern = screen.pattern(trajectory.metadata)
        if self.scenario.output.wavefunctions:
            self.writer.wavefunction(f"{label}_final", trajectory.final, self.units)
        return pattern

    # --- fringe ----------------------------------------------------------------

    def _pattern_columns(self, theta: np.ndarray) -> Dict[str, np.ndarray]:
        fields = self.scenario.fields
        half = self._geometry(PhaseConvention.HALF)
        standard = self._geometry(PhaseConvention.STANDARD)
        columns = {
            "theta": theta,
            "sin_theta": np.sin(theta),
            "s": half.L * np.tan(theta),
            "intensity_half": two_slit_intensity(theta, half),
            "intensity_standard": two_slit_intensity(theta, standard),
        }
        spec = fields.solenoid.build() if fields.solenoid is not None else None
        if spec is not None:
            columns["ab_half"] = ab_intensity(theta, half, spec, self.units)
            columns["ab_standard"] = ab_intensity(theta, standard, spec, self.units)
        if fields.B_ext != 0:
            area = circuit_area(half, 0.0, include_source=True)
            columns["field_half"] = magnetic_shift_intensity(theta, half, fields.B_ext, area, self.units)
            columns["field_standard"] = magnetic_shift_intensity(theta, standard, fields.B_ext, area, self.units)
            if spec is not None:
                columns["combined_half"] = combined_intensity(theta, half, spec, fields.B_ext, area, self.units)
                columns["combined_standard"] = combined_intensity(theta, standard, spec, fields.B_ext, area,
                                                                  self.units)
        return columns

    async def run_fringe(self, progress_callback: Optional[ProgressCallback] = None, prefix: str = "") -> dict:
        """Analytic patterns under both conventions plus the flux-periodicity sweep."""
        g = self.scenario.geometry
        theta = np.linspace(-g.theta_max, g.theta_max, g.theta_points)
        columns = self._pattern_columns(theta)
        geom = self._geometry()
        self.writer.table(f"{prefix}fringe_pattern", columns, convention=self.convention.value,
                          L=geom.L, delta=geom.delta, d0=geom.d0, wavelength=geom.wavelength, I0=geom.I0)
        self.writer.plot(f"{prefix}fringe_pattern", {
            "half": (columns["sin_theta"], columns["intensity_half"]),
            "standard": (columns["sin_theta"], columns["intensity_standard"]),
        }, title="two-slit intensity vs sin(theta)")

        center = theta.size // 2
        summary = {
            "central_intensity": float(columns[f"intensity_{self.convention.value}"][center]),
            "spacing_half": fringe_spacing(self._geometry(PhaseConvention.HALF)),
            "spacing_standard": fringe_spacing(self._geometry(PhaseConvention.STANDARD)),
        }
        if "ab_standard" in columns:
            summary["ab_central_intensity"] = float(columns[f"ab_{self.convention.value}"][center])

        sweep = self.scenario.fields.flux_sweep
        if sweep is not None:
            fluxes = np.linspace(sweep.start, sweep.stop, sweep.steps)
            radius = self.scenario.fields.solenoid.radius if self.scenario.fields.solenoid else 1.0
            specs = [SolenoidSpec(radius, flux / (math.pi * radius ** 2)) for flux in fluxes]
            rows = await asyncio.gather(*(self._in_thread(ab_intensity, theta, geom, spec, self.units)
                                          for spec in specs))
            if progress_callback:
                progress_callback("flux sweep", len(rows), len(rows))
            self.writer.table(f"{prefix}flux_sweep", {
                "flux_index": np.repeat(np.arange(fluxes.size), theta.size),
                "flux": np.repeat(fluxes, theta.size),
                "theta": np.tile(theta, fluxes.size),
                "intensity": np.concatenate(rows),
            }, convention=self.convention.value)
            quantum = 2.0 * math.pi * self.units.hbar / self.units.charge
            periods = (sweep.stop - sweep.start) / quantum
            if abs(periods - round(periods)) < 1e-9 and round(periods) > 0:
                self.report.record_check(f"{prefix}flux_periodicity", float(np.max(np.abs(rows[-1] - rows[0]))),
                                         0.0, 1e-12, relative=False)

        for key, value in summary.items():
            self.report.record_value(f"{prefix}{key}", value)
        return summary

    # --- 2D runs ---------------------------------------------------------------

    async def run_evolve2d(self, progress_callback: Optional[ProgressCallback] = None, prefix: str = "") -> dict:
        """Double-slit run; with ``B_ext`` a Landau-gauge run is compared against a field-free one."""
        grid = self.scenario.grid.build()
        barrier = self._barrier(grid)
        B_ext = self.scenario.fields.B_ext
        g = self.scenario.geometry

        jobs = [self._screen_run(f"{prefix}double_slit", grid, barrier, progress_callback)]
        if B_ext != 0:
            field = landau_vector_potential(grid, B_ext, x_range=(g.barrier_x, g.screen_x))
            jobs.append(self._screen_run(f"{prefix}uniform_field", grid, barrier.combine(field), progress_callback))
        patterns = await asyncio.gather(*jobs)
        pattern = patterns[0]

        columns = {"s": pattern.s, "intensity": pattern.intensity}
        if B_ext != 0:
            columns["intensity_field"] = patterns[1].intensity
        self.writer.table(f"{prefix}screen_pattern", columns, x_screen=pattern.x_screen)
        self.writer.plot(f"{prefix}screen_pattern", {"B=0": (pattern.s, pattern.intensity)},
                         title="time-integrated screen density")

        standard = self._geometry(PhaseConvention.STANDARD)
        half = self._geometry(PhaseConvention.HALF)
        summary: Dict[str, Any] = {
            "predicted_spacing_standard": fringe_spacing(standard),
            "predicted_spacing_half": fringe_spacing(half),
        }
        try:
            measured = measure_fringe_spacing(pattern)
        except ValueError as e:
            logger.warning(f"Could not measure a fringe spacing: {e}")
            measured = float("nan")
        summary["measured_spacing"] = measured
        summary["half_to_measured_ratio"] = summary["predicted_spacing_half"] / measured
        self.report.record_check(f"{prefix}spacing_matches_standard", measured, fringe_spacing(standard),
                                 SPACING_TOLERANCE, note="fringe spacing vs lambda L / delta")

        if B_ext != 0:
            area = circuit_area(standard, 0.0, include_source=False)
            predicted = predict_fringe_shift(standard, self.units.charge * B_ext * area / self.units.hbar)
            shift = fringe_shift_measure(patterns[1], pattern)
            summary.update(uniform_field_shift=shift, uniform_field_predicted=predicted)
            self.report.record_check(f"{prefix}uniform_field_shift", abs(shift), abs(predicted), SHIFT_TOLERANCE,
                                     note="Landau gauge vs e B S_area")

        for key, value in summary.items():
            self.report.record_value(f"{prefix}{key}", value)
        return summary

    async def run_ab(self, progress_callback: Optional[ProgressCallback] = None, prefix: str = "") -> dict:
        """Solenoid runs at one or two radii of equal flux against a masked-core reference."""
        fields = self.scenario.fields
        if fields.solenoid is None:
            raise ConfigError("the ab scenario needs a fields.solenoid section")
        g = self.scenario.geometry
        grid = self.scenario.grid.build()
        barrier = self._barrier(grid)

        specs = [fields.solenoid.build()]
        if fields.alternate_radius is not None:
            specs.append(fields.solenoid.build(fields.alternate_radius))
        for spec in specs:
            self._check_solenoid_placement(spec)

        # the reference keeps the core wall so only the flux differs
        jobs = [self._screen_run(f"{prefix}reference_R{i}", grid,
                                 barrier.combine(solenoid_core(grid, spec, g.wall_height, g.edge_cells)),
                                 progress_callback)
                for i, spec in enumerate(specs)]
        jobs += [self._screen_run(f"{prefix}solenoid_R{i}", grid,
                                  barrier.combine(solenoid_vector_potential(grid, spec, g.wall_height, g.edge_cells)),
                                  progress_callback)
                 for i, spec in enumerate(specs)]
        patterns = await asyncio.gather(*jobs)
        references, shifted = patterns[:len(specs)], patterns[len(specs):]

        standard = self._geometry(PhaseConvention.STANDARD)
        columns = {"s": references[0].s}
        summary: Dict[str, Any] = {}
        shifts = []
        for i, (spec, reference, pattern) in enumerate(zip(specs, references, shifted)):
            phase = self.units.charge * spec.flux / self.units.hbar
            predicted = predict_fringe_shift(standard, phase)
            shift = fringe_shift_measure(pattern, reference)
            shifts.append(shift)
            columns[f"reference_R{i}"] = reference.intensity
            columns[f"solenoid_R{i}"] = pattern.intensity
            summary[f"shift_R{i}"] = shift
            summary[f"predicted_R{i}"] = predicted
            summary[f"radius_R{i}"] = spec.radius
            # half-period shifts are sign-ambiguous
            self.report.record_check(f"{prefix}ab_shift_R{i}", abs(shift), abs(predicted), SHIFT_TOLERANCE,
                                     note=f"R={spec.radius:g}, flux={spec.flux:.6g}")

        if len(shifts) == 2:
            # shifts are defined modulo one fringe period
            period = fringe_spacing(standard)
            difference = (shifts[1] - shifts[0] + period / 2) % period - period / 2
            summary["topology_change"] = abs(difference) / abs(shifts[0])
            self.report.record_check(f"{prefix}ab_topological_invariance", abs(shifts[0] + difference),
                                     abs(shifts[0]), TOPOLOGY_TOLERANCE, note="equal flux, different radius")

        self.writer.table(f"{prefix}ab_patterns", columns, flux=specs[0].flux, x_screen=g.screen_x)
        self.writer.plot(f"{prefix}ab_patterns", {
            "reference": (references[0].s, references[0].intensity),
            "solenoid": (shifted[0].s, shifted[0].intensity),
        }, title="screen density with and without enclosed flux")
        for key, value in summary.items():
            self.report.record_value(f"{prefix}{key}", value)
        return summary

    def _check_solenoid_placement(self, spec: SolenoidSpec):
        g = self.scenario.geometry
        cx, cy = spec.center
        if not (g.barrier_x + g.barrier_thickness / 2 < cx - spec.radius and cx + spec.radius < g.screen_x):
            raise ConfigError("the solenoid must sit between the barrier and the screen")
        if abs(cy) + spec.radius >= g.delta / 2 - g.slit_width / 2:
            raise ConfigError("the solenoid must sit between the two slits")

    # --- 1D diagnostics --------------------------------------------------------

    def _potential(self, grid: Grid) -> PotentialSpec:
        omega = self.scenario.fields.harmonic_omega
        if omega is None:
            return free_potential(grid)
        return harmonic_potential(grid, omega, self.units.mass)

    def _residuals(self, trajectory: Trajectory, pot: PotentialSpec) -> Dict[str, float]:
        summaries = {
            "continuity": continuity_residual(trajectory, self.units).summary,
            "euler": euler_residual(trajectory, pot, self.units).summary,
        }
        if trajectory.grid.dims == 1:
            summaries["hamilton_jacobi"] = hj_residual(trajectory, pot, self.units).summary
        return summaries

    async def run_madelung(self, progress_callback: Optional[ProgressCallback] = None, prefix: str = "") -> dict:
        """Hydrodynamic fields of the final state and residuals, optionally under dt and h refinement."""
        grid = self.scenario.grid.build()
        pot = self._potential(grid)
        cfg = self.scenario.evolve_config()
        trajectory = await self._evolve(f"{prefix}madelung", self._packet(grid), pot, cfg, progress_callback)

        fields = decompose(trajectory.final, self.units)
        self.writer.table(f"{prefix}hydro_fields", fields.to_columns(), time=fields.time)
        residuals = self._residuals(trajectory, pot)
        summary: Dict[str, Any] = {f"{name}_residual": value for name, value in residuals.items()}

        if self.scenario.evolve.refinement_check:
            fine_grid = self._refined_grid()
            fine_pot = self._potential(fine_grid)
            fine_cfg = self.scenario.evolve_config(dt_scale=0.5)
            fine = await self._evolve(f"{prefix}madelung_refined", self._packet(fine_grid), fine_pot, fine_cfg,
                                      progress_callback)
            fine_residuals = self._residuals(fine, fine_pot)
            for name, coarse in residuals.items():
                ratio = coarse / fine_residuals[name]
                summary[f"{name}_residual_refined"] = fine_residuals[name]
                summary[f"{name}_ratio"] = ratio
                self.report.record_check(f"{prefix}{name}_order", ratio, 4.0, RESIDUAL_ORDER_TOLERANCE,
                                         relative=False, note="residual ratio under dt, h halving")

        self.writer.json(f"{prefix}residuals", summary)
        for key, value in summary.items():
            self.report.record_value(f"{prefix}{key}", value)
        return summary

    def _refined_grid(self) -> Grid:
        g = self.scenario.grid
        refined = GridSection(x_min=g.x_min, x_max=g.x_max, nx=2 * g.nx, y_min=g.y_min, y_max=g.y_max,
                              ny=None if g.ny is None else 2 * g.ny)
        return refined.build()

    async def run_gausson(self, progress_callback: Optional[ProgressCallback] = None, prefix: str = "") -> dict:
        """Matched-b gausson run against the analytic soliton and a b = 0 spreading control."""
        fields = self.scenario.fields
        grid = self.scenario.grid.build()
        p = make_gausson(self.scenario.packet.kx, fields.b, self.units.mass, self.units,
                         d=-self.scenario.packet.center_x)
        psi0 = gausson_wavefunction(grid, p)
        cfg = self.scenario.evolve_config()

        envelope_scale = float(np.max(np.abs(p.A * gausson_envelope(grid.axes[0].coordinates, p))))
        self.report.record_check(f"{prefix}gausson_envelope_equation", ode_residual_G(p, grid), 0.0,
                                 1e-6 * envelope_scale, relative=False)
        self.report.record_check(f"{prefix}gausson_normalization", p.normalization_residual(), 0.0,
                                 1e-12, relative=False)
        self.report.record_check(f"{prefix}gausson_sampled_norm", norm2(psi0), 1.0, 1e-8)

        matched, control = await asyncio.gather(
            self._in_thread(evolve_lognls, psi0, fields.b, None, cfg, self.units, fields.log_clamp,
                            self._bind(progress_callback, f"{prefix}gausson b={fields.b:g}")),
            self._in_thread(evolve_lognls, psi0, 0.0, None, cfg, self.units, fields.log_clamp,
                            self._bind(progress_callback, f"{prefix}gausson b=0")),
        )
        rigid = rigidity_report(matched, p)
        spread = rigidity_report(control, p)
        self.writer.table(f"{prefix}gausson_rigidity", rigid.to_columns(), b=fields.b)
        self.writer.table(f"{prefix}gausson_control", spread.to_columns(), b=0.0)
        self.writer.plot(f"{prefix}gausson_second_moment", {
            f"b={fields.b:g}": (rigid.times, rigid.second_moments),
            "b=0": (spread.times, spread.second_moments),
        }, title="second moment of |psi|^2")

        self.report.record_flag(f"{prefix}gausson_rigid", rigid.rigid, note=f"moment drift {rigid.moment_drift:.2e}")
        self.report.record_check(f"{prefix}gausson_speed", rigid.centroid_speed, p.v, GAUSSON_SPEED_TOLERANCE)
        self.report.record_check(f"{prefix}gausson_l2_error", rigid.max_l2_error, 0.0, GAUSSON_L2_TOLERANCE,
                                 relative=False)
        self.report.record_flag(f"{prefix}control_not_rigid", not spread.rigid)
        self.report.record_flag(f"{prefix}control_spreads", spread.width_growth > CONTROL_GROWTH,
                                note=f"width growth {spread.width_growth:.3f}")

        summary = {"gausson": {**p.to_dict(), **rigid.to_dict()}, "control": spread.to_dict()}
        if len(matched) >= 3:
            with_log = lognls_hydro_residual(matched, fields.b, units=self.units)
            without_log = lognls_hydro_residual(matched, fields.b, units=self.units, include_log=False)
            summary["hydro_residual_with_log"] = with_log.summary
            summary["hydro_residual_without_log"] = without_log.summary
        self.writer.json(f"{prefix}gausson_verdict", summary)
        self.report.record_value(f"{prefix}gausson_centroid_speed", rigid.centroid_speed)
        self.report.record_value(f"{prefix}gausson_moment_drift", rigid.moment_drift)
        self.report.record_value(f"{prefix}control_width_growth", spread.width_growth)
        return summary

    # --- suite -----------------------------------------------------------------

    def check_consistency(self):
        """Rejects a suite whose analytic and solver geometries disagree."""
        s = self.scenario
        g = s.geometry
        errors = []
        distance = g.screen_x - g.barrier_x
        if g.L is not None and not math.isclose(g.L, distance, rel_tol=1e-9):
            errors.append(f"geometry.L={g.L} differs from screen_x - barrier_x = {distance}")
        derived = 2.0 * math.pi / abs(s.packet.kx)
        if g.wavelength is not None and not math.isclose(g.wavelength, derived, rel_tol=1e-9):
            errors.append(f"geometry.wavelength={g.wavelength} differs from 2 pi / k0 = {derived}")
        if s.fields.solenoid is None:
            errors.append("the suite needs fields.solenoid for the flux run")
        else:
            self._check_solenoid_placement(s.fields.solenoid.build())
        if errors:
            raise ConfigError("; ".join(errors))

    def sub_orchestrator(self, scenario: ScenarioConfig) -> "ExperimentOrchestrator":
        """Orchestrator for a derived scenario sharing this run's writer, report and job bound."""
        return ExperimentOrchestrator(scenario, self.writer, self.report, self.lab, self.convention.value,
                                      self._semaphore)

    async def run_experiment_suite(self, progress_callback: Optional[ProgressCallback] = None) -> dict:
        """Spacing, flux shift and gausson checks end to end."""
        self.check_consistency()
        await self.run_fringe(progress_callback, prefix="fringe_")

        ab_config = self.scenario.derive("ab")
        ab_config = ab_config.model_copy(update={"fields": ab_config.fields.model_copy(update={"alternate_radius": None})})
        ab = self.sub_orchestrator(ab_config)
        gausson = self.sub_orchestrator(self.scenario.derive("gausson"))
        spacing, shift, soliton = await asyncio.gather(
            self.run_evolve2d(progress_callback, prefix="evolve2d_"),
            ab.run_ab(progress_callback, prefix="ab_"),
            gausson.run_gausson(progress_callback, prefix="gausson_"),
        )
        return {"evolve2d": spacing, "ab": shift, "gausson": soliton}

    # --- run record ------------------------------------------------------------

    def write_run_record(self, wall_time: float, seed: Optional[int] = None):
        self.writer.json("run", {
            "scenario": self.scenario.scenario,
            "resolved_config": self.writer.resolved_config,
            "lab": self.lab.to_dict(),
            "convention": self.convention.value,
            "seed": seed,
            "versions": {"fringe_lab": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                         "python": platform.python_version()},
            "wall_time_seconds": round(wall_time, 3),
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "artifacts": sorted(p.name for p in self.writer.written),
        })

    async def run(self, progress_callback: Optional[ProgressCallback] = None, seed: Optional[int] = None) -> dict:
        """Dispatches on the scenario name."""
        runners = {
            "fringe": self.run_fringe,
            "ab": self.run_ab,
            "evolve2d": self.run_evolve2d,
            "madelung": self.run_madelung,
            "gausson": self.run_gausson,
            "suite": self.run_experiment_suite,
        }
        start = time.time()
        logger.info(f"Running scenario '{self.scenario.scenario}' (config {self.writer.digest[:12]})")
        result = await runners[self.scenario.scenario](progress_callback)
        self.write_run_record(time.time() - start, seed)
        return result
