"""Tests for scenario orchestration and artifacts."""
import asyncio
import json
import math

import numpy as np
import pytest

from fringe_lab.artifacts import ArtifactWriter, read_csv, read_csv_header
from fringe_lab.errors import ConfigError
from fringe_lab.fringe import SlitGeometry, fringe_spacing
from fringe_lab.orchestrator import ExperimentOrchestrator
from fringe_lab.scenario import ScenarioConfig


def orchestrator(tmp_path, name, overrides=None, convention=None):
    scenario = ScenarioConfig.from_preset(name, overrides)
    writer = ArtifactWriter(tmp_path, scenario.resolved(), svg=False)
    return ExperimentOrchestrator(scenario, writer, convention=convention)


class TestFringe:
    async def test_pattern_and_sweep(self, tmp_path):
        orch = orchestrator(tmp_path, "fringe")
        summary = await orch.run_fringe()

        assert summary["central_intensity"] == pytest.approx(4.0)
        assert summary["spacing_half"] == pytest.approx(2 * summary["spacing_standard"])

        pattern = read_csv(tmp_path / "fringe_pattern.csv")
        assert {"theta", "sin_theta", "s", "intensity_half", "intensity_standard"} <= set(pattern)
        assert "ab_half" not in pattern
        assert read_csv_header(tmp_path / "fringe_pattern.csv")["config_hash"] == orch.writer.digest

        sweep = read_csv(tmp_path / "flux_sweep.csv")
        first = sweep["intensity"][sweep["flux_index"] == 0]
        last = sweep["intensity"][sweep["flux_index"] == 8]
        np.testing.assert_allclose(last, first, atol=1e-12)
        assert orch.report.checks["flux_periodicity"].passed

    async def test_half_flux_quantum_darkens_center(self, tmp_path):
        # default solenoid: R = 0.5, B = 4, flux pi
        orch = orchestrator(tmp_path, "fringe", {"fields": {"solenoid": {}}}, convention="standard")
        summary = await orch.run_fringe()
        assert summary["ab_central_intensity"] == pytest.approx(0.0, abs=1e-12)
        assert {"ab_half", "ab_standard"} <= set(read_csv(tmp_path / "fringe_pattern.csv"))

    async def test_uniform_field_columns(self, tmp_path):
        orch = orchestrator(tmp_path, "fringe", {"fields": {"solenoid": {}, "B_ext": 0.01, "flux_sweep": None}})
        await orch.run_fringe()
        columns = read_csv(tmp_path / "fringe_pattern.csv")
        assert {"field_half", "field_standard", "combined_half", "combined_standard"} <= set(columns)
        assert not (tmp_path / "flux_sweep.csv").exists()

    async def test_run_record(self, tmp_path):
        orch = orchestrator(tmp_path, "fringe", convention="half")
        await orch.run(seed=7)
        record = json.loads((tmp_path / "run.json").read_text())
        assert record["seed"] == 7
        assert record["convention"] == "half"
        assert record["config_hash"] == orch.writer.digest
        assert "fringe_pattern.csv" in record["artifacts"]
        assert record["resolved_config"]["scenario"] == "fringe"


class TestMadelung:
    async def test_fields_and_residuals(self, tmp_path):
        orch = orchestrator(tmp_path, "madelung", {"evolve": {"n_steps": 100, "refinement_check": False}})
        summary = await orch.run_madelung()

        assert set(summary) == {"continuity_residual", "euler_residual", "hamilton_jacobi_residual"}
        assert all(np.isfinite(value) for value in summary.values())
        fields = read_csv(tmp_path / "hydro_fields.csv")
        assert list(fields) == ["x", "n", "v_x", "V_q", "S", "mask"]
        assert (tmp_path / "residuals.json").exists()

    async def test_refinement_records_order_checks(self, tmp_path):
        orch = orchestrator(tmp_path, "madelung")
        summary = await orch.run_madelung()
        for name in ("continuity", "euler", "hamilton_jacobi"):
            assert f"{name}_order" in orch.report.checks
            assert summary[f"{name}_ratio"] > 3.0


class TestGausson:
    async def test_preset_passes(self, tmp_path):
        orch = orchestrator(tmp_path, "gausson")
        labels = set()
        summary = await orch.run_gausson(progress_callback=lambda label, done, total: labels.add(label))

        assert orch.report.passed, orch.report.failed
        assert labels == {"gausson b=0.25", "gausson b=0"}
        assert summary["gausson"]["rigid"]
        assert summary["control"]["width_growth"] > 1.2
        assert summary["hydro_residual_without_log"] > 1e2 * summary["hydro_residual_with_log"]
        rigidity = read_csv(tmp_path / "gausson_rigidity.csv")
        assert rigidity["t"][-1] == pytest.approx(10.0)
        assert (tmp_path / "gausson_verdict.json").exists()

    async def test_oversized_step_rejected(self, tmp_path):
        orch = orchestrator(tmp_path, "gausson", {"fields": {"b": 2.0}, "evolve": {"dt": 0.3}})
        with pytest.raises(ConfigError):
            await orch.run_gausson()


class TestConsistency:
    def test_default_suite_is_consistent(self, tmp_path):
        orchestrator(tmp_path, "suite").check_consistency()

    @pytest.mark.parametrize("overrides, fragment", [
        ({"geometry": {"L": 30.0}}, "geometry.L"),
        ({"geometry": {"wavelength": 1.0}}, "geometry.wavelength"),
        ({"fields": {"solenoid": None}}, "fields.solenoid"),
        ({"fields": {"solenoid": {"center": [-6.5, 1.5]}}}, "between the two slits"),
        ({"fields": {"solenoid": {"center": [-20.0, 0.0]}}}, "between the barrier and the screen"),
    ])
    def test_inconsistent_suite(self, tmp_path, overrides, fragment):
        with pytest.raises(ConfigError, match=fragment):
            orchestrator(tmp_path, "suite", overrides).check_consistency()

    async def test_misplaced_solenoid_rejected_before_running(self, tmp_path):
        orch = orchestrator(tmp_path, "ab", {"fields": {"solenoid": {"center": [-6.5, 3.0]}}})
        with pytest.raises(ConfigError, match="between the two slits"):
            await orch.run_ab()


class TestSuiteWiring:
    def test_sub_orchestrators_share_the_job_bound(self, tmp_path):
        orch = orchestrator(tmp_path, "suite")
        for name in ("ab", "gausson"):
            sub = orch.sub_orchestrator(orch.scenario.derive(name))
            assert sub._semaphore is orch._semaphore
            assert sub.report is orch.report
            assert sub.writer is orch.writer

    def test_explicit_semaphore_is_used(self, tmp_path):
        scenario = ScenarioConfig.from_preset("fringe")
        bound = asyncio.Semaphore(1)
        orch = ExperimentOrchestrator(scenario, ArtifactWriter(tmp_path, scenario.resolved(), svg=False),
                                      semaphore=bound)
        assert orch._semaphore is bound


def mirrored(values):
    """Values at -s on a periodic axis whose points are symmetric about 0 modulo the period."""
    return np.roll(values[::-1], 1)


@pytest.mark.slow
class TestTwoDimensionalRuns:
    """Default 512 x 512 presets."""

    async def test_double_slit_spacing(self, tmp_path):
        orch = orchestrator(tmp_path, "evolve2d")
        summary = await orch.run_evolve2d()

        predicted = fringe_spacing(SlitGeometry(23.0, 4.0, 7.0, 2 * np.pi / 10.0, convention="standard"))
        assert summary["predicted_spacing_standard"] == pytest.approx(predicted)
        assert summary["measured_spacing"] == pytest.approx(predicted, rel=0.05)
        assert summary["half_to_measured_ratio"] == pytest.approx(2.0, rel=0.06)
        assert orch.report.checks["spacing_matches_standard"].passed

        pattern = read_csv(tmp_path / "screen_pattern.csv")
        central = np.abs(pattern["s"]) < 10.0
        np.testing.assert_allclose(mirrored(pattern["intensity"])[central], pattern["intensity"][central],
                                   atol=0.02 * pattern["intensity"].max())

    async def test_single_slit_has_no_fringes(self, tmp_path):
        orch = orchestrator(tmp_path, "evolve2d", {"geometry": {"open_slits": [True, False]}})
        summary = await orch.run_evolve2d()

        assert np.isnan(summary["measured_spacing"])
        assert not orch.report.checks["spacing_matches_standard"].passed
        pattern = read_csv(tmp_path / "screen_pattern.csv")
        assert pattern["intensity"].max() > 0

    async def test_uniform_field_shift(self, tmp_path):
        # e B S_area = pi / 2 for the 4 x 23 triangle, a quarter-period shift
        orch = orchestrator(tmp_path, "evolve2d", {"fields": {"B_ext": math.pi / 92.0}})
        summary = await orch.run_evolve2d()

        quarter = fringe_spacing(SlitGeometry(23.0, 4.0, 7.0, 2 * np.pi / 10.0, convention="standard")) / 4
        assert abs(summary["uniform_field_predicted"]) == pytest.approx(quarter)
        assert abs(summary["uniform_field_shift"]) == pytest.approx(quarter, rel=0.10)
        assert orch.report.checks["uniform_field_shift"].passed
        assert "intensity_field" in read_csv(tmp_path / "screen_pattern.csv")

    async def test_aharonov_bohm_shift_and_topology(self, tmp_path):
        # default solenoid: flux pi at R = 0.5, repeated at R = 0.7
        orch = orchestrator(tmp_path, "ab")
        summary = await orch.run_ab()

        half_period = fringe_spacing(SlitGeometry(23.0, 4.0, 7.0, 2 * np.pi / 10.0, convention="standard")) / 2
        for i in (0, 1):
            assert abs(summary[f"predicted_R{i}"]) == pytest.approx(half_period)
            assert abs(summary[f"shift_R{i}"]) == pytest.approx(half_period, rel=0.10)
            assert orch.report.checks[f"ab_shift_R{i}"].passed
        assert summary["topology_change"] < 0.02
        assert orch.report.checks["ab_topological_invariance"].passed

        patterns = read_csv(tmp_path / "ab_patterns.csv")
        assert {"s", "reference_R0", "solenoid_R0", "reference_R1", "solenoid_R1"} <= set(patterns)


@pytest.mark.slow
async def test_suite_end_to_end(tmp_path):
    overrides = {
        "grid": {"x_min": -12.8, "x_max": 12.8, "nx": 256, "y_min": -12.8, "y_max": 12.8, "ny": 256},
        "packet": {"x0": -8.0, "k0": 10.0, "sigma": [1.0, 2.0]},
        "geometry": {"delta": 3.0, "barrier_x": -5.0, "screen_x": 8.0},
        "fields": {"solenoid": {"center": [-3.5, 0.0]}},
        "evolve": {"absorber": {"width": 16}},
    }
    orch = orchestrator(tmp_path, "suite", overrides)
    result = await orch.run()

    assert set(result) == {"evolve2d", "ab", "gausson"}
    checks = orch.report.checks
    assert {"evolve2d_spacing_matches_standard", "ab_ab_shift_R0", "gausson_gausson_speed"} <= set(checks)
    assert "ab_ab_topological_invariance" not in checks
    assert all(checks[name].passed for name in checks if name.startswith("gausson_"))
    assert np.isfinite(result["ab"]["shift_R0"])
    for artifact in ("fringe_fringe_pattern.csv", "evolve2d_screen_pattern.csv", "ab_ab_patterns.csv",
                     "gausson_gausson_rigidity.csv", "run.json"):
        assert (tmp_path / artifact).exists()


async def test_reruns_are_byte_identical(tmp_path):
    for name in ("first", "second"):
        await orchestrator(tmp_path / name, "fringe", {"fields": {"solenoid": {}}}).run()
    for artifact in ("fringe_pattern.csv", "flux_sweep.csv"):
        assert (tmp_path / "first" / artifact).read_bytes() == (tmp_path / "second" / artifact).read_bytes()
