"""Tests for the log-nonlinear equation and the gausson oracle."""
import math

import numpy as np
import pytest

from fringe_lab.errors import ConfigError
from fringe_lab.grid import UnitsConfig, make_uniform_grid
from fringe_lab.lognls import (
    LogNonlinearity,
    delta_m_density,
    evolve_lognls,
    gausson_envelope,
    gausson_frequency,
    gausson_value,
    gausson_wavefunction,
    lognls_hydro_residual,
    make_gausson,
    ode_residual_G,
    rigidity_report,
)
from fringe_lab.madelung import continuity_residual
from fringe_lab.solver import EvolveConfig
from fringe_lab.wavefunction import Wavefunction, gaussian_packet, norm2


class TestParams:
    def test_normalization_identity(self, units):
        p = make_gausson(k=0.0, b=0.25, units=units)
        assert p.B == 1.0
        assert p.c ** 2 * math.exp(2 * p.a) == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-12)

    def test_velocity(self, units):
        assert make_gausson(k=3.0, b=0.5, units=units).v == 3.0
        heavy = make_gausson(k=3.0, b=0.5, m=2.0, units=UnitsConfig(hbar=0.5))
        assert heavy.v == pytest.approx(0.75)
        assert heavy.B == pytest.approx(4 * 2.0 * 0.5 / 0.25)

    def test_amplitude_does_not_depend_on_c(self, units):
        small = make_gausson(k=1.0, b=0.25, units=units, c=0.5)
        large = make_gausson(k=1.0, b=0.25, units=units, c=3.0)
        assert small.omega == large.omega
        assert small.amplitude == pytest.approx(large.amplitude, rel=1e-12)
        assert small.amplitude == pytest.approx((small.B / (2 * math.pi)) ** 0.25, rel=1e-12)

    def test_supplied_frequency_round_trip(self, units):
        p = make_gausson(k=1.0, b=0.25, units=units, c=2.0)
        again = make_gausson(k=1.0, b=0.25, units=units, omega=p.omega, c=2.0)
        assert again.c == p.c
        assert abs(again.normalization_residual()) < 1e-12

    def test_inconsistent_frequency_rejected(self, units):
        omega = gausson_frequency(1.0, 0.25)
        with pytest.raises(ValueError, match="normalization residual"):
            make_gausson(k=1.0, b=0.25, units=units, omega=omega + 0.1)

    @pytest.mark.parametrize("kwargs", [{"b": 0.0}, {"b": -1.0}, {"b": 0.25, "m": 0.0}, {"b": 0.25, "c": -1.0}])
    def test_rejected_inputs(self, units, kwargs):
        with pytest.raises(ValueError):
            make_gausson(k=1.0, units=units, **kwargs)

    def test_to_dict(self, units):
        data = make_gausson(k=1.0, b=0.25, units=units).to_dict()
        assert {"c", "k", "omega", "b", "A", "B", "a", "v"} <= set(data)


class TestClosedForm:
    def test_peak_position(self, units):
        p = make_gausson(k=1.0, b=0.25, units=units, d=5.0)
        x = np.linspace(-20.0, 20.0, 4001)
        assert x[np.argmax(np.abs(gausson_value(x, 2.0, p)))] == pytest.approx(2.0 - 5.0)

    def test_rigid_translation(self, units):
        p = make_gausson(k=1.3, b=0.4, units=units)
        x = np.linspace(-10.0, 10.0, 201)
        np.testing.assert_allclose(np.abs(gausson_value(x, 0.5, p)) ** 2,
                                   np.abs(gausson_value(x + p.v * 1.5, 2.0, p)) ** 2, rtol=1e-12, atol=1e-300)

    def test_sampled_norm(self, wide_grid, units):
        p = make_gausson(k=1.0, b=0.25, units=units, d=5.0)
        assert norm2(gausson_wavefunction(wide_grid, p)) == pytest.approx(1.0, abs=1e-8)

    def test_galilean_boost_keeps_width(self, wide_grid, units):
        slow = gausson_wavefunction(wide_grid, make_gausson(k=1.0, b=0.25, units=units))
        fast = gausson_wavefunction(wide_grid, make_gausson(k=1.5, b=0.25, units=units))
        assert fast.position_variance() == pytest.approx(slow.position_variance(), abs=1e-6)
        assert slow.position_variance() == pytest.approx(1.0, rel=1e-8)

    def test_only_1d(self, units):
        from fringe_lab.grid import make_plane_grid

        with pytest.raises(ValueError):
            gausson_wavefunction(make_plane_grid(-4, 4, 16, -4, 4, 16), make_gausson(k=0.0, b=0.25, units=units))


class TestEnvelopeEquation:
    grid = make_uniform_grid(-10.0, 10.0, 1024)

    def test_exact_envelope(self, units):
        p = make_gausson(k=0.5, b=0.25, units=units)
        scale = np.max(np.abs(p.A * gausson_envelope(self.grid.axes[0].coordinates, p)))
        assert ode_residual_G(p, self.grid) < 1e-6 * scale

    def test_perturbed_envelope_is_detected(self, units):
        p = make_gausson(k=0.5, b=0.25, units=units)
        stretched = gausson_envelope(self.grid.axes[0].coordinates, p, width_scale=1.1)
        assert ode_residual_G(p, self.grid, stretched) > 1e2 * ode_residual_G(p, self.grid)

    def test_constant_envelope(self, units):
        p = make_gausson(k=0.5, b=0.25, units=units)
        level = math.exp(p.a / p.B)
        constant = np.full(self.grid.shape, level)
        assert ode_residual_G(p, self.grid, constant) == pytest.approx(abs(p.A + p.a) * level, rel=1e-9)


class TestDeltaGeneratingDensity:
    @pytest.mark.parametrize("m", [1.0, 10.0, 100.0, 1000.0])
    def test_mass_and_width(self, m, units):
        b = 1.0
        alpha = 2.0 * b
        width = 1.0 / math.sqrt(alpha * m)
        xi = np.linspace(-12 * width, 12 * width, 4801)
        density = delta_m_density(xi, m, b, units)
        assert np.sum(density) * (xi[1] - xi[0]) == pytest.approx(1.0, abs=1e-8)

        # 1/e half-width from the falling edge
        right = xi >= 0
        falling = -density[right] / density.max()
        measured = np.interp(-1.0 / math.e, falling, xi[right])
        assert measured == pytest.approx(width, rel=1e-2)

    def test_peak_scales_with_sqrt_mass(self, units):
        assert delta_m_density(0.0, 2.0, 1.0, units) == pytest.approx(math.sqrt(2) * delta_m_density(0.0, 1.0, 1.0, units))

    def test_rejects_non_positive(self, units):
        with pytest.raises(ValueError):
            delta_m_density(0.0, 0.0, 1.0, units)


class TestNonlinearity:
    def test_clamped_log(self):
        U = LogNonlinearity(0.5)
        values = U(np.array([0.0, 1.0, math.e]))
        assert values[0] == pytest.approx(-0.5 * math.log(1e-30))
        assert values[1] == 0.0
        assert values[2] == pytest.approx(-0.5)

    def test_rejects_bad_clamp(self):
        with pytest.raises(ValueError):
            LogNonlinearity(0.5, clamp=0.0)


class TestEvolution:
    @pytest.fixture(scope="class")
    def runs(self):
        grid = make_uniform_grid(-40.0, 40.0, 1024)
        units = UnitsConfig()
        p = make_gausson(k=1.0, b=0.25, units=units, d=5.0)
        psi0 = gausson_wavefunction(grid, p)
        cfg = EvolveConfig(dt=0.005, n_steps=2000, record_stride=100)
        matched = evolve_lognls(psi0, p.b, None, cfg, units)
        control = evolve_lognls(psi0, 0.0, None, cfg, units)
        return p, matched, control

    def test_matched_gausson_is_rigid(self, runs):
        p, matched, _ = runs
        report = rigidity_report(matched, p)
        assert report.rigid
        assert report.moment_drift < 0.01
        assert report.max_l2_error < 1e-3
        assert report.speed_error < 1e-3
        assert matched.metadata["b"] == p.b

    def test_norm_conserved(self, runs):
        _, matched, _ = runs
        assert np.max(np.abs(matched.norms() - 1.0)) < 1e-8

    def test_linear_control_spreads(self, runs):
        p, _, control = runs
        report = rigidity_report(control, p)
        assert not report.rigid
        assert report.width_growth > 1.2
        assert report.monotonic_growth

    def test_report_columns(self, runs):
        p, matched, _ = runs
        columns = rigidity_report(matched, p).to_columns()
        assert list(columns) == ["t", "centroid", "second_moment", "L2_error_vs_analytic"]
        assert columns["t"].size == 21

    def test_hydro_residual_needs_log_term(self, runs):
        _, matched, _ = runs
        with_log = lognls_hydro_residual(matched, 0.25)
        without_log = lognls_hydro_residual(matched, 0.25, include_log=False)
        assert with_log.name == "lognls-euler"
        assert without_log.name == "lognls-euler-without-log"
        assert without_log.summary > 1e2 * with_log.summary


def test_hydro_residual_converges(wide_grid, units):
    p = make_gausson(k=1.0, b=0.25, units=units)
    psi0 = gausson_wavefunction(wide_grid, p)

    def summary(dt, stride):
        trajectory = evolve_lognls(psi0, p.b, None, EvolveConfig(dt=dt, n_steps=int(round(2.0 / dt)),
                                                                 record_stride=stride), units)
        return lognls_hydro_residual(trajectory, p.b, units=units).summary

    assert summary(0.005, 10) / summary(0.0025, 20) > 3.0


def test_gausson_continuity_residual(wide_grid, units):
    p = make_gausson(k=1.0, b=0.25, units=units)
    trajectory = evolve_lognls(gausson_wavefunction(wide_grid, p), p.b, None,
                               EvolveConfig(dt=0.002, n_steps=200), units)
    assert continuity_residual(trajectory, units).summary < 1e-4


def test_plane_wave_hydro_residual(line_grid, units):
    x = line_grid.axes[0].coordinates
    k = 2 * math.pi * 4 / 40.0
    psi0 = Wavefunction(np.exp(1j * k * x) / math.sqrt(40.0), line_grid)
    trajectory = evolve_lognls(psi0, 0.25, None, EvolveConfig(dt=0.01, n_steps=40, record_stride=10), units)
    assert lognls_hydro_residual(trajectory, 0.25, units=units).summary < 1e-8


def test_unnormalized_state_rejected(line_grid, units):
    psi = gaussian_packet(line_grid, 0.0, 0.0, 1.0).scaled(2.0)
    with pytest.raises(ValueError, match="normalized"):
        evolve_lognls(psi, 0.25, None, EvolveConfig(dt=0.01, n_steps=1), units)


def test_stability_guard(line_grid, units):
    psi = gaussian_packet(line_grid, 0.0, 0.0, 1.0)
    with pytest.raises(ConfigError):
        evolve_lognls(psi, 200.0, None, EvolveConfig(dt=0.005, n_steps=1), units)
