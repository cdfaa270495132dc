"""Tests for grids, axes and spectral derivatives."""
import math

import numpy as np
import pytest

from fringe_lab.grid import Grid, UnitsConfig, make_plane_grid, make_uniform_grid


def test_spacing_and_coordinates():
    grid = make_uniform_grid(-10.0, 10.0, 8)
    axis = grid.axes[0]
    assert axis.spacing == 2.5
    assert axis.coordinates[0] == -10.0
    assert axis.coordinates[7] == 7.5


def test_coordinates_have_no_cumulative_drift():
    grid = make_uniform_grid(-5.0, 5.0, 1024)
    axis = grid.axes[0]
    i = np.arange(1024)
    assert np.array_equal(axis.coordinates, -5.0 + i * (10.0 / 1024))
    assert axis.spacing * axis.n == pytest.approx(10.0, abs=1e-12)


def test_wavenumber_ladder_fft_ordering():
    grid = make_uniform_grid(0.0, 1.0, 8)
    k = grid.axes[0].wavenumbers
    assert k.size == 8
    expected = 2 * math.pi * np.array([0, 1, 2, 3, -4, -3, -2, -1])
    np.testing.assert_allclose(k, expected, atol=1e-12)


@pytest.mark.parametrize("bounds", [(0.0, 0.0, 8), (1.0, -1.0, 8), (0.0, 1.0, 4), (0.0, math.inf, 8)])
def test_rejects_bad_bounds(bounds):
    with pytest.raises(ValueError):
        make_uniform_grid(*bounds)


def test_non_power_of_two_warns(caplog):
    make_uniform_grid(0.0, 1.0, 12)
    assert "power of two" in caplog.text


def test_spectral_derivative_of_sine():
    grid = make_uniform_grid(0.0, 2 * math.pi, 64)
    x = grid.axes[0].coordinates
    np.testing.assert_allclose(grid.derivative(np.sin(3 * x)), 3 * np.cos(3 * x), atol=1e-10)
    np.testing.assert_allclose(grid.derivative(np.sin(3 * x), order=2), -9 * np.sin(3 * x), atol=1e-9)
    np.testing.assert_allclose(grid.laplacian(np.sin(3 * x)), -9 * np.sin(3 * x), atol=1e-9)


def test_plane_grid_mesh_and_gradient():
    grid = make_plane_grid(0.0, 2 * math.pi, 32, 0.0, 2 * math.pi, 16)
    assert grid.dims == 2
    assert grid.shape == (32, 16)
    x, y = grid.mesh
    f = np.sin(x) * np.cos(2 * y)
    fx, fy = grid.gradient(f)
    np.testing.assert_allclose(fx, np.cos(x) * np.cos(2 * y), atol=1e-10)
    np.testing.assert_allclose(fy, -2 * np.sin(x) * np.sin(2 * y), atol=1e-10)
    assert grid.cell_volume == pytest.approx((2 * math.pi) ** 2 / (32 * 16))


def test_grid_dict_round_trip():
    grid = make_plane_grid(-1.0, 1.0, 8, -2.0, 2.0, 16)
    assert Grid.from_dict(grid.to_dict()) == grid


def test_units_must_be_positive():
    with pytest.raises(ValueError):
        UnitsConfig(hbar=0.0)
    with pytest.raises(ValueError):
        UnitsConfig(mass=-1.0)
