"""Shared fixtures for fringe-lab tests."""
import pytest

from fringe_lab.grid import UnitsConfig, make_uniform_grid


@pytest.fixture
def units():
    return UnitsConfig()


@pytest.fixture
def line_grid():
    """1D grid wide enough that unit-width packets never touch the edges."""
    return make_uniform_grid(-20.0, 20.0, 512)


@pytest.fixture
def wide_grid():
    """1D grid used for gausson runs."""
    return make_uniform_grid(-40.0, 40.0, 1024)
