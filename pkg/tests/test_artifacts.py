"""Tests for CSV/JSON/SVG artifacts."""
import json

import numpy as np
import pytest

from fringe_lab.artifacts import (
    ArtifactWriter,
    config_hash,
    read_csv,
    read_csv_header,
    svg_polyline,
    wavefunction_from_csv,
)
from fringe_lab.grid import UnitsConfig, make_plane_grid
from fringe_lab.wavefunction import gaussian_packet


def test_config_hash_ignores_key_order():
    assert config_hash({"a": 1, "b": {"c": 2}}) == config_hash({"b": {"c": 2}, "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})


def test_table_carries_hash_and_comments(tmp_path):
    writer = ArtifactWriter(tmp_path / "run", {"scenario": "fringe"})
    path = writer.table("pattern", {"theta": [0.0, 0.1], "intensity": [4.0, 3.5]}, convention="standard")
    header = read_csv_header(path)
    assert header["config_hash"] == writer.digest
    assert header["convention"] == "standard"
    data = read_csv(path)
    np.testing.assert_array_equal(data["intensity"], [4.0, 3.5])
    assert path in writer.written


def test_json_payload(tmp_path):
    writer = ArtifactWriter(tmp_path, {"scenario": "ab"})
    path = writer.json("summary", {"shift": np.float64(0.25), "pair": (1, 2)})
    payload = json.loads(path.read_text())
    assert payload == {"config_hash": writer.digest, "shift": 0.25, "pair": [1, 2]}


def test_wavefunction_round_trip_keeps_full_precision(tmp_path):
    grid = make_plane_grid(-4.0, 4.0, 16, -2.0, 2.0, 8)
    packet = gaussian_packet(grid, (0.3, -0.1), (1.7, 0.4), (1.0, 0.8))
    psi = packet.with_values(packet.values, time=1.25)
    units = UnitsConfig(hbar=1.0, mass=2.0, charge=1.0)
    writer = ArtifactWriter(tmp_path, {})
    path = writer.wavefunction("state", psi, units)

    loaded, loaded_units = wavefunction_from_csv(path)
    assert loaded.grid == grid
    assert loaded.time == 1.25
    assert loaded_units == units
    np.testing.assert_allclose(loaded.values, psi.values, rtol=1e-15, atol=1e-300)
    assert path.with_suffix(".json") in writer.written


def test_plot_disabled(tmp_path):
    writer = ArtifactWriter(tmp_path, {}, svg=False)
    assert writer.plot("p", {"a": ([0, 1], [0, 1])}) is None
    assert not list(tmp_path.glob("*.svg"))


def test_svg_polyline_lists_every_series():
    svg = svg_polyline({"half": ([0, 1, 2], [1, 0, 1]), "standard": ([0, 1, 2], [0, 1, 0])}, title="I")
    assert svg.startswith("<svg")
    assert svg.count("<polyline") == 2
    assert ">half<" in svg and ">standard<" in svg


@pytest.mark.parametrize("precision", [8, 17])
def test_precision_controls_digits(tmp_path, precision):
    writer = ArtifactWriter(tmp_path, {}, precision=precision)
    path = writer.table("t", {"v": [1.0 / 3.0]})
    value_line = [line for line in path.read_text().splitlines() if not line.startswith("#")][1]
    assert len(value_line.replace("0.", "", 1)) == precision


def test_plot_carries_config_hash(tmp_path):
    writer = ArtifactWriter(tmp_path, {"scenario": "fringe"})
    path = writer.plot("pattern", {"half": ([0, 1, 2], [1, 0, 1])}, title="I")
    svg = path.read_text()
    assert svg.startswith("<svg")
    assert f"<!-- config_hash={writer.digest} -->" in svg
    assert path in writer.written
