"""CSV, JSON and SVG artifact writers.

CSV files carry a ``# config_hash=...`` comment line so a data file can be
matched against its JSON sidecar. Floats are written with 17 significant
digits, which round-trips doubles exactly.
"""
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .grid import Grid, UnitsConfig
from .wavefunction import Wavefunction

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def config_hash(resolved: Mapping[str, Any]) -> str:
    """SHA-256 of the canonical JSON form of a resolved config."""
    canonical = json.dumps(resolved, sort_keys=True, separators=(",", ":"), default=_json_default)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (tuple, set)):
        return list(value)
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def write_json(path: PathLike, payload: Mapping[str, Any]):
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True, default=_json_default)
        f.write("\n")


def read_csv_header(path: PathLike) -> Dict[str, str]:
    """Return the ``# key=value`` comment lines at the top of a CSV file."""
    header = {}
    with open(path) as f:
        for line in f:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition("=")
            header[key.strip()] = value.strip()
    return header


def write_csv(
    path: PathLike,
    columns: Mapping[str, Sequence[float]],
    comments: Optional[Mapping[str, Any]] = None,
    precision: int = 17,
):
    """Write equal-length columns as CSV with leading ``#`` comment lines."""
    names = list(columns)
    data = np.column_stack([np.asarray(columns[name], dtype=float) for name in names])
    fmt = f"%.{precision}g"
    with open(path, "w") as f:
        for key, value in (comments or {}).items():
            f.write(f"# {key}={value}\n")
        f.write(",".join(names) + "\n")
        np.savetxt(f, data, fmt=fmt, delimiter=",")


def read_csv(path: PathLike) -> Dict[str, np.ndarray]:
    with open(path) as f:
        lines = [line for line in f if not line.startswith("#")]
    names = lines[0].strip().split(",")
    data = np.loadtxt(lines[1:], delimiter=",", ndmin=2)
    return {name: data[:, i] for i, name in enumerate(names)}


def wavefunction_to_csv(
    psi: Wavefunction,
    path: PathLike,
    units: UnitsConfig = UnitsConfig(),
    digest: str = "",
    precision: int = 17,
) -> Tuple[Path, Path]:
    """Write columns x[, y], re, im plus a JSON sidecar with grid, time and units."""
    path = Path(path)
    names = ("x", "y")[: psi.grid.dims]
    columns = {name: coords.ravel() for name, coords in zip(names, psi.grid.mesh)}
    columns["re"] = psi.values.real.ravel()
    columns["im"] = psi.values.imag.ravel()
    write_csv(path, columns, {"config_hash": digest}, precision)

    sidecar = path.with_suffix(".json")
    write_json(sidecar, {
        "grid": psi.grid.to_dict(),
        "time": psi.time,
        "units": {"hbar": units.hbar, "mass": units.mass, "charge": units.charge},
        "config_hash": digest,
    })
    return path, sidecar


def wavefunction_from_csv(path: PathLike) -> Tuple[Wavefunction, UnitsConfig]:
    path = Path(path)
    with open(path.with_suffix(".json")) as f:
        meta = json.load(f)
    grid = Grid.from_dict(meta["grid"])
    columns = read_csv(path)
    values = (columns["re"] + 1j * columns["im"]).reshape(grid.shape)
    return Wavefunction(values, grid, float(meta["time"])), UnitsConfig(**meta["units"])


def svg_polyline(
    series: Mapping[str, Tuple[Sequence[float], Sequence[float]]],
    title: str = "",
    width: int = 640,
    height: int = 360,
    digest: Optional[str] = None,
) -> str:
    """Render one or more (x, y) series as a plain SVG line chart.

    With ``digest`` the config hash is kept as an XML comment right after the root tag.
    """
    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]
    margin = 40
    xs = np.concatenate([np.asarray(x, float) for x, _ in series.values()])
    ys = np.concatenate([np.asarray(y, float) for _, y in series.values()])
    x_lo, x_hi = float(xs.min()), float(xs.max())
    y_lo, y_hi = float(ys.min()), float(ys.max())
    x_span = (x_hi - x_lo) or 1.0
    y_span = (y_hi - y_lo) or 1.0

    def project(x, y):
        px = margin + (x - x_lo) / x_span * (width - 2 * margin)
        py = height - margin - (y - y_lo) / y_span * (height - 2 * margin)
        return f"{px:.2f},{py:.2f}"

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        *([f"<!-- config_hash={digest} -->"] if digest else []),
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<text x="{margin}" y="{height - 10}" font-size="10">{x_lo:.4g}</text>',
        f'<text x="{width - margin}" y="{height - 10}" text-anchor="end" font-size="10">{x_hi:.4g}</text>',
        f'<text x="4" y="{margin}" font-size="10">{y_hi:.4g}</text>',
        f'<text x="4" y="{height - margin}" font-size="10">{y_lo:.4g}</text>',
    ]
    for i, (label, (x, y)) in enumerate(series.items()):
        color = palette[i % len(palette)]
        points = " ".join(project(px, py) for px, py in zip(x, y))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{points}"/>')
        parts.append(f'<text x="{width - margin}" y="{margin + 14 * i}" text-anchor="end" '
                     f'font-size="11" fill="{color}">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


class ArtifactWriter:
    """Writes a run's artifacts into one output directory, stamped with the config hash."""

    def __init__(self, out_dir: PathLike, resolved_config: Mapping[str, Any], precision: int = 17,
                 svg: bool = True):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.resolved_config = dict(resolved_config)
        self.digest = config_hash(self.resolved_config)
        self.precision = precision
        self.svg_enabled = svg
        self.written: list[Path] = []

    def table(self, name: str, columns: Mapping[str, Sequence[float]], **comments) -> Path:
        path = self.out_dir / f"{name}.csv"
        header = {"config_hash": self.digest, **comments}
        write_csv(path, columns, header, self.precision)
        self.written.append(path)
        logger.debug(f"Wrote {path}")
        return path

    def json(self, name: str, payload: Mapping[str, Any]) -> Path:
        path = self.out_dir / f"{name}.json"
        write_json(path, {"config_hash": self.digest, **payload})
        self.written.append(path)
        return path

    def wavefunction(self, name: str, psi: Wavefunction, units: UnitsConfig) -> Path:
        path, sidecar = wavefunction_to_csv(psi, self.out_dir / f"{name}.csv", units, self.digest,
                                            self.precision)
        self.written.extend([path, sidecar])
        return path

    def plot(self, name: str, series: Mapping[str, Tuple[Sequence[float], Sequence[float]]],
             title: str = "") -> Optional[Path]:
        if not self.svg_enabled:
            return None
        path = self.out_dir / f"{name}.svg"
        path.write_text(svg_polyline(series, title=title, digest=self.digest))
        self.written.append(path)
        return path
