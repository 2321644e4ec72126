"""CSV and JSON writers; every float is written with 17 significant digits."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .discretization import Density, build_grid

__all__ = [
    "fmt",
    "dumps",
    "write_csv",
    "write_json",
    "write_spectral",
    "read_spectral",
    "write_sweep",
    "write_stats",
]


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with 17-digit floats, sorted keys and ``null`` for non-finite values."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(obj[k], indent, _level + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else "null"
    return json.dumps(obj)


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj) + "\n")
    return path


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def write_spectral(result, out_dir, stem: str = "qsm"):
    """``<stem>.csv`` (node, weight, g, eta, nu) and ``<stem>.json`` header."""
    out_dir = Path(out_dir)
    grid = result.grid
    rows = zip(grid.nodes, grid.weights, result.g.values, result.eta.values, result.nu.values)
    csv_path = write_csv(out_dir / f"{stem}.csv", ["node", "weight", "g", "eta", "nu"], rows)
    json_path = write_json(out_dir / f"{stem}.json", result.header())
    return csv_path, json_path


def read_spectral(path):
    """Read a spectral CSV back as ``(g, eta, nu)`` densities."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    grid = build_grid(data.shape[0])
    if not np.allclose(data[:, 0], grid.nodes, rtol=0, atol=1e-12):
        raise ValueError(f"{path}: nodes are not a uniform midpoint grid")
    return tuple(Density(grid, data[:, k]) for k in (2, 3, 4))


def write_sweep(sweep, out_dir, stem: str = "sweep"):
    out_dir = Path(out_dir)
    rows = [(e.epsilon, e.lambda_eps, sweep.lam_full - e.lambda_eps, e.cdf_distance_to_full) for e in sweep]
    csv_path = write_csv(
        out_dir / f"{stem}.csv", ["epsilon", "lambda_eps", "gap_to_full", "cdf_distance_to_full"], rows
    )
    return csv_path


def write_stats(stats, out_dir, summary: dict, stem: str = "simulate"):
    """``<stem>_survivors.csv``, ``<stem>_histogram.csv`` and ``<stem>.json``."""
    out_dir = Path(out_dir)
    paths = [
        write_csv(
            out_dir / f"{stem}_survivors.csv",
            ["n", "survivors"],
            enumerate(stats.survivors_by_step.tolist()),
        ),
        write_csv(
            out_dir / f"{stem}_histogram.csv",
            ["bin", "mass"],
            enumerate(stats.conditional_histogram.tolist()),
        ),
        write_json(out_dir / f"{stem}.json", summary),
    ]
    return paths
