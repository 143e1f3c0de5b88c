"""CSV and JSON artifacts.

Every file opens with its provenance: CSVs carry a single leading
``# provenance: {...}`` comment line, JSON documents a ``config`` member.
Floats are written with 17 significant digits, which round-trips every
IEEE double, so re-reading a file gives back the recorded values exactly.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .consensus1d import SteadyStateReport, Trajectory1D
from .flock import DistanceSeries, FlockState, PredatorND
from .sweep import SweepResult

PROVENANCE_PREFIX = "# provenance: "
TRAJECTORY_1D = "trajectory_1d.csv"
SUMMARY_1D = "summary_1d.json"
FLOCK_SERIES = "flock_series.csv"
SUMMARY_FLOCK = "summary_flock.json"
SWEEP_CSV = "sweep_summary.csv"
SWEEP_JSON = "sweep_summary.json"


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return None if math.isnan(obj) else float(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, allow_nan=False) + "\n"


def write_json(path: Path, obj) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj), encoding="utf-8", newline="\n")
    return path


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence], provenance: dict | None = None) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if provenance is not None:
            fh.write(PROVENANCE_PREFIX + json.dumps(_jsonable(provenance), separators=(",", ":")) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def read_csv(path: Path) -> tuple[dict | None, list[str], list[list[str]]]:
    """Return ``(provenance, header, rows)`` with cells left as strings."""
    with open(path, encoding="utf-8", newline="") as fh:
        first = fh.readline()
        provenance = None
        if first.startswith(PROVENANCE_PREFIX):
            provenance = json.loads(first[len(PROVENANCE_PREFIX):])
            lines = fh.read().splitlines()
        else:
            lines = [first.rstrip("\n")] + fh.read().splitlines()
    reader = csv.reader(lines)
    header = next(reader)
    return provenance, header, list(reader)


def cell(text: str) -> float | None:
    return None if text == "" else float(text)


def trajectory_header(n: int) -> list[str]:
    return ["t", "m", "d_rho"] + [f"x_{i}" for i in range(n)]


def write_trajectory_1d(path: Path, trajectory: Trajectory1D, provenance: dict | None = None) -> Path:
    """One row per recorded step: ``t, m, d_rho, x_0 ... x_{n-1}``.

    ``d_rho`` is empty for predator-free runs. An empty trajectory yields a
    header-only file.
    """
    header = trajectory_header(trajectory.states.shape[1])
    d = trajectory.escape_distances

    def rows():
        for t, state in enumerate(trajectory.states):
            yield [t, int(trajectory.component_counts[t]), None if d is None else d[t], *state]

    return write_csv(path, header, rows(), provenance)


def report_dict(report: SteadyStateReport) -> dict:
    return {
        "x_ss": report.x_ss,
        "m_star": report.m_star,
        "alphas": report.alphas,
        "sizes": report.sizes,
        "d_ss": report.d_ss,
        "converged": report.converged,
        "t_stop": report.t_stop,
        "alpha_tc_deviation": report.alpha_tc_deviation,
    }


def write_flock_series(path: Path, series: DistanceSeries, provenance: dict | None = None) -> Path:
    header = ["t", "m", "dbar", "dcheck", "min_agent_index"]
    rows = zip(series.times, series.component_counts, series.mean, series.minimum, series.nearest_agent)
    return write_csv(path, header, rows, provenance)


def write_snapshot(path: Path, state: FlockState, predator: PredatorND, provenance: dict | None = None) -> Path:
    """Agent rows ``agent, rx, ry, rz, vx, vy, vz`` then one row with agent ``p``.

    Missing trailing coordinates (dim < 3) are written as 0.
    """

    def pad(vec):
        out = np.zeros(3)
        out[: vec.size] = vec
        return out

    rows = [[i, *pad(r), *pad(v)] for i, (r, v) in enumerate(zip(state.positions, state.velocities))]
    rows.append(["p", *pad(predator.position), *pad(predator.velocity)])
    header = ["agent", "rx", "ry", "rz", "vx", "vy", "vz"]
    return write_csv(path, header, rows, provenance)


def write_snapshots(directory: Path, snapshots, provenance: dict | None = None) -> list[Path]:
    return [
        write_snapshot(directory / f"snap_{step}.csv", state, predator, provenance)
        for step, state, predator in snapshots
    ]


def series_dict(series: DistanceSeries) -> dict:
    return {
        "steps": int(series.times.size),
        "captured_step": series.captured_step,
        "min_dbar": float(series.mean.min()),
        "min_dcheck": float(series.minimum.min()),
        "final_components": int(series.component_counts[-1]),
    }


def sweep_rows(result: SweepResult):
    for rec in result.records:
        yield [rec.rho, rec.mean, rec.std, rec.mean_clusters, rec.trials_ok, rec.trials_failed]


def write_sweep(directory: Path, result: SweepResult, provenance: dict, version: str) -> tuple[Path, Path]:
    """Write ``sweep_summary.csv`` and ``sweep_summary.json`` into ``directory``."""
    header = ["rho", "mean_objective", "std_objective", "mean_clusters", "trials_ok", "trials_failed"]
    csv_path = write_csv(directory / SWEEP_CSV, header, sweep_rows(result), provenance)
    records = [
        {
            "rho": rec.rho,
            "mean_objective": rec.mean,
            "std_objective": rec.std,
            "mean_clusters": rec.mean_clusters,
            "trials_ok": rec.trials_ok,
            "trials_failed": rec.trials_failed,
            "trials_unconverged": rec.trials_unconverged,
            "values": list(rec.values),
            "errors": list(rec.errors),
        }
        for rec in result.records
    ]
    doc = {
        "config": provenance,
        "rho_star": result.rho_star,
        "records": records,
        "seeds": [str(s) for s in result.seeds],
        "initial_hashes": list(result.initial_hashes),
        "version": version,
    }
    json_path = write_json(directory / SWEEP_JSON, doc)
    return csv_path, json_path
