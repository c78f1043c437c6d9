# src/congestlab/app/export.py
# Version: 1.0.0
# Changelog: 1.0.0 — trajectory CSV + JSON metadata, per-snapshot field CSVs, JSON reports and
#   plot-ready sweep CSVs. Every file is written through a temp file and renamed into place.
"""CSV / JSON writers for trajectories, Eulerian fields and reports."""

from __future__ import annotations

import csv
import json
import math
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ParameterError
from .eulerian import histogram_density, pressure_fields
from .trajectory import Trajectory

TRAJECTORY_HEADER = ["k", "t", "i", "x_i", "lambda_i"]
FIELDS_HEADER = ["k", "t", "field", "left", "right", "value_left", "value_right", "slope"]


def _replace_atomically(path: Path, write) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("w", encoding="utf-8", newline="") as f:
        write(f)
    tmp.replace(path)
    return path


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, Mapping):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)  # JSON has no inf/nan
    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    return obj


def write_json(path: str | Path, payload: Any) -> Path:
    return _replace_atomically(
        Path(path), lambda f: json.dump(_jsonable(payload), f, indent=2, sort_keys=False)
    )


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    def _write(f) -> None:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])

    return _replace_atomically(Path(path), _write)


def trajectory_rows(traj: Trajectory) -> Iterable[list[Any]]:
    """k, t, i (1-based), x_i, λ_i for every state; λ_i is the multiplier of gap i (λ_N = 0)."""
    for k, (state, mult) in enumerate(zip(traj.states, traj.multipliers, strict=True)):
        t = k * traj.tau
        for i, (x, lam) in enumerate(zip(state.positions, mult.values[1:], strict=True), 1):
            yield [k, float(t), i, float(x), float(lam)]


def write_trajectory(traj: Trajectory, csv_path: str | Path, json_path: str | Path) -> tuple[Path, Path]:
    meta = traj.describe()
    meta["reports"] = [r.to_dict() for r in traj.reports]
    return (
        write_csv(csv_path, TRAJECTORY_HEADER, trajectory_rows(traj)),
        write_json(json_path, meta),
    )


def field_rows(traj: Trajectory, k: int) -> list[list[Any]]:
    """One row per cell of ρ̃_N, p_N and p̃_N at step k."""
    state, mult = traj.states[k], traj.multipliers[k]
    t = float(k * traj.tau)
    rows: list[list[Any]] = []
    fields = (histogram_density(state), *pressure_fields(state, mult))
    for fld in fields:
        fn = fld.fn
        for left, right, a, b, s in zip(
            fn.knots[:-1], fn.knots[1:], fn.start, fn.end, fn.slopes(), strict=True
        ):
            rows.append([k, t, fld.kind, float(left), float(right), float(a), float(b), float(s)])
    return rows


def write_fields(traj: Trajectory, out_dir: str | Path, *, every: int = 1) -> list[Path]:
    """fields_k<k>.csv for k = 0, every, 2·every, ... and the final step."""
    if every < 1:
        raise ParameterError(f"every must be >= 1, got {every}")
    ks = sorted(set(range(0, traj.steps + 1, every)) | {traj.steps})
    width = len(str(traj.steps))
    out = Path(out_dir)
    return [
        write_csv(out / f"fields_k{k:0{width}d}.csv", FIELDS_HEADER, field_rows(traj, k)) for k in ks
    ]


def write_sweep(result, json_path: str | Path, csv_path: str | Path) -> tuple[Path, Path]:
    """JSON with the full records and a flat CSV with one row per record."""
    header, rows = result.table()
    return write_json(json_path, result.to_dict()), write_csv(csv_path, header, rows)
