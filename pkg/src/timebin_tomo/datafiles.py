"""CSV/JSON readers and writers for POVMs, point clouds, synthetic data and results."""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .povm import MeasurementOperator, povm_to_records

DATA_COLUMNS = ["state_id", "t_ps", "expected", "sampled"]
RESULT_COLUMNS = ["state_id", "method", "fidelity", "objective", "iterations", "converged"]
POINT_COLUMNS = ["t_ps", "mu", "x", "y", "z"]
MAJORANA_COLUMNS = ["t_ps", "mu", "x", "y", "z", "root"]


class DataFileError(ValueError):
    """Malformed, truncated or mismatched data file."""


def write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_json(path: Path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataFileError(f"cannot read {path}: {exc}") from exc


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return v


def read_csv(path: Path, columns: Sequence[str]) -> list[dict]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != list(columns):
                raise DataFileError(f"{path}: expected columns {list(columns)}, got {reader.fieldnames}")
            rows = list(reader)
    except OSError as exc:
        raise DataFileError(f"cannot read {path}: {exc}") from exc
    for i, row in enumerate(rows):
        if None in row or any(v is None or v == "" for v in row.values()):
            raise DataFileError(f"{path}: row {i + 2} is incomplete")
    return rows


def format_time(t) -> str:
    """Single instants as a float, two-photon instants as 't1;t2'."""
    if isinstance(t, tuple):
        return ";".join(repr(float(x)) for x in t)
    return repr(float(t))


def write_povm_json(path: Path, ops: Sequence[MeasurementOperator]) -> None:
    write_json(path, povm_to_records(ops))


def data_header_path(csv_path: Path) -> Path:
    return Path(csv_path).with_suffix(".json")


def write_data(path: Path, header: dict, records, povm: Sequence[MeasurementOperator]) -> None:
    """Synthetic-data dump: CSV rows plus a JSON header file next to it."""
    times = [format_time(op.time) for op in povm]
    rows = []
    for state_id, rec in records:
        for t, lam, k in zip(times, rec.expected, rec.sampled):
            rows.append((state_id, t, float(lam), int(k)))
    write_csv(path, DATA_COLUMNS, rows)
    write_json(data_header_path(path), header)


def read_data(path: Path, n_operators: int) -> dict[int, np.ndarray]:
    """Sampled counts per state id; every state must have all operator rows."""
    rows = read_csv(path, DATA_COLUMNS)
    counts: dict[int, list[int]] = {}
    try:
        for row in rows:
            counts.setdefault(int(row["state_id"]), []).append(int(row["sampled"]))
            float(row["expected"])
    except ValueError as exc:
        raise DataFileError(f"{path}: bad value ({exc})") from exc
    for sid, vals in counts.items():
        if len(vals) != n_operators:
            raise DataFileError(f"{path}: state {sid} has {len(vals)} rows, expected {n_operators}")
    return {sid: np.array(v, dtype=np.int64) for sid, v in counts.items()}
