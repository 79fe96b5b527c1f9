"""CSV readers for measured (or synthetic) data, with line-numbered schema errors.

Dialect: comma separated, mandatory header row, UTF-8, "." decimal point.
"""
from __future__ import annotations

import csv
import json

import numpy as np

from .analysis import CorrelationSet, DiagonalPopulations, ParityDataset, TimeTagRecord

__all__ = [
    "SchemaError",
    "read_rows",
    "read_timetags",
    "read_histogram",
    "read_parity",
    "read_series",
    "read_correlations",
    "read_populations",
]


class SchemaError(ValueError):
    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


def read_rows(path, columns: dict):
    """Yield (line number, row dict) with each column converted by ``columns[name]``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(path, 1, "empty file") from None
        missing = [c for c in columns if c not in header]
        if missing:
            raise SchemaError(path, 1, f"header lacks columns {missing}; found {header}")
        idx = {c: header.index(c) for c in columns}
        for row in reader:
            line = reader.line_num
            if not row or all(not x.strip() for x in row):
                continue
            if len(row) != len(header):
                raise SchemaError(path, line, f"expected {len(header)} fields, got {len(row)}")
            out = {}
            for c, conv in columns.items():
                raw = row[idx[c]].strip()
                try:
                    out[c] = conv(raw)
                except ValueError:
                    raise SchemaError(path, line, f"bad value {raw!r} in column {c!r}") from None
            yield line, out


def _count(raw: str) -> int:
    v = int(raw)
    if v < 0:
        raise ValueError(raw)
    return v


def read_timetags(path) -> list[TimeTagRecord]:
    out = []
    for line, r in read_rows(path, {"trial_id": int, "detector_id": int, "timestamp_ns": int}):
        try:
            out.append(TimeTagRecord(r["trial_id"], r["detector_id"], r["timestamp_ns"]))
        except ValueError as exc:
            raise SchemaError(path, line, str(exc)) from None
    return out


def read_histogram(path):
    rows = [r for _, r in read_rows(path, {"t_ns": float, "count": _count})]
    if not rows:
        raise SchemaError(path, 2, "no data rows")
    return np.array([r["t_ns"] for r in rows]), np.array([r["count"] for r in rows])


def read_parity(path) -> dict[str, ParityDataset]:
    """Parity counts grouped by basis."""
    cols = {"basis": str, "theta_deg": float, "n_even": _count, "n_odd": _count, "n_total": _count}
    groups: dict[str, list] = {}
    for line, r in read_rows(path, cols):
        if r["basis"] not in ("X", "Y", "Z"):
            raise SchemaError(path, line, f"basis must be X, Y or Z, got {r['basis']!r}")
        if r["n_even"] + r["n_odd"] > r["n_total"] or r["n_total"] == 0:
            raise SchemaError(path, line, "need 0 < n_total and n_even + n_odd <= n_total")
        groups.setdefault(r["basis"], []).append(r)
    if not groups:
        raise SchemaError(path, 2, "no data rows")
    return {b: ParityDataset(b, [r["theta_deg"] for r in rows], [r["n_even"] for r in rows],
                             [r["n_odd"] for r in rows], [r["n_total"] for r in rows])
            for b, rows in groups.items()}


def read_series(path):
    """Ramsey/Rabi data: returns (t in s, probability, shots)."""
    rows = [r for _, r in read_rows(path, {"t_us": float, "p": float, "shots": _count})]
    if not rows:
        raise SchemaError(path, 2, "no data rows")
    for i, r in enumerate(rows):
        if not 0 <= r["p"] <= 1 or r["shots"] == 0:
            raise SchemaError(path, i + 2, "p must lie in [0, 1] and shots be positive")
    return (np.array([r["t_us"] for r in rows]) * 1e-6, np.array([r["p"] for r in rows]),
            np.array([r["shots"] for r in rows]))


def _load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(path, exc.lineno, f"invalid JSON: {exc.msg}") from None


def read_correlations(path) -> CorrelationSet:
    d = _load_json(path)
    try:
        return CorrelationSet(**{k: float(v) for k, v in d.items()})
    except (TypeError, ValueError) as exc:
        raise SchemaError(path, 1, f"bad correlation set: {exc}") from None


def read_populations(path) -> tuple[DiagonalPopulations, DiagonalPopulations]:
    """JSON with "z" and "y" objects: p_down_H, p_up_V, p_down_V, p_up_H [, errors]."""
    d = _load_json(path)
    try:
        return tuple(DiagonalPopulations(**{k: (tuple(v) if k == "errors" else float(v))
                                            for k, v in d[b].items()}) for b in ("z", "y"))
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(path, 1, f"bad population file: {exc}") from None
