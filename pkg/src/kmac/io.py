"""CSV input and table output."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidConfigError


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_csv(path) -> np.ndarray:
    """Read a rectangular numeric CSV into an ``(n, d)`` float array.

    A first row containing any non-numeric cell is taken as a header.  Blank
    lines and lines starting with ``#`` are skipped.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    except OSError as exc:
        raise InvalidConfigError(f"cannot read {path}: {exc}") from None
    rows = [[c.strip() for c in r] for r in csv.reader(lines)]
    if rows and not all(_is_number(c) for c in rows[0]):
        rows = rows[1:]
    if not rows:
        raise InvalidConfigError(f"{path}: no data rows")
    width = len(rows[0])
    out = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise InvalidConfigError(f"{path}: row {i + 1} has {len(row)} cells, expected {width}")
        for j, cell in enumerate(row):
            try:
                out[i, j] = float(cell)
            except ValueError:
                raise InvalidConfigError(
                    f"{path}: non-numeric cell {cell!r} at row {i + 1}, column {j + 1}"
                ) from None
    return out


def write_matrix(arr, path, header: list[str] | None = None) -> None:
    """Write a 2-D array as CSV at 17 significant digits."""
    a = np.asarray(arr, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow(header)
        for row in a:
            w.writerow([_fmt(v) for v in row])


def _fmt(v: float) -> str:
    return "NA" if not math.isfinite(v) else format(float(v), ".17g")


@dataclass
class ExperimentTable:
    """Named equal-length numeric columns plus a metadata block."""

    columns: dict[str, np.ndarray]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.columns = {k: np.asarray(v, dtype=float) for k, v in self.columns.items()}
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise InvalidConfigError(f"column lengths differ: {sorted(lengths)}")

    @property
    def n_rows(self) -> int:
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def to_json_obj(self) -> dict:
        def clean(v):
            return [float(x) if math.isfinite(x) else None for x in v]

        return {
            "metadata": self.metadata,
            "columns": {k: clean(v) for k, v in self.columns.items()},
        }


def write_table(table: ExperimentTable, path, fmt: str | None = None) -> None:
    """Write ``table`` as CSV (metadata as ``#`` lines) or JSON.

    ``fmt`` defaults to the file suffix; values use 17 significant digits and
    non-finite values are written as ``NA`` (CSV) or ``null`` (JSON).
    """
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".") or "csv").lower()
    if fmt == "json":
        path.write_text(json.dumps(table.to_json_obj(), indent=2) + "\n", encoding="utf-8")
        return
    if fmt != "csv":
        raise InvalidConfigError(f"unknown table format {fmt!r}")
    names = list(table.columns)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for key, val in table.metadata.items():
            fh.write(f"# {key}: {json.dumps(val)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for i in range(table.n_rows):
            w.writerow([_fmt(table.columns[c][i]) for c in names])


def read_table(path) -> ExperimentTable:
    """Inverse of :func:`write_table` for either format."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        obj = json.loads(path.read_text(encoding="utf-8"))
        cols = {k: [math.nan if v is None else v for v in vals] for k, vals in obj["columns"].items()}
        return ExperimentTable(cols, obj.get("metadata", {}))
    meta, body = {}, []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.startswith("# "):
            key, _, val = line[2:].partition(": ")
            meta[key] = json.loads(val)
        elif line.strip():
            body.append(line)
    rows = list(csv.reader(body))
    names = rows[0]
    data = [[math.nan if c == "NA" else float(c) for c in r] for r in rows[1:]]
    cols = {name: [r[j] for r in data] for j, name in enumerate(names)}
    return ExperimentTable(cols, meta)
