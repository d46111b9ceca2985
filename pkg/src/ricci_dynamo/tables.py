"""Result tables and their CSV / JSON / plot-data writers.

Files are byte-reproducible for identical inputs: metadata is emitted in a
fixed key order with the timestamp on its own (single) line, floats are
written with shortest round-trip repr, and rows arrive already sorted by
sweep index.  Non-finite numeric cells are rejected rather than written.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import SchemaMismatch

__all__ = ["ResultTable", "write_csv", "write_json", "emit_plotdata", "PLOT_SCHEMAS"]

_METADATA_ORDER = ("tool", "version", "scenario_digest", "timestamp")

PLOT_SCHEMAS = {
    "growth_curve": ("t", "log_energy"),
    "spectrum_scatter": ("re_lambda", "im_lambda", "source_code"),
    "regime_map": ("rho", "ricci", "regime_code"),
}


def _native(value):
    # numpy scalars repr as np.float64(...) and would poison CSV cells
    if isinstance(value, bool):
        return value
    if isinstance(value, float):
        return float(value)
    if isinstance(value, int):
        return int(value)
    return value


@dataclass
class ResultTable:
    name: str
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        normalized = []
        for i, row in enumerate(self.rows):
            if len(row) != len(self.columns):
                raise ValueError(f"row {i} has {len(row)} cells, expected {len(self.columns)}")
            normalized.append(tuple(_native(v) for v in row))
        self.rows[:] = normalized

    def column(self, name: str) -> list:
        idx = self.columns.index(name)
        return [row[idx] for row in self.rows]


def _cell_text(value) -> str:
    value = _native(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if value != value or value in (float("inf"), float("-inf")):
            raise ValueError("refusing to write non-finite numeric cell")
        return repr(value)
    return str(value)


def _ordered_metadata(metadata: dict) -> list[tuple[str, str]]:
    items = [(k, metadata[k]) for k in _METADATA_ORDER if k in metadata]
    items += sorted((k, v) for k, v in metadata.items() if k not in _METADATA_ORDER)
    # keep the timestamp line last so reproducibility tests can drop one line
    items.sort(key=lambda kv: kv[0] == "timestamp")
    return items


def write_csv(table: ResultTable, path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        for key, value in _ordered_metadata(table.metadata):
            fh.write(f"# {key}={value}\n")
        writer = csv.writer(fh)
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([_cell_text(v) for v in row])
    return path


def write_json(table: ResultTable, path) -> Path:
    path = Path(path)
    rows = [[_native(v) for v in row] for row in table.rows]
    for row in rows:
        for v in row:
            if isinstance(v, float) and (v != v or abs(v) == float("inf")):
                raise ValueError("refusing to write non-finite numeric cell")
    payload = {
        "metadata": {k: v for k, v in _ordered_metadata(table.metadata)},
        "columns": list(table.columns),
        "rows": rows,
    }
    with path.open("w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    return path


def emit_plotdata(table: ResultTable, kind: str, path) -> Path:
    """Write gnuplot-style whitespace-delimited data for the given plot kind.

    The table must already carry the kind's required columns; missing ones
    raise SchemaMismatch naming them.
    """
    if kind not in PLOT_SCHEMAS:
        raise ValueError(f"unknown plot kind {kind!r}; choose from {sorted(PLOT_SCHEMAS)}")
    needed = PLOT_SCHEMAS[kind]
    missing = [c for c in needed if c not in table.columns]
    if missing:
        raise SchemaMismatch(kind, missing)
    path = Path(path)
    digest = table.metadata.get("scenario_digest", "")
    with path.open("w", encoding="utf-8") as fh:
        fh.write(f"# {kind}: {' '.join(needed)}\n")
        if digest:
            fh.write(f"# scenario_digest={digest}\n")
        indices = [table.columns.index(c) for c in needed]
        for row in table.rows:
            fh.write(" ".join(_cell_text(row[i]) for i in indices) + "\n")
    return path
