"""Deterministic CSV/JSON artifact writers and plot-script emission."""
from __future__ import annotations

import json
import os

import numpy as np


def format_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path, header_cols, rows, meta: dict | None = None):
    """CSV with '#'-prefixed metadata header lines (excluded from diffs)."""
    lines = []
    if meta:
        for k in sorted(meta):
            lines.append(f"# {k}={meta[k]}")
    lines.append(",".join(header_cols))
    for row in rows:
        lines.append(",".join(format_cell(v) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def write_json(path, payload: dict):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_plot_script(csv_path, ycol: int, xcol: int = 1, title: str = ""):
    """Emit a plain gnuplot script next to a CSV (column references only)."""
    path = os.path.splitext(csv_path)[0] + ".gnuplot"
    name = os.path.basename(csv_path)
    lines = [
        "set datafile separator ','",
        "set datafile commentschars '#'",
        f"set title '{title or name}'",
        f"plot '{name}' using {xcol}:{ycol} with linespoints notitle",
    ]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def csv_payload_lines(path) -> list[str]:
    """CSV content with metadata header lines stripped (for byte comparisons)."""
    with open(path) as fh:
        return [ln for ln in fh.read().splitlines() if not ln.startswith("#")]
