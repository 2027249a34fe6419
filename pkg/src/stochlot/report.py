"""Aggregation of simulation results into gap tables and box-plot summaries."""

from __future__ import annotations

import csv
import io

import numpy as np

from .core import CVS, PATTERNS, PENALTY_COSTS, SETUP_COSTS

COLUMNS = ("Ask", "Bol", "Tar", "Tar-R", "Ros", "Ros-R", "Sox/Var", "Sox/Var-R")
PIVOTS = {
    "pattern": ("pattern", PATTERNS),
    "cv": ("cv", CVS),
    "setup_cost": ("K", SETUP_COSTS),
    "penalty_cost": ("b", PENALTY_COSTS),
    "all": (None, ("AVG",)),
}
TABLE_ORDER = ("pattern", "cv", "setup_cost", "penalty_cost", "all")


def _fmt_key(v) -> str:
    if isinstance(v, str):
        return v
    return f"{v:g}"


def pivot_table(rows: list[dict], pivot: str) -> list[tuple[str, str, dict]]:
    """Average gap per method for each value of the pivot parameter.

    Returns ``(pivot, value, {column: mean gap or nan})`` rows. ``pivot="table"``
    stacks every pivot in the usual order.
    """
    if not rows:
        raise ValueError("no results to aggregate")
    if pivot == "table":
        return [r for p in TABLE_ORDER for r in pivot_table(rows, p)]
    if pivot not in PIVOTS:
        raise ValueError(f"unknown pivot {pivot!r}; choose from {', '.join(PIVOTS)} or table")
    field, values = PIVOTS[pivot]
    out = []
    for v in values:
        if field is None:
            sel = rows
        elif isinstance(v, str):
            sel = [r for r in rows if r[field] == v]
        else:
            sel = [r for r in rows if np.isclose(r[field], v)]
        cells = {}
        for col in COLUMNS:
            gaps = [r["gap_pct"] for r in sel if r["label"] == col]
            cells[col] = float(np.mean(gaps)) if gaps else float("nan")
        out.append((pivot, _fmt_key(v), cells))
    return out


def box_stats(rows: list[dict]) -> list[tuple[str, dict]]:
    out = []
    for col in COLUMNS:
        gaps = np.array([r["gap_pct"] for r in rows if r["label"] == col])
        if len(gaps) == 0:
            continue
        q = np.percentile(gaps, [0, 25, 50, 75, 100])
        out.append((col, dict(n=len(gaps), min=q[0], q1=q[1], median=q[2], q3=q[3], max=q[4])))
    return out


def format_table(table, header: str) -> str:
    buf = io.StringIO()
    buf.write(header + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["pivot", "value", *COLUMNS])
    for pivot, value, cells in table:
        w.writerow([pivot, value, *(f"{cells[c]:.2f}" for c in COLUMNS)])
    return buf.getvalue()


def format_box_stats(stats, header: str) -> str:
    buf = io.StringIO()
    buf.write(header + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", "n", "min", "q1", "median", "q3", "max"])
    for col, s in stats:
        w.writerow([col, s["n"], *(f"{s[k]:.3f}" for k in ("min", "q1", "median", "q3", "max"))])
    return buf.getvalue()
