"""CSV reading and the exact aggregation the plots display.

All means are NaN-excluded compensated sums (``math.fsum``), so the sidecar
series can be reproduced bit for bit by any independent reader applying the
same rule.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

from .schema import validate_header


@dataclass(frozen=True)
class Series:
    """One plotted curve: a label and its (x, y) points in plot order."""

    label: str
    x: tuple[float, ...]
    y: tuple[float, ...]


def read_rows(path: str | Path, kind: str) -> list[dict]:
    """Parse and schema-check the input CSV.

    Raises :class:`~mra_figures.schema.SchemaError` on a column mismatch and
    ``ValueError`` when the file holds no data rows, both before any output
    is produced.
    """
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"input CSV not found: {p}")
    with open(p, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        validate_header(kind, header)
        rows = [dict(zip(header, rec)) for rec in reader if rec]
    if not rows:
        raise ValueError(f"{p} has no data rows")
    return rows


def _mean(values: list[float]) -> float:
    return math.fsum(values) / len(values)


def _aggregate_rmse_sweep(rows: list[dict]) -> list[Series]:
    # one curve per L over the alpha grid; failed trials (rmse = nan) are
    # excluded from each cell's mean, and cells with no finite trials are
    # dropped entirely
    cells: dict[int, dict[float, list[float]]] = {}
    for row in rows:
        rmse = float(row["rmse"])
        if not math.isfinite(rmse):
            continue
        cells.setdefault(int(row["L"]), {}).setdefault(float(row["alpha"]), []).append(rmse)
    series = []
    for L in sorted(cells):
        alphas = sorted(cells[L])
        series.append(
            Series(
                label=f"L={L}",
                x=tuple(alphas),
                y=tuple(_mean(cells[L][a]) for a in alphas),
            )
        )
    return series


def _aggregate_threshold(rows: list[dict]) -> list[Series]:
    # one curve per L; the producer writes one row per (L, alpha), but
    # repeated points are averaged for robustness
    cells: dict[int, dict[float, list[float]]] = {}
    for row in rows:
        cells.setdefault(int(row["L"]), {}).setdefault(float(row["alpha"]), []).append(
            float(row["p_e"])
        )
    series = []
    for L in sorted(cells):
        alphas = sorted(cells[L])
        series.append(
            Series(
                label=f"L={L}",
                x=tuple(alphas),
                y=tuple(_mean(cells[L][a]) for a in alphas),
            )
        )
    return series


def _aggregate_bound_table(rows: list[dict]) -> list[Series]:
    # one curve per bound name over L; rows flagged valid=false carry no
    # value and are skipped
    curves: dict[str, list[tuple[int, float]]] = {}
    for row in rows:
        if row["valid"] != "true":
            continue
        curves.setdefault(row["name"], []).append((int(row["L"]), float(row["value"])))
    series = []
    for name in sorted(curves):
        points = sorted(curves[name])
        series.append(
            Series(
                label=name,
                x=tuple(float(L) for L, _ in points),
                y=tuple(v for _, v in points),
            )
        )
    return series


_AGGREGATORS = {
    "rmse_sweep": _aggregate_rmse_sweep,
    "threshold": _aggregate_threshold,
    "bound_table": _aggregate_bound_table,
}


def aggregate(kind: str, rows: list[dict]) -> list[Series]:
    """Reduce raw CSV rows to the exact series the figure will plot."""
    series = _AGGREGATORS[kind](rows)
    if not series:
        raise ValueError(f"no plottable rows for kind {kind!r} (all trials failed or invalid)")
    return series
