"""Shared fixtures: small, hand-written input CSVs."""

from __future__ import annotations

import pytest

from mra_figures.schema import BOUND_COLUMNS, SWEEP_COLUMNS, THRESHOLD_COLUMNS

from csv_builders import bound_row, sweep_row, threshold_row, write_csv


@pytest.fixture
def sweep_csv(tmp_path):
    """A small two-L, two-alpha sweep with 2 trials per cell and one
    failed (NaN) trial at (16, 0.5)."""
    rows = [
        sweep_row(16, 0.5, 0.9, 0),
        sweep_row(16, 0.5, float("nan"), 1, error_tag="LinAlgError"),
        sweep_row(16, 4.0, 0.05, 0),
        sweep_row(16, 4.0, 0.07, 1),
        sweep_row(64, 0.5, 0.8, 0),
        sweep_row(64, 0.5, 0.85, 1),
        sweep_row(64, 4.0, 0.04, 0),
        sweep_row(64, 4.0, 0.06, 1),
    ]
    return write_csv(tmp_path / "sweep.csv", SWEEP_COLUMNS, rows)


@pytest.fixture
def threshold_csv(tmp_path):
    rows = [
        threshold_row(2048, 0.5, 0.93),
        threshold_row(2048, 2.0, 0.41),
        threshold_row(2048, 8.0, 0.01),
    ]
    return write_csv(tmp_path / "threshold.csv", THRESHOLD_COLUMNS, rows)


@pytest.fixture
def bound_csv(tmp_path):
    rows = [
        bound_row("rdf_lower_bound", 64, 70.5),
        bound_row("rdf_lower_bound", 256, 290.1),
        bound_row("rdf_lower_bound", 128, 143.2),  # out of order on purpose
        bound_row("mi_upper_bound", 64, 12.0),
        bound_row("mi_upper_bound", 128, 13.5),
        bound_row("low_snr_sample_complexity_bound", 64, 0.0, valid=False),
    ]
    return write_csv(tmp_path / "bounds.csv", BOUND_COLUMNS, rows)
