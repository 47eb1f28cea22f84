"""Reading and reducing CSVs into the exact plotted series."""

import math

import pytest

from mra_figures.aggregate import aggregate, read_rows
from mra_figures.schema import SWEEP_COLUMNS, THRESHOLD_COLUMNS, SchemaError

from csv_builders import sweep_row, threshold_row, write_csv


class TestReadRows:
    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError, match="not found"):
            read_rows(tmp_path / "nope.csv", "rmse_sweep")

    def test_header_only_means_no_data(self, tmp_path):
        path = write_csv(tmp_path / "empty.csv", SWEEP_COLUMNS, [])
        with pytest.raises(ValueError, match="no data rows"):
            read_rows(path, "rmse_sweep")

    def test_schema_mismatch_propagates(self, tmp_path):
        path = write_csv(
            tmp_path / "wrong.csv", THRESHOLD_COLUMNS, [threshold_row(64, 1.0, 0.5)]
        )
        with pytest.raises(SchemaError, match="rmse_sweep schema"):
            read_rows(path, "rmse_sweep")

    def test_rows_come_back_as_dicts(self, sweep_csv):
        rows = read_rows(sweep_csv, "rmse_sweep")
        assert len(rows) == 8
        assert rows[0]["L"] == "16"
        assert set(rows[0]) == set(SWEEP_COLUMNS)


class TestAggregateRmseSweep:
    def test_one_series_per_length_sorted(self, sweep_csv):
        series = aggregate("rmse_sweep", read_rows(sweep_csv, "rmse_sweep"))
        assert [s.label for s in series] == ["L=16", "L=64"]
        assert all(s.x == (0.5, 4.0) for s in series)

    def test_nan_trials_excluded_from_mean(self, sweep_csv):
        series = {s.label: s for s in aggregate("rmse_sweep", read_rows(sweep_csv, "rmse_sweep"))}
        # (16, 0.5) had trials [0.9, nan]; the mean must use only 0.9
        assert series["L=16"].y[0] == 0.9
        # (16, 4.0) had [0.05, 0.07]
        assert series["L=16"].y[1] == math.fsum([0.05, 0.07]) / 2

    def test_cell_with_no_finite_trials_is_dropped(self, tmp_path):
        rows = [
            sweep_row(32, 1.0, float("nan"), 0),
            sweep_row(32, 1.0, float("nan"), 1),
            sweep_row(32, 2.0, 0.5, 0),
        ]
        path = write_csv(tmp_path / "s.csv", SWEEP_COLUMNS, rows)
        (series,) = aggregate("rmse_sweep", read_rows(path, "rmse_sweep"))
        assert series.x == (2.0,)
        assert series.y == (0.5,)

    def test_all_trials_failed_raises(self, tmp_path):
        rows = [sweep_row(32, 1.0, float("nan"), t) for t in range(3)]
        path = write_csv(tmp_path / "s.csv", SWEEP_COLUMNS, rows)
        with pytest.raises(ValueError, match="no plottable rows"):
            aggregate("rmse_sweep", read_rows(path, "rmse_sweep"))

    def test_mean_is_compensated_sum(self, tmp_path):
        # values chosen so naive accumulation and fsum disagree
        values = [1e16, 1.0, -1e16, 1.0]
        rows = [sweep_row(8, 1.0, v, t) for t, v in enumerate(values)]
        path = write_csv(tmp_path / "s.csv", SWEEP_COLUMNS, rows)
        (series,) = aggregate("rmse_sweep", read_rows(path, "rmse_sweep"))
        assert series.y[0] == math.fsum(values) / 4 == 0.5


class TestAggregateThreshold:
    def test_series_and_values(self, threshold_csv):
        (series,) = aggregate("threshold", read_rows(threshold_csv, "threshold"))
        assert series.label == "L=2048"
        assert series.x == (0.5, 2.0, 8.0)
        assert series.y == (0.93, 0.41, 0.01)

    def test_repeated_points_average(self, tmp_path):
        rows = [
            threshold_row(64, 1.0, 0.4),
            threshold_row(64, 1.0, 0.6),
        ]
        path = write_csv(tmp_path / "t.csv", THRESHOLD_COLUMNS, rows)
        (series,) = aggregate("threshold", read_rows(path, "threshold"))
        assert series.y == (0.5,)


class TestAggregateBoundTable:
    def test_one_series_per_name_sorted_by_length(self, bound_csv):
        series = aggregate("bound_table", read_rows(bound_csv, "bound_table"))
        by_label = {s.label: s for s in series}
        # the invalid-only bound contributes no series at all
        assert set(by_label) == {"rdf_lower_bound", "mi_upper_bound"}
        rdf = by_label["rdf_lower_bound"]
        assert rdf.x == (64.0, 128.0, 256.0)  # input had 256 before 128
        assert rdf.y == (70.5, 143.2, 290.1)

    def test_invalid_rows_skipped(self, bound_csv):
        series = aggregate("bound_table", read_rows(bound_csv, "bound_table"))
        labels = [s.label for s in series]
        assert "low_snr_sample_complexity_bound" not in labels
