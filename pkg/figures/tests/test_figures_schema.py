"""Header validation: exact schemas accepted, mismatches explained."""

import pytest

from mra_figures.schema import (
    BOUND_COLUMNS,
    KIND_SCHEMAS,
    SWEEP_COLUMNS,
    THRESHOLD_COLUMNS,
    SchemaError,
    validate_header,
)


class TestKindSchemas:
    def test_all_kinds_present(self):
        assert set(KIND_SCHEMAS) == {"rmse_sweep", "threshold", "bound_table"}

    def test_column_tuples(self):
        assert SWEEP_COLUMNS == (
            "L",
            "alpha",
            "sigma_sq",
            "n",
            "trial",
            "rmse",
            "misaligned_fraction",
            "error_tag",
            "wall_time_ms",
        )
        assert THRESHOLD_COLUMNS == ("L", "alpha", "sigma_sq", "trials", "p_e")
        assert BOUND_COLUMNS == (
            "name",
            "L",
            "L_prime",
            "alpha",
            "sigma_sq",
            "n",
            "eps",
            "value",
            "valid",
        )


class TestValidateHeader:
    def test_exact_match_passes(self):
        for kind, cols in KIND_SCHEMAS.items():
            validate_header(kind, list(cols))  # must not raise

    def test_unknown_kind(self):
        with pytest.raises(SchemaError, match="unknown figure kind"):
            validate_header("histogram", list(SWEEP_COLUMNS))

    def test_no_header(self):
        with pytest.raises(SchemaError, match="no header row"):
            validate_header("threshold", None)

    def test_missing_column_named_in_message(self):
        header = [c for c in SWEEP_COLUMNS if c != "rmse"]
        with pytest.raises(SchemaError, match="missing columns.*rmse"):
            validate_header("rmse_sweep", header)

    def test_unexpected_column_named_in_message(self):
        header = list(THRESHOLD_COLUMNS) + ["notes"]
        with pytest.raises(SchemaError, match="unexpected columns.*notes"):
            validate_header("threshold", header)

    def test_reordered_columns_rejected_with_order_diff(self):
        header = list(BOUND_COLUMNS)
        header[0], header[1] = header[1], header[0]
        with pytest.raises(SchemaError, match="column order differs"):
            validate_header("bound_table", header)

    def test_wrong_schema_for_kind_is_rejected(self):
        # a threshold file fed to an rmse_sweep figure must fail loudly,
        # mentioning at least one column from each side of the mismatch
        with pytest.raises(SchemaError, match="rmse"):
            validate_header("rmse_sweep", list(THRESHOLD_COLUMNS))
