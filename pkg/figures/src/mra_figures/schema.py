"""The upstream CSV contracts, restated column for column.

These tuples mirror the producing tool's documented on-disk schemas; they
are duplicated here (rather than imported) so the renderer depends only on
the files it is given.
"""

SWEEP_COLUMNS = (
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

THRESHOLD_COLUMNS = ("L", "alpha", "sigma_sq", "trials", "p_e")

BOUND_COLUMNS = ("name", "L", "L_prime", "alpha", "sigma_sq", "n", "eps", "value", "valid")

KIND_SCHEMAS = {
    "rmse_sweep": SWEEP_COLUMNS,
    "threshold": THRESHOLD_COLUMNS,
    "bound_table": BOUND_COLUMNS,
}


class SchemaError(Exception):
    """Input CSV columns do not match the schema the kind requires."""


def validate_header(kind: str, header: list[str] | None) -> None:
    """Raise :class:`SchemaError` with an explicit column diff on mismatch."""
    if kind not in KIND_SCHEMAS:
        raise SchemaError(f"unknown figure kind {kind!r}; choose from {sorted(KIND_SCHEMAS)}")
    want = KIND_SCHEMAS[kind]
    if header is None:
        raise SchemaError(f"input has no header row; {kind} needs columns {list(want)}")
    if tuple(header) == want:
        return
    missing = [c for c in want if c not in header]
    unexpected = [c for c in header if c not in want]
    parts = [f"header does not match the {kind} schema"]
    if missing:
        parts.append(f"missing columns: {missing}")
    if unexpected:
        parts.append(f"unexpected columns: {unexpected}")
    if not missing and not unexpected:
        parts.append(f"column order differs: got {list(header)}, want {list(want)}")
    raise SchemaError("; ".join(parts))
