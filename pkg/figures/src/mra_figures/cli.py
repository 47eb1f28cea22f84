"""Command-line front end: ``mra-figures render --spec fig.toml``.

The file passed to ``--spec`` is TOML with one ``[figure]`` table::

    [figure]
    input_csv = "sweep.csv"
    kind = "rmse_sweep"          # rmse_sweep | threshold | bound_table
    out = "sweep.png"            # .png or .svg; sidecar goes to sweep.json
    log_y = true                 # optional; default: log for rmse_sweep
    reference_curve = true       # optional; default false

Exit codes: 0 success, 2 configuration or input-schema error (schema
mismatches print the column diff), 3 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .render import FigureSpec, render
from .schema import SchemaError

_FIGURE_KEYS = {"input_csv", "kind", "out", "log_y", "reference_curve"}


class ConfigError(Exception):
    """Bad spec file: missing, unparsable, or wrong keys."""


def _load_spec(path: str) -> FigureSpec:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"spec file not found: {p}")
    try:
        with open(p, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {p}: {exc}")
    table = data.get("figure")
    if not isinstance(table, dict):
        raise ConfigError(f"{p} needs a [figure] table")
    unknown = set(table) - _FIGURE_KEYS
    if unknown:
        raise ConfigError(f"unknown [figure] keys: {sorted(unknown)}")
    for key in ("input_csv", "kind", "out"):
        if key not in table:
            raise ConfigError(f"missing required [figure] key: {key}")
    log_y = table.get("log_y")
    if log_y is not None and not isinstance(log_y, bool):
        raise ConfigError("log_y must be a boolean")
    reference = table.get("reference_curve", False)
    if not isinstance(reference, bool):
        raise ConfigError("reference_curve must be a boolean")
    try:
        return FigureSpec(
            input_csv=str(table["input_csv"]),
            kind=str(table["kind"]),
            out=str(table["out"]),
            log_y=log_y,
            reference_curve=reference,
        )
    except ValueError as exc:
        raise ConfigError(str(exc))


def _cmd_render(args: argparse.Namespace) -> int:
    spec = _load_spec(args.spec)
    image, sidecar = render(spec)
    print(f"wrote {image} and {sidecar}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mra-figures",
        description="Render figures from alignment-lab CSV outputs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure from a TOML spec")
    p.add_argument("--spec", required=True, help="TOML file with a [figure] table")
    p.set_defaults(func=_cmd_render)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:  # empty input, unplottable data
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # unexpected runtime failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
