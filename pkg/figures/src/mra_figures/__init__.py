"""Figure renderer for the alignment lab's CSV outputs.

Consumes the documented CSV schemas (sweep, template-threshold, bound
table) and produces publication-style plots plus a machine-readable
sidecar JSON holding exactly the plotted series.  This package talks to
the simulation lab only through its files: it never imports it.
"""

from .aggregate import Series, aggregate, read_rows
from .render import FigureSpec, render
from .schema import KIND_SCHEMAS, SchemaError, validate_header

__all__ = [
    "FigureSpec",
    "KIND_SCHEMAS",
    "SchemaError",
    "Series",
    "aggregate",
    "read_rows",
    "render",
    "validate_header",
]
