"""Figure rendering plus the sidecar JSON that makes every plot auditable.

The sidecar holds exactly the plotted series — same floats, same order — so
``image.json`` can be diffed against an independent aggregation of the input
CSV.  Rendering is deterministic given the same inputs: the Agg backend is
forced and timestamps are stripped from SVG metadata.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
# fixed salt so SVG element ids do not vary run to run
matplotlib.rcParams["svg.hashsalt"] = "mra-figures"

import matplotlib.pyplot as plt

from .aggregate import Series, aggregate, read_rows

# alpha = 2 is the transition point between the recoverable and
# alignment-limited regimes; alpha-axis figures mark it
TRANSITION_ALPHA = 2.0

_AXIS_LABELS = {
    "rmse_sweep": ("alpha", "mean RMSE"),
    "threshold": ("alpha", "error rate p_e"),
    "bound_table": ("L", "bound value"),
}

_IMAGE_SUFFIXES = (".png", ".svg")


def reference_rmse(alpha: float) -> float:
    """Aligned-averaging RMSE 1/sqrt(1 + 100 alpha) at the default
    observation budget n = 100 L / ln L."""
    return 1.0 / math.sqrt(1.0 + 100.0 * alpha)


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: an input CSV, a figure kind, and an output image path.

    ``log_y = None`` defers to the kind default (log scale for rmse sweeps,
    linear otherwise).  ``reference_curve`` overlays 1/sqrt(1+100 alpha) and
    only applies to alpha-axis kinds.
    """

    input_csv: str
    kind: str
    out: str
    log_y: bool | None = None
    reference_curve: bool = False

    def __post_init__(self):
        suffix = Path(self.out).suffix.lower()
        if suffix not in _IMAGE_SUFFIXES:
            raise ValueError(
                f"output must end in one of {_IMAGE_SUFFIXES}, got {self.out!r}"
            )

    @property
    def effective_log_y(self) -> bool:
        return self.kind == "rmse_sweep" if self.log_y is None else self.log_y


def _reference_series(series: list[Series]) -> Series:
    alphas = sorted({x for s in series for x in s.x})
    return Series(
        label="reference 1/sqrt(1+100a)",
        x=tuple(alphas),
        y=tuple(reference_rmse(a) for a in alphas),
    )


def _sidecar_payload(spec: FigureSpec, series, reference, vline) -> dict:
    return {
        "kind": spec.kind,
        "input_csv": str(spec.input_csv),
        "log_y": spec.effective_log_y,
        "series": [{"label": s.label, "x": list(s.x), "y": list(s.y)} for s in series],
        "reference": (
            None
            if reference is None
            else {"label": reference.label, "x": list(reference.x), "y": list(reference.y)}
        ),
        "vline_x": vline,
    }


def render(spec: FigureSpec) -> tuple[Path, Path]:
    """Draw the figure and write image + sidecar; returns both paths.

    All validation and aggregation happens before any file is created, so a
    bad input leaves no partial output behind.
    """
    rows = read_rows(spec.input_csv, spec.kind)
    series = aggregate(spec.kind, rows)
    alpha_axis = spec.kind in ("rmse_sweep", "threshold")
    reference = (
        _reference_series(series) if (spec.reference_curve and alpha_axis) else None
    )
    vline = TRANSITION_ALPHA if alpha_axis else None

    out = Path(spec.out)
    sidecar = out.with_suffix(".json")

    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    try:
        for s in series:
            ax.plot(s.x, s.y, marker="o", markersize=4, label=s.label)
        if reference is not None:
            ax.plot(
                reference.x,
                reference.y,
                color="black",
                linestyle="--",
                linewidth=1.2,
                label=reference.label,
            )
        if vline is not None:
            ax.axvline(vline, color="gray", linestyle=":", linewidth=1.0)
        xlabel, ylabel = _AXIS_LABELS[spec.kind]
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if spec.effective_log_y:
            ax.set_yscale("log")
        if spec.kind == "bound_table":
            ax.set_xscale("log", base=2)
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)
        fig.tight_layout()
        if out.suffix.lower() == ".svg":
            # strip the volatile creation date so identical inputs give
            # identical bytes
            fig.savefig(out, format="svg", metadata={"Date": None})
        else:
            fig.savefig(out, format="png", dpi=150)
    finally:
        plt.close(fig)

    with open(sidecar, "w") as fh:
        json.dump(_sidecar_payload(spec, series, reference, vline), fh, indent=1)
        fh.write("\n")
    return out, sidecar
