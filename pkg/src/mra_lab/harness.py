"""Seeded Monte Carlo sweeps, bound tables, and their CSV contracts.

This module owns every on-disk schema:

Sweep CSV (one row per (L, alpha, trial) cell), columns in this exact order:

    L, alpha, sigma_sq, n, trial, rmse, misaligned_fraction, error_tag, wall_time_ms

``rmse`` is sqrt of the orbit distortion.  A failed cell keeps its row with
``rmse = nan`` and the exception type in ``error_tag``; summaries exclude
such rows and count them.  ``misaligned_fraction`` is filled only by
estimators that expose it (the genie).  ``wall_time_ms`` is the one column
allowed to differ between reruns; everything else is a pure function of
(config, master_seed).

Bound-table CSV, columns in this exact order:

    name, L, L_prime, alpha, sigma_sq, n, eps, value, valid

Domain violations (e.g. eps outside (0, 1)) become rows with
``valid = false`` and an empty value rather than aborting the table.

Template-threshold CSV (written by the CLI), columns:

    L, alpha, sigma_sq, trials, p_e

Measurement container (save/load_measurements): CSV whose first record is
the literal tag ``mra-measurements-v1``, second record the header
``L, L_prime, n, sigma_sq, alpha, seed, lineage``, third record the mask
(semicolon-joined kept indices, empty when absent), then one record per
observation: ``true_shift, y_0, ..., y_{w-1}``.  Floats are written with
``repr`` and round-trip exactly.

Seeding: the per-cell seed is a deterministic hash of
(master_seed, L, alpha_index, trial); the cell then derives separate
substream seeds for the signal draw, the measurement noise, and the
estimator's own randomness.  Cells are therefore order-independent, which
is what makes ``--threads`` (or the ``MRA_LAB_THREADS`` override) a pure
wall-clock knob: statistical output is identical at any thread count, and
an interrupted sweep resumes by skipping the (grid point, trial) pairs
already on disk.  A lock file guards against two sweeps writing one path.
"""

from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bounds as bounds_mod
from .estimators import EmConfig, em_estimate, genie_align_average
from .metrics import rho
from .model import MeasurementSet, NoiseModel, ProjectionMask, generate_mra, sample_signal

__all__ = [
    "SWEEP_COLUMNS",
    "BOUND_COLUMNS",
    "THRESHOLD_COLUMNS",
    "ExperimentConfig",
    "SweepRow",
    "BoundQuery",
    "n_from_rule",
    "cell_seeds",
    "run_sweep",
    "read_sweep_rows",
    "summarize_sweep",
    "run_bound_table",
    "save_measurements",
    "load_measurements",
]

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

BOUND_COLUMNS = ("name", "L", "L_prime", "alpha", "sigma_sq", "n", "eps", "value", "valid")

THRESHOLD_COLUMNS = ("L", "alpha", "sigma_sq", "trials", "p_e")

# Default trial counts per estimator family.
_DEFAULT_TRIALS = {"genie": 50, "em": 100}

_ESTIMATORS = ("genie", "em")


def n_from_rule(L: int) -> int:
    """Default observation count ceil(100 L / ln L) used by the sweep grids."""
    if L < 2:
        raise ValueError(f"L must be >= 2, got {L}")
    return int(math.ceil(100.0 * L / math.log(L)))


@dataclass(frozen=True)
class ExperimentConfig:
    """A sweep: estimator x L grid x alpha grid x trials."""

    Ls: tuple[int, ...]
    alphas: tuple[float, ...]
    estimator: str
    output_path: str
    trials: int | None = None  # None -> per-estimator default
    n: int | None = None  # None -> n_from_rule(L)
    estimator_params: dict = field(default_factory=dict)
    master_seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if not self.Ls:
            raise ValueError("at least one L is required")
        if any(L < 2 for L in self.Ls):
            raise ValueError(f"all L must be >= 2, got {self.Ls}")
        if not self.alphas:
            raise ValueError("at least one alpha is required")
        if any(not a > 0 for a in self.alphas):
            raise ValueError(f"all alphas must be positive, got {self.alphas}")
        if self.estimator not in _ESTIMATORS:
            raise ValueError(f"unknown estimator {self.estimator!r}; choose from {_ESTIMATORS}")
        if self.trials is not None and self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.n is not None and self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")

    @property
    def effective_trials(self) -> int:
        return self.trials if self.trials is not None else _DEFAULT_TRIALS[self.estimator]


@dataclass(frozen=True)
class SweepRow:
    L: int
    alpha: float
    sigma_sq: float
    n: int
    trial: int
    rmse: float  # nan on estimator failure
    misaligned_fraction: float | None
    error_tag: str
    wall_time_ms: float

    def to_csv(self) -> list[str]:
        return [
            str(self.L),
            repr(float(self.alpha)),
            repr(float(self.sigma_sq)),
            str(self.n),
            str(self.trial),
            repr(float(self.rmse)),
            "" if self.misaligned_fraction is None else repr(float(self.misaligned_fraction)),
            self.error_tag,
            repr(float(self.wall_time_ms)),
        ]

    @classmethod
    def from_csv(cls, record: list[str]) -> "SweepRow":
        return cls(
            L=int(record[0]),
            alpha=float(record[1]),
            sigma_sq=float(record[2]),
            n=int(record[3]),
            trial=int(record[4]),
            rmse=float(record[5]),
            misaligned_fraction=None if record[6] == "" else float(record[6]),
            error_tag=record[7],
            wall_time_ms=float(record[8]),
        )


@dataclass(frozen=True)
class CellSeeds:
    """Independent substream seeds derived from one grid cell."""

    signal: int
    data: int
    estimator: int


def cell_seeds(master_seed: int, L: int, alpha_index: int, trial: int) -> CellSeeds:
    """Deterministic hash of (master_seed, L, alpha_index, trial) into three
    substream seeds.  Uses the alpha grid index, not the float value, so the
    hash input stays integral."""
    ss = np.random.SeedSequence(entropy=(master_seed, L, alpha_index, trial))
    words = ss.generate_state(3, np.uint64)
    return CellSeeds(signal=int(words[0]), data=int(words[1]), estimator=int(words[2]))


def _run_cell(config: ExperimentConfig, L: int, alpha_index: int, trial: int) -> SweepRow:
    alpha = float(config.alphas[alpha_index])
    t0 = time.perf_counter()
    noise = NoiseModel.from_alpha(L, alpha)
    n = config.n if config.n is not None else n_from_rule(L)
    seeds = cell_seeds(config.master_seed, L, alpha_index, trial)
    try:
        x = sample_signal(L, np.random.default_rng(seeds.signal))
        ms = generate_mra(
            x, n, noise, seed=seeds.data, lineage=f"sweep/L{L}/a{alpha_index}/t{trial}"
        )
        if config.estimator == "genie":
            result = genie_align_average(x, ms)
        else:
            em_cfg = EmConfig(**config.estimator_params)
            result = em_estimate(ms, em_cfg, seed=seeds.estimator)
        d = rho(x, result.xhat)
        rmse = math.sqrt(d.rho)
        mis = result.meta.get("misaligned_fraction")
        row = SweepRow(
            L=L,
            alpha=alpha,
            sigma_sq=noise.sigma_sq,
            n=n,
            trial=trial,
            rmse=rmse,
            misaligned_fraction=mis,
            error_tag="",
            wall_time_ms=(time.perf_counter() - t0) * 1e3,
        )
    except Exception as exc:  # failed cell -> sentinel row, sweep continues
        row = SweepRow(
            L=L,
            alpha=alpha,
            sigma_sq=noise.sigma_sq,
            n=n,
            trial=trial,
            rmse=float("nan"),
            misaligned_fraction=None,
            error_tag=type(exc).__name__,
            wall_time_ms=(time.perf_counter() - t0) * 1e3,
        )
    return row


def _effective_threads(config: ExperimentConfig) -> int:
    env = os.environ.get("MRA_LAB_THREADS")
    if env is None:
        return config.threads
    try:
        value = int(env)
    except ValueError as exc:
        raise ValueError(f"MRA_LAB_THREADS must be an integer, got {env!r}") from exc
    if value < 1:
        raise ValueError(f"MRA_LAB_THREADS must be >= 1, got {value}")
    return value


def read_sweep_rows(path: str | Path) -> list[SweepRow]:
    """Parse a sweep CSV (with its header line) back into rows."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is not None and tuple(header) != SWEEP_COLUMNS:
            raise ValueError(f"unexpected sweep header {header}; want {list(SWEEP_COLUMNS)}")
        for record in reader:
            if record:
                rows.append(SweepRow.from_csv(record))
    return rows


def run_sweep(config: ExperimentConfig) -> Path:
    """Execute the sweep, appending one CSV row per finished cell.

    Already-present (L, alpha, trial) rows are skipped (resume).  On
    completion the file is rewritten in canonical (L, alpha, trial) order.
    Interruptions lose at most the in-flight cells; finished rows are
    flushed to disk as they happen.
    """
    out = Path(config.output_path)
    lock = out.with_name(out.name + ".lock")
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise RuntimeError(
            f"output {out} is locked by another sweep (remove {lock} if that sweep is dead)"
        )
    os.close(fd)
    try:
        existing: list[SweepRow] = []
        done: set[tuple[int, float, int]] = set()
        if out.exists():
            existing = read_sweep_rows(out)
            done = {(r.L, r.alpha, r.trial) for r in existing}

        trials = config.effective_trials
        cells = [
            (L, a_idx, trial)
            for L in config.Ls
            for a_idx in range(len(config.alphas))
            for trial in range(trials)
            if (L, float(config.alphas[a_idx]), trial) not in done
        ]

        new_rows: list[SweepRow] = []
        write_header = not out.exists()
        with open(out, "a", newline="") as fh:
            writer = csv.writer(fh)
            if write_header:
                writer.writerow(SWEEP_COLUMNS)
                fh.flush()

            def emit(row: SweepRow) -> None:
                new_rows.append(row)
                writer.writerow(row.to_csv())
                fh.flush()

            threads = _effective_threads(config)
            if threads == 1 or len(cells) <= 1:
                for L, a_idx, trial in cells:
                    emit(_run_cell(config, L, a_idx, trial))
            else:
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    for row in pool.map(
                        lambda c: _run_cell(config, c[0], c[1], c[2]), cells
                    ):
                        emit(row)

        all_rows = existing + new_rows
        all_rows.sort(key=lambda r: (r.L, r.alpha, r.trial))
        tmp = out.with_name(out.name + ".tmp")
        with open(tmp, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(SWEEP_COLUMNS)
            for row in all_rows:
                writer.writerow(row.to_csv())
        os.replace(tmp, out)
        return out
    finally:
        try:
            os.unlink(lock)
        except FileNotFoundError:
            pass


@dataclass(frozen=True)
class SweepSummary:
    L: int
    alpha: float
    n_trials: int
    n_failed: int
    mean_rmse: float  # over non-failed trials; nan if all failed
    mean_misaligned: float | None


def summarize_sweep(path: str | Path) -> list[SweepSummary]:
    """Per-(L, alpha) means with failed (NaN) rows excluded and counted."""
    groups: dict[tuple[int, float], list[SweepRow]] = {}
    for row in read_sweep_rows(path):
        groups.setdefault((row.L, row.alpha), []).append(row)
    summaries = []
    for (L, alpha), rows in sorted(groups.items()):
        good = [r for r in rows if math.isfinite(r.rmse)]
        mis = [r.misaligned_fraction for r in good if r.misaligned_fraction is not None]
        summaries.append(
            SweepSummary(
                L=L,
                alpha=alpha,
                n_trials=len(rows),
                n_failed=len(rows) - len(good),
                mean_rmse=(
                    math.fsum(r.rmse for r in good) / len(good) if good else float("nan")
                ),
                mean_misaligned=(math.fsum(mis) / len(mis) if mis else None),
            )
        )
    return summaries


# --------------------------------------------------------------------------
# bound tables
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundQuery:
    """One bound-table grid point; optional fields select which bounds apply."""

    L: int
    alpha: float | None = None
    sigma_sq: float | None = None
    eps: float | None = None
    n: int | None = None
    L_prime: int | None = None

    def resolved_sigma_sq(self) -> float | None:
        if self.sigma_sq is not None:
            return self.sigma_sq
        if self.alpha is not None:
            return self.L / (self.alpha * math.log(self.L))
        return None


def _bound_rows(query: BoundQuery) -> list[dict]:
    """Evaluate every bound applicable to the query; domain violations
    surface as valid=false rows."""
    rows: list[dict] = []
    sigma_sq = query.resolved_sigma_sq()

    def base(name: str) -> dict:
        return {
            "name": name,
            "L": query.L,
            "L_prime": query.L_prime,
            "alpha": query.alpha,
            "sigma_sq": sigma_sq,
            "n": query.n,
            "eps": query.eps,
            "value": None,
            "valid": False,
        }

    def attempt(name: str, fn) -> None:
        row = base(name)
        try:
            value = fn()
        except ValueError:
            rows.append(row)
            return
        if isinstance(value, bounds_mod.BoundReport):
            row["value"] = value.value if value.valid else None
            row["valid"] = value.valid
        else:
            row["value"] = value
            row["valid"] = True
        rows.append(row)

    if query.eps is not None:
        attempt("rdf_lower_bound", lambda: bounds_mod.rdf_lower_bound(query.L, query.eps))
    if sigma_sq is not None and query.n is not None:
        attempt(
            "mse_lower_bound_awgn_style",
            lambda: bounds_mod.mse_lower_bound_awgn_style(query.L, sigma_sq, query.n),
        )
        attempt("mi_awgn", lambda: bounds_mod.mi_awgn(query.L, sigma_sq, query.n))
    if sigma_sq is not None:
        attempt(
            "mi_upper_bound_low_snr",
            lambda: bounds_mod.mi_upper_bound_low_snr(query.L, sigma_sq),
        )
        attempt("capacity_awgn", lambda: bounds_mod.capacity_endpoints(query.L, sigma_sq)[0])
        attempt("capacity_const", lambda: bounds_mod.capacity_endpoints(query.L, sigma_sq)[1])
    if query.alpha is not None and query.eps is not None:
        attempt(
            "low_snr_sample_complexity_bound",
            lambda: bounds_mod.low_snr_sample_complexity_bound(query.L, query.alpha, query.eps),
        )
    if (
        query.L_prime is not None
        and query.alpha is not None
        and query.eps is not None
        and query.n is not None
    ):
        row_names = ("pmra_sample_lower", "pmra_mi_cap", "pmra_mse_floor")
        try:
            reports = bounds_mod.pmra_bounds(
                query.L, query.L_prime, query.alpha, query.eps, query.n
            )
        except ValueError:
            for name in row_names:
                rows.append(base(name))
        else:
            for report in reports:
                row = base(report.name)
                row["value"] = report.value if report.valid else None
                row["valid"] = report.valid
                rows.append(row)
    return rows


_BOUND_NAMES = (
    "rdf_lower_bound",
    "mse_lower_bound_awgn_style",
    "mi_awgn",
    "mi_upper_bound_low_snr",
    "capacity_awgn",
    "capacity_const",
    "low_snr_sample_complexity_bound",
    "pmra_sample_lower",
    "pmra_mi_cap",
    "pmra_mse_floor",
)


def run_bound_table(
    queries: list[BoundQuery],
    output_path: str | Path,
    names: list[str] | None = None,
) -> Path:
    """Evaluate all queries and write the bound-table CSV.

    By default every bound whose inputs the query provides is emitted;
    ``names`` restricts the table to the listed bounds (one row per query
    per listed bound that applies), which is how single-bound grids, e.g.
    for scaling studies, are produced.
    """
    if names is not None:
        unknown = sorted(set(names) - set(_BOUND_NAMES))
        if unknown:
            raise ValueError(f"unknown bound names {unknown}; choose from {list(_BOUND_NAMES)}")
    out = Path(output_path)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(BOUND_COLUMNS)
        for query in queries:
            for row in _bound_rows(query):
                if names is not None and row["name"] not in names:
                    continue
                writer.writerow(
                    [
                        row["name"],
                        str(row["L"]),
                        "" if row["L_prime"] is None else str(row["L_prime"]),
                        "" if row["alpha"] is None else repr(float(row["alpha"])),
                        "" if row["sigma_sq"] is None else repr(float(row["sigma_sq"])),
                        "" if row["n"] is None else str(row["n"]),
                        "" if row["eps"] is None else repr(float(row["eps"])),
                        "" if row["value"] is None else repr(float(row["value"])),
                        "true" if row["valid"] else "false",
                    ]
                )
    return out


# --------------------------------------------------------------------------
# measurement container
# --------------------------------------------------------------------------

_MEASUREMENT_TAG = "mra-measurements-v1"


def save_measurements(ms: MeasurementSet, path: str | Path) -> Path:
    """Write a measurement set to the CSV container documented above."""
    out = Path(path)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([_MEASUREMENT_TAG])
        writer.writerow(
            [
                str(ms.noise.L),
                "" if ms.noise.L_prime is None else str(ms.noise.L_prime),
                str(ms.n),
                repr(float(ms.noise.sigma_sq)),
                repr(float(ms.noise.alpha)),
                str(ms.seed),
                ms.lineage,
            ]
        )
        writer.writerow(
            [] if ms.mask is None else [";".join(str(i) for i in ms.mask.kept)]
        )
        for shift, obs in zip(ms.true_shifts, ms.observations):
            writer.writerow([str(int(shift))] + [repr(float(v)) for v in obs])
    return out


def load_measurements(path: str | Path) -> MeasurementSet:
    """Read a measurement set back; floats round-trip exactly."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        tag = next(reader, None)
        if not tag or tag[0] != _MEASUREMENT_TAG:
            raise ValueError(f"{path} is not a {_MEASUREMENT_TAG} container")
        header = next(reader)
        L = int(header[0])
        L_prime = None if header[1] == "" else int(header[1])
        n = int(header[2])
        sigma_sq = float(header[3])
        alpha = float(header[4])
        seed = int(header[5])
        lineage = header[6]
        mask_row = next(reader)
        mask = None
        if mask_row and mask_row[0] != "":
            kept = np.array([int(tok) for tok in mask_row[0].split(";")], dtype=np.int64)
            mask = ProjectionMask(L=L, kept=kept)
        width = L if mask is None else mask.L_prime
        shifts = np.empty(n, dtype=np.int64)
        obs = np.empty((n, width))
        for i, record in enumerate(r for r in reader if r):
            shifts[i] = int(record[0])
            obs[i] = [float(tok) for tok in record[1:]]
    noise = NoiseModel(L=L, sigma_sq=sigma_sq, alpha=alpha, L_prime=L_prime)
    return MeasurementSet(
        observations=obs, true_shifts=shifts, noise=noise, mask=mask, seed=seed, lineage=lineage
    )
