"""Command-line front end: ``mra-lab <subcommand> [--config file.toml] [flags]``.

Subcommands
-----------
sweep               seeded Monte Carlo sweep over (L, alpha) grids
bounds              evaluate the bound table for a query grid
template-threshold  matched-template error rate across an alpha grid
two-stage-demo      desk-scale run of the two-stage net estimator
mi-estimate         Monte Carlo mutual-information estimate for one point

Config files are TOML with one table per subcommand (dashes spelled as
underscores), e.g.::

    [sweep]
    L = [256]
    alphas = [10.0, 4.0, 2.0, 1.0]
    estimator = "em"
    trials = 30
    seed = 7
    out = "sweep.csv"

    [sweep.estimator_params]
    restarts = 5

Flags override config values.  Exit codes: 0 success, 2 configuration
error (bad flags, missing/bad config file, unknown keys), 3 runtime
failure.  The MRA_LAB_THREADS environment variable overrides --threads.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from .bounds import mi_monte_carlo, mi_upper_bound_low_snr
from .estimators import (
    default_eta,
    stage1_sample_rule,
    stage2_sample_rule,
    template_match_error_rate,
    two_stage_estimate,
)
from .harness import (
    THRESHOLD_COLUMNS,
    BoundQuery,
    ExperimentConfig,
    run_bound_table,
    run_sweep,
    summarize_sweep,
)
from .metrics import rho
from .model import NoiseModel, generate_mra, sample_signal, sigma_sq_from_alpha


class ConfigError(Exception):
    """Bad configuration: wrong keys, missing file, unusable values."""


def _load_config(path: str | None, section: str) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        with open(p, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {p}: {exc}")
    table = data.get(section, {})
    if not isinstance(table, dict):
        raise ConfigError(f"[{section}] must be a table in {p}")
    return table


def _pick(flags: argparse.Namespace, table: dict, key: str, default=None):
    """Flag value if given, else config value, else default."""
    flag_val = getattr(flags, key.replace("-", "_"), None)
    if flag_val is not None:
        return flag_val
    if key in table:
        return table[key]
    return default


def _require(value, name: str):
    if value is None:
        raise ConfigError(f"missing required setting: {name}")
    return value


def _int_list(value) -> list[int]:
    if isinstance(value, str):
        return [int(tok) for tok in value.split(",") if tok.strip() != ""]
    return [int(v) for v in value]


def _float_list(value) -> list[float]:
    if isinstance(value, str):
        return [float(tok) for tok in value.split(",") if tok.strip() != ""]
    return [float(v) for v in value]


# --------------------------------------------------------------------------
# subcommand implementations
# --------------------------------------------------------------------------

_SWEEP_KEYS = {
    "L",
    "alphas",
    "estimator",
    "trials",
    "n",
    "seed",
    "threads",
    "out",
    "estimator_params",
}


def _cmd_sweep(args: argparse.Namespace) -> int:
    table = _load_config(args.config, "sweep")
    unknown = set(table) - _SWEEP_KEYS
    if unknown:
        raise ConfigError(f"unknown [sweep] keys: {sorted(unknown)}")
    params = table.get("estimator_params", {})
    if not isinstance(params, dict):
        raise ConfigError("[sweep.estimator_params] must be a table")
    try:
        config = ExperimentConfig(
            Ls=tuple(_int_list(_require(_pick(args, table, "L"), "L"))),
            alphas=tuple(_float_list(_require(_pick(args, table, "alphas"), "alphas"))),
            estimator=str(_require(_pick(args, table, "estimator"), "estimator")),
            output_path=str(_require(_pick(args, table, "out"), "out")),
            trials=_pick(args, table, "trials"),
            n=_pick(args, table, "n"),
            estimator_params=dict(params),
            master_seed=int(_pick(args, table, "seed", 0)),
            threads=int(_pick(args, table, "threads", 1)),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc))
    out = run_sweep(config)
    for s in summarize_sweep(out):
        line = (
            f"L={s.L} alpha={s.alpha:g}: mean_rmse={s.mean_rmse:.6g} "
            f"trials={s.n_trials} failed={s.n_failed}"
        )
        if s.mean_misaligned is not None:
            line += f" misaligned={s.mean_misaligned:.4g}"
        print(line)
    print(f"wrote {out}")
    return 0


_BOUNDS_KEYS = {"out", "query", "names"}


def _cmd_bounds(args: argparse.Namespace) -> int:
    table = _load_config(args.config, "bounds")
    unknown = set(table) - _BOUNDS_KEYS
    if unknown:
        raise ConfigError(f"unknown [bounds] keys: {sorted(unknown)}")
    queries: list[BoundQuery] = []
    for entry in table.get("query", []):
        if not isinstance(entry, dict):
            raise ConfigError("[[bounds.query]] entries must be tables")
        bad = set(entry) - {"L", "alpha", "sigma_sq", "eps", "n", "L_prime"}
        if bad:
            raise ConfigError(f"unknown query keys: {sorted(bad)}")
        if "L" not in entry:
            raise ConfigError("every bounds query needs L")
        queries.append(
            BoundQuery(
                L=int(entry["L"]),
                alpha=entry.get("alpha"),
                sigma_sq=entry.get("sigma_sq"),
                eps=entry.get("eps"),
                n=entry.get("n"),
                L_prime=entry.get("L_prime"),
            )
        )
    if args.L is not None:
        queries.append(
            BoundQuery(
                L=args.L,
                alpha=args.alpha,
                sigma_sq=args.sigma_sq,
                eps=args.eps,
                n=args.n,
                L_prime=args.L_prime,
            )
        )
    if not queries:
        raise ConfigError("no bound queries given (config [[bounds.query]] or --L flag)")
    out = _require(_pick(args, table, "out"), "out")
    names = _pick(args, table, "names")
    if names is not None and isinstance(names, str):
        names = [tok.strip() for tok in names.split(",") if tok.strip()]
    try:
        path = run_bound_table(queries, out, names=names)
    except ValueError as exc:  # unknown bound name is a config problem
        raise ConfigError(str(exc)) from exc
    print(f"wrote {path} ({len(queries)} queries)")
    return 0


_THRESHOLD_KEYS = {"L", "alphas", "trials", "seed", "out"}


def _cmd_template_threshold(args: argparse.Namespace) -> int:
    table = _load_config(args.config, "template_threshold")
    unknown = set(table) - _THRESHOLD_KEYS
    if unknown:
        raise ConfigError(f"unknown [template_threshold] keys: {sorted(unknown)}")
    L = int(_require(_pick(args, table, "L"), "L"))
    alphas = _float_list(_require(_pick(args, table, "alphas"), "alphas"))
    trials = int(_pick(args, table, "trials", 200))
    seed = int(_pick(args, table, "seed", 0))
    out = _pick(args, table, "out")
    rows = []
    for a_idx, alpha in enumerate(alphas):
        p_e = template_match_error_rate(L, alpha, trials, seed=seed + a_idx)
        sigma_sq = sigma_sq_from_alpha(L, alpha)
        rows.append((L, alpha, sigma_sq, trials, p_e))
        print(f"L={L} alpha={alpha:g}: p_e={p_e:.4f} ({trials} trials)")
    if out is not None:
        import csv

        with open(out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(THRESHOLD_COLUMNS)
            for L_, alpha, sigma_sq, trials_, p_e in rows:
                writer.writerow(
                    [str(L_), repr(float(alpha)), repr(float(sigma_sq)), str(trials_), repr(float(p_e))]
                )
        print(f"wrote {out}")
    return 0


_TWO_STAGE_KEYS = {"L", "alpha", "eta", "eps", "n1", "n2", "net_size", "trials", "seed", "out"}


def _cmd_two_stage_demo(args: argparse.Namespace) -> int:
    table = _load_config(args.config, "two_stage_demo")
    unknown = set(table) - _TWO_STAGE_KEYS
    if unknown:
        raise ConfigError(f"unknown [two_stage_demo] keys: {sorted(unknown)}")
    L = int(_pick(args, table, "L", 16))
    alpha = float(_pick(args, table, "alpha", 8.0))
    try:
        eta = _pick(args, table, "eta")
        eta = default_eta(alpha) if eta is None else float(eta)
        eps = float(_pick(args, table, "eps", 0.1))
        sigma_sq = sigma_sq_from_alpha(L, alpha)
        n1 = _pick(args, table, "n1")
        n1 = stage1_sample_rule(sigma_sq, eta) if n1 is None else int(n1)
        n2 = _pick(args, table, "n2")
        n2 = stage2_sample_rule(sigma_sq, eps, gamma=3.0) if n2 is None else int(n2)
    except ValueError as exc:
        raise ConfigError(str(exc))
    net_size = int(_pick(args, table, "net_size", 128))
    trials = int(_pick(args, table, "trials", 10))
    seed = int(_pick(args, table, "seed", 0))
    out = _pick(args, table, "out")

    noise = NoiseModel.from_alpha(L, alpha)
    successes = 0
    records = []
    for t in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(t,)))
        x = sample_signal(L, rng)
        x *= math.sqrt(L) / np.linalg.norm(x)  # unit-power representative
        data_seed = int(rng.integers(0, 2**63))
        ms = generate_mra(x, n1 + n2, noise, seed=data_seed, lineage=f"demo/t{t}")
        result = two_stage_estimate(
            ms,
            split=(n1, n2),
            eta=eta,
            net_params={"strategy": "planted", "size_cap": net_size},
            seed=data_seed + 1,
            x_true=x,
        )
        d = rho(x, result.xhat)
        ok = d.rho <= eps
        successes += ok
        records.append((t, d.rho, result.meta.get("stage1_alignment")))
        print(
            f"trial {t}: rho={d.rho:.4f} ({'ok' if ok else 'miss'}), "
            f"stage1_alignment={result.meta['stage1_alignment']:.4f}, "
            f"stage2_misaligned={result.meta['stage2_misaligned_fraction']:.3f}"
        )
    print(
        f"success rate: {successes}/{trials} at eps={eps:g} "
        f"(L={L}, alpha={alpha:g}, eta={eta:.5g}, n1={n1}, n2={n2})"
    )
    if out is not None:
        import csv

        with open(out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["trial", "rho", "stage1_alignment"])
            for t, r, a in records:
                writer.writerow([str(t), repr(float(r)), repr(float(a))])
        print(f"wrote {out}")
    return 0


_MI_KEYS = {"L", "alpha", "sigma_sq", "T", "seed"}


def _cmd_mi_estimate(args: argparse.Namespace) -> int:
    table = _load_config(args.config, "mi_estimate")
    unknown = set(table) - _MI_KEYS
    if unknown:
        raise ConfigError(f"unknown [mi_estimate] keys: {sorted(unknown)}")
    L = int(_require(_pick(args, table, "L"), "L"))
    alpha = _pick(args, table, "alpha")
    sigma_sq = _pick(args, table, "sigma_sq")
    if sigma_sq is None and alpha is None:
        raise ConfigError("mi-estimate needs --alpha or --sigma-sq")
    if sigma_sq is None:
        try:
            sigma_sq = sigma_sq_from_alpha(L, float(alpha))
        except ValueError as exc:
            raise ConfigError(str(exc))
    T = int(_pick(args, table, "T", 5000))
    seed = int(_pick(args, table, "seed", 0))
    estimate, se = mi_monte_carlo(L, float(sigma_sq), T, seed)
    print(f"L={L} sigma_sq={float(sigma_sq):.6g} T={T}")
    print(f"mi_estimate={estimate:.6g} se={se:.3g}")
    report = mi_upper_bound_low_snr(L, float(sigma_sq))
    if report.valid:
        print(f"mi_upper_bound={report.value:.6g}")
    else:
        print(f"mi_upper_bound=invalid ({report.precondition_note})")
    return 0


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mra-lab",
        description="Shift-orbit estimation lab: sweeps, bounds, and demos.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="Monte Carlo estimator sweep over (L, alpha)")
    p.add_argument("--config", help="TOML file with a [sweep] table")
    p.add_argument("--L", help="comma-separated signal lengths")
    p.add_argument("--alphas", help="comma-separated alpha grid")
    p.add_argument("--estimator", choices=("genie", "em"))
    p.add_argument("--trials", type=int)
    p.add_argument("--n", type=int, help="observations per trial (default: ceil(100 L / ln L))")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--out", help="sweep CSV path")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("bounds", help="evaluate the bound table")
    p.add_argument("--config", help="TOML file with [bounds] / [[bounds.query]]")
    p.add_argument("--L", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--sigma-sq", dest="sigma_sq", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--L-prime", dest="L_prime", type=int)
    p.add_argument("--names", help="comma-separated bound names to keep (default: all applicable)")
    p.add_argument("--out", help="bound-table CSV path")
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("template-threshold", help="matched-template error rates")
    p.add_argument("--config", help="TOML file with a [template_threshold] table")
    p.add_argument("--L", type=int)
    p.add_argument("--alphas", help="comma-separated alpha grid")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="optional CSV path")
    p.set_defaults(func=_cmd_template_threshold)

    p = sub.add_parser("two-stage-demo", help="desk-scale two-stage estimator demo")
    p.add_argument("--config", help="TOML file with a [two_stage_demo] table")
    p.add_argument("--L", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--n1", type=int)
    p.add_argument("--n2", type=int)
    p.add_argument("--net-size", dest="net_size", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="optional per-trial CSV path")
    p.set_defaults(func=_cmd_two_stage_demo)

    p = sub.add_parser("mi-estimate", help="Monte Carlo mutual information at one point")
    p.add_argument("--config", help="TOML file with a [mi_estimate] table")
    p.add_argument("--L", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--sigma-sq", dest="sigma_sq", type=float)
    p.add_argument("--T", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_mi_estimate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
