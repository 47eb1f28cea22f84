"""Estimators: template matching, pairwise sync, genie averaging, EM, and
the two-stage net-search procedure.

All of them reduce to scanning the L circular correlations of an
observation against some reference; they differ in where the reference
comes from and what is done with the alignment.

* ``template_match`` knows the true signal and asks only for the shift;
  per-observation recovery flips from easy to impossible around alpha = 2.
* ``synchronize_pair`` aligns two observations to each other, which is the
  much harder relative problem (usable only up to roughly sigma^2 ~ sqrt(L)).
* ``genie_align_average`` aligns every observation against the true signal
  and averages; it tracks the aligned-channel MSE above the transition and
  is the reference curve estimators are judged against.
* ``em_estimate`` is the practical algorithm: soft posterior weights over
  shifts (E-step), weighted circular deconvolution (M-step).
* ``brute_force_stage1`` / ``align_average_stage2`` implement the
  theory-driven two-stage procedure: pick the best template out of a sphere
  net by thresholded-correlation voting on one slice of the data, then
  align-and-average the disjoint second slice against it.

Sample-splitting contract: stage 2 must not reuse the observations that
chose the template.  MeasurementSet lineage tags make the violation
detectable; it is reported as a warning rather than an error so that
deliberately degenerate diagnostics remain expressible.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as _fft

from .model import (
    MeasurementSet,
    _as_signal,
    batch_correlations,
    circular_correlations,
    sample_signal,
    sigma_sq_from_alpha,
)

__all__ = [
    "EstimateResult",
    "EmConfig",
    "template_match",
    "template_match_error_rate",
    "synchronize_pair",
    "genie_align_average",
    "em_estimate",
    "likely_shifts",
    "SphereNet",
    "build_sphere_net",
    "stage1_score",
    "brute_force_stage1",
    "align_average_stage2",
    "two_stage_estimate",
    "clamp_norm",
    "default_eta",
    "stage1_sample_rule",
    "stage2_sample_rule",
]

# Memory budget for a sphere net: points * L must stay under this many
# float64 elements (~1 GiB).
_NET_BUDGET_ELEMENTS = 1 << 27

# Ascent slack for the EM objective trace; violations beyond this indicate
# a broken E/M step rather than roundoff.
EM_ASCENT_SLACK = 1e-8


@dataclass
class EstimateResult:
    """Signal estimate plus whatever diagnostics the estimator can offer."""

    xhat: np.ndarray
    shift_estimates: np.ndarray | None = None
    trace: list[tuple[int, float]] = field(default_factory=list)
    meta: dict = field(default_factory=dict)


# --------------------------------------------------------------------------
# alignment primitives
# --------------------------------------------------------------------------


def template_match(template: np.ndarray, y: np.ndarray) -> int:
    """Most likely shift of y relative to a known template:
    argmax_ell <template, R_ell^{-1} y>, ties to the smallest index."""
    c = circular_correlations(template, y)  # c[ell] = <R_ell template, y>
    return int(np.argmax(c))


def template_match_error_rate(L: int, alpha: float, trials: int, seed: int) -> float:
    """Fraction of fresh instances where template matching misses the shift.

    Each trial draws its own signal, shift, and noise from an independent
    substream of ``seed``, so the estimate is reproducible and trials could
    be distributed in any order.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    sigma = math.sqrt(sigma_sq_from_alpha(L, alpha))
    errors = 0
    for t in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(t,)))
        x = rng.standard_normal(L)
        ell = int(rng.integers(0, L))
        y = np.roll(x, -ell) + sigma * rng.standard_normal(L)
        if template_match(x, y) != ell:
            errors += 1
    return errors / trials


def synchronize_pair(y1: np.ndarray, y2: np.ndarray) -> int:
    """Relative shift estimate between two observations:
    argmax_ell <y1, R_ell^{-1} y2>."""
    return int(np.argmax(circular_correlations(y1, y2)))


def _align_inverse(Y: np.ndarray, shifts: np.ndarray) -> np.ndarray:
    """Rows R_{shifts[i]}^{-1} Y[i], via one fancy-indexed gather."""
    n, L = Y.shape
    cols = (np.arange(L)[None, :] - shifts[:, None]) % L
    return Y[np.arange(n)[:, None], cols]


def genie_align_average(x_true: np.ndarray, ms: MeasurementSet) -> EstimateResult:
    """Align every observation against the true signal, undo the estimated
    shifts, and average.

    The one estimator allowed to read ``ms.true_shifts`` (for its
    misaligned-fraction diagnostic).  Above the matching transition it
    attains the aligned-channel MSE sigma^2 / n, i.e. RMSE
    1/sqrt(1 + 100 alpha) at n = 100 L / ln L.
    """
    x_true = _as_signal(x_true)
    if ms.mask is not None:
        raise ValueError("genie alignment is defined for unprojected observations only")
    if ms.n == 0:
        raise ValueError("cannot average an empty measurement set")
    if x_true.shape[0] != ms.L:
        raise ValueError(f"template length {x_true.shape[0]} != L={ms.L}")
    C = batch_correlations(x_true, ms.observations)  # C[i, ell] = <Y_i, R_ell x>
    ell_hat = C.argmax(axis=1)
    xhat = _align_inverse(ms.observations, ell_hat).mean(axis=0)
    misaligned = float(np.mean(ell_hat != ms.true_shifts))
    return EstimateResult(
        xhat=xhat,
        shift_estimates=ell_hat.astype(np.int64),
        meta={"misaligned_fraction": misaligned},
    )


# --------------------------------------------------------------------------
# expectation-maximization
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class EmConfig:
    """EM knobs.  Defaults: 200 iteration cap, relative-change stop at 1e-6,
    5 random restarts, prior shrinkage on."""

    max_iters: int = 200
    rel_tol: float = 1e-6
    restarts: int = 5
    shrinkage: bool = True

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.rel_tol <= 0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.restarts < 1:
            raise ValueError(f"restarts must be >= 1, got {self.restarts}")


def _em_objective_terms(C_over_s2: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Row-stabilized softmax pieces: per-row max m, exp(C - m), and the
    log-evidence sum(m + log rowsum)."""
    m = C_over_s2.max(axis=1)
    W = np.exp(C_over_s2 - m[:, None])
    s = W.sum(axis=1)
    evidence = float(m.sum() + np.log(s).sum())
    W /= s[:, None]
    return W, s, evidence


def _em_single_run(Y, Yf, sigma_sq, x0, cfg: EmConfig):
    n, L = Y.shape
    # objective = sum_i logsumexp_ell(<Y_i, R_ell x>/sigma^2) - pen * ||x||^2,
    # the log posterior up to additive terms that do not involve x.
    pen = 0.5 * (n / sigma_sq + (1.0 if cfg.shrinkage else 0.0))
    denom = n + (sigma_sq if cfg.shrinkage else 0.0)
    x = x0.copy()
    trace: list[tuple[int, float]] = []
    converged = False
    for t in range(cfg.max_iters):
        C = _fft.irfft(_fft.rfft(x)[None, :] * np.conj(Yf), n=L, axis=1)
        C /= sigma_sq
        W, _, evidence = _em_objective_terms(C)
        obj = evidence - pen * float(x @ x)
        if not math.isfinite(obj):
            raise RuntimeError(
                f"EM objective became non-finite at iteration {t} "
                f"(||x|| = {np.linalg.norm(x):.3g}, sigma_sq = {sigma_sq:.3g})"
            )
        trace.append((t, obj))
        Sf = np.einsum("ij,ij->j", _fft.rfft(W, axis=1), Yf)
        x_new = _fft.irfft(Sf, n=L) / denom
        rel = np.linalg.norm(x_new - x) / max(np.linalg.norm(x), 1e-300)
        x = x_new
        if rel < cfg.rel_tol:
            converged = True
            break
    # close the trace with the objective at the returned iterate
    C = _fft.irfft(_fft.rfft(x)[None, :] * np.conj(Yf), n=L, axis=1)
    C /= sigma_sq
    _, _, evidence = _em_objective_terms(C)
    final_obj = evidence - pen * float(x @ x)
    trace.append((len(trace), final_obj))
    return x, trace, converged


def em_estimate(
    ms: MeasurementSet,
    config: EmConfig | None = None,
    seed: int = 0,
    x0: np.ndarray | None = None,
) -> EstimateResult:
    """EM for the shift-mixture model.

    E-step: posterior shift weights w_{i,ell} proportional to
    exp(<Y_i, R_ell x> / sigma^2) (the ||R_ell x||^2 term is
    shift-independent and cancels).  M-step:

        x  <-  (sum_i sum_ell w_{i,ell} R_ell^{-1} Y_i) / (n + [shrinkage] sigma^2),

    i.e. weighted circular deconvolution, computed in the Fourier domain.
    Each restart initializes from an N(0, I) draw scaled to norm sqrt(L)
    (``x0``, when given, replaces the first restart's initializer).  Runs
    stop at relative parameter change below ``rel_tol`` or at the iteration
    cap; the best restart by final objective wins.  The recorded trace is
    monotone non-decreasing up to roundoff (EM ascent property).
    """
    cfg = config or EmConfig()
    if ms.mask is not None:
        raise ValueError("EM is defined for unprojected observations only")
    if ms.n == 0:
        raise ValueError("cannot run EM on an empty measurement set")
    sigma_sq = ms.noise.sigma_sq
    if sigma_sq <= 0:
        raise ValueError("EM requires sigma_sq > 0 (posterior degenerates at zero noise)")
    Y = ms.observations
    L = ms.L
    Yf = _fft.rfft(Y, axis=1)

    best = None
    for k in range(cfg.restarts):
        if k == 0 and x0 is not None:
            x_init = _as_signal(x0).copy()
            if x_init.shape[0] != L:
                raise ValueError(f"x0 has length {x_init.shape[0]}, expected {L}")
        else:
            rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(k,)))
            x_init = rng.standard_normal(L)
            x_init *= math.sqrt(L) / np.linalg.norm(x_init)
        x, trace, converged = _em_single_run(Y, Yf, sigma_sq, x_init, cfg)
        final_obj = trace[-1][1]
        if best is None or final_obj > best[1]:
            best = (x, final_obj, trace, converged, k)

    x, final_obj, trace, converged, k = best
    return EstimateResult(
        xhat=x,
        shift_estimates=None,
        trace=trace,
        meta={
            "objective": final_obj,
            "iterations": len(trace) - 1,
            "converged": converged,
            "restart": k,
            "restarts": cfg.restarts,
        },
    )


# --------------------------------------------------------------------------
# likely-shift sets and the two-stage net procedure
# --------------------------------------------------------------------------


def likely_shifts(x: np.ndarray, y: np.ndarray, tau: float) -> set[int]:
    """Shifts whose normalized correlation clears 1 - tau:
    { ell : <x, R_ell^{-1} y> / ||x||^2 >= 1 - tau }."""
    x = _as_signal(x)
    norm_sq = float(x @ x)
    if norm_sq == 0.0:
        raise ValueError("template must be nonzero")
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    c = circular_correlations(x, y)  # c[ell] = <R_ell x, y> = <x, R_ell^{-1} y>
    return {int(ell) for ell in np.nonzero(c / norm_sq >= 1.0 - tau)[0]}


def default_eta(alpha: float) -> float:
    """Default net resolution (1 - sqrt(2/alpha))^2 / 16.

    Keeps sqrt(eta) at a quarter of the alignment margin 1 - sqrt(2/alpha),
    inside the sqrt(eta) < (1 - sqrt(2/alpha))/2 regime where thresholded
    scoring separates aligned from unaligned templates.  Needs alpha > 2.
    """
    if alpha <= 2.0:
        raise ValueError(f"default eta needs alpha > 2, got {alpha}")
    return (1.0 - math.sqrt(2.0 / alpha)) ** 2 / 16.0


def stage1_sample_rule(sigma_sq: float, eta: float, scale: float = 4.0) -> int:
    """Stage-1 sample budget ceil(scale * sigma^2 * ln(1/eta) / eta^2)."""
    if not (0.0 < eta < 1.0):
        raise ValueError(f"eta must lie in (0, 1), got {eta}")
    if sigma_sq <= 0:
        raise ValueError(f"sigma_sq must be positive, got {sigma_sq}")
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    return int(math.ceil(scale * sigma_sq * math.log(1.0 / eta) / eta**2))


def stage2_sample_rule(sigma_sq: float, eps: float, gamma: float = 1.2) -> int:
    """Stage-2 sample budget ceil(gamma * sigma^2 / eps)."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if sigma_sq <= 0:
        raise ValueError(f"sigma_sq must be positive, got {sigma_sq}")
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    return int(math.ceil(gamma * sigma_sq / eps))


@dataclass
class SphereNet:
    """Finite set of unit vectors searched by stage 1."""

    points: np.ndarray  # (m, L)
    eta: float
    strategy: str

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError(f"net points must be a nonempty (m, L) array, got {pts.shape}")
        norms = np.linalg.norm(pts, axis=1)
        if np.max(np.abs(norms - 1.0)) > 1e-10:
            raise ValueError("net points must have unit norm (tolerance 1e-10)")
        self.points = pts

    @property
    def size(self) -> int:
        return int(self.points.shape[0])


def _unit_perturbation(base: np.ndarray, dist: float, rng: np.random.Generator) -> np.ndarray:
    """Unit vector at exact Euclidean distance ``dist`` from unit ``base``."""
    L = base.shape[0]
    if dist == 0.0:
        return base.copy()
    v = rng.standard_normal(L)
    v -= (v @ base) * base
    v /= np.linalg.norm(v)
    theta = 2.0 * math.asin(dist / 2.0)
    p = math.cos(theta) * base + math.sin(theta) * v
    return p / np.linalg.norm(p)


def build_sphere_net(
    L: int,
    eta: float,
    strategy: str = "random",
    size_cap: int = 4096,
    seed: int = 0,
    plant: np.ndarray | None = None,
) -> SphereNet:
    """Net of unit vectors for the stage-1 search.

    ``random`` draws ``size_cap`` uniform points on the sphere.  ``planted``
    additionally appends perturbations of ``plant`` (normalized) at exact
    distances {0, sqrt(eta)/2, sqrt(eta)} -- a validation aid that plants a
    known-good template so desk-scale runs exercise the selection logic
    rather than net luck.
    """
    if L < 2:
        raise ValueError(f"L must be >= 2, got {L}")
    if not (0.0 < eta <= 1.0):
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    if size_cap < 1:
        raise ValueError(f"size_cap must be >= 1, got {size_cap}")
    if size_cap * L > _NET_BUDGET_ELEMENTS:
        raise ValueError(
            f"net of {size_cap} x {L} exceeds the memory budget of "
            f"{_NET_BUDGET_ELEMENTS} elements"
        )
    rng = np.random.default_rng(seed)
    if strategy == "random":
        if plant is not None:
            raise ValueError("plant is only meaningful with strategy='planted'")
        pts = rng.standard_normal((size_cap, L))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        return SphereNet(points=pts, eta=eta, strategy=strategy)
    if strategy == "planted":
        if plant is None:
            raise ValueError("strategy='planted' requires a plant signal")
        base = _as_signal(plant)
        if base.shape[0] != L:
            raise ValueError(f"plant has length {base.shape[0]}, expected {L}")
        nrm = np.linalg.norm(base)
        if nrm == 0:
            raise ValueError("plant must be nonzero")
        base = base / nrm
        pts = rng.standard_normal((size_cap, L))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        root_eta = math.sqrt(eta)
        planted = [
            _unit_perturbation(base, d, rng) for d in (0.0, root_eta / 2.0, root_eta)
        ]
        pts = np.vstack([pts, planted])
        return SphereNet(points=pts, eta=eta, strategy=strategy)
    raise ValueError(f"unknown net strategy {strategy!r}")


def stage1_score(Q: np.ndarray, y: np.ndarray, eta: float) -> int:
    """Thresholded-correlation vote of one observation for one template:
    1 if max_ell L^{-1/2} <y, R_ell^{-1} Q> >= 1 - (3/4) eta, else 0."""
    if not (0.0 < eta <= 1.0):
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    Q = _as_signal(Q)
    L = Q.shape[0]
    c = circular_correlations(y, Q)  # c[ell] = <Q, R_ell y> = <y, R_ell^{-1} Q>
    return int(np.max(c) / math.sqrt(L) >= 1.0 - 0.75 * eta)


# Chunk cap (in float64 elements) for the stage-1 correlation tensor.
_STAGE1_CHUNK_ELEMENTS = 1 << 23


def brute_force_stage1(ms: MeasurementSet, net: SphereNet) -> np.ndarray:
    """Template with the most stage-1 votes over the measurement set
    (ties to the first net point).  Returns a unit vector from the net."""
    if ms.mask is not None:
        raise ValueError("stage 1 is defined for unprojected observations only")
    if ms.n == 0:
        raise ValueError("cannot score templates with zero observations")
    Y = ms.observations
    n, L = Y.shape
    threshold = (1.0 - 0.75 * net.eta) * math.sqrt(L)
    Yf = _fft.rfft(Y, axis=1)
    Qf_all = np.conj(_fft.rfft(net.points, axis=1))

    votes = np.zeros(net.size, dtype=np.int64)
    q_chunk = max(1, _STAGE1_CHUNK_ELEMENTS // max(n * L, 1))
    if q_chunk == 1 and n * L > _STAGE1_CHUNK_ELEMENTS:
        i_chunk = max(1, _STAGE1_CHUNK_ELEMENTS // L)
    else:
        i_chunk = n
    for q0 in range(0, net.size, q_chunk):
        Qf = Qf_all[q0 : q0 + q_chunk]
        for i0 in range(0, n, i_chunk):
            block = Yf[i0 : i0 + i_chunk]
            # corr[i, q, ell] = <Y_i, R_ell^{-1} Q_q>
            corr = _fft.irfft(block[:, None, :] * Qf[None, :, :], n=L, axis=2)
            votes[q0 : q0 + q_chunk] += (corr.max(axis=2) >= threshold).sum(axis=0)
    best = int(np.argmax(votes))
    return net.points[best].copy()


def clamp_norm(x: np.ndarray) -> np.ndarray:
    """Norm guard [x]: returns x unchanged if ||x|| <= 10 sqrt(L), else the
    zero signal (a wild estimate is worse than no estimate)."""
    x = _as_signal(x)
    L = x.shape[0]
    if np.linalg.norm(x) <= 10.0 * math.sqrt(L):
        return x
    return np.zeros(L)


def align_average_stage2(
    ms: MeasurementSet, Q: np.ndarray, q_lineage: str | None = None
) -> EstimateResult:
    """Align every observation to the template Q and average:
    ell_hat_i = argmax_ell <Y_i, R_ell Q>, xhat = mean_i R_{ell_hat_i}^{-1} Y_i.

    The template must come from data disjoint from ``ms``; pass the
    template's lineage tag to have the overlap checked (a match warns).
    """
    Q = _as_signal(Q)
    if ms.mask is not None:
        raise ValueError("stage 2 is defined for unprojected observations only")
    if ms.n == 0:
        raise ValueError("cannot average an empty measurement set")
    if Q.shape[0] != ms.L:
        raise ValueError(f"template length {Q.shape[0]} != L={ms.L}")
    if q_lineage is not None and q_lineage == ms.lineage:
        warnings.warn(
            f"stage-2 observations share seed lineage {ms.lineage!r} with the "
            "stage-1 template; the split contract is violated",
            stacklevel=2,
        )
    C = batch_correlations(Q, ms.observations)  # C[i, ell] = <Y_i, R_ell Q>
    ell_hat = C.argmax(axis=1)
    xhat = _align_inverse(ms.observations, ell_hat).mean(axis=0)
    return EstimateResult(xhat=xhat, shift_estimates=ell_hat.astype(np.int64))


def two_stage_estimate(
    ms: MeasurementSet,
    split: tuple[int, int],
    eta: float,
    net_params: dict | None = None,
    seed: int = 0,
    x_true: np.ndarray | None = None,
    clamp: bool = True,
) -> EstimateResult:
    """Full two-stage procedure on disjoint slices of one measurement set.

    Slices observations [0:n1] for the net vote and [n1:n1+n2] for
    align-and-average, so the lineage tags differ by construction.
    ``net_params`` feeds :func:`build_sphere_net` (keys ``strategy`` and
    ``size_cap``); the ``planted`` strategy plants ``x_true`` and therefore
    requires it.  ``x_true`` is otherwise used only for diagnostics in
    ``meta`` (stage-1 alignment, stage-2 misaligned fraction relative to the
    template's own orientation); the estimate never touches it.
    ``clamp`` applies :func:`clamp_norm` to the final estimate.
    """
    n1, n2 = split
    if n1 < 1 or n2 < 1:
        raise ValueError(f"both split sizes must be >= 1, got {split}")
    if n1 + n2 > ms.n:
        raise ValueError(f"split {split} exceeds available n={ms.n}")
    params = dict(net_params or {})
    strategy = params.pop("strategy", "random")
    size_cap = params.pop("size_cap", 4096)
    if params:
        raise ValueError(f"unknown net_params keys: {sorted(params)}")
    plant = None
    if strategy == "planted":
        if x_true is None:
            raise ValueError("planted net strategy requires x_true")
        plant = x_true

    ms1 = ms.take(0, n1)
    ms2 = ms.take(n1, n1 + n2)
    net = build_sphere_net(
        ms.L, eta, strategy=strategy, size_cap=size_cap, seed=seed, plant=plant
    )
    Q = brute_force_stage1(ms1, net)
    result = align_average_stage2(ms2, Q, q_lineage=ms1.lineage)

    meta: dict = {"n1": n1, "n2": n2, "net_size": net.size, "clamped": False}
    if x_true is not None:
        xt = _as_signal(x_true)
        align_corr = circular_correlations(xt, Q)  # [ell] = <x_true, R_ell^{-1} Q>
        ell_star = int(np.argmax(align_corr))
        meta["stage1_alignment"] = float(align_corr[ell_star] / math.sqrt(ms.L))
        expected = (ms2.true_shifts - ell_star) % ms.L
        meta["stage2_misaligned_fraction"] = float(
            np.mean(result.shift_estimates != expected)
        )
    xhat = result.xhat
    if clamp:
        clamped = clamp_norm(xhat)
        meta["clamped"] = bool(clamped is not xhat and not np.array_equal(clamped, xhat))
        xhat = clamped
    return EstimateResult(
        xhat=xhat, shift_estimates=result.shift_estimates, trace=[], meta=meta
    )
