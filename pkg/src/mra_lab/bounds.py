"""Information-theoretic bounds for shift-orbit estimation, all in nats.

The chain that motivates these quantities: to recover the signal orbit to
per-coordinate distortion eps one must extract roughly the rate-distortion
content of the orbit source from the observations, while each observation
carries at most its channel mutual information.  Dividing the two gives
sample-complexity lower bounds; exponentiating the data-processing
inequality gives MSE floors.  Everything uses the natural logarithm and the
alpha parameterization sigma^2 = L / (alpha ln L) from :mod:`.model`.

Two mutual-information upper bounds are provided for a single observation
Y = R X + sigma Z:

* ``mi_awgn`` -- the translation-channel cap (L/2) ln(1 + n / sigma^2),
  which ignores the shift ambiguity and is tight at high SNR;
* ``mi_upper_bound_low_snr`` -- an exact finite-L bound obtained by pushing
  the noise and signal expectations inside the log partition function.  Its
  shift-ell term is the Gaussian quadratic-form log-MGF

      psi_ell = -(1/2) * sum_k ln(1 - 2 sigma^{-2} cos(2 pi k ell / L)),

  which requires sigma^2 > 2 (otherwise the ell = 0 moment diverges and the
  bound is reported invalid).

``mi_monte_carlo`` estimates the same mutual information without the
push-through steps: conditioned on a draw of (X, Z) the average over the L
shifts is computed exactly, so the only sampling noise is over (X, Z).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as _fft
from scipy.special import logsumexp

from .model import sigma_sq_from_alpha

__all__ = [
    "BoundReport",
    "rdf_lower_bound",
    "mse_lower_bound_awgn_style",
    "mi_awgn",
    "mi_upper_bound_low_snr",
    "mi_low_snr_asymptotic",
    "mi_monte_carlo",
    "sample_complexity_lower_bound",
    "mse_lower_bound_from_mi",
    "low_snr_sample_complexity_bound",
    "pmra_bounds",
    "capacity_endpoints",
]


@dataclass(frozen=True)
class BoundReport:
    """A bound value plus whether its preconditions held."""

    name: str
    value: float
    valid: bool
    precondition_note: str = ""


def _check_L(L: int) -> None:
    if L < 2:
        raise ValueError(f"L must be >= 2, got {L}")


def rdf_lower_bound(L: int, eps: float) -> float:
    """Rate needed to describe the signal orbit to distortion eps:
    (L/2) ln(1/eps) - ln L.

    The ln L discount is the most the shift ambiguity can save.  Only
    meaningful for eps in (0, 1); eps >= 1 is a domain error (zero rate
    suffices at or above the prior variance).
    """
    _check_L(L)
    if not (0.0 < eps < 1.0):
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    return 0.5 * L * math.log(1.0 / eps) - math.log(L)


def mse_lower_bound_awgn_style(L: int, sigma_sq: float, n: int) -> float:
    """Orbit-MSE floor after n observations: L^{-2/L} / (1 + n / sigma^2).

    The aligned-channel 1/(1 + n/sigma^2) floor, relaxed by the factor
    L^{-2/L} that the shift ambiguity can shave off.
    """
    _check_L(L)
    if sigma_sq <= 0:
        raise ValueError(f"sigma_sq must be positive, got {sigma_sq}")
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    return L ** (-2.0 / L) / (1.0 + n / sigma_sq)


def mi_awgn(L: int, sigma_sq: float, n: int) -> float:
    """Mutual information cap for n observations with alignment known:
    (L/2) ln(1 + n / sigma^2)."""
    _check_L(L)
    if sigma_sq <= 0:
        raise ValueError(f"sigma_sq must be positive, got {sigma_sq}")
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    return 0.5 * L * math.log(1.0 + n / sigma_sq)


def _psi_values(L: int, sigma_sq: float) -> np.ndarray:
    """psi_ell = -(1/2) sum_k ln(1 - 2 sigma^{-2} cos(2 pi k ell / L)), all ell."""
    k = np.arange(L)
    cos_table = np.cos(2.0 * np.pi * np.outer(np.arange(L), k) / L)
    args = 1.0 - (2.0 / sigma_sq) * cos_table
    return -0.5 * np.sum(np.log(args), axis=1)


def mi_upper_bound_low_snr(L: int, sigma_sq: float) -> BoundReport:
    """Exact finite-L upper bound on the single-observation mutual information.

        value = (L/2) ln(1 + sigma^{-2}) - L/(2 sigma^2)
                + ln sum_ell exp(psi_ell) - ln L

    Requires sigma^2 > 2; below that the ell = 0 log-MGF diverges and the
    report comes back invalid.  The precondition note records the asymptotic
    shape ln(1 + e^{L/sigma^2} / L) of the same bound for reference (see
    :func:`mi_low_snr_asymptotic`).
    """
    _check_L(L)
    if sigma_sq <= 0:
        raise ValueError(f"sigma_sq must be positive, got {sigma_sq}")
    name = "mi_upper_bound_low_snr"
    if sigma_sq <= 2.0:
        return BoundReport(
            name=name,
            value=float("nan"),
            valid=False,
            precondition_note=f"requires sigma_sq > 2, got {sigma_sq}",
        )
    psi = _psi_values(L, sigma_sq)
    value = (
        0.5 * L * math.log1p(1.0 / sigma_sq)
        - 0.5 * L / sigma_sq
        + float(logsumexp(psi))
        - math.log(L)
    )
    asym = mi_low_snr_asymptotic(L, sigma_sq)
    return BoundReport(
        name=name,
        value=float(value),
        valid=True,
        precondition_note=f"sigma_sq > 2 holds; asymptotic form ln(1+exp(L/sigma^2)/L) = {asym:.6g}",
    )


def mi_low_snr_asymptotic(L: int, sigma_sq: float) -> float:
    """Leading-order shape ln(1 + e^{L/sigma^2} / L) of the low-SNR MI bound.

    Evaluated in log space so large L / sigma^2 does not overflow.
    """
    _check_L(L)
    if sigma_sq <= 0:
        raise ValueError(f"sigma_sq must be positive, got {sigma_sq}")
    return float(np.logaddexp(0.0, L / sigma_sq - math.log(L)))


def mi_monte_carlo(L: int, sigma_sq: float, T: int, seed: int) -> tuple[float, float]:
    """Monte Carlo estimate of the single-observation mutual information.

        I = (L/2) ln(1 + sigma^{-2}) - L / sigma^2
            + E_{X,Z} ln E_R exp(sigma^{-2} <X + sigma Z, R X>)

    The inner average over the L shifts is computed exactly per draw, so
    the returned standard error std(term)/sqrt(T) covers all the sampling
    noise.  Returns (estimate, standard_error).

    L = 1 is allowed as a sanity case: the shift group is trivial and the
    estimate reduces to the scalar Gaussian MI (1/2) ln(1 + sigma^{-2}).
    """
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    if sigma_sq <= 0:
        raise ValueError(f"sigma_sq must be positive, got {sigma_sq}")
    if T < 2:
        raise ValueError(f"need T >= 2 draws for a standard error, got T={T}")
    rng = np.random.default_rng(seed)
    sigma = math.sqrt(sigma_sq)
    X = rng.standard_normal((T, L))
    Znoise = rng.standard_normal((T, L))
    Yobs = X + sigma * Znoise
    # corr[t, ell] = <Y_t, R_ell X_t>
    corr = _fft.irfft(_fft.rfft(X, axis=1) * np.conj(_fft.rfft(Yobs, axis=1)), n=L, axis=1)
    terms = logsumexp(corr / sigma_sq, axis=1) - math.log(L)
    estimate = 0.5 * L * math.log1p(1.0 / sigma_sq) - L / sigma_sq + float(np.mean(terms))
    std_error = float(np.std(terms, ddof=1) / math.sqrt(T))
    return estimate, std_error


def sample_complexity_lower_bound(L: int, eps: float, mi_per_observation: float) -> float:
    """Observations needed for orbit distortion eps when each observation
    carries at most ``mi_per_observation`` nats:

        n >= (L/2) (ln(1/eps) - 2 ln L / L) / mi_per_observation.

    Returns the (possibly fractional) bound; at eps = L^{-2/L} it crosses
    zero, and for larger eps it is vacuous but still reported.
    """
    _check_L(L)
    if not (0.0 < eps < 1.0):
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if mi_per_observation <= 0:
        raise ValueError(f"mi_per_observation must be positive, got {mi_per_observation}")
    return 0.5 * L * (math.log(1.0 / eps) - 2.0 * math.log(L) / L) / mi_per_observation


def mse_lower_bound_from_mi(L: int, mi_total: float) -> float:
    """MSE floor implied by a total information budget of ``mi_total`` nats:
    exp(-(2 mi_total + 2 ln L) / L)."""
    _check_L(L)
    if mi_total < 0:
        raise ValueError(f"mi_total must be >= 0, got {mi_total}")
    return math.exp(-(2.0 * mi_total + 2.0 * math.log(L)) / L)


def low_snr_sample_complexity_bound(L: int, alpha: float, eps: float) -> BoundReport:
    """Sample-complexity lower bound in the very low SNR regime (alpha < 1),
    chaining :func:`sample_complexity_lower_bound` through
    :func:`mi_upper_bound_low_snr` at sigma^2 = L / (alpha ln L).

    Grows like L^{2 - alpha} on the alpha < 1 branch (log-log slope
    2 - alpha in L).  Outside 0 < alpha < 1 the premise fails and the
    report is invalid.
    """
    _check_L(L)
    if not (0.0 < eps < 1.0):
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    name = "low_snr_sample_complexity_bound"
    if not (0.0 < alpha < 1.0):
        return BoundReport(
            name=name,
            value=float("nan"),
            valid=False,
            precondition_note=f"requires 0 < alpha < 1, got {alpha}",
        )
    sigma_sq = sigma_sq_from_alpha(L, alpha)
    mi = mi_upper_bound_low_snr(L, sigma_sq)
    if not mi.valid:
        return BoundReport(
            name=name, value=float("nan"), valid=False, precondition_note=mi.precondition_note
        )
    value = sample_complexity_lower_bound(L, eps, mi.value)
    return BoundReport(
        name=name,
        value=value,
        valid=True,
        precondition_note=f"alpha={alpha} < 1; sigma_sq={sigma_sq:.6g}",
    )


def pmra_bounds(L: int, L_prime: int, alpha: float, eps: float, n: int) -> list[BoundReport]:
    """Bounds for the projected model that keeps L' of the L coordinates,
    at sigma^2 = L' / (alpha ln L):

    * ``pmra_sample_lower`` -- observations needed for distortion eps,
      (L/L') (1/eps - 1) sigma^2;
    * ``pmra_mi_cap`` -- total information cap (L/2) ln(1 + (L'/L) n / sigma^2);
    * ``pmra_mse_floor`` -- the MSE floor implied by that cap via
      :func:`mse_lower_bound_from_mi`.
    """
    _check_L(L)
    if not (1 <= L_prime <= L):
        raise ValueError(f"L_prime must be in [1, L], got {L_prime}")
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if not (0.0 < eps < 1.0):
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    sigma_sq = L_prime / (alpha * math.log(L))
    note = f"sigma_sq = L'/(alpha ln L) = {sigma_sq:.6g}"
    sample_lower = (L / L_prime) * (1.0 / eps - 1.0) * sigma_sq
    mi_cap = 0.5 * L * math.log1p((L_prime / L) * n / sigma_sq)
    mse_floor = mse_lower_bound_from_mi(L, mi_cap)
    return [
        BoundReport("pmra_sample_lower", float(sample_lower), True, note),
        BoundReport("pmra_mi_cap", float(mi_cap), True, note),
        BoundReport("pmra_mse_floor", float(mse_floor), True, note),
    ]


def capacity_endpoints(L: int, sigma_sq: float) -> tuple[float, float]:
    """Two ways L coordinates can share the information budget at noise
    sigma^2: spread evenly, c_awgn = (L/2) ln(1 + 1/sigma^2), or packed
    into one coordinate, c_const = (1/2) ln(1 + L/sigma^2).

    Spreading always wins (c_awgn >= c_const, log concavity); the gap is
    the structural cost quantified by the low-SNR MI bound.  L = 1 is
    allowed as the sanity case where the two endpoints coincide.
    """
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    if sigma_sq <= 0:
        raise ValueError(f"sigma_sq must be positive, got {sigma_sq}")
    c_awgn = 0.5 * L * math.log1p(1.0 / sigma_sq)
    c_const = 0.5 * math.log1p(L / sigma_sq)
    return c_awgn, c_const
