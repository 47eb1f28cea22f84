"""Signal model for circular multi-reference alignment.

Each observation is a random cyclic shift of a fixed unknown signal buried
in white Gaussian noise,

    Y_i = R_{l_i} x + sigma * Z_i,      (R_l x)_j = x_{(j + l) mod L},

with the shifts l_i drawn uniformly from {0, ..., L-1} and Z_i standard
normal.  A projected variant composes the shift with a coordinate mask that
keeps L' of the L entries.

Noise levels are parameterized throughout by

    alpha = L / (sigma^2 * ln L)    <=>    sigma^2 = L / (alpha * ln L),

natural logarithm.  All information quantities downstream are in nats.
alpha = 2 is the template-matching phase transition, which is why sweeps
are specified on an alpha grid rather than a raw sigma^2 grid.  For the
projected model the same parameterization is applied to the observed
dimension: sigma^2 = L' / (alpha * ln L).

Conventions fixed here and relied on everywhere else:

* ``apply_shift(x, ell)[j] == x[(j + ell) % L]``; the inverse shift is
  ``apply_shift(y, -ell)`` i.e. R_l^{-1} = R_{(L - l) % L}.
* ``circular_correlations(x, y)[ell] == <y, R_ell x>``, computed with an
  FFT for L >= 16 and by direct summation for smaller L.
* The analysis DFT used by ``nice_signal_check`` is unitary:
  (f_ell)_j = L^{-1/2} exp(2*pi*i*ell*j / L).
* Measurement generation draws an independent counter-based substream per
  measurement (substream i is fully determined by (seed, i)), so data sets
  are reproducible regardless of generation order or threading.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as _fft

__all__ = [
    "sigma_sq_from_alpha",
    "alpha_from_sigma_sq",
    "apply_shift",
    "circular_correlations",
    "sample_signal",
    "NoiseModel",
    "ProjectionMask",
    "MeasurementSet",
    "generate_mra",
    "generate_pmra",
    "shift_sym_eigenvalues",
    "NiceSignalReport",
    "nice_signal_check",
    "default_kappa",
    "measurement_substream",
]

# L below which circular_correlations falls back to direct summation.
_DIRECT_CORR_CUTOFF = 16

# --------------------------------------------------------------------------
# noise parameterization
# --------------------------------------------------------------------------


def sigma_sq_from_alpha(L: int, alpha: float) -> float:
    """Noise variance at signal length L and SNR parameter alpha.

    sigma^2 = L / (alpha * ln L), natural log.
    """
    if L < 2:
        raise ValueError(f"signal length must be >= 2, got L={L}")
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return L / (alpha * math.log(L))


def alpha_from_sigma_sq(L: int, sigma_sq: float) -> float:
    """Inverse of :func:`sigma_sq_from_alpha`: alpha = L / (sigma^2 * ln L)."""
    if L < 2:
        raise ValueError(f"signal length must be >= 2, got L={L}")
    if not sigma_sq > 0:
        raise ValueError(f"sigma_sq must be positive, got {sigma_sq}")
    return L / (sigma_sq * math.log(L))


# --------------------------------------------------------------------------
# shifts and correlations
# --------------------------------------------------------------------------


def apply_shift(x: np.ndarray, ell: int) -> np.ndarray:
    """Cyclic shift: returns R_ell x with (R_ell x)_j = x_{(j + ell) mod L}.

    Any integer ``ell`` is accepted and reduced mod L, so the inverse shift
    is ``apply_shift(y, -ell)``.
    """
    x = _as_signal(x)
    return np.roll(x, -int(ell) % x.shape[0])


def circular_correlations(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """All L inner products of y against cyclic shifts of x.

    Returns the length-L vector c with c[ell] = <y, R_ell x>.  Uses the
    identity c = IDFT(DFT(x) * conj(DFT(y))) for L >= 16 and a direct
    O(L^2) sum below that, where FFT overhead dominates.
    """
    x = _as_signal(x)
    y = _as_signal(y)
    L = x.shape[0]
    if y.shape[0] != L:
        raise ValueError(f"length mismatch: x has L={L}, y has L={y.shape[0]}")
    if L < _DIRECT_CORR_CUTOFF:
        return np.array([y @ np.roll(x, -ell) for ell in range(L)])
    return _fft.irfft(_fft.rfft(x) * np.conj(_fft.rfft(y)), n=L)


def batch_correlations(x: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Row-wise :func:`circular_correlations`: out[i, ell] = <Y[i], R_ell x>.

    Always takes the FFT path; used by estimators on (n, L) observation
    blocks where the batch amortizes the transform cost.
    """
    x = _as_signal(x)
    L = x.shape[0]
    if Y.ndim != 2 or Y.shape[1] != L:
        raise ValueError(f"observations must be (n, {L}), got {Y.shape}")
    return _fft.irfft(_fft.rfft(x)[None, :] * np.conj(_fft.rfft(Y, axis=1)), n=L, axis=1)


def sample_signal(L: int, rng: np.random.Generator) -> np.ndarray:
    """Draw the unknown signal x ~ N(0, I_L)."""
    if L < 1:
        raise ValueError(f"signal length must be >= 1, got L={L}")
    return rng.standard_normal(L)


def _as_signal(x: np.ndarray) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] == 0:
        raise ValueError(f"signal must be a nonempty 1-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("signal has non-finite entries")
    return arr


# --------------------------------------------------------------------------
# noise model / projection mask / measurement sets
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class NoiseModel:
    """Noise level tied to the alpha parameterization.

    ``sigma_sq`` and ``alpha`` are stored together and must satisfy
    sigma^2 = d / (alpha * ln L) where d = L_prime for the projected model
    and d = L otherwise.  sigma_sq = 0 (noiseless diagnostics) is permitted
    and corresponds to alpha = inf.
    """

    L: int
    sigma_sq: float
    alpha: float
    L_prime: int | None = None  # set for the projected variant

    def __post_init__(self):
        if self.L < 2:
            raise ValueError(f"L must be >= 2, got {self.L}")
        if self.sigma_sq < 0:
            raise ValueError(f"sigma_sq must be >= 0, got {self.sigma_sq}")
        if self.L_prime is not None and not (1 <= self.L_prime <= self.L):
            raise ValueError(f"L_prime must be in [1, L], got {self.L_prime}")
        d = self.L if self.L_prime is None else self.L_prime
        if self.sigma_sq == 0:
            if not math.isinf(self.alpha):
                raise ValueError("sigma_sq = 0 requires alpha = inf")
        else:
            expect = d / (self.alpha * math.log(self.L))
            if not math.isclose(self.sigma_sq, expect, rel_tol=1e-9):
                raise ValueError(
                    f"inconsistent noise model: sigma_sq={self.sigma_sq} but "
                    f"d/(alpha ln L)={expect}"
                )

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma_sq)

    @classmethod
    def from_alpha(cls, L: int, alpha: float, L_prime: int | None = None) -> "NoiseModel":
        d = L if L_prime is None else L_prime
        if L < 2:
            raise ValueError(f"L must be >= 2, got {L}")
        if math.isinf(alpha):
            return cls(L=L, sigma_sq=0.0, alpha=math.inf, L_prime=L_prime)
        if not alpha > 0:
            raise ValueError(f"alpha must be positive, got {alpha}")
        return cls(L=L, sigma_sq=d / (alpha * math.log(L)), alpha=alpha, L_prime=L_prime)

    @classmethod
    def from_sigma_sq(cls, L: int, sigma_sq: float, L_prime: int | None = None) -> "NoiseModel":
        d = L if L_prime is None else L_prime
        if L < 2:
            raise ValueError(f"L must be >= 2, got {L}")
        if sigma_sq == 0:
            return cls(L=L, sigma_sq=0.0, alpha=math.inf, L_prime=L_prime)
        if sigma_sq < 0:
            raise ValueError(f"sigma_sq must be >= 0, got {sigma_sq}")
        return cls(L=L, sigma_sq=sigma_sq, alpha=d / (sigma_sq * math.log(L)), L_prime=L_prime)


@dataclass(frozen=True)
class ProjectionMask:
    """Coordinate subset S of {0, ..., L-1}; applying it keeps x[S] in index order."""

    L: int
    kept: np.ndarray  # sorted unique int indices

    def __post_init__(self):
        kept = np.asarray(self.kept, dtype=np.int64)
        if kept.ndim != 1 or kept.size == 0:
            raise ValueError("mask must keep at least one coordinate")
        if np.any(kept < 0) or np.any(kept >= self.L):
            raise ValueError(f"mask indices out of range [0, {self.L})")
        if np.unique(kept).size != kept.size:
            raise ValueError("mask indices must be distinct")
        object.__setattr__(self, "kept", np.sort(kept))

    @property
    def L_prime(self) -> int:
        return int(self.kept.size)

    def apply(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.shape[-1] != self.L:
            raise ValueError(f"mask expects length-{self.L} input, got {v.shape}")
        return v[..., self.kept]


@dataclass
class MeasurementSet:
    """Generated observations plus the bookkeeping needed to reason about them.

    ``true_shifts`` are retained for diagnostics only.  No estimator may read
    them except the genie align-and-average estimator; everything else must
    treat an instance as (observations, noise, mask).  ``lineage`` tags the
    seed ancestry so sample-splitting contracts (stage-1 template vs stage-2
    data) can be checked.
    """

    observations: np.ndarray  # (n, L) or (n, L') for the projected model
    true_shifts: np.ndarray  # (n,) ints in [0, L)
    noise: NoiseModel
    mask: ProjectionMask | None
    seed: int
    lineage: str

    def __post_init__(self):
        obs = np.asarray(self.observations, dtype=np.float64)
        shifts = np.asarray(self.true_shifts, dtype=np.int64)
        if obs.ndim != 2:
            raise ValueError(f"observations must be 2-D, got shape {obs.shape}")
        width = self.noise.L if self.mask is None else self.mask.L_prime
        if obs.shape[0] != shifts.shape[0]:
            raise ValueError("observations and true_shifts disagree on n")
        if obs.shape[0] > 0 and obs.shape[1] != width:
            raise ValueError(f"observations have width {obs.shape[1]}, expected {width}")
        if shifts.size and (shifts.min() < 0 or shifts.max() >= self.noise.L):
            raise ValueError("true_shifts out of range [0, L)")
        self.observations = obs
        self.true_shifts = shifts

    @property
    def n(self) -> int:
        return int(self.observations.shape[0])

    @property
    def L(self) -> int:
        return int(self.noise.L)

    def take(self, start: int, stop: int) -> "MeasurementSet":
        """Contiguous subset with a lineage tag recording the slice."""
        if not (0 <= start <= stop <= self.n):
            raise ValueError(f"bad slice [{start}:{stop}] of n={self.n}")
        return MeasurementSet(
            observations=self.observations[start:stop],
            true_shifts=self.true_shifts[start:stop],
            noise=self.noise,
            mask=self.mask,
            seed=self.seed,
            lineage=f"{self.lineage}[{start}:{stop}]",
        )


def measurement_substream(seed: int, index: int) -> np.random.Generator:
    """Counter-based substream for measurement ``index`` under ``seed``.

    Substream (seed, i) is independent of how many other substreams exist
    and of the order they are drawn in, which is what makes generation
    thread-safe and replayable per measurement.
    """
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def _generate(x, n, noise, seed, mask, lineage):
    x = _as_signal(x)
    L = x.shape[0]
    if L != noise.L:
        raise ValueError(f"signal length {L} does not match noise model L={noise.L}")
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    width = L if mask is None else mask.L_prime
    obs = np.empty((n, width))
    shifts = np.empty(n, dtype=np.int64)
    sigma = noise.sigma
    for i in range(n):
        rng = measurement_substream(seed, i)
        ell = int(rng.integers(0, L))
        shifted = np.roll(x, -ell)
        if mask is not None:
            shifted = shifted[mask.kept]
        obs[i] = shifted + sigma * rng.standard_normal(width)
        shifts[i] = ell
    return MeasurementSet(
        observations=obs, true_shifts=shifts, noise=noise, mask=mask, seed=seed, lineage=lineage
    )


def generate_mra(
    x: np.ndarray, n: int, noise: NoiseModel, seed: int, lineage: str = "mra"
) -> MeasurementSet:
    """n observations Y_i = R_{l_i} x + sigma Z_i with uniform random shifts.

    Measurement i consumes only substream (seed, i): one uniform shift draw,
    then L standard normals.
    """
    if noise.L_prime is not None:
        raise ValueError("noise model is projected; use generate_pmra")
    return _generate(x, n, noise, seed, mask=None, lineage=lineage)


def generate_pmra(
    x: np.ndarray,
    mask: ProjectionMask,
    n: int,
    noise: NoiseModel,
    seed: int,
    lineage: str = "pmra",
) -> MeasurementSet:
    """Projected variant: Y_i = P_S R_{l_i} x + sigma Z_i with Z_i in R^{L'}.

    With the full mask S = {0, ..., L-1} this reproduces generate_mra
    bit-for-bit under the same seed (same substream draw order).
    """
    if noise.L_prime is None:
        raise ValueError("noise model is not projected; use generate_mra")
    if mask.L != noise.L or mask.L_prime != noise.L_prime:
        raise ValueError(
            f"mask (L={mask.L}, L'={mask.L_prime}) does not match noise model "
            f"(L={noise.L}, L'={noise.L_prime})"
        )
    return _generate(x, n, noise, seed, mask=mask, lineage=lineage)


# --------------------------------------------------------------------------
# structural diagnostics
# --------------------------------------------------------------------------


def shift_sym_eigenvalues(L: int, ell: int) -> np.ndarray:
    """Eigenvalues of the symmetrized shift R_ell + R_ell^T.

    The circulant R_ell is diagonalized by the DFT with eigenvalues
    exp(2*pi*i*k*ell/L), so the symmetrization has real spectrum
    {2 cos(2*pi*k*ell / L)}_{k=0..L-1}.  Consequently the eigenvalue sum is
    2L for ell = 0 and 0 otherwise.
    """
    if L < 2:
        raise ValueError(f"L must be >= 2, got {L}")
    ell = int(ell) % L
    return 2.0 * np.cos(2.0 * np.pi * np.arange(L) * ell / L)


def default_kappa(L: int) -> float:
    """Default flatness tolerance 10 ln(L) / sqrt(L) for nice_signal_check."""
    if L < 2:
        raise ValueError(f"L must be >= 2, got {L}")
    return 10.0 * math.log(L) / math.sqrt(L)


@dataclass(frozen=True)
class NiceSignalReport:
    """Outcome of the deterministic signal-regularity screen."""

    autocorr_ok: bool
    max_offdiag: float  # max_{ell != 0} |<x, R_ell x>| / L
    norm_dev: float  # | ||x||^2 / L - 1 |
    dft_supnorm: float  # || F* x ||_inf, unitary DFT
    dft_ok: bool


def nice_signal_check(x: np.ndarray, kappa: float | None = None) -> NiceSignalReport:
    """Screen x against the flat-autocorrelation / flat-spectrum signal class.

    autocorr_ok requires max_ell |<x, R_ell x>/L - 1{ell=0}| <= kappa (the
    ell = 0 term is the norm deviation).  dft_ok requires the unitary-DFT
    sup-norm to be at most sqrt(10 ln L).  kappa defaults to
    :func:`default_kappa`.
    """
    x = _as_signal(x)
    L = x.shape[0]
    if L < 2:
        raise ValueError("nice_signal_check needs L >= 2")
    if kappa is None:
        kappa = default_kappa(L)
    elif kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")

    autocorr = circular_correlations(x, x) / L
    norm_dev = abs(autocorr[0] - 1.0)
    max_offdiag = float(np.max(np.abs(autocorr[1:]))) if L > 1 else 0.0
    autocorr_ok = max(norm_dev, max_offdiag) <= kappa

    dft_supnorm = float(np.max(np.abs(_fft.fft(x))) / math.sqrt(L))
    dft_ok = dft_supnorm <= math.sqrt(10.0 * math.log(L))

    return NiceSignalReport(
        autocorr_ok=bool(autocorr_ok),
        max_offdiag=float(max_offdiag),
        norm_dev=float(norm_dev),
        dft_supnorm=dft_supnorm,
        dft_ok=bool(dft_ok),
    )
