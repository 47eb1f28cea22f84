"""Error metrics: orbit distortion and the aligned-channel yardsticks.

The estimation target is only identified up to a cyclic shift, so squared
error is measured over the orbit,

    rho(x, xhat) = (1/L) * min_ell || x - R_ell xhat ||^2,

and reported RMSEs are sqrt(rho).  The matching yardstick when alignment is
known (shift-free averaging of n noisy copies, oracle-style) is the scalar
sigma^2 / (sigma^2 + n) per coordinate; on the alpha parameterization with
n = 100 L / ln L this evaluates to 1 / (1 + 100 alpha).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import _as_signal, circular_correlations

__all__ = ["DistortionValue", "rho", "awgn_mse", "awgn_sample_complexity"]


@dataclass(frozen=True)
class DistortionValue:
    """Orbit distortion plus the shift achieving it (ties -> smallest index)."""

    rho: float
    argmin_shift: int


def rho(x: np.ndarray, xhat: np.ndarray) -> DistortionValue:
    """Orbit (mod-shift) mean squared error between x and xhat.

    Expands ||x - R_ell xhat||^2 = ||x||^2 + ||xhat||^2 - 2 <x, R_ell xhat>
    and scans all L shifts with one correlation pass.  Symmetric in its
    arguments, and zero exactly on the orbit {R_ell x}.
    """
    x = _as_signal(x)
    xhat = _as_signal(xhat)
    L = x.shape[0]
    if xhat.shape[0] != L:
        raise ValueError(f"length mismatch: {L} vs {xhat.shape[0]}")
    corr = circular_correlations(xhat, x)  # corr[ell] = <x, R_ell xhat>
    per_shift = (x @ x + xhat @ xhat - 2.0 * corr) / L
    ell = int(np.argmin(per_shift))  # first occurrence = smallest shift
    return DistortionValue(rho=float(max(per_shift[ell], 0.0)), argmin_shift=ell)


def awgn_mse(sigma_sq: float, n: int) -> float:
    """Per-coordinate MSE of averaging n aligned noisy copies: sigma^2/(sigma^2+n).

    n = 0 returns the prior variance 1.  With sigma^2 = L/(alpha ln L) and
    n = 100 L / ln L this equals 1 / (1 + 100 alpha).
    """
    if sigma_sq < 0:
        raise ValueError(f"sigma_sq must be >= 0, got {sigma_sq}")
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if n == 0:
        return 1.0
    return sigma_sq / (sigma_sq + n)


def awgn_sample_complexity(eps: float, sigma_sq: float) -> int:
    """Smallest n with awgn_mse(sigma_sq, n) <= eps: ceil((1/eps - 1) sigma^2)."""
    if not (0.0 < eps < 1.0):
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if sigma_sq <= 0:
        # noiseless observations make the target trivial; the formula would
        # report n = 0, which contradicts the "smallest n" contract
        raise ValueError(f"sigma_sq must be > 0, got {sigma_sq}")
    return int(math.ceil((1.0 / eps - 1.0) * sigma_sq))
