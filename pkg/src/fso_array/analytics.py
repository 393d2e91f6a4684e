"""Closed-form and semi-analytic symbol-error-probability calculators.

Three analytic routes complement the Monte Carlo harness:

* single detector (M = 1): the slot-count difference is a Skellam variable,
  and P(correct) = P(X > 0) ** (K - 1) is evaluated by truncated Poisson
  convolution to a requested tolerance;
* large M: the weighted count statistic is approximately Gaussian, and the
  error probability follows from its first two moments;
* poor per-cell SNR: expanding log(1 + SNR_m) to first order collapses the
  moments into the single figure of merit sqrt(sum(s_m**2) / cell_area).

Each calculator returns a PeEstimate tagging the method that produced it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr
from scipy.stats import poisson

METHOD_MONTE_CARLO = "monte-carlo"
METHOD_SKELLAM = "skellam-exact"
METHOD_GAUSSIAN = "gaussian-approx"
METHOD_LOW_SNR = "low-snr"
METHOD_WEIGHT_QUALITY = "weight-quality"


class LowSnrValidityWarning(UserWarning):
    """The low-SNR error formula was evaluated outside its validity regime."""


@dataclass(frozen=True)
class PeEstimate:
    """Symbol error probability with provenance.

    ``half_width_95`` is the 95% confidence half-width (0 for closed forms);
    ``trials_used`` is 0 for closed forms.
    """

    value: float
    half_width_95: float
    method: str
    trials_used: int = 0

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"error probability must be in [0, 1], got {self.value}")
        if self.half_width_95 < 0:
            raise ValueError(f"half_width_95 must be nonnegative, got {self.half_width_95}")


@dataclass(frozen=True)
class SkellamParams:
    """Difference of two independent Poisson counts with means mu1 and mu2."""

    mu1: float
    mu2: float

    def __post_init__(self):
        if self.mu1 < 0 or self.mu2 < 0:
            raise ValueError(f"Poisson means must be nonnegative, got {self.mu1}, {self.mu2}")


@dataclass(frozen=True)
class MomentPair:
    """Mean and standard deviation of the weighted-count decision statistic."""

    mu_x: float
    sigma_x: float


def q_function(x: float):
    """Standard normal tail probability Q(x) = P(N(0,1) > x). Vectorized."""
    return ndtr(-np.asarray(x, dtype=float))


def _poisson_tail_cutoff(mu: float, tol: float) -> int:
    """Smallest n with a Chernoff-bounded upper tail P(Poisson(mu) >= n) < tol.

    For n > mu the bound is exp(-mu) * (e * mu / n)**n; the returned cutoff is
    conservative (the true tail is smaller than the bound).
    """
    if mu == 0:
        return 1
    n = max(1, math.ceil(mu))
    log_tol = math.log(tol)
    while -mu + n * (1.0 + math.log(mu) - math.log(n)) >= log_tol:
        n = max(n + 1, int(n * 1.1))
    return n


def skellam_positive_prob(p: SkellamParams, tol: float = 1e-12) -> float:
    """P(X > 0) for X = Poisson(mu1) - Poisson(mu2), truncation error < tol.

    Summed as sum over n >= 1 of P(N1 = n) * P(N2 <= n - 1), truncating N1 at
    a Chernoff-bounded cutoff so the neglected mass stays below ``tol``.
    """
    if not 0 < tol <= 1e-6:
        raise ValueError(f"tol must be in (0, 1e-6], got {tol}")
    if p.mu1 == 0:
        return 0.0
    cutoff = _poisson_tail_cutoff(p.mu1, tol)
    n = np.arange(1, cutoff + 1)
    return float((poisson.pmf(n, p.mu1) * poisson.cdf(n - 1, p.mu2)).sum())


def _skellam_nonpositive_prob(p: SkellamParams, tol: float) -> float:
    """P(X <= 0), summed directly so tiny values keep full relative precision."""
    if p.mu1 == 0:
        return 1.0
    cutoff = _poisson_tail_cutoff(p.mu1, tol)
    n = np.arange(0, cutoff + 1)
    return float((poisson.pmf(n, p.mu1) * poisson.sf(n - 1, p.mu2)).sum())


def _pe_from_pairwise(q: float, ppm_order: int) -> float:
    """P_e = 1 - (1 - q)**(ppm_order - 1), stable when the pairwise error q
    is far below floating-point resolution of 1."""
    q = min(max(q, 0.0), 1.0)
    if q == 1.0:
        return 1.0
    return min(-math.expm1((ppm_order - 1) * math.log1p(-q)), 1.0)


def pe_single_detector(
    captured_signal: float, noise_mass: float, ppm_order: int, tol: float = 1e-12
) -> PeEstimate:
    """Error probability of the single-detector receiver.

    The decision statistic between the signal slot and one noise slot is
    Skellam with mu1 = captured_signal + noise_mass and mu2 = noise_mass
    (mean captured_signal, variance captured_signal + 2 * noise_mass), and
    P_e = 1 - P(X > 0) ** (ppm_order - 1).
    """
    if ppm_order < 2:
        raise ValueError(f"ppm_order must be >= 2, got {ppm_order}")
    if not 0 < tol <= 1e-6:
        raise ValueError(f"tol must be in (0, 1e-6], got {tol}")
    q = _skellam_nonpositive_prob(
        SkellamParams(mu1=captured_signal + noise_mass, mu2=noise_mass), tol=tol
    )
    return PeEstimate(
        value=_pe_from_pairwise(q, ppm_order), half_width_95=0.0, method=METHOD_SKELLAM
    )


def clt_moments(masses: np.ndarray, weights: np.ndarray, cell_noise: float) -> MomentPair:
    """Moments of the decision statistic sum(weights * slot count difference).

    mu_X = sum(w_m * mass_m); sigma_X**2 = sum(w_m**2 * (mass_m + 2*cell_noise))
    with ``cell_noise`` the per-cell noise mass lambda_n * cell_area.
    """
    masses = np.asarray(masses, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if masses.shape != weights.shape:
        raise ValueError(f"masses and weights must match, got {masses.shape} vs {weights.shape}")
    mu = float((weights * masses).sum())
    var = float((weights ** 2 * (masses + 2.0 * cell_noise)).sum())
    return MomentPair(mu_x=mu, sigma_x=math.sqrt(var))


def pe_gaussian_approx(mp: MomentPair, ppm_order: int) -> PeEstimate:
    """Error probability under the Gaussian approximation of the statistic.

    P_e = 1 - Q(-mu_X / sigma_X) ** (ppm_order - 1).
    """
    if ppm_order < 2:
        raise ValueError(f"ppm_order must be >= 2, got {ppm_order}")
    if not mp.sigma_x > 0:
        raise ValueError(f"sigma_x must be positive, got {mp.sigma_x}")
    q = float(q_function(mp.mu_x / mp.sigma_x))  # pairwise P(X <= 0)
    return PeEstimate(
        value=_pe_from_pairwise(q, ppm_order), half_width_95=0.0, method=METHOD_GAUSSIAN
    )


def pe_low_snr(
    i0: float,
    lambda_n: float,
    masses: np.ndarray,
    cell_area: float,
    ppm_order: int,
) -> PeEstimate:
    """Error probability in the poor per-cell SNR limit.

    P_e = 1 - Q(-(i0 / sqrt(2*lambda_n)) * sqrt(sum(s_m**2) / cell_area)) ** (K-1)
    with s_m = mass_m / i0. Valid when every SNR_m = mass_m/(lambda_n*cell_area)
    is well below 1; a LowSnrValidityWarning is emitted (not an error) when
    max SNR_m >= 0.1.
    """
    if ppm_order < 2:
        raise ValueError(f"ppm_order must be >= 2, got {ppm_order}")
    if not lambda_n > 0:
        raise ValueError(f"lambda_n must be positive, got {lambda_n}")
    masses = np.asarray(masses, dtype=float)
    snr_max = float(masses.max(initial=0.0)) / (lambda_n * cell_area)
    if snr_max >= 0.1:
        warnings.warn(
            f"low-SNR formula applied with max per-cell SNR {snr_max:.3g} >= 0.1",
            LowSnrValidityWarning,
            stacklevel=2,
        )
    s = masses / i0 if i0 > 0 else np.zeros_like(masses)
    metric = weight_quality(s, cell_area)
    q = float(q_function((i0 / math.sqrt(2.0 * lambda_n)) * metric))  # pairwise P(X <= 0)
    return PeEstimate(
        value=_pe_from_pairwise(q, ppm_order), half_width_95=0.0, method=METHOD_LOW_SNR
    )


def weight_quality(s_masses: np.ndarray, cell_area: float) -> float:
    """Weighting figure of merit sqrt(sum(s_m**2) / cell_area).

    ``s_masses`` are the normalized per-cell masses (mass_m / i0). Larger
    values mean the cell grid separates signal photons from noise photons
    better; for a centered beam the value is identical for 1 and 4 cells and
    grows with finer grids.
    """
    s = np.asarray(s_masses, dtype=float)
    return math.sqrt(float((s ** 2).sum()) / cell_area)
