"""Symbol-error simulation for free-space optical PPM links on detector arrays.

The package models a Gaussian laser spot falling on a square focal-plane
array of M photon-counting cells, the maximum-likelihood weighted-count PPM
receiver, and the exact-location (continuous-array) receiver that bounds
every finite grid from below. It provides closed-form error-probability
calculators where they exist, a reproducible Monte Carlo harness everywhere
else, and a CSV-emitting CLI for the standard experiment families.
"""

from .analytics import (
    LowSnrValidityWarning,
    MomentPair,
    PeEstimate,
    SkellamParams,
    clt_moments,
    pe_gaussian_approx,
    pe_low_snr,
    pe_single_detector,
    q_function,
    skellam_positive_prob,
    weight_quality,
)
from .beam import (
    BeamParams,
    LinkBudget,
    cell_signal_mass,
    cell_signal_masses,
    intensity_at,
    signal_photons,
    spot_size,
)
from .experiments import (
    ComplexityReport,
    CostTerm,
    Scenario,
    average_over_positions,
    complexity_report,
    continuous_lower_bound,
    mismatch_sweep,
    run_monte_carlo,
    wilson_halfwidth,
)
from .geometry import ArrayGeometry, Rect
from .photons import (
    NOISE_ONLY,
    SIGNAL_PLUS_NOISE,
    SlotObservation,
    bin_locations,
    sample_cell_counts,
    sample_photon_locations,
)
from .receiver import (
    DetectionOutcome,
    ReceiverConfig,
    compute_weights,
    continuous_slot_statistic,
    detect_continuous,
    detect_discrete,
    location_log_weight,
)

__version__ = "0.1.0"

__all__ = [
    "ArrayGeometry",
    "BeamParams",
    "ComplexityReport",
    "CostTerm",
    "DetectionOutcome",
    "LinkBudget",
    "LowSnrValidityWarning",
    "MomentPair",
    "NOISE_ONLY",
    "PeEstimate",
    "ReceiverConfig",
    "Rect",
    "Scenario",
    "SIGNAL_PLUS_NOISE",
    "SkellamParams",
    "SlotObservation",
    "average_over_positions",
    "bin_locations",
    "cell_signal_mass",
    "cell_signal_masses",
    "clt_moments",
    "complexity_report",
    "compute_weights",
    "continuous_lower_bound",
    "continuous_slot_statistic",
    "detect_continuous",
    "detect_discrete",
    "intensity_at",
    "location_log_weight",
    "mismatch_sweep",
    "pe_gaussian_approx",
    "pe_low_snr",
    "pe_single_detector",
    "q_function",
    "run_monte_carlo",
    "sample_cell_counts",
    "sample_photon_locations",
    "signal_photons",
    "skellam_positive_prob",
    "spot_size",
    "weight_quality",
    "wilson_halfwidth",
]
