"""Hard-decision maximum-likelihood PPM detectors.

Discrete arrays score each slot by the weighted count sum(weights * counts)
and pick the slot with the largest score; the per-cell weight is
log(1 + SNR_m) with SNR_m the ratio of the cell's signal mass to its noise
mass. Continuous arrays score each slot by the point-process log-likelihood
ratio sum over photons of log(1 + intensity/lambda_n); slot-independent
constants are dropped since they cannot change an argmax.

Tie rule: "strict" resolves the argmax to the first slot attaining the
maximum and flags the outcome as a tie, which error-rate callers score as an
error (a slot wins only by strict inequality). "random" picks uniformly among
the tied slots.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .beam import BeamParams, cell_signal_masses, intensity_at
from .geometry import ArrayGeometry
from .photons import SlotObservation

TIE_STRICT = "strict"
TIE_RANDOM = "random"
_TIE_RULES = (TIE_STRICT, TIE_RANDOM)


@dataclass(frozen=True)
class ReceiverConfig:
    """Detector settings for a discrete array."""

    ppm_order: int
    lambda_n: float
    weights: np.ndarray
    tie_rule: str = TIE_STRICT

    def __post_init__(self):
        if self.ppm_order < 2:
            raise ValueError(f"ppm_order must be >= 2, got {self.ppm_order}")
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be a 1-D vector of finite nonnegative reals")
        if self.tie_rule not in _TIE_RULES:
            raise ValueError(f"tie_rule must be one of {_TIE_RULES}, got {self.tie_rule!r}")
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class DetectionOutcome:
    """Decision for one PPM symbol.

    ``decided_symbol`` is the 0-based slot index attaining the maximum
    statistic; ``is_tie`` marks that more than one slot attained it (under the
    strict rule the first such slot is reported and callers scoring errors
    treat the symbol as an error).
    """

    decided_symbol: int
    statistics: np.ndarray
    is_tie: bool


def compute_weights(beam: BeamParams, geom: ArrayGeometry, lambda_n: float) -> np.ndarray:
    """Per-cell weights log(1 + signal_mass_m / (lambda_n * cell_area))."""
    if not lambda_n > 0:
        raise ValueError(f"lambda_n must be positive for weighting, got {lambda_n}")
    masses = cell_signal_masses(beam, geom)
    return np.log1p(masses / (lambda_n * geom.cell_area))


def _decide(statistics: np.ndarray, tie_rule: str, rng: np.random.Generator | None):
    top = statistics.max()
    winners = np.flatnonzero(statistics == top)
    is_tie = winners.size > 1
    if is_tie and tie_rule == TIE_RANDOM:
        if rng is None:
            raise ValueError("random tie rule needs an rng")
        decided = int(winners[rng.integers(winners.size)])
    else:
        decided = int(winners[0])
    return DetectionOutcome(decided_symbol=decided, statistics=statistics, is_tie=is_tie)


def detect_discrete(
    slots: Sequence[SlotObservation],
    cfg: ReceiverConfig,
    rng: np.random.Generator | None = None,
) -> DetectionOutcome:
    """Decide a PPM symbol from per-cell counts of each slot."""
    if len(slots) != cfg.ppm_order:
        raise ValueError(f"expected {cfg.ppm_order} slots, got {len(slots)}")
    m = cfg.weights.size
    stats = np.empty(cfg.ppm_order)
    for k, obs in enumerate(slots):
        if not obs.is_discrete:
            raise ValueError("detect_discrete requires discrete observations")
        if obs.counts.size != m:
            raise ValueError(f"slot {k} has {obs.counts.size} cells, expected {m}")
        stats[k] = float((cfg.weights * obs.counts).sum())
    return _decide(stats, cfg.tie_rule, rng)


def location_log_weight(beam: BeamParams, lambda_n: float, x, y):
    """Per-photon score log(1 + intensity(x, y) / lambda_n). Vectorized."""
    if not lambda_n > 0:
        raise ValueError(f"lambda_n must be positive, got {lambda_n}")
    return np.log1p(intensity_at(beam, x, y) / lambda_n)


def continuous_slot_statistic(obs: SlotObservation, beam: BeamParams, lambda_n: float) -> float:
    """Log-likelihood-ratio score of one continuous slot.

    Sum over observed photons of log(1 + intensity/lambda_n); an empty slot
    scores 0. Constants common to every slot of a symbol are omitted.
    """
    if obs.is_discrete:
        raise ValueError("continuous_slot_statistic requires a continuous observation")
    if len(obs.locations) == 0:
        # lambda_n validation still applies to the empty slot
        if not lambda_n > 0:
            raise ValueError(f"lambda_n must be positive, got {lambda_n}")
        return 0.0
    return float(location_log_weight(beam, lambda_n, obs.locations[:, 0], obs.locations[:, 1]).sum())


def detect_continuous(
    slots: Sequence[SlotObservation],
    beam: BeamParams,
    lambda_n: float,
    tie_rule: str = TIE_STRICT,
    rng: np.random.Generator | None = None,
) -> DetectionOutcome:
    """Decide a PPM symbol from exact photon locations of each slot."""
    if len(slots) < 2:
        raise ValueError(f"a PPM symbol needs at least 2 slots, got {len(slots)}")
    if tie_rule not in _TIE_RULES:
        raise ValueError(f"tie_rule must be one of {_TIE_RULES}, got {tie_rule!r}")
    stats = np.array([continuous_slot_statistic(obs, beam, lambda_n) for obs in slots])
    return _decide(stats, tie_rule, rng)
