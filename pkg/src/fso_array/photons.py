"""Poisson photon evidence per PPM slot.

Discrete arrays observe per-cell photodetection counts; the continuous array
observes exact photodetection locations. Background noise is uniform over the
array with density ``lambda_n`` photons/m^2/slot.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .beam import BeamParams, cell_signal_masses, TWO_PI
from .geometry import ArrayGeometry

SIGNAL_PLUS_NOISE = "signal_plus_noise"
NOISE_ONLY = "noise_only"
_KINDS = (SIGNAL_PLUS_NOISE, NOISE_ONLY)


@dataclass(frozen=True)
class SlotObservation:
    """Evidence collected during one PPM slot.

    Exactly one of ``counts`` (discrete mode, length M, row-major) or
    ``locations`` (continuous mode, shape (n, 2)) is set.
    """

    kind: str
    counts: np.ndarray | None = None
    locations: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        if (self.counts is None) == (self.locations is None):
            raise ValueError("exactly one of counts or locations must be given")

    @property
    def is_discrete(self) -> bool:
        return self.counts is not None


def _check_lambda_n(lambda_n: float) -> None:
    if lambda_n < 0:
        raise ValueError(f"lambda_n must be nonnegative, got {lambda_n}")


def sample_cell_counts(
    beam: BeamParams,
    geom: ArrayGeometry,
    lambda_n: float,
    kind: str,
    rng: np.random.Generator,
) -> SlotObservation:
    """Draw one slot of per-cell counts.

    Each cell count is an independent Poisson draw whose mean is the cell's
    signal mass plus lambda_n * cell_area (signal_plus_noise) or the noise
    term alone (noise_only).
    """
    _check_lambda_n(lambda_n)
    means = np.full(geom.cell_count, lambda_n * geom.cell_area)
    if kind == SIGNAL_PLUS_NOISE:
        means = means + cell_signal_masses(beam, geom)
    counts = rng.poisson(means)
    return SlotObservation(kind=kind, counts=counts)


def sample_photon_locations(
    beam: BeamParams,
    geom: ArrayGeometry,
    lambda_n: float,
    kind: str,
    rng: np.random.Generator,
) -> SlotObservation:
    """Draw one slot of exact photodetection locations on a continuous array.

    Signal photons: a Poisson(2*pi*i0) number of draws from the beam's
    Gaussian, thinned to those landing on the array. Thinning a Poisson
    process is exact, so the kept points are a Poisson process with the
    truncated Gaussian intensity. Noise photons are uniform with mean
    lambda_n * total_area. noise_only slots contain only the noise component.
    """
    if geom.is_discrete:
        raise ValueError("sample_photon_locations requires a continuous-mode geometry")
    _check_lambda_n(lambda_n)
    if kind not in _KINDS:
        raise ValueError(f"kind must be one of {_KINDS}, got {kind!r}")
    e = geom.half_extent
    parts = []
    if kind == SIGNAL_PLUS_NOISE:
        n_raw = rng.poisson(TWO_PI * beam.i0)
        pts = rng.normal(loc=beam.center, scale=beam.spot, size=(n_raw, 2))
        inside = (np.abs(pts[:, 0]) <= e) & (np.abs(pts[:, 1]) <= e)
        parts.append(pts[inside])
    n_noise = rng.poisson(lambda_n * geom.total_area)
    parts.append(rng.uniform(-e, e, size=(n_noise, 2)))
    locations = np.concatenate(parts, axis=0) if parts else np.empty((0, 2))
    return SlotObservation(kind=kind, locations=locations)


def bin_locations(geom: ArrayGeometry, obs: SlotObservation, cell_count: int) -> SlotObservation:
    """Quantize a continuous observation onto a discrete grid of cells.

    Returns the counts a ``cell_count``-cell array placed over the same area
    would have reported for the same photons.
    """
    if obs.is_discrete:
        raise ValueError("bin_locations expects a continuous observation")
    grid = ArrayGeometry.from_cell_count(geom.half_extent, cell_count)
    counts = np.zeros(cell_count, dtype=np.int64)
    if len(obs.locations):
        idx = grid.cell_indices(obs.locations[:, 0], obs.locations[:, 1])
        counts = np.bincount(idx, minlength=cell_count).astype(np.int64)
    return SlotObservation(kind=obs.kind, counts=counts)
