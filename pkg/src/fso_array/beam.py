"""Gaussian beam intensity model, rectangle integrals, and the photon link budget.

Unit convention: every intensity in this package is expressed in photons per
square meter per PPM slot. Slot duration and photodetector efficiency are
absorbed once, when a LinkBudget is converted into beam parameters, so no
other module needs to carry time or efficiency factors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .geometry import ArrayGeometry, Rect

TWO_PI = 2.0 * math.pi

PLANCK_J_S = 6.62607004e-34
LIGHT_SPEED_M_S = 2.99792458e8


def spot_size(rho0: float, wavelength: float, z: float) -> float:
    """Beam radius after propagating a distance ``z`` from the waist.

    rho(z) = rho0 * sqrt(1 + (wavelength * z / (pi * rho0**2))**2), so the
    radius equals the waist at z = 0 and grows monotonically with distance.
    """
    if not rho0 > 0:
        raise ValueError(f"rho0 must be positive, got {rho0}")
    if not wavelength > 0:
        raise ValueError(f"wavelength must be positive, got {wavelength}")
    if z < 0:
        raise ValueError(f"z must be nonnegative, got {z}")
    return rho0 * math.sqrt(1.0 + (wavelength * z / (math.pi * rho0 ** 2)) ** 2)


@dataclass(frozen=True)
class BeamParams:
    """Gaussian beam as seen on the detector plane.

    ``i0`` is the amplitude constant in photons per slot: the intensity at a
    point is (i0 / rho(z)**2) * exp(-r**2 / (2 rho(z)**2)) with r the distance
    from ``center``, and the total over the infinite plane is 2*pi*i0.
    """

    i0: float
    rho0: float
    wavelength: float = 1550e-9
    z: float = 0.0
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.i0 < 0:
            raise ValueError(f"i0 must be nonnegative, got {self.i0}")
        # spot_size() validates rho0, wavelength, z
        spot_size(self.rho0, self.wavelength, self.z)

    @property
    def spot(self) -> float:
        """rho(z), the beam radius on the detector plane."""
        return spot_size(self.rho0, self.wavelength, self.z)

    @property
    def peak_intensity(self) -> float:
        """Intensity at the beam center, i0 / rho(z)**2 (photons/m^2/slot)."""
        return self.i0 / self.spot ** 2

    @property
    def total_photons(self) -> float:
        """Mean photons per slot over the infinite plane, 2*pi*i0."""
        return TWO_PI * self.i0

    @classmethod
    def from_peak_intensity(
        cls,
        peak: float,
        spot: float,
        center: tuple[float, float] = (0.0, 0.0),
        wavelength: float = 1550e-9,
    ) -> "BeamParams":
        """Beam with the given on-plane peak intensity and radius (z taken as 0)."""
        return cls(i0=peak * spot ** 2, rho0=spot, wavelength=wavelength, z=0.0, center=center)

    @classmethod
    def from_total_photons(
        cls,
        photons_per_slot: float,
        spot: float,
        center: tuple[float, float] = (0.0, 0.0),
        wavelength: float = 1550e-9,
    ) -> "BeamParams":
        """Beam delivering ``photons_per_slot`` over the infinite plane."""
        return cls(
            i0=photons_per_slot / TWO_PI, rho0=spot, wavelength=wavelength, z=0.0, center=center
        )

    @classmethod
    def from_link_budget(
        cls,
        budget: "LinkBudget",
        spot: float,
        center: tuple[float, float] = (0.0, 0.0),
    ) -> "BeamParams":
        """Beam sized so the slot photon count matches the link budget."""
        return cls.from_total_photons(
            signal_photons(budget), spot, center=center, wavelength=budget.wavelength
        )


@dataclass(frozen=True)
class LinkBudget:
    """Received optical power and the conversion factors to photons per slot."""

    rx_power: float
    slot_width: float
    efficiency: float
    wavelength: float = 1550e-9
    planck: float = PLANCK_J_S
    light_speed: float = LIGHT_SPEED_M_S

    def __post_init__(self):
        for name in ("rx_power", "slot_width", "wavelength", "planck", "light_speed"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0 <= self.efficiency <= 1:
            raise ValueError(f"efficiency must be in [0, 1], got {self.efficiency}")


def signal_photons(budget: LinkBudget) -> float:
    """Mean detected signal photons per PPM slot.

    rx_power * slot_width * efficiency divided by the photon energy h*c/lambda.
    """
    photon_energy = budget.planck * budget.light_speed / budget.wavelength
    return budget.rx_power * budget.slot_width * budget.efficiency / photon_energy


def intensity_at(beam: BeamParams, x, y):
    """Beam intensity at point(s) (x, y), photons/m^2/slot. Vectorized."""
    rho2 = beam.spot ** 2
    x0, y0 = beam.center
    dx = np.asarray(x, dtype=float) - x0
    dy = np.asarray(y, dtype=float) - y0
    return (beam.i0 / rho2) * np.exp(-(dx * dx + dy * dy) / (2.0 * rho2))


def _phi_intervals(lo, hi):
    """Phi(hi) - Phi(lo) for standardized bounds, elementwise.

    Intervals lying in the upper tail are reflected into the lower tail
    before differencing; ndtr keeps full relative precision near 0 but not
    near 1, and without the flip far-tail cell masses lose most digits.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    flip = lo + hi > 0
    a = np.where(flip, -hi, lo)
    b = np.where(flip, -lo, hi)
    return ndtr(b) - ndtr(a)


def cell_signal_mass(beam: BeamParams, rect: Rect) -> float:
    """Mean signal photons per slot collected over ``rect``.

    The Gaussian factorizes, so the integral is the product of two normal-CDF
    differences: 2*pi*i0 * [Phi(b)-Phi(a)]_x * [Phi(b)-Phi(a)]_y with the
    bounds standardized by rho(z).
    """
    if not (rect.width > 0 and rect.height > 0):
        raise ValueError(f"rectangle must have positive area, got {rect}")
    rho = beam.spot
    x0, y0 = beam.center
    fx = _phi_intervals((rect.x_min - x0) / rho, (rect.x_max - x0) / rho)
    fy = _phi_intervals((rect.y_min - y0) / rho, (rect.y_max - y0) / rho)
    return TWO_PI * beam.i0 * float(fx) * float(fy)


def cell_signal_masses(beam: BeamParams, geom: ArrayGeometry) -> np.ndarray:
    """Signal mass of every cell of a discrete array, row-major order."""
    edges = geom.cell_edges()
    rho = beam.spot
    x0, y0 = beam.center
    fx = _phi_intervals((edges[:-1] - x0) / rho, (edges[1:] - x0) / rho)
    fy = _phi_intervals((edges[:-1] - y0) / rho, (edges[1:] - y0) / rho)
    return TWO_PI * beam.i0 * np.outer(fy, fx).ravel()
