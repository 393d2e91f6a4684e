"""Shared test oracles and tolerance helpers."""

import math

import numpy as np
from scipy import integrate

from fso_array import PeEstimate, Rect, intensity_at

Z95 = 1.959963984540054


def random_rect(rng, min_side=1e-3):
    """A non-degenerate random rectangle inside the unit array."""
    while True:
        x = np.sort(rng.uniform(-1, 1, 2))
        y = np.sort(rng.uniform(-1, 1, 2))
        if x[1] - x[0] >= min_side and y[1] - y[0] >= min_side:
            return Rect(x[0], x[1], y[0], y[1])


def quadrature_mass(beam, rect):
    """Independent 2-D adaptive quadrature of the beam intensity over a rect.

    Used as the oracle for the closed-form cell mass; deliberately does not
    share any code with the product-of-CDFs implementation. Breakpoints at the
    beam center and its +-5 rho shoulders keep the adaptive rule from missing
    a narrow peak tucked into a corner of a large rectangle.
    """
    x0, y0 = beam.center
    rho = beam.spot

    def breaks(lo, hi, c):
        pts = [c - 5 * rho, c, c + 5 * rho]
        return [p for p in pts if lo < p < hi]

    def inner(x):
        value, _ = integrate.quad(
            lambda y: float(intensity_at(beam, x, y)),
            rect.y_min,
            rect.y_max,
            points=breaks(rect.y_min, rect.y_max, y0),
            epsabs=0.0,
            epsrel=1e-11,
            limit=200,
        )
        return value

    value, _ = integrate.quad(
        inner,
        rect.x_min,
        rect.x_max,
        points=breaks(rect.x_min, rect.x_max, x0),
        epsabs=0.0,
        epsrel=1e-11,
        limit=200,
    )
    return value


def mc_standard_error(estimate: PeEstimate, reference: float) -> float:
    """Standard error for comparing a Monte Carlo estimate to a reference.

    Uses the larger of the binomial standard error implied by the reference
    value and the estimate's own Wilson-based standard error, so the
    comparison stays meaningful when either side sits at zero observed errors.
    """
    n = estimate.trials_used
    se_ref = math.sqrt(max(reference, 0.0) * (1.0 - min(reference, 1.0)) / n)
    se_mc = estimate.half_width_95 / Z95
    return max(se_ref, se_mc)


def combined_se(a: PeEstimate, b: PeEstimate) -> float:
    """Standard error of the difference of two independent MC estimates."""
    sa = a.half_width_95 / Z95
    sb = b.half_width_95 / Z95
    return math.sqrt(sa * sa + sb * sb)
