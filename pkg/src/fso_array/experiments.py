"""Monte Carlo harness, beam-position averaging, mismatch sweeps, and cost counters.

Every run simulates PPM symbols with the pulse in slot 0 (symbols are
equiprobable and the receiver is symmetric across slots, so the error
probability does not depend on which slot carries the pulse). Photons are
always sampled from the *true* beam; detection weights come from
``estimated_beam`` when one is set, which is how parameter-mismatch
experiments are expressed.

Reproducibility contract: trials are split into fixed-size chunks and chunk
``i`` draws from its own stream seeded by (scenario seed, i). Error counts are
summed over chunks, so a run is bitwise reproducible and independent of how
many worker processes execute the chunks (cap them with the
FSO_ARRAY_MAX_WORKERS environment variable, default 1). Mismatch sweeps reuse
one seed across the grid: the photon draws are common random numbers and only
the weighting changes.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .analytics import METHOD_MONTE_CARLO, PeEstimate
from .beam import BeamParams, TWO_PI, cell_signal_masses
from .geometry import ArrayGeometry
from .receiver import TIE_RANDOM, TIE_STRICT, compute_weights, location_log_weight

_Z95 = 1.959963984540054
_CHUNK_TRIALS = 16384
_CENTER_RANGE = 0.75

MISMATCH_RHO = "rho"
MISMATCH_SNR_RATIO = "snr_ratio"
MISMATCH_X0 = "x0"
_MISMATCH_PARAMETERS = (MISMATCH_RHO, MISMATCH_SNR_RATIO, MISMATCH_X0)

WORKERS_ENV_VAR = "FSO_ARRAY_MAX_WORKERS"


@dataclass(frozen=True)
class Scenario:
    """One Monte Carlo experiment configuration.

    ``trials`` is the base trial count. If ``max_trials`` is set, the run is
    escalated (doubling) until the Wilson 95% half-width drops below
    max(0.1 * estimate, 1e-4) or the cap is hit.
    """

    beam: BeamParams
    geom: ArrayGeometry
    lambda_n: float
    ppm_order: int
    estimated_beam: BeamParams | None = None
    trials: int = 100_000
    seed: int = 0
    tie_rule: str = TIE_STRICT
    max_trials: int | None = None

    def __post_init__(self):
        if self.ppm_order < 2:
            raise ValueError(f"ppm_order must be >= 2, got {self.ppm_order}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.lambda_n < 0:
            raise ValueError(f"lambda_n must be nonnegative, got {self.lambda_n}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError(f"seed must be a nonnegative 64-bit integer, got {self.seed}")
        if self.tie_rule not in (TIE_STRICT, TIE_RANDOM):
            raise ValueError(f"unknown tie rule {self.tie_rule!r}")
        if self.max_trials is not None and self.max_trials < self.trials:
            raise ValueError("max_trials must be >= trials")

    @property
    def noise_photons(self) -> float:
        """Mean noise photons per slot over the whole array, lambda_n * area."""
        return self.lambda_n * self.geom.total_area


def wilson_halfwidth(errors: int, trials: int) -> float:
    """Half-width of the 95% Wilson score interval for errors/trials."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    p = errors / trials
    z2 = _Z95 * _Z95
    return _Z95 * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials)) / (1.0 + z2 / trials)


def _stream_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=key))


def _worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV_VAR, "1")
    try:
        workers = int(raw)
    except ValueError as exc:
        raise ValueError(f"{WORKERS_ENV_VAR} must be an integer, got {raw!r}") from exc
    return max(1, workers)


# --- per-chunk samplers -----------------------------------------------------
#
# Two exact samplers produce the per-slot decision statistics for discrete
# arrays. The direct sampler draws every cell count; the splitting sampler
# draws each slot's total photon number and then places photons in cells
# (Poisson thinning/superposition), which is cheaper when photons are scarcer
# than cells. Both realize the same count distribution; the choice is a fixed
# function of the scenario so reruns are reproducible.


def _score_errors(s_sig, mx, neq, tie_rule, rng):
    if tie_rule == TIE_STRICT:
        return int((mx >= s_sig).sum())
    lost = mx > s_sig
    tied = mx == s_sig
    n_tied = int(tied.sum())
    errors = int(lost.sum())
    if n_tied:
        t = neq[tied].astype(float)
        errors += int((rng.random(n_tied) < t / (t + 1.0)).sum())
    return errors


def _fold_noise_slot(s_k, mx, neq):
    higher = s_k > mx
    neq[:] = np.where(higher, 1, neq + (s_k == mx))
    np.maximum(mx, s_k, out=mx)


def _segment_sum(ids, values, n):
    if values.size == 0:
        return np.zeros(n)
    return np.bincount(ids, weights=values, minlength=n)


def _errors_discrete_direct(task, n, rng):
    masses, alpha, nu, ppm_order, tie_rule = task
    m = masses.size
    counts = rng.poisson(masses + nu, size=(n, m))
    s_sig = (counts * alpha).sum(axis=1)
    mx = np.full(n, -np.inf)
    neq = np.zeros(n, dtype=np.int64)
    for _ in range(ppm_order - 1):
        counts = rng.poisson(nu, size=(n, m))
        _fold_noise_slot((counts * alpha).sum(axis=1), mx, neq)
    return _score_errors(s_sig, mx, neq, tie_rule, rng)


def _errors_discrete_split(task, n, rng):
    masses, alpha, nu, ppm_order, tie_rule = task
    m = masses.size
    lam_sig = masses + nu
    total_sig = float(lam_sig.sum())
    cdf = np.cumsum(lam_sig) / total_sig
    trial_ids = np.arange(n)

    nph = rng.poisson(total_sig, n)
    u = rng.random(int(nph.sum()))
    cells = np.minimum(np.searchsorted(cdf, u), m - 1)
    s_sig = _segment_sum(np.repeat(trial_ids, nph), alpha[cells], n)

    mx = np.full(n, -np.inf)
    neq = np.zeros(n, dtype=np.int64)
    for _ in range(ppm_order - 1):
        nph = rng.poisson(nu * m, n)
        u = rng.random(int(nph.sum()))
        cells = (u * m).astype(np.int64)
        s_k = _segment_sum(np.repeat(trial_ids, nph), alpha[cells], n)
        _fold_noise_slot(s_k, mx, neq)
    return _score_errors(s_sig, mx, neq, tie_rule, rng)


def _errors_continuous(task, n, rng):
    true_beam, est_beam, lambda_n, half_extent, ppm_order, tie_rule = task
    noise_mean = lambda_n * 4.0 * half_extent ** 2
    trial_ids = np.arange(n)

    def noise_statistic():
        nph = rng.poisson(noise_mean, n)
        total = int(nph.sum())
        xs = rng.uniform(-half_extent, half_extent, total)
        ys = rng.uniform(-half_extent, half_extent, total)
        w = location_log_weight(est_beam, lambda_n, xs, ys)
        return _segment_sum(np.repeat(trial_ids, nph), w, n)

    # signal slot: Gaussian draws thinned to the array, plus uniform noise
    nph = rng.poisson(TWO_PI * true_beam.i0, n)
    total = int(nph.sum())
    xs = rng.normal(true_beam.center[0], true_beam.spot, total)
    ys = rng.normal(true_beam.center[1], true_beam.spot, total)
    inside = (np.abs(xs) <= half_extent) & (np.abs(ys) <= half_extent)
    w = location_log_weight(est_beam, lambda_n, xs[inside], ys[inside])
    s_sig = _segment_sum(np.repeat(trial_ids, nph)[inside], w, n)
    s_sig += noise_statistic()

    mx = np.full(n, -np.inf)
    neq = np.zeros(n, dtype=np.int64)
    for _ in range(ppm_order - 1):
        _fold_noise_slot(noise_statistic(), mx, neq)
    return _score_errors(s_sig, mx, neq, tie_rule, rng)


_SAMPLERS = {
    "direct": _errors_discrete_direct,
    "split": _errors_discrete_split,
    "continuous": _errors_continuous,
}


def _run_chunk(args):
    sampler, task, seed, chunk_index, n = args
    rng = _stream_rng(seed, chunk_index)
    return _SAMPLERS[sampler](task, n, rng)


def _chunk_sizes(total: int) -> list[int]:
    full, rem = divmod(total, _CHUNK_TRIALS)
    return [_CHUNK_TRIALS] * full + ([rem] if rem else [])


def _run_chunks(sampler: str, task, seed: int, first_chunk: int, sizes: list[int]) -> int:
    jobs = [(sampler, task, seed, first_chunk + i, n) for i, n in enumerate(sizes)]
    workers = _worker_count()
    if workers <= 1 or len(jobs) == 1:
        return sum(_run_chunk(job) for job in jobs)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return sum(pool.map(_run_chunk, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def _prepare_sampler(s: Scenario):
    if s.geom.is_discrete:
        masses = cell_signal_masses(s.beam, s.geom)
        weights = compute_weights(s.estimated_beam or s.beam, s.geom, s.lambda_n)
        nu = s.lambda_n * s.geom.cell_area
        task = (masses, weights, nu, s.ppm_order, s.tie_rule)
        # splitting pays off when expected photons per symbol are fewer than
        # the cell draws the direct sampler would make
        mean_photons = float(masses.sum()) + s.ppm_order * nu * s.geom.cell_count
        sampler = "split" if mean_photons < s.ppm_order * s.geom.cell_count else "direct"
        return sampler, task
    if not s.lambda_n > 0:
        raise ValueError("continuous detection requires lambda_n > 0")
    task = (
        s.beam,
        s.estimated_beam or s.beam,
        s.lambda_n,
        s.geom.half_extent,
        s.ppm_order,
        s.tie_rule,
    )
    return "continuous", task


def run_monte_carlo(s: Scenario) -> PeEstimate:
    """Estimate the symbol error probability of scenario ``s``.

    Simulates ``trials`` symbols (pulse in slot 0, ppm_order-1 noise slots),
    scoring a symbol as an error when any noise slot reaches or exceeds the
    signal slot's statistic under the strict tie rule, or by uniformly random
    tie-breaking under the random rule. Returns the error fraction with its
    Wilson 95% half-width.
    """
    sampler, task = _prepare_sampler(s)
    errors = 0
    done = 0
    next_chunk = 0
    target = s.trials
    while True:
        sizes = _chunk_sizes(target - done)
        errors += _run_chunks(sampler, task, s.seed, next_chunk, sizes)
        next_chunk += len(sizes)
        done = target
        if s.max_trials is None or done >= s.max_trials:
            break
        halfwidth = wilson_halfwidth(errors, done)
        if halfwidth <= max(0.1 * errors / done, 1e-4):
            break
        target = min(2 * done, s.max_trials)
    return PeEstimate(
        value=errors / done,
        half_width_95=wilson_halfwidth(errors, done),
        method=METHOD_MONTE_CARLO,
        trials_used=done,
    )


def continuous_lower_bound(s: Scenario) -> PeEstimate:
    """Monte Carlo error probability of the exact-location (continuous) receiver.

    Collecting photon positions instead of cell counts is the fine-grid limit
    of the discrete array, so this estimate lower-bounds the discrete results
    of the same scenario.
    """
    if s.geom.is_discrete:
        raise ValueError("continuous_lower_bound requires a continuous-mode geometry")
    return run_monte_carlo(s)


def average_over_positions(s: Scenario, count: int) -> PeEstimate:
    """Average error probability over uniformly random beam centers.

    Draws ``count`` centers uniformly from [-0.75, 0.75]^2, runs the scenario
    at each center with a derived sub-seed, and returns the mean estimate with
    a 95% half-width for the mean (spread across centers for count > 1).
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    rng = _stream_rng(s.seed, 1, 0)
    centers = rng.uniform(-_CENTER_RANGE, _CENTER_RANGE, size=(count, 2))
    seeds = rng.integers(0, 2 ** 63, size=count)
    results = []
    for (cx, cy), sub_seed in zip(centers, seeds):
        moved = replace(s.beam, center=(float(cx), float(cy)))
        results.append(run_monte_carlo(replace(s, beam=moved, seed=int(sub_seed))))
    values = np.array([r.value for r in results])
    if count > 1:
        halfwidth = _Z95 * float(values.std(ddof=1)) / math.sqrt(count)
    else:
        halfwidth = results[0].half_width_95
    return PeEstimate(
        value=float(values.mean()),
        half_width_95=halfwidth,
        method=METHOD_MONTE_CARLO,
        trials_used=sum(r.trials_used for r in results),
    )


def _estimated_beam_for(s: Scenario, parameter: str, value: float) -> BeamParams:
    base = s.estimated_beam or s.beam
    if parameter == MISMATCH_RHO:
        # assumed beam radius changes; peak intensity stays at its known value
        return BeamParams.from_peak_intensity(
            base.peak_intensity, value, center=base.center, wavelength=base.wavelength
        )
    if parameter == MISMATCH_X0:
        return replace(base, center=(float(value), base.center[1]))
    if parameter == MISMATCH_SNR_RATIO:
        # value estimates peak_intensity / lambda_n; only the weights see it
        return BeamParams.from_peak_intensity(
            value * s.lambda_n, base.spot, center=base.center, wavelength=base.wavelength
        )
    raise ValueError(f"unknown mismatch parameter {parameter!r}")


def mismatch_sweep(
    s: Scenario, parameter: str, grid: list[float]
) -> list[tuple[float, PeEstimate]]:
    """Error probability as a function of one misestimated beam parameter.

    ``parameter`` is one of "rho" (assumed beam radius), "snr_ratio" (assumed
    peak intensity over noise density, applied to the weights only), or "x0"
    (assumed center x-coordinate). Photons are sampled from the true beam with
    the scenario seed at every grid point (common random numbers), so curve
    differences reflect the weight mismatch rather than sampling noise.
    """
    if parameter not in _MISMATCH_PARAMETERS:
        raise ValueError(f"parameter must be one of {_MISMATCH_PARAMETERS}, got {parameter!r}")
    if not len(grid):
        raise ValueError("grid must be nonempty")
    curve = []
    for value in grid:
        est = _estimated_beam_for(s, parameter, float(value))
        curve.append((float(value), run_monte_carlo(replace(s, estimated_beam=est))))
    return curve


# --- arithmetic-cost accounting ----------------------------------------------


@dataclass(frozen=True)
class CostTerm:
    """Operation count attributed to one estimator, with a model label."""

    label: str
    multiplies: int
    additions: int


_NO_COST = CostTerm(label="none", multiplies=0, additions=0)


@dataclass(frozen=True)
class ComplexityReport:
    """Per-symbol arithmetic cost of detection plus parameter estimation."""

    real_multiplies: int
    real_additions: int
    estimator_cost_position: CostTerm
    estimator_cost_rho: CostTerm

    @property
    def total_multiplies(self) -> int:
        return (
            self.real_multiplies
            + self.estimator_cost_position.multiplies
            + self.estimator_cost_rho.multiplies
        )

    @property
    def total_additions(self) -> int:
        return (
            self.real_additions
            + self.estimator_cost_position.additions
            + self.estimator_cost_rho.additions
        )


def complexity_report(m: int, ppm_order: int, estimator_model="none") -> ComplexityReport:
    """Arithmetic cost of detecting one symbol on an ``m``-cell array.

    Forming the ppm_order weighted sums costs m multiplies and m additions
    each, so detection is exactly ppm_order * m of both. ``estimator_model``
    adds the beam-parameter estimation overhead: "none" adds nothing,
    "centroid" charges 2 * m * ppm_order multiplies and additions for the
    position estimate, and a callable (m, ppm_order) -> (position CostTerm,
    rho CostTerm) plugs in any other model.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if ppm_order < 2:
        raise ValueError(f"ppm_order must be >= 2, got {ppm_order}")
    detection = ppm_order * m
    if callable(estimator_model):
        position, rho = estimator_model(m, ppm_order)
    elif estimator_model == "none":
        position, rho = _NO_COST, _NO_COST
    elif estimator_model == "centroid":
        position = CostTerm(label="centroid", multiplies=2 * m * ppm_order, additions=2 * m * ppm_order)
        rho = _NO_COST
    else:
        raise ValueError(f"unknown estimator model {estimator_model!r}")
    return ComplexityReport(
        real_multiplies=detection,
        real_additions=detection,
        estimator_cost_position=position,
        estimator_cost_rho=rho,
    )
