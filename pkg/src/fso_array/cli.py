"""Batch front-end: parse a TOML run configuration, dispatch it, emit CSV.

The config schema is documented in the repository README ("Configuration
reference"). Keys carry their units in their names (rho_m, slot_width_s);
unknown keys are rejected and errors name the offending key path. Results go
to a single CSV whose numeric fields are printed with 17 significant digits,
so parsing the file recovers the exact float values; reruns of the same
config and seed produce byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import dataclass, replace

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .analytics import (
    METHOD_WEIGHT_QUALITY,
    PeEstimate,
    clt_moments,
    pe_gaussian_approx,
    pe_single_detector,
    weight_quality,
)
from .beam import BeamParams, LinkBudget, cell_signal_mass, cell_signal_masses
from .experiments import (
    MISMATCH_RHO,
    MISMATCH_SNR_RATIO,
    MISMATCH_X0,
    Scenario,
    average_over_positions,
    complexity_report,
    continuous_lower_bound,
    mismatch_sweep,
    run_monte_carlo,
)
from .geometry import ArrayGeometry
from .receiver import TIE_RANDOM, TIE_STRICT, compute_weights

EXPERIMENTS = (
    "noise_sweep",
    "m_sweep",
    "position_average",
    "mismatch",
    "lower_bound",
    "complexity",
    "weight_quality",
)

_AXIS_FOR = {
    "noise_sweep": ("n_b",),
    "m_sweep": ("m",),
    "position_average": ("n_b",),
    "mismatch": ("rho_hat_m", "snr_ratio_hat", "x0_hat_m"),
    "lower_bound": ("n_b",),
    "complexity": ("m",),
    "weight_quality": ("m",),
}

_MISMATCH_AXIS = {
    "rho_hat_m": MISMATCH_RHO,
    "snr_ratio_hat": MISMATCH_SNR_RATIO,
    "x0_hat_m": MISMATCH_X0,
}

# the exact-count / Monte Carlo / Gaussian split used when method = "auto"
_GAUSSIAN_MIN_CELLS = 64


class ConfigError(ValueError):
    """A run configuration violated the documented schema."""


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration (one experiment family, one sweep)."""

    experiment: str
    output_path: str
    seed: int
    trials: int
    max_trials: int | None
    ppm_order: int
    tie_rule: str
    method: str
    half_extent: float
    cell_counts: tuple[int, ...]
    beam: BeamParams | None
    noise_photons: float | None
    sweep_axis: str
    sweep_values: tuple[float, ...]
    position_samples: int
    estimator_model: str


class _Section:
    """One config table: typed key extraction with path-qualified errors."""

    def __init__(self, data: dict, path: str = ""):
        if not isinstance(data, dict):
            raise ConfigError(f"{path or 'config'} must be a table")
        self._data = dict(data)
        self._path = path

    def _qualify(self, key: str) -> str:
        return f"{self._path}.{key}" if self._path else key

    def take(self, key: str, kind, required: bool = False, default=None):
        if key not in self._data:
            if required:
                raise ConfigError(f"missing required key {self._qualify(key)!r}")
            return default
        value = self._data.pop(key)
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if kind in (int, float) and isinstance(value, bool):
            raise ConfigError(f"{self._qualify(key)!r} must be a number")
        if not isinstance(value, kind):
            raise ConfigError(f"{self._qualify(key)!r} must be of type {kind.__name__}")
        return value

    def subsection(self, key: str) -> "_Section | None":
        if key not in self._data:
            return None
        return _Section(self._data.pop(key), self._qualify(key))

    def finish(self) -> None:
        if self._data:
            key = sorted(self._data)[0]
            raise ConfigError(f"unknown key {self._qualify(key)!r}")


def _check_cell_count(half_extent: float, count: int, key: str) -> None:
    try:
        ArrayGeometry.from_cell_count(half_extent, count)
    except ValueError as exc:
        raise ConfigError(f"{key!r}: {exc}") from exc


def _number_list(sec: _Section, key: str, required: bool = True) -> tuple[float, ...]:
    raw = sec.take(key, list, required=required)
    if raw is None:
        return ()
    path = f"{sec._path}.{key}" if sec._path else key
    if not raw:
        raise ConfigError(f"{path!r} must be a nonempty list")
    values = []
    for item in raw:
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            raise ConfigError(f"{path!r} must contain only numbers")
        values.append(float(item))
    return tuple(values)


def _parse_beam(sec: _Section | None, budget_sec: _Section | None, experiment: str) -> BeamParams | None:
    if sec is None:
        if experiment == "complexity":
            return None
        raise ConfigError("missing required key 'beam'")
    rho = sec.take("rho_m", float, required=True)
    center = sec.take("center_m", list, default=[0.0, 0.0])
    if len(center) != 2 or any(isinstance(c, bool) or not isinstance(c, (int, float)) for c in center):
        raise ConfigError("'beam.center_m' must be a list of two numbers")
    wavelength = sec.take("wavelength_m", float, default=1550e-9)
    peak = sec.take("peak_intensity_per_m2", float)
    photons = sec.take("signal_photons", float)
    sec.finish()

    budget = None
    if budget_sec is not None:
        budget = LinkBudget(
            rx_power=budget_sec.take("rx_power_w", float, required=True),
            slot_width=budget_sec.take("slot_width_s", float, required=True),
            efficiency=budget_sec.take("efficiency", float, default=0.5),
            wavelength=budget_sec.take("wavelength_m", float, default=1550e-9),
            planck=budget_sec.take("planck_j_s", float, default=LinkBudget.planck),
            light_speed=budget_sec.take("light_speed_m_s", float, default=LinkBudget.light_speed),
        )
        budget_sec.finish()

    given = [name for name, v in (
        ("beam.peak_intensity_per_m2", peak),
        ("beam.signal_photons", photons),
        ("link_budget", budget),
    ) if v is not None]
    if len(given) > 1:
        raise ConfigError(f"beam intensity given more than once: {', '.join(given)}")
    ctr = (float(center[0]), float(center[1]))
    if peak is not None:
        return BeamParams.from_peak_intensity(peak, rho, center=ctr, wavelength=wavelength)
    if photons is not None:
        return BeamParams.from_total_photons(photons, rho, center=ctr, wavelength=wavelength)
    if budget is not None:
        return BeamParams.from_link_budget(budget, rho, center=ctr)
    if experiment == "weight_quality":
        # the metric is amplitude-independent; any positive amplitude works
        return BeamParams.from_total_photons(1.0, rho, center=ctr, wavelength=wavelength)
    raise ConfigError(
        "beam intensity required: one of 'beam.peak_intensity_per_m2', "
        "'beam.signal_photons' or a [link_budget] table"
    )


def parse_config(text: str) -> RunConfig:
    """Validate a TOML run configuration document."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from exc

    top = _Section(data)
    experiment = top.take("experiment", str, required=True)
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"'experiment' must be one of {EXPERIMENTS}, got {experiment!r}")
    output_path = top.take("output_path", str, default="")
    seed = top.take("seed", int, default=0)
    if seed < 0:
        raise ConfigError("'seed' must be nonnegative")
    trials = top.take("trials", int, default=100_000)
    if trials < 1:
        raise ConfigError("'trials' must be >= 1")
    max_trials = top.take("max_trials", int, default=10_000_000)
    if max_trials == 0:
        max_trials = None
    elif max_trials < trials:
        raise ConfigError("'max_trials' must be >= 'trials' (or 0 to disable escalation)")
    ppm_order = top.take("ppm_order", int, default=8)
    if ppm_order < 2:
        raise ConfigError(f"'ppm_order' must be >= 2 (PPM needs at least 2 slots), got {ppm_order}")
    tie_rule = top.take("tie_rule", str, default=TIE_STRICT)
    if tie_rule not in (TIE_STRICT, TIE_RANDOM):
        raise ConfigError(f"'tie_rule' must be 'strict' or 'random', got {tie_rule!r}")
    method = top.take("method", str, default="auto")
    if method not in ("auto", "monte-carlo"):
        raise ConfigError(f"'method' must be 'auto' or 'monte-carlo', got {method!r}")

    array_sec = top.subsection("array")
    half_extent = 1.0
    cell_counts: tuple[int, ...] = ()
    if array_sec is not None:
        half_extent = array_sec.take("half_extent_m", float, default=1.0)
        raw_counts = _number_list(array_sec, "cell_counts", required=False)
        array_sec.finish()
        counts = []
        for v in raw_counts:
            if v != int(v):
                raise ConfigError("'array.cell_counts' must contain integers")
            _check_cell_count(half_extent, int(v), "array.cell_counts")
            counts.append(int(v))
        cell_counts = tuple(counts)

    needs_cells = experiment in ("noise_sweep", "position_average", "mismatch")
    if needs_cells and not cell_counts:
        raise ConfigError("missing required key 'array.cell_counts'")

    beam = _parse_beam(top.subsection("beam"), top.subsection("link_budget"), experiment)

    noise_sec = top.subsection("noise")
    noise_photons = None
    if noise_sec is not None:
        noise_photons = noise_sec.take("photons_per_slot", float, required=True)
        noise_sec.finish()
        if not noise_photons > 0:
            raise ConfigError("'noise.photons_per_slot' must be positive")
    sweeps_noise = experiment in ("noise_sweep", "position_average", "lower_bound")
    if sweeps_noise and noise_photons is not None:
        raise ConfigError("'noise.photons_per_slot' conflicts with sweeping n_b; remove it")
    if experiment in ("m_sweep", "mismatch") and noise_photons is None:
        raise ConfigError("missing required key 'noise.photons_per_slot'")

    sweep_sec = top.subsection("sweep")
    if sweep_sec is None:
        raise ConfigError("missing required key 'sweep'")
    axis = sweep_sec.take("axis", str, required=True)
    allowed = _AXIS_FOR[experiment]
    if axis not in allowed:
        raise ConfigError(f"'sweep.axis' for {experiment} must be one of {allowed}, got {axis!r}")
    values = _number_list(sweep_sec, "values")
    sweep_sec.finish()
    if axis == "m":
        for v in values:
            if v != int(v):
                raise ConfigError("'sweep.values' for axis 'm' must be integers")
            if experiment != "complexity":
                _check_cell_count(half_extent, int(v), "sweep.values")
    elif axis in ("n_b", "rho_hat_m", "snr_ratio_hat"):
        if any(v <= 0 for v in values):
            raise ConfigError(f"'sweep.values' for axis {axis!r} must be positive")

    pos_sec = top.subsection("position_average")
    position_samples = 0
    if pos_sec is not None:
        position_samples = pos_sec.take("samples", int, required=True)
        pos_sec.finish()
        if position_samples < 1:
            raise ConfigError("'position_average.samples' must be >= 1")
    if experiment == "position_average" and position_samples == 0:
        raise ConfigError("missing required key 'position_average.samples'")

    cpl_sec = top.subsection("complexity")
    estimator_model = "none"
    if cpl_sec is not None:
        estimator_model = cpl_sec.take("estimator_model", str, default="none")
        cpl_sec.finish()
        if estimator_model not in ("none", "centroid"):
            raise ConfigError(f"'complexity.estimator_model' must be 'none' or 'centroid', got {estimator_model!r}")

    top.finish()
    return RunConfig(
        experiment=experiment,
        output_path=output_path,
        seed=seed,
        trials=trials,
        max_trials=max_trials,
        ppm_order=ppm_order,
        tie_rule=tie_rule,
        method=method,
        half_extent=half_extent,
        cell_counts=cell_counts,
        beam=beam,
        noise_photons=noise_photons,
        sweep_axis=axis,
        sweep_values=values,
        position_samples=position_samples,
        estimator_model=estimator_model,
    )


# --- row generation -----------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int,)):
        return str(value)
    return f"{value:.17g}"


def _scenario(cfg: RunConfig, geom: ArrayGeometry, n_b: float) -> Scenario:
    return Scenario(
        beam=cfg.beam,
        geom=geom,
        lambda_n=n_b / geom.total_area,
        ppm_order=cfg.ppm_order,
        trials=cfg.trials,
        seed=cfg.seed,
        tie_rule=cfg.tie_rule,
        max_trials=cfg.max_trials,
    )


def _analytic_or_mc(cfg: RunConfig, geom: ArrayGeometry, n_b: float) -> PeEstimate:
    m = geom.cell_count
    if cfg.method == "auto" and m == 1:
        captured = cell_signal_mass(cfg.beam, geom.bounds)
        return pe_single_detector(captured, n_b, cfg.ppm_order)
    if cfg.method == "auto" and m >= _GAUSSIAN_MIN_CELLS:
        lambda_n = n_b / geom.total_area
        masses = cell_signal_masses(cfg.beam, geom)
        weights = compute_weights(cfg.beam, geom, lambda_n)
        moments = clt_moments(masses, weights, lambda_n * geom.cell_area)
        return pe_gaussian_approx(moments, cfg.ppm_order)
    return run_monte_carlo(_scenario(cfg, geom, n_b))


def _pe_row(axis_value, m, est: PeEstimate, seed: int, axis_is_m: bool) -> list[str]:
    head = [] if axis_is_m else [_fmt(axis_value)]
    return head + [_fmt(m), _fmt(est.value), _fmt(est.half_width_95), est.method,
                   _fmt(est.trials_used), _fmt(seed)]


def _generate_rows(cfg: RunConfig) -> tuple[list[str], list[list[str]]]:
    axis_is_m = cfg.sweep_axis == "m"
    header = ([] if axis_is_m else [cfg.sweep_axis]) + ["m", "pe", "pe_ci95", "method", "trials", "seed"]
    rows: list[list[str]] = []

    if cfg.experiment == "noise_sweep":
        for n_b in cfg.sweep_values:
            for m in cfg.cell_counts:
                geom = ArrayGeometry.from_cell_count(cfg.half_extent, m)
                est = _analytic_or_mc(cfg, geom, n_b)
                rows.append(_pe_row(n_b, m, est, cfg.seed, axis_is_m))
    elif cfg.experiment == "m_sweep":
        for m in cfg.sweep_values:
            geom = ArrayGeometry.from_cell_count(cfg.half_extent, int(m))
            est = _analytic_or_mc(cfg, geom, cfg.noise_photons)
            rows.append(_pe_row(m, int(m), est, cfg.seed, axis_is_m))
    elif cfg.experiment == "position_average":
        for n_b in cfg.sweep_values:
            for m in cfg.cell_counts:
                geom = ArrayGeometry.from_cell_count(cfg.half_extent, m)
                est = average_over_positions(_scenario(cfg, geom, n_b), cfg.position_samples)
                rows.append(_pe_row(n_b, m, est, cfg.seed, axis_is_m))
    elif cfg.experiment == "mismatch":
        parameter = _MISMATCH_AXIS[cfg.sweep_axis]
        curves = {}
        for m in cfg.cell_counts:
            geom = ArrayGeometry.from_cell_count(cfg.half_extent, m)
            scenario = _scenario(cfg, geom, cfg.noise_photons)
            curves[m] = dict(mismatch_sweep(scenario, parameter, list(cfg.sweep_values)))
        for value in cfg.sweep_values:
            for m in cfg.cell_counts:
                rows.append(_pe_row(value, m, curves[m][value], cfg.seed, axis_is_m))
    elif cfg.experiment == "lower_bound":
        geom = ArrayGeometry.continuous(cfg.half_extent)
        for n_b in cfg.sweep_values:
            est = continuous_lower_bound(_scenario(cfg, geom, n_b))
            rows.append(_pe_row(n_b, "continuous", est, cfg.seed, axis_is_m))
    elif cfg.experiment == "weight_quality":
        for m in cfg.sweep_values:
            geom = ArrayGeometry.from_cell_count(cfg.half_extent, int(m))
            s_masses = cell_signal_masses(cfg.beam, geom) / cfg.beam.i0
            metric = weight_quality(s_masses, geom.cell_area)
            rows.append([_fmt(int(m)), _fmt(metric), _fmt(0.0), METHOD_WEIGHT_QUALITY,
                         _fmt(0), _fmt(cfg.seed)])
    elif cfg.experiment == "complexity":
        header = ["m", "ppm_order", "detect_multiplies", "detect_additions",
                  "position_model", "position_multiplies", "position_additions",
                  "rho_model", "rho_multiplies", "rho_additions"]
        for m in cfg.sweep_values:
            rep = complexity_report(int(m), cfg.ppm_order, cfg.estimator_model)
            rows.append([
                _fmt(int(m)), _fmt(cfg.ppm_order),
                _fmt(rep.real_multiplies), _fmt(rep.real_additions),
                rep.estimator_cost_position.label,
                _fmt(rep.estimator_cost_position.multiplies),
                _fmt(rep.estimator_cost_position.additions),
                rep.estimator_cost_rho.label,
                _fmt(rep.estimator_cost_rho.multiplies),
                _fmt(rep.estimator_cost_rho.additions),
            ])
    else:  # pragma: no cover - parse_config guarantees a known tag
        raise ConfigError(f"unhandled experiment {cfg.experiment!r}")
    return header, rows


def run(cfg: RunConfig) -> int:
    """Execute a validated configuration and write its CSV. Returns 0."""
    if not cfg.output_path:
        raise ConfigError("missing required key 'output_path' (or pass --out)")
    header, rows = _generate_rows(cfg)
    try:
        with open(cfg.output_path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except BaseException:
        # never leave a partial result file behind
        if os.path.isfile(cfg.output_path):
            os.unlink(cfg.output_path)
        raise
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="fso-array", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="run one experiment config and write its CSV")
    runp.add_argument("config", help="path to a TOML run configuration")
    runp.add_argument("--seed", type=int, default=None, help="override the config seed")
    runp.add_argument("--trials", type=int, default=None, help="override the config trial count")
    runp.add_argument("--out", default=None, help="override the config output path")
    args = parser.parse_args(argv)

    try:
        with open(args.config) as fh:
            cfg = parse_config(fh.read())
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.trials is not None:
            overrides["trials"] = args.trials
            if cfg.max_trials is not None and cfg.max_trials < args.trials:
                overrides["max_trials"] = args.trials
        if args.out is not None:
            overrides["output_path"] = args.out
        if overrides:
            cfg = replace(cfg, **overrides)
        return run(cfg)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
