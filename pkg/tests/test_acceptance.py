"""Acceptance suite: every shipped claim checked at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one pass/fail line
per criterion. The Monte Carlo criteria use fixed seeds, so the whole suite
is deterministic; it completes in a few minutes on one core.
"""


import numpy as np
import pytest

from conftest import combined_se, mc_standard_error, quadrature_mass, random_rect
from fso_array import (
    ArrayGeometry,
    BeamParams,
    LinkBudget,
    Rect,
    Scenario,
    cell_signal_mass,
    cell_signal_masses,
    clt_moments,
    complexity_report,
    compute_weights,
    continuous_lower_bound,
    mismatch_sweep,
    pe_gaussian_approx,
    pe_single_detector,
    run_monte_carlo,
    signal_photons,
    weight_quality,
)
from fso_array.cli import parse_config, run

FIG4_BEAM = BeamParams.from_peak_intensity(200.0, 0.2)
FIG6_BEAM = BeamParams.from_peak_intensity(50.0, 0.2, center=(0.4, 0.4))
MISMATCH_BEAM = BeamParams.from_peak_intensity(50.0, 0.2, center=(0.2, 0.2))
CELL_COUNTS = (1, 4, 16, 64, 144, 256)


def report(criterion, ok, detail):
    print(f"\n[criterion {criterion:2}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"criterion {criterion}: {detail}"


def _pe_sweep(beam, n_b, trials, seed):
    results = {}
    for m in CELL_COUNTS:
        s = Scenario(
            beam=beam,
            geom=ArrayGeometry.from_cell_count(1.0, m),
            lambda_n=n_b / 4.0,
            ppm_order=8,
            trials=trials,
            seed=seed,
        )
        results[m] = run_monte_carlo(s)
    return results


@pytest.fixture(scope="module")
def fig4_sweep():
    # high-rate centered scenario at its noisiest plotted point
    return _pe_sweep(FIG4_BEAM, 48.0, trials=500_000, seed=1046)


@pytest.fixture(scope="module")
def fig6_sweep():
    # low-rate off-center scenario, mid noise
    return _pe_sweep(FIG6_BEAM, 24.0, trials=400_000, seed=1076)


def test_criterion_1_link_budget():
    n_s = signal_photons(LinkBudget(rx_power=1e-5, slot_width=1e-11, efficiency=0.5,
                                    wavelength=1550e-9))
    report(1, 390.0 <= n_s <= 400.0, f"signal photons per slot = {n_s:.4f} in [390, 400]")


def test_criterion_2_beam_mass_consistency():
    total = cell_signal_mass(FIG4_BEAM, Rect(-1, 1, -1, 1))
    ok = abs(total - 50.0) <= 0.5
    rng = np.random.default_rng(102)
    worst = 0.0
    for _ in range(100):
        beam = BeamParams(
            i0=rng.uniform(0.5, 20.0),
            rho0=rng.uniform(0.05, 0.6),
            center=tuple(rng.uniform(-0.8, 0.8, 2)),
        )
        rect = random_rect(rng)
        oracle = quadrature_mass(beam, rect)
        worst = max(worst, abs(cell_signal_mass(beam, rect) - oracle) / oracle)
    ok = ok and worst < 1e-8
    report(2, ok, f"array mass = {total:.4f} (target 50 +- 0.5); "
                  f"worst closed-form vs quadrature rel err = {worst:.2e} < 1e-8")


def test_criterion_3_weight_quality_metric():
    values = {}
    for m in (1, 4, 16, 36, 64):
        geom = ArrayGeometry.from_cell_count(1.0, m)
        s = cell_signal_masses(FIG4_BEAM, geom) / FIG4_BEAM.i0
        values[m] = weight_quality(s, geom.cell_area)
    rel_14 = abs(values[1] - values[4]) / values[1]
    increasing = values[4] < values[16] < values[36] < values[64]
    report(3, rel_14 < 1e-9 and increasing,
           f"metric(1) vs metric(4) rel diff = {rel_14:.2e} < 1e-9; "
           f"strictly increasing over 4->16->36->64 = {increasing}")


def test_criterion_4_skellam_vs_monte_carlo():
    geom = ArrayGeometry.from_cell_count(1.0, 1)
    captured = cell_signal_mass(FIG4_BEAM, geom.bounds)
    lines = []
    ok = True
    for i, n_b in enumerate((6.0, 12.0, 24.0, 48.0)):
        reference = pe_single_detector(captured, n_b, 8, tol=1e-12)
        est = run_monte_carlo(Scenario(
            beam=FIG4_BEAM, geom=geom, lambda_n=n_b / 4.0, ppm_order=8,
            trials=1_000_000, seed=1004 + i,
        ))
        gap = abs(est.value - reference.value)
        limit = 3 * mc_standard_error(est, reference.value)
        ok = ok and gap <= limit
        lines.append(f"n_b={n_b:g}: |mc-skellam|={gap:.2e} <= 3se={limit:.2e}")
    report(4, ok, "; ".join(lines))


def test_criterion_5_gaussian_vs_monte_carlo():
    geom = ArrayGeometry.from_cell_count(1.0, 64)
    lambda_n = 6.0  # n_b = 24
    masses = cell_signal_masses(FIG4_BEAM, geom)
    weights = compute_weights(FIG4_BEAM, geom, lambda_n)
    reference = pe_gaussian_approx(clt_moments(masses, weights, lambda_n * geom.cell_area), 8)
    est = run_monte_carlo(Scenario(
        beam=FIG4_BEAM, geom=geom, lambda_n=lambda_n, ppm_order=8,
        trials=1_000_000, seed=1005,
    ))
    gap = abs(est.value - reference.value)
    limit = 3 * mc_standard_error(est, reference.value)
    report(5, gap <= limit,
           f"64 cells, n_b=24: |mc-gaussian| = {gap:.2e} <= 3se = {limit:.2e} "
           f"(gaussian {reference.value:.2e}, mc {est.value:.2e})")


def _check_nonincreasing(results):
    lines = []
    ok = True
    for a, b in zip(CELL_COUNTS, CELL_COUNTS[1:]):
        slack = 3 * combined_se(results[a], results[b])
        step_ok = results[b].value <= results[a].value + slack
        ok = ok and step_ok
        lines.append(f"{a}->{b}: {results[a].value:.2e}->{results[b].value:.2e}")
    return ok, "; ".join(lines)


def test_criterion_6_monotone_in_cell_count(fig4_sweep, fig6_sweep):
    ok4, detail4 = _check_nonincreasing(fig4_sweep)
    ok6, detail6 = _check_nonincreasing(fig6_sweep)
    report(6, ok4 and ok6,
           f"high-rate n_b=48: {detail4} | low-rate n_b=24: {detail6}")


def test_criterion_7_continuous_lower_bound(fig6_sweep):
    bound = continuous_lower_bound(Scenario(
        beam=FIG6_BEAM, geom=ArrayGeometry.continuous(1.0), lambda_n=6.0,
        ppm_order=8, trials=400_000, seed=1007,
    ))
    below_all = True
    for m, est in fig6_sweep.items():
        below_all = below_all and (bound.value <= est.value + 3 * combined_se(bound, est))
    gap_256 = (fig6_sweep[256].value - bound.value) / bound.value
    ok = below_all and gap_256 <= 0.20
    report(7, ok, f"bound {bound.value:.4f} below all discrete runs = {below_all}; "
                  f"256-cell gap = {gap_256:.1%} <= 20%")


def test_criterion_8_mismatch_minima():
    lines = []
    ok = True
    grids = {"rho": [0.1, 0.15, 0.2, 0.25, 0.3], "x0": [0.0, 0.1, 0.2, 0.3, 0.4]}
    for parameter, grid in grids.items():
        truth = 0.2
        for m in (1, 16):
            s = Scenario(
                beam=MISMATCH_BEAM, geom=ArrayGeometry.from_cell_count(1.0, m),
                lambda_n=6.0, ppm_order=8, trials=100_000, seed=1008,
            )
            curve = mismatch_sweep(s, parameter, grid)
            by_value = dict(curve)
            at_truth = by_value[truth]
            best_value, best = min(curve, key=lambda item: item[1].value)
            if m == 1:
                spread = max(e.value for _, e in curve) - min(e.value for _, e in curve)
                flat_ok = spread <= 3 * (at_truth.half_width_95 / 1.96)
                ok = ok and flat_ok
                lines.append(f"{parameter}, 1 cell: spread = {spread:.1e} (flat)")
            else:
                min_ok = at_truth.value <= best.value + 3 * combined_se(at_truth, best)
                ok = ok and min_ok
                lines.append(
                    f"{parameter}, 16 cells: min at {best_value:g} "
                    f"(pe {best.value:.4f}), truth pe {at_truth.value:.4f}"
                )
    report(8, ok, "; ".join(lines))


def test_criterion_9_complexity_counters():
    ok = True
    for m, k in ((1, 8), (16, 2), (256, 8)):
        rep = complexity_report(m, k)
        ok = ok and rep.real_multiplies == k * m and rep.real_additions == k * m
        cen = complexity_report(m, k, estimator_model="centroid")
        ok = ok and cen.estimator_cost_position.multiplies == 2 * m * k
        ok = ok and cen.estimator_cost_position.additions == 2 * m * k
    report(9, ok, "detection costs K*M multiplies and K*M additions; "
                  "centroid adds 2*M*K of each")


def test_criterion_10_deterministic_csv(tmp_path, monkeypatch):
    out = tmp_path / "det.csv"
    cfg = parse_config(f"""
experiment = "noise_sweep"
output_path = "{out}"
seed = 1010
trials = 20000
max_trials = 0
method = "monte-carlo"

[array]
cell_counts = [1, 16]

[beam]
rho_m = 0.2
center_m = [0.4, 0.4]
peak_intensity_per_m2 = 50.0

[sweep]
axis = "n_b"
values = [24.0]
""")
    run(cfg)
    first = out.read_bytes()
    run(cfg)
    second = out.read_bytes()
    monkeypatch.setenv("FSO_ARRAY_MAX_WORKERS", "4")
    run(cfg)
    third = out.read_bytes()
    ok = first == second == third
    report(10, ok, f"rerun identical = {first == second}; "
                   f"4-worker run identical = {first == third} ({len(first)} bytes)")
