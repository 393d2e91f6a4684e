import math

import numpy as np
import pytest
from conftest import quadrature_mass

from fso_array import (
    NOISE_ONLY,
    SIGNAL_PLUS_NOISE,
    ArrayGeometry,
    BeamParams,
    ReceiverConfig,
    SlotObservation,
    bin_locations,
    compute_weights,
    continuous_slot_statistic,
    detect_continuous,
    detect_discrete,
    sample_photon_locations,
)

BEAM = BeamParams.from_peak_intensity(200.0, 0.2)
GRID4 = ArrayGeometry.from_cell_count(1.0, 4)
CONT = ArrayGeometry.continuous(1.0)


def _obs(counts):
    return SlotObservation(kind=NOISE_ONLY, counts=np.asarray(counts))


class TestWeights:
    def test_zero_signal_gives_zero_weights(self):
        dark = BeamParams(i0=0.0, rho0=0.2)
        assert np.all(compute_weights(dark, GRID4, 6.0) == 0.0)

    def test_unit_weight_at_snr_e_minus_one(self):
        geom = ArrayGeometry.from_cell_count(1.0, 1)
        mass = 50.26542482273497
        lambda_n = mass / (geom.cell_area * (math.e - 1.0))
        w = compute_weights(BEAM, geom, lambda_n)
        assert w[0] == pytest.approx(1.0, rel=1e-12)

    def test_centered_quadrants_share_weight(self):
        # n_b = 24 over the array puts 6 noise photons in each quadrant
        w = compute_weights(BEAM, GRID4, 6.0)
        assert np.all(w == w[0])
        oracle = math.log1p(quadrature_mass(BEAM, GRID4.cell_region(0)) / 6.0)
        assert w[0] == pytest.approx(oracle, rel=1e-9)
        assert w[0] == pytest.approx(1.1295916674798767, rel=1e-12)

    def test_zero_noise_rejected(self):
        with pytest.raises(ValueError):
            compute_weights(BEAM, GRID4, 0.0)


class TestDetectDiscrete:
    def test_all_zero_counts_tie_across_slots(self):
        cfg = ReceiverConfig(ppm_order=4, lambda_n=6.0, weights=np.ones(4))
        out = detect_discrete([_obs([0, 0, 0, 0])] * 4, cfg)
        assert out.is_tie
        assert out.decided_symbol == 0

    def test_single_extra_photon_in_weighted_cell_wins(self):
        base = [3, 1, 0, 2]
        winner = [4, 1, 0, 2]
        weights = np.array([0.9, 0.4, 0.2, 0.1])
        cfg = ReceiverConfig(ppm_order=3, lambda_n=6.0, weights=weights)
        out = detect_discrete([_obs(winner), _obs(base), _obs(base)], cfg)
        assert out.decided_symbol == 0 and not out.is_tie
        zero_peak = ReceiverConfig(
            ppm_order=3, lambda_n=6.0, weights=np.array([0.0, 0.4, 0.2, 0.1])
        )
        out = detect_discrete([_obs(winner), _obs(base), _obs(base)], zero_peak)
        assert out.is_tie

    def test_single_cell_decision_ignores_weight_value(self):
        rng = np.random.default_rng(21)
        for _ in range(200):
            counts = rng.poisson(5.0, size=4)
            slots = [_obs([c]) for c in counts]
            small = detect_discrete(
                slots, ReceiverConfig(ppm_order=4, lambda_n=1.0, weights=np.array([0.01]))
            )
            large = detect_discrete(
                slots, ReceiverConfig(ppm_order=4, lambda_n=1.0, weights=np.array([42.0]))
            )
            assert small.decided_symbol == large.decided_symbol
            assert small.is_tie == large.is_tie

    def test_positive_scaling_never_changes_decision(self):
        rng = np.random.default_rng(22)
        for _ in range(200):
            weights = rng.uniform(0.0, 3.0, size=8)
            slots = [_obs(rng.poisson(4.0, size=8)) for _ in range(4)]
            a = detect_discrete(slots, ReceiverConfig(4, 1.0, weights))
            b = detect_discrete(slots, ReceiverConfig(4, 1.0, weights * 137.0))
            assert a.decided_symbol == b.decided_symbol
            assert a.is_tie == b.is_tie

    def test_random_tie_rule_needs_rng_and_samples_ties(self):
        cfg = ReceiverConfig(ppm_order=4, lambda_n=6.0, weights=np.ones(4), tie_rule="random")
        slots = [_obs([0, 0, 0, 0])] * 4
        with pytest.raises(ValueError):
            detect_discrete(slots, cfg)
        rng = np.random.default_rng(1)
        decisions = {detect_discrete(slots, cfg, rng).decided_symbol for _ in range(200)}
        assert decisions == {0, 1, 2, 3}

    def test_contract_violations(self):
        cfg = ReceiverConfig(ppm_order=2, lambda_n=6.0, weights=np.ones(4))
        cont = SlotObservation(kind=NOISE_ONLY, locations=np.zeros((0, 2)))
        with pytest.raises(ValueError):
            detect_discrete([_obs([1, 0, 0, 0]), cont], cfg)
        with pytest.raises(ValueError):
            detect_discrete([_obs([1, 0]), _obs([0, 1])], cfg)
        with pytest.raises(ValueError):
            detect_discrete([_obs([1, 0, 0, 0])], cfg)
        with pytest.raises(ValueError):
            ReceiverConfig(ppm_order=1, lambda_n=6.0, weights=np.ones(4))


class TestContinuousStatistic:
    def test_empty_slot_scores_zero(self):
        empty = SlotObservation(kind=NOISE_ONLY, locations=np.zeros((0, 2)))
        assert continuous_slot_statistic(empty, BEAM, 6.0) == 0.0

    def test_single_photon_at_center(self):
        obs = SlotObservation(kind=SIGNAL_PLUS_NOISE, locations=np.array([[0.0, 0.0]]))
        assert continuous_slot_statistic(obs, BEAM, 6.0) == pytest.approx(
            3.5361166995615263, rel=1e-12
        )

    def test_monotone_toward_beam_center(self):
        radii = np.linspace(0.9, 0.0, 12)
        scores = [
            continuous_slot_statistic(
                SlotObservation(kind=NOISE_ONLY, locations=np.array([[r, 0.0]])), BEAM, 6.0
            )
            for r in radii
        ]
        assert all(b > a for a, b in zip(scores, scores[1:]))

    def test_zero_noise_rejected(self):
        obs = SlotObservation(kind=NOISE_ONLY, locations=np.zeros((0, 2)))
        with pytest.raises(ValueError):
            continuous_slot_statistic(obs, BEAM, 0.0)


class TestDetectContinuous:
    def test_all_empty_ties(self):
        empty = SlotObservation(kind=NOISE_ONLY, locations=np.zeros((0, 2)))
        out = detect_continuous([empty] * 8, BEAM, 6.0)
        assert out.is_tie

    def test_center_photon_beats_far_photon(self):
        sig = SlotObservation(kind=SIGNAL_PLUS_NOISE, locations=np.array([[0.0, 0.0]]))
        noise = SlotObservation(kind=NOISE_ONLY, locations=np.array([[0.95, -0.9]]))
        out = detect_continuous([sig, noise], BEAM, 6.0)
        assert out.decided_symbol == 0 and not out.is_tie

    def test_decision_invariant_to_common_statistic_shift(self):
        rng = np.random.default_rng(30)
        for _ in range(50):
            slots = [
                sample_photon_locations(BEAM, CONT, 6.0, NOISE_ONLY, rng) for _ in range(4)
            ]
            out = detect_continuous(slots, BEAM, 6.0)
            stats = np.array([continuous_slot_statistic(o, BEAM, 6.0) for o in slots])
            shifted = stats + 17.25
            assert int(np.argmax(shifted)) == out.decided_symbol


def test_binned_decisions_approach_continuous_decisions():
    # quantization comparison on shared photons: finer grids agree with the
    # exact-location detector more often
    rng = np.random.default_rng(31)
    beam = BeamParams.from_peak_intensity(50.0, 0.2, center=(0.4, 0.4))
    lambda_n = 6.0
    n_symbols = 4000
    ppm_order = 4
    cell_counts = (4, 64, 1024)
    weights = {
        m: compute_weights(beam, ArrayGeometry.from_cell_count(1.0, m), lambda_n)
        for m in cell_counts
    }
    agree = {m: 0 for m in cell_counts}
    for _ in range(n_symbols):
        slots = [sample_photon_locations(beam, CONT, lambda_n, SIGNAL_PLUS_NOISE, rng)]
        slots += [
            sample_photon_locations(beam, CONT, lambda_n, NOISE_ONLY, rng)
            for _ in range(ppm_order - 1)
        ]
        reference = detect_continuous(slots, beam, lambda_n)
        for m in cell_counts:
            cfg = ReceiverConfig(ppm_order=ppm_order, lambda_n=lambda_n, weights=weights[m])
            binned = [bin_locations(CONT, obs, m) for obs in slots]
            out = detect_discrete(binned, cfg)
            agree[m] += int(
                out.decided_symbol == reference.decided_symbol
                and out.is_tie == reference.is_tie
            )
    rates = {m: agree[m] / n_symbols for m in cell_counts}
    se = math.sqrt(0.05 / n_symbols)
    assert rates[64] > rates[4] + 2 * se
    assert rates[1024] > rates[64] - 2 * se
    assert rates[1024] > 0.97
