"""Simulator: pulse shaping, impairment chain, noise and determinism."""

import numpy as np
import pytest

from cashid.signals import EmitterProfile
from cashid.simulate import (
    SAMPLES_PER_SYMBOL,
    rrc_taps,
    simulate_dataset,
    simulate_emitter_signal,
)


def clean_profile(**overrides):
    base = dict(
        emitter_id=0, freq_offset_ppm=0.0, iq_gain_imbalance_db=0.0,
        iq_phase_imbalance_deg=0.0, dc_offset=0.0, pa_cubic_coeff=0.0,
        phase_noise_std=0.0, seed=11,
    )
    base.update(overrides)
    return EmitterProfile(**base)


def clean_samples(length, seed=0, profile_seed=11):
    """Impairment-free simulation: exactly the shaped payload."""
    sig = simulate_emitter_signal(
        clean_profile(seed=profile_seed), length, snr_db=np.inf, seed=seed
    )
    return sig.samples


class TestRrcTaps:
    def test_symmetric_unit_energy_peak_at_center(self):
        taps = rrc_taps()
        assert taps.shape == (8 * SAMPLES_PER_SYMBOL + 1,)
        assert np.allclose(taps, taps[::-1])
        assert np.sum(taps**2) == pytest.approx(1.0)
        assert np.argmax(taps) == len(taps) // 2

    def test_zero_rolloff_reduces_to_sinc(self):
        taps = rrc_taps(beta=0.0, sps=4, span=6)
        t = (np.arange(25) - 12) / 4
        expected = np.sinc(t)
        expected = expected / np.sqrt(np.sum(expected**2))
        assert np.allclose(taps, expected, atol=1e-12)

    def test_singular_point_branch_is_finite(self):
        taps = rrc_taps(beta=0.25, sps=1, span=8)
        assert np.all(np.isfinite(taps))


class TestPayload:
    def test_unit_rms(self):
        samples = clean_samples(512)
        assert np.sqrt(np.mean(np.abs(samples) ** 2)) == pytest.approx(1.0)

    def test_deterministic_per_seed_pair(self):
        a = simulate_emitter_signal(clean_profile(), 128, seed=5)
        b = simulate_emitter_signal(clean_profile(), 128, seed=5)
        c = simulate_emitter_signal(clean_profile(), 128, seed=6)
        assert np.array_equal(a.samples, b.samples)
        assert not np.array_equal(a.samples, c.samples)

    def test_distinct_profile_seeds_distinct_payloads(self):
        a = simulate_emitter_signal(clean_profile(seed=1), 128, seed=0)
        b = simulate_emitter_signal(clean_profile(seed=2), 128, seed=0)
        assert not np.array_equal(a.samples, b.samples)


class TestImpairmentChain:
    """Each impairment in isolation against its closed form on the
    impairment-free payload (identical substream seeding makes the
    comparison exact)."""

    def test_frequency_offset_is_exact_phase_ramp(self):
        length, ppm = 256, 400.0
        clean = clean_samples(length)
        shifted = simulate_emitter_signal(
            clean_profile(freq_offset_ppm=ppm), length, seed=0
        ).samples
        ramp = np.exp(2j * np.pi * ppm * 1e-6 * np.arange(length))
        assert np.allclose(shifted, clean * ramp, atol=1e-12)

    def test_dc_offset_is_exact_translation(self):
        length = 128
        clean = clean_samples(length)
        shifted = simulate_emitter_signal(
            clean_profile(dc_offset=0.05 - 0.02j), length, seed=0
        ).samples
        assert np.allclose(shifted, clean + (0.05 - 0.02j), atol=1e-12)

    def test_gain_imbalance_scales_i_and_q_oppositely(self):
        length, gain_db = 128, 2.0
        clean = clean_samples(length)
        out = simulate_emitter_signal(
            clean_profile(iq_gain_imbalance_db=gain_db), length, seed=0
        ).samples
        gi = 10.0 ** (gain_db / 40.0)
        gq = 10.0 ** (-gain_db / 40.0)
        assert np.allclose(out.real, gi * clean.real, atol=1e-12)
        assert np.allclose(out.imag, gq * clean.imag, atol=1e-12)

    def test_phase_imbalance_leaks_q_into_i(self):
        length, phase_deg = 128, 5.0
        clean = clean_samples(length)
        out = simulate_emitter_signal(
            clean_profile(iq_phase_imbalance_deg=phase_deg), length, seed=0
        ).samples
        phi = np.deg2rad(phase_deg)
        assert np.allclose(out.real, clean.real + np.sin(phi) * clean.imag, atol=1e-12)
        assert np.allclose(out.imag, np.cos(phi) * clean.imag, atol=1e-12)

    def test_cubic_amplifier_closed_form(self):
        length, coeff = 128, 0.1
        clean = clean_samples(length)
        out = simulate_emitter_signal(
            clean_profile(pa_cubic_coeff=coeff), length, seed=0
        ).samples
        expected = clean + coeff * np.abs(clean) ** 2 * clean
        assert np.allclose(out, expected, atol=1e-12)

    def test_phase_noise_matches_substream_walk(self):
        length, std = 128, 0.01
        clean = clean_samples(length)
        out = simulate_emitter_signal(
            clean_profile(phase_noise_std=std), length, seed=0
        ).samples
        children = np.random.SeedSequence([11, 0]).spawn(3)
        pn_rng = np.random.default_rng(children[1])
        walk = np.cumsum(pn_rng.normal(0.0, std, size=length))
        assert np.allclose(out, clean * np.exp(1j * walk), atol=1e-12)

    def test_changing_one_impairment_keeps_payload(self):
        # independent substreams: adding noise does not reshuffle the payload
        clean = clean_samples(96)
        noisy = simulate_emitter_signal(clean_profile(), 96, snr_db=10.0, seed=0).samples
        residual = noisy - clean
        assert np.std(residual) > 0.1
        # residual is white noise around the payload, not a new payload
        assert abs(np.vdot(residual, clean)) / (
            np.linalg.norm(residual) * np.linalg.norm(clean)
        ) < 0.3


class TestAwgn:
    def test_infinite_snr_disables_noise(self):
        a = simulate_emitter_signal(clean_profile(), 64, snr_db=np.inf, seed=3)
        b = simulate_emitter_signal(clean_profile(), 64, snr_db=np.inf, seed=3)
        assert np.array_equal(a.samples, b.samples)

    def test_snr_sets_noise_power(self):
        length, snr_db = 50_000, 10.0
        clean = clean_samples(length)
        noisy = simulate_emitter_signal(
            clean_profile(), length, snr_db=snr_db, seed=0
        ).samples
        noise_power = np.mean(np.abs(noisy - clean) ** 2)
        signal_power = np.mean(np.abs(clean) ** 2)
        measured = 10 * np.log10(signal_power / noise_power)
        assert measured == pytest.approx(snr_db, abs=0.2)

    def test_nan_snr_rejected(self):
        with pytest.raises(ValueError):
            simulate_emitter_signal(clean_profile(), 64, snr_db=np.nan)


class TestSimulateDataset:
    def test_labels_counts_and_length(self):
        profiles = [clean_profile(emitter_id=i, seed=i) for i in range(3)]
        ds = simulate_dataset(profiles, signals_per_class=4, length=64, seed=1)
        assert len(ds) == 12
        labels = ds.labels()
        for i in range(3):
            assert (labels == i).sum() == 4
        assert all(sig.length == 64 for sig in ds)
        assert ds.class_space == frozenset({0, 1, 2})

    def test_deterministic(self):
        profiles = [clean_profile(emitter_id=0, seed=0)]
        a = simulate_dataset(profiles, 3, 32, seed=9)
        b = simulate_dataset(profiles, 3, 32, seed=9)
        for x, y in zip(a, b):
            assert np.array_equal(x.samples, y.samples)

    def test_validation(self):
        with pytest.raises(ValueError):
            simulate_dataset([clean_profile()], 0, 32)
        with pytest.raises(ValueError):
            simulate_emitter_signal(clean_profile(), 0)
