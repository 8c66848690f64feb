"""Synthetic emitter simulation: QPSK payload plus hardware impairments."""

from __future__ import annotations

import numpy as np

from .signals import EmitterProfile, IQSignal, SignalDataset

SAMPLES_PER_SYMBOL = 4
RRC_ROLLOFF = 0.35
RRC_SPAN_SYMBOLS = 8


def rrc_taps(beta: float = RRC_ROLLOFF, sps: int = SAMPLES_PER_SYMBOL,
             span: int = RRC_SPAN_SYMBOLS) -> np.ndarray:
    """Root-raised-cosine filter taps, unit energy."""
    n = span * sps
    t = (np.arange(n + 1) - n / 2) / sps
    taps = np.empty_like(t)
    for i, ti in enumerate(t):
        if abs(ti) < 1e-12:
            taps[i] = 1.0 - beta + 4 * beta / np.pi
        elif abs(abs(4 * beta * ti) - 1.0) < 1e-12:
            taps[i] = (beta / np.sqrt(2)) * (
                (1 + 2 / np.pi) * np.sin(np.pi / (4 * beta))
                + (1 - 2 / np.pi) * np.cos(np.pi / (4 * beta))
            )
        else:
            num = np.sin(np.pi * ti * (1 - beta)) + 4 * beta * ti * np.cos(
                np.pi * ti * (1 + beta)
            )
            den = np.pi * ti * (1 - (4 * beta * ti) ** 2)
            taps[i] = num / den
    return taps / np.sqrt(np.sum(taps**2))


def _qpsk_payload(rng: np.random.Generator, length: int) -> np.ndarray:
    """Pulse-shaped QPSK baseband of exactly `length` samples, unit RMS."""
    sps = SAMPLES_PER_SYMBOL
    n_sym = int(np.ceil(length / sps)) + 2 * RRC_SPAN_SYMBOLS
    bits = rng.integers(0, 2, size=2 * n_sym)
    symbols = ((1 - 2 * bits[0::2]) + 1j * (1 - 2 * bits[1::2])) / np.sqrt(2)
    upsampled = np.zeros(n_sym * sps, dtype=np.complex128)
    upsampled[::sps] = symbols
    shaped = np.convolve(upsampled, rrc_taps())
    delay = RRC_SPAN_SYMBOLS * sps // 2
    payload = shaped[delay : delay + length]
    rms = np.sqrt(np.mean(np.abs(payload) ** 2))
    return payload / rms


def _apply_iq_imbalance(x: np.ndarray, gain_db: float, phase_deg: float) -> np.ndarray:
    gi = 10.0 ** (gain_db / 40.0)
    gq = 10.0 ** (-gain_db / 40.0)
    phi = np.deg2rad(phase_deg)
    i_br = gi * x.real + gq * np.sin(phi) * x.imag
    q_br = gq * np.cos(phi) * x.imag
    return i_br + 1j * q_br


def _apply_cubic_pa(x: np.ndarray, coeff: float) -> np.ndarray:
    return x + coeff * np.abs(x) ** 2 * x


def _apply_freq_offset(x: np.ndarray, ppm: float) -> np.ndarray:
    t = np.arange(x.shape[0])
    return x * np.exp(2j * np.pi * ppm * 1e-6 * t)


def _apply_phase_noise(x: np.ndarray, std: float, rng: np.random.Generator) -> np.ndarray:
    if std == 0.0:
        return x
    walk = np.cumsum(rng.normal(0.0, std, size=x.shape[0]))
    return x * np.exp(1j * walk)


def _apply_awgn(x: np.ndarray, snr_db: float, rng: np.random.Generator) -> np.ndarray:
    if np.isinf(snr_db):
        return x
    power = np.mean(np.abs(x) ** 2)
    noise_power = power / (10.0 ** (snr_db / 10.0))
    scale = np.sqrt(noise_power / 2.0)
    noise = rng.normal(0.0, scale, x.shape[0]) + 1j * rng.normal(0.0, scale, x.shape[0])
    return x + noise


def simulate_emitter_signal(
    profile: EmitterProfile,
    length: int,
    snr_db: float = np.inf,
    seed: int = 0,
    sample_rate_hz: float = 1.0,
) -> IQSignal:
    """Simulate one capture from an emitter.

    The payload is random QPSK shaped by a root-raised-cosine filter;
    the profile's impairments are then applied in a fixed order (IQ
    imbalance, DC offset, cubic amplifier, frequency offset, phase
    noise) before additive white Gaussian noise at snr_db.  snr_db of
    +inf disables the noise.  The same (profile, seed) pair always
    yields the same samples; payload, phase noise and channel noise
    draw from independent substreams, so changing one impairment
    parameter leaves the other randomness untouched.
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    if np.isnan(snr_db):
        raise ValueError("snr_db must be a number or +inf")
    children = np.random.SeedSequence([profile.seed, seed]).spawn(3)
    payload_rng, pn_rng, noise_rng = (np.random.default_rng(c) for c in children)

    x = _qpsk_payload(payload_rng, length)
    x = _apply_iq_imbalance(x, profile.iq_gain_imbalance_db, profile.iq_phase_imbalance_deg)
    x = x + profile.dc_offset
    x = _apply_cubic_pa(x, profile.pa_cubic_coeff)
    x = _apply_freq_offset(x, profile.freq_offset_ppm)
    x = _apply_phase_noise(x, profile.phase_noise_std, pn_rng)
    x = _apply_awgn(x, snr_db, noise_rng)
    return IQSignal(x, emitter_id=profile.emitter_id, sample_rate_hz=sample_rate_hz)


def simulate_dataset(
    profiles,
    signals_per_class: int,
    length: int,
    snr_db: float = np.inf,
    seed: int = 0,
    sample_rate_hz: float = 1.0,
) -> SignalDataset:
    """Simulate a labeled dataset with signals_per_class captures per profile."""
    if signals_per_class < 1:
        raise ValueError("signals_per_class must be >= 1")
    signals = []
    for profile in profiles:
        for k in range(signals_per_class):
            signals.append(
                simulate_emitter_signal(
                    profile, length, snr_db, seed=seed * 1000033 + k,
                    sample_rate_hz=sample_rate_hz,
                )
            )
    class_space = frozenset(p.emitter_id for p in profiles)
    return SignalDataset(tuple(signals), class_space, "train")
