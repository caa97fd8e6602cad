"""Mixture construction at a target SNR and spectrogram providers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .transform import Measurements, Signal, stft

PROVIDER_ORACLE = "oracle"
PROVIDER_NOISY_ORACLE = "noisy_oracle"


@dataclass(eq=False)
class ProviderSpec:
    """How per-source measurements are produced from the true sources.

    "oracle" takes exact |stft|; "noisy_oracle" perturbs the magnitudes with
    seeded log-normal noise, r_c = (|stft(s_c)| * exp(sigma * G_c))^d.
    """

    mode: str = PROVIDER_ORACLE
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.mode not in (PROVIDER_ORACLE, PROVIDER_NOISY_ORACLE):
            raise ValueError("unknown provider mode: %r" % (self.mode,))
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")


def align_noise(noise, length, seed):
    """Crop or tile the noise signal to an exact length.

    Longer noise is cropped at a random offset drawn from the seed; shorter
    noise is tiled until it covers the length, then cropped the same way.

    Args:
        noise: noise Signal.
        length: target length, >= 1.
        seed: integer seed for the crop offset.

    Returns:
        Signal of exactly the requested length.
    """
    if length < 1:
        raise ValueError("length must be positive")
    if len(noise) == 0:
        raise ValueError("noise signal is empty")
    samples = noise.samples
    if samples.size < length:
        reps = -(-length // samples.size)
        samples = np.tile(samples, reps)
    offset = int(np.random.default_rng(seed).integers(0, samples.size - length + 1))
    return Signal(samples[offset : offset + length].copy(), noise.sample_rate)


def mix_at_snr(speech, noise, snr_db):
    """Scale the noise and add it to the speech at an exact SNR.

    The noise is multiplied by alpha = (||speech|| / ||noise||) *
    10**(-snr_db / 20), which makes 10 log10(E_speech / E_scaled_noise)
    equal snr_db to machine precision.

    Args:
        speech: speech Signal.
        noise: noise Signal, same length and sample rate.
        snr_db: target signal-to-noise ratio in dB.

    Returns:
        (mixture, scaled_noise) pair of Signals.
    """
    if len(speech) != len(noise):
        raise ValueError("speech and noise lengths differ (align the noise first)")
    if speech.sample_rate != noise.sample_rate:
        raise ValueError("speech and noise sample rates differ")
    speech_norm = float(np.linalg.norm(speech.samples))
    noise_norm = float(np.linalg.norm(noise.samples))
    if speech_norm == 0.0 or noise_norm == 0.0:
        raise ValueError("cannot set an SNR with a zero-energy signal")
    alpha = speech_norm / noise_norm * 10.0 ** (-snr_db / 20.0)
    scaled = Signal(alpha * noise.samples, noise.sample_rate)
    mixture = Signal(speech.samples + scaled.samples, speech.sample_rate)
    return mixture, scaled


def provide_spectrograms(sources, provider, d, config):
    """Build per-source Measurements from the true sources.

    The noisy oracle consumes one standard-normal matrix per source, in
    order, from a generator seeded with provider.seed, so results are
    deterministic for a fixed seed.

    Args:
        sources: list of true-source Signals.
        provider: ProviderSpec.
        d: measurement exponent, 1 or 2.
        config: StftConfig.

    Returns:
        List of Measurements with exponent d.
    """
    if d not in (1, 2):
        raise ValueError("d must be 1 or 2")
    rng = np.random.default_rng(provider.seed)
    out = []
    for source in sources:
        mag = np.abs(stft(source, config).data)
        if provider.mode == PROVIDER_NOISY_ORACLE:
            mag = mag * np.exp(provider.sigma * rng.standard_normal(mag.shape))
        out.append(Measurements(mag if d == 1 else mag**2, d))
    return out
