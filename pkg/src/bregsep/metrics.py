"""Separation quality metrics."""

from __future__ import annotations

import numpy as np

SDR_CAP_DB = 240.0


def sdr(reference, estimate):
    """Signal-to-distortion ratio in dB, 20 log10(||s*|| / ||s* - s||).

    Capped at +240 dB when the distortion is below 1e-12 of the reference
    norm (numerically exact reconstruction).

    Args:
        reference: ground-truth Signal (must not be all-zero).
        estimate: estimated Signal of the same length.

    Returns:
        float dB value.
    """
    if len(reference) != len(estimate):
        raise ValueError("reference and estimate lengths differ")
    ref_norm = float(np.linalg.norm(reference.samples))
    if ref_norm == 0.0:
        raise ValueError("reference signal has zero energy")
    dist = float(np.linalg.norm(reference.samples - estimate.samples))
    if dist < 1e-12 * ref_norm:
        return SDR_CAP_DB
    return 20.0 * np.log10(ref_norm / dist)


def sdri(reference, estimate, baseline):
    """SDR improvement of estimate over baseline, in dB."""
    return sdr(reference, estimate) - sdr(reference, baseline)
