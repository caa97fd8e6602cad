"""Phase recovery and single-channel source separation toolkit.

Signals are analysed with a windowed, unitary short-time Fourier transform
whose synthesis is the exact pseudo-inverse of analysis.  Spectrogram
magnitudes (or powers) are matched under beta-divergences, either with the
classic Griffin-Lim / MISI updates or with projected gradient descent on the
mixing constraint.
"""

from .audio import load_wav, write_wav
from .divergence import (
    DivergenceSpec,
    bregman,
    generator,
    generator_prime,
    generator_second,
    grad_term,
    objective,
)
from .metrics import sdr, sdri
from .mixing import ProviderSpec, align_noise, mix_at_snr, provide_spectrograms
from .solvers import (
    SeparationResult,
    SolverConfig,
    SolverDivergedError,
    amplitude_mask_init,
    griffin_lim,
    misi,
    objective_gradient,
    project_to_mixture,
    projected_gradient,
)
from .transform import (
    ComplexSpectrogram,
    Measurements,
    NotColaError,
    Signal,
    StftConfig,
    istft,
    magnitude_power,
    make_window,
    normalization_constant,
    stft,
    symmetry_weights,
)

__version__ = "0.1.0"

__all__ = [
    "ComplexSpectrogram",
    "DivergenceSpec",
    "Measurements",
    "NotColaError",
    "ProviderSpec",
    "SeparationResult",
    "Signal",
    "SolverConfig",
    "SolverDivergedError",
    "StftConfig",
    "align_noise",
    "amplitude_mask_init",
    "bregman",
    "generator",
    "generator_prime",
    "generator_second",
    "grad_term",
    "griffin_lim",
    "istft",
    "load_wav",
    "magnitude_power",
    "make_window",
    "misi",
    "mix_at_snr",
    "normalization_constant",
    "objective",
    "objective_gradient",
    "project_to_mixture",
    "projected_gradient",
    "provide_spectrograms",
    "sdr",
    "sdri",
    "stft",
    "symmetry_weights",
    "write_wav",
]
