"""Phase recovery solvers: Griffin-Lim, MISI, and projected gradient descent.

All solvers estimate C time-domain sources from per-source spectrogram
measurements r_c and (for the separation solvers) the observed mixture x.
The separation solvers keep iterates on the affine set sum_c s_c = x by
distributing the mixing residual equally after each update.

Projected gradient descent minimises, per source, the beta-divergence
between r_c and |A s_c|^d.  With beta = 2, d = 1, direction "right" and unit
normalized step, its update reduces exactly to MISI.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .divergence import DivergenceSpec, grad_term, objective
from .transform import Signal, _istft_data, _stft_data, normalization_constant, stft


class SolverDivergedError(RuntimeError):
    """An iterate became non-finite; carries the offending iteration index."""

    def __init__(self, iteration):
        super().__init__(
            "solver diverged at iteration %d: non-finite iterate" % iteration
        )
        self.iteration = iteration


@dataclass(eq=False)
class SolverConfig:
    """Projected-gradient settings.

    step_size is the normalized step (the true gradient step divided by the
    window normalization constant b).  Initialization is amplitude masking
    unless an explicit iterate list is handed to the solver.
    """

    spec: DivergenceSpec = field(default_factory=lambda: DivergenceSpec(2.0))
    step_size: float = 1.0
    iterations: int = 5
    eps_floor: float = 1e-12
    record_trace: bool = False

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.step_size < 0:
            # 0 degenerates to repeated projection of the initialization
            raise ValueError("step_size must be >= 0")
        if not self.eps_floor > 0:
            raise ValueError("eps_floor must be positive")


@dataclass(eq=False)
class SeparationResult:
    """Estimated sources plus an optional per-iteration objective trace.

    objective_trace[0] holds the per-source objectives at initialization and
    objective_trace[t] after iteration t; it is None unless the solver was
    asked to record it.
    """

    sources: list
    objective_trace: list | None
    iterations_run: int


def _unit_phase(spec_data):
    # zero-magnitude bins get unit factor 1 (phase 0)
    mag = np.abs(spec_data)
    safe = np.where(mag > 0, mag, 1.0)
    return np.where(mag > 0, spec_data / safe, 1.0 + 0.0j)


def _check_measurements(measurements, mixture, config, d=None):
    if not measurements:
        raise ValueError("at least one measurement matrix is required")
    shape = (config.n_bins, config.n_frames(len(mixture)))
    for r in measurements:
        if r.data.shape != shape:
            raise ValueError(
                "measurements shape %s does not match the mixture grid %s"
                % (r.data.shape, shape)
            )
        if d is not None and r.d != d:
            raise ValueError("measurements exponent %d, expected %d" % (r.d, d))
    if len({r.d for r in measurements}) != 1:
        raise ValueError("all measurements must share the same exponent d")


def amplitude_mask_init(measurements, mixture, config):
    """Initial source estimates from the mixture phase.

    Each source is synthesised from its measured amplitude r_c^(1/d) combined
    with the mixture's unit phase:  s_c = istft(r_c^(1/d) * X / |X|).

    Args:
        measurements: list of Measurements, one per source, on the grid of
            stft(mixture, config).
        mixture: observed mixture Signal.
        config: StftConfig.

    Returns:
        List of Signals, one per source (not projected onto the mixing
        constraint).
    """
    _check_measurements(measurements, mixture, config)
    phase = _unit_phase(stft(mixture, config).data)
    out = []
    for r in measurements:
        amp = r.data if r.d == 1 else np.sqrt(r.data)
        out.append(
            Signal(
                _istft_data(amp * phase, config, len(mixture)), mixture.sample_rate
            )
        )
    return out


def griffin_lim(measurements, init, iterations, config):
    """Classic alternating phase recovery for a single magnitude target.

    Repeats s <- istft(r * As / |As|): project the current spectrogram onto
    the measured magnitudes, keep its phase, resynthesise.  The quadratic
    magnitude mismatch is non-increasing along the iterates.

    Args:
        measurements: Measurements with d == 1.
        init: starting Signal (defines the output length).
        iterations: number of updates, >= 0 (0 returns the init).
        config: StftConfig.

    Returns:
        Signal estimate.
    """
    if measurements.d != 1:
        raise ValueError("griffin_lim requires magnitude measurements (d = 1)")
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    target = measurements.data
    expected = (config.n_bins, config.n_frames(len(init)))
    if target.shape != expected:
        raise ValueError("measurements shape does not match the analysis grid")
    s = init.samples
    for _ in range(iterations):
        phase = _unit_phase(_stft_data(s, config))
        s = _istft_data(target * phase, config, len(init))
    return Signal(s.copy(), init.sample_rate)


def project_to_mixture(estimates, mixture):
    """Project estimates onto the affine set sum_c s_c = x.

    Distributes the mixing error equally: s_c = y_c + (x - sum_i y_i) / C.

    Args:
        estimates: list of Signals, all the mixture's length.
        mixture: mixture Signal x.

    Returns:
        List of Signals summing to the mixture at machine precision.
    """
    if not estimates:
        raise ValueError("at least one estimate is required")
    for y in estimates:
        if len(y) != len(mixture):
            raise ValueError("estimate length does not match the mixture")
    stack = np.stack([y.samples for y in estimates])
    residual = (mixture.samples - stack.sum(axis=0)) / len(estimates)
    return [Signal(row + residual, mixture.sample_rate) for row in stack]


def misi(measurements, mixture, iterations, config, init=None, record_trace=False):
    """Multiple-input spectrogram inversion.

    Starts from amplitude masking (or the supplied init) and alternates the
    per-source Griffin-Lim update with the mixing projection, so estimates
    always sum to the mixture.

    Args:
        measurements: list of magnitude Measurements (d == 1), length >= 2.
        mixture: mixture Signal.
        iterations: number of update/projection rounds, >= 0.
        config: StftConfig.
        init: optional list of starting Signals overriding amplitude masking.
        record_trace: record the per-source quadratic objectives.

    Returns:
        SeparationResult.
    """
    if len(measurements) < 2:
        raise ValueError("misi needs at least two sources")
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    _check_measurements(measurements, mixture, config, d=1)
    sources = list(init) if init is not None else amplitude_mask_init(
        measurements, mixture, config
    )
    if len(sources) != len(measurements):
        raise ValueError("init must provide one signal per source")
    quad = DivergenceSpec(2.0, "right", 1)
    trace = []
    if record_trace:
        trace.append([objective(quad, r, s, config) for r, s in zip(measurements, sources)])
    for _ in range(iterations):
        updated = []
        for r, s in zip(measurements, sources):
            phase = _unit_phase(_stft_data(s.samples, config))
            updated.append(
                Signal(
                    _istft_data(r.data * phase, config, len(mixture)),
                    mixture.sample_rate,
                )
            )
        sources = project_to_mixture(updated, mixture)
        if record_trace:
            trace.append(
                [objective(quad, r, s, config) for r, s in zip(measurements, sources)]
            )
    return SeparationResult(sources, trace if record_trace else None, iterations)


def _descent_direction(samples, target_floored, spec, config, eps_floor):
    """Normalized gradient d * istft(S |S|^(d-2) gradterm); true gradient / b."""
    data = _stft_data(samples, config)
    mag_f = np.maximum(np.abs(data), eps_floor)
    if spec.d == 2:
        integrand = data * grad_term(spec, target_floored, mag_f**2)
    else:
        # |S|^(d-2) = 1/mag for d = 1
        integrand = data * (grad_term(spec, target_floored, mag_f) / mag_f)
    return spec.d * _istft_data(integrand, config, samples.size)


def objective_gradient(signal, measurements, spec, config, eps_floor=1e-12):
    """Gradient of :func:`bregsep.divergence.objective` w.r.t. the signal.

    Computed as d * b * istft(As . |As|^(d-2) . gradterm) with the |.|^(d-2)
    factor special-cased to 1 for d = 2 and magnitudes floored at eps_floor.

    Returns:
        Signal holding the gradient (same length and rate as the input).
    """
    if measurements.d != spec.d:
        raise ValueError("measurements exponent %d != spec.d %d" % (measurements.d, spec.d))
    b = normalization_constant(config)
    target = np.maximum(measurements.data, eps_floor)
    direction = _descent_direction(signal.samples, target, spec, config, eps_floor)
    return Signal(b * direction, signal.sample_rate)


def projected_gradient(measurements, mixture, solver_config, stft_config, init=None):
    """Separate sources by projected gradient descent on the mixing set.

    Per iteration and source: take a gradient step on the divergence between
    r_c and |A s_c|^d with normalized step size, then project all estimates
    back onto sum_c s_c = x.  Initialization (amplitude masking unless init
    is given) is not projected.

    Args:
        measurements: list of Measurements (length >= 2) sharing the
            exponent solver_config.spec.d.
        mixture: mixture Signal.
        solver_config: SolverConfig (step size, iterations, divergence,
            floor, trace recording).
        stft_config: StftConfig.
        init: optional list of starting Signals.

    Returns:
        SeparationResult; objective_trace is populated iff record_trace.

    Raises:
        SolverDivergedError: a non-finite iterate appeared (iteration index
            on the exception).
    """
    if len(measurements) < 2:
        raise ValueError("projected_gradient needs at least two sources")
    spec = solver_config.spec
    _check_measurements(measurements, mixture, stft_config, d=spec.d)
    sources = list(init) if init is not None else amplitude_mask_init(
        measurements, mixture, stft_config
    )
    if len(sources) != len(measurements):
        raise ValueError("init must provide one signal per source")
    eps = solver_config.eps_floor
    targets = [np.maximum(r.data, eps) for r in measurements]
    trace = []

    def _record():
        trace.append(
            [
                objective(spec, r, s, stft_config, eps_floor=eps)
                for r, s in zip(measurements, sources)
            ]
        )

    if solver_config.record_trace:
        _record()
    x = mixture.samples
    count = len(measurements)
    current = [s.samples for s in sources]
    for t in range(solver_config.iterations):
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            stepped = [
                s
                - solver_config.step_size
                * _descent_direction(s, target, spec, stft_config, eps)
                for s, target in zip(current, targets)
            ]
            residual = (x - np.sum(stepped, axis=0)) / count
            current = [y + residual for y in stepped]
        if not all(np.all(np.isfinite(y)) for y in current):
            raise SolverDivergedError(t)
        sources = [Signal(y, mixture.sample_rate) for y in current]
        if solver_config.record_trace:
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                _record()
    return SeparationResult(
        sources, trace if solver_config.record_trace else None, solver_config.iterations
    )
