import numpy as np
import pytest

from bregsep.divergence import DivergenceSpec, objective
from bregsep.mixing import ProviderSpec, provide_spectrograms
from bregsep.solvers import (
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
from bregsep.transform import (
    Measurements,
    Signal,
    StftConfig,
    stft,
    symmetry_weights,
)

SEED = 2468
CFG = StftConfig(256, 64)


def _random_measurements(rng, length, count, d=1, config=CFG):
    out = []
    for _ in range(count):
        mag = np.abs(stft(Signal(rng.standard_normal(length)), config).data)
        out.append(Measurements(mag if d == 1 else mag**2, d))
    return out


def _fd_gradient(signal, meas, spec, config):
    s = signal.samples
    grad = np.zeros_like(s)
    for i in range(s.size):
        h = 1e-6 * (1.0 + abs(s[i]))
        up = s.copy()
        down = s.copy()
        up[i] += h
        down[i] -= h
        j_up = objective(spec, meas, Signal(up), config)
        j_down = objective(spec, meas, Signal(down), config)
        grad[i] = (j_up - j_down) / (2.0 * h)
    return grad


class TestProjectToMixture:
    def test_hand_example(self):
        y = [Signal(np.array([1.0, 0.0])), Signal(np.array([0.0, 0.0]))]
        x = Signal(np.array([0.0, 0.0]))
        out = project_to_mixture(y, x)
        assert np.allclose(out[0].samples, [0.5, 0.0], atol=1e-15)
        assert np.allclose(out[1].samples, [-0.5, 0.0], atol=1e-15)

    def test_sum_is_exact(self):
        rng = np.random.default_rng(SEED)
        x = Signal(rng.standard_normal(500))
        y = [Signal(rng.standard_normal(500)) for _ in range(3)]
        out = project_to_mixture(y, x)
        total = np.sum([s.samples for s in out], axis=0)
        assert np.max(np.abs(total - x.samples)) < 1e-12

    def test_idempotent(self):
        rng = np.random.default_rng(SEED + 1)
        x = Signal(rng.standard_normal(300))
        y = [Signal(rng.standard_normal(300)) for _ in range(2)]
        once = project_to_mixture(y, x)
        twice = project_to_mixture(once, x)
        for a, b in zip(once, twice):
            assert np.max(np.abs(a.samples - b.samples)) < 1e-12

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            project_to_mixture([Signal(np.ones(4))], Signal(np.ones(5)))


class TestAmplitudeMaskInit:
    def test_single_source_recovers_input(self):
        rng = np.random.default_rng(SEED + 2)
        x = Signal(rng.standard_normal(2000))
        r = Measurements(np.abs(stft(x, CFG).data), 1)
        (est,) = amplitude_mask_init([r], x, CFG)
        assert np.max(np.abs(est.samples - x.samples)) < 1e-10

    def test_power_measurements_recover_input(self):
        rng = np.random.default_rng(SEED + 3)
        x = Signal(rng.standard_normal(2000))
        r = Measurements(np.abs(stft(x, CFG).data) ** 2, 2)
        (est,) = amplitude_mask_init([r], x, CFG)
        assert np.max(np.abs(est.samples - x.samples)) < 1e-10

    def test_zero_measurements_give_silence(self):
        rng = np.random.default_rng(SEED + 4)
        x = Signal(rng.standard_normal(2000))
        shape = (CFG.n_bins, CFG.n_frames(2000))
        out = amplitude_mask_init([Measurements(np.zeros(shape), 1)], x, CFG)
        assert np.max(np.abs(out[0].samples)) == 0.0

    def test_grid_mismatch_rejected(self):
        rng = np.random.default_rng(SEED + 5)
        x = Signal(rng.standard_normal(2000))
        bad = Measurements(np.ones((CFG.n_bins, 3)), 1)
        with pytest.raises(ValueError):
            amplitude_mask_init([bad], x, CFG)


class TestGriffinLim:
    def test_requires_magnitude_measurements(self):
        rng = np.random.default_rng(SEED + 6)
        x = Signal(rng.standard_normal(1000))
        r = Measurements(np.abs(stft(x, CFG).data) ** 2, 2)
        with pytest.raises(ValueError):
            griffin_lim(r, x, 3, CFG)

    def test_zero_iterations_returns_init(self):
        rng = np.random.default_rng(SEED + 7)
        x = Signal(rng.standard_normal(1000))
        r = Measurements(np.abs(stft(x, CFG).data), 1)
        init = Signal(rng.standard_normal(1000))
        out = griffin_lim(r, init, 0, CFG)
        assert np.array_equal(out.samples, init.samples)

    def test_fixed_point_at_exact_magnitudes(self):
        rng = np.random.default_rng(SEED + 8)
        x = Signal(rng.standard_normal(2000))
        r = Measurements(np.abs(stft(x, CFG).data), 1)
        out = griffin_lim(r, x, 10, CFG)
        assert np.max(np.abs(out.samples - x.samples)) < 1e-10

    def test_quadratic_loss_non_increasing(self):
        rng = np.random.default_rng(SEED + 9)
        weights = symmetry_weights(CFG)[:, None]
        for _ in range(3):
            (r,) = _random_measurements(rng, 2000, 1)
            s = Signal(rng.standard_normal(2000))
            prev = np.inf
            for _ in range(20):
                s = griffin_lim(r, s, 1, CFG)
                mag = np.abs(stft(s, CFG).data)
                loss = float(np.sum(weights * (r.data - mag) ** 2))
                assert loss <= prev + 1e-10
                prev = loss


class TestObjectiveGradient:
    def test_matches_finite_differences(self):
        cfg = StftConfig(32, 8)
        rng = np.random.default_rng(SEED + 10)
        for beta, d, direction in [
            (0.0, 1, "right"),
            (0.5, 2, "left"),
            (1.0, 1, "left"),
            (1.5, 2, "right"),
            (2.0, 1, "right"),
        ]:
            spec = DivergenceSpec(beta, direction, d)
            signal = Signal(rng.standard_normal(128))
            base = np.abs(stft(Signal(rng.standard_normal(128)), cfg).data)
            data = base * rng.uniform(0.5, 2.0, base.shape)
            meas = Measurements(data if d == 1 else data**2, d)
            grad = objective_gradient(signal, meas, spec, cfg).samples
            grad_fd = _fd_gradient(signal, meas, spec, cfg)
            rel = np.linalg.norm(grad - grad_fd) / np.linalg.norm(grad_fd)
            assert rel < 1e-4

    def test_zero_at_exact_fit(self):
        rng = np.random.default_rng(SEED + 11)
        signal = Signal(rng.standard_normal(2000))
        meas = Measurements(np.abs(stft(signal, CFG).data), 1)
        for direction in ("right", "left"):
            grad = objective_gradient(
                signal, meas, DivergenceSpec(1.5, direction, 1), CFG
            )
            assert np.max(np.abs(grad.samples)) < 1e-10

    def test_exponent_mismatch_rejected(self):
        rng = np.random.default_rng(SEED + 12)
        signal = Signal(rng.standard_normal(500))
        meas = Measurements(np.abs(stft(signal, CFG).data), 1)
        with pytest.raises(ValueError):
            objective_gradient(signal, meas, DivergenceSpec(1.0, "right", 2), CFG)


class TestMisi:
    def test_needs_two_sources(self):
        rng = np.random.default_rng(SEED + 13)
        x = Signal(rng.standard_normal(1000))
        meas = _random_measurements(rng, 1000, 1)
        with pytest.raises(ValueError):
            misi(meas, x, 3, CFG)

    def test_estimates_sum_to_mixture(self):
        rng = np.random.default_rng(SEED + 14)
        x = Signal(rng.standard_normal(3000))
        meas = _random_measurements(rng, 3000, 2)
        res = misi(meas, x, 4, CFG)
        total = np.sum([s.samples for s in res.sources], axis=0)
        assert np.max(np.abs(total - x.samples)) < 1e-9

    def test_stationary_at_exact_fit(self):
        rng = np.random.default_rng(SEED + 15)
        s1 = Signal(rng.standard_normal(3000))
        s2 = Signal(rng.standard_normal(3000))
        x = Signal(s1.samples + s2.samples)
        meas = provide_spectrograms([s1, s2], ProviderSpec("oracle"), 1, CFG)
        res = misi(meas, x, 5, CFG, init=[s1, s2])
        assert np.max(np.abs(res.sources[0].samples - s1.samples)) < 1e-10
        assert np.max(np.abs(res.sources[1].samples - s2.samples)) < 1e-10

    def test_trace_recording(self):
        rng = np.random.default_rng(SEED + 16)
        x = Signal(rng.standard_normal(2000))
        meas = _random_measurements(rng, 2000, 2)
        res = misi(meas, x, 3, CFG, record_trace=True)
        assert len(res.objective_trace) == 4
        assert all(len(row) == 2 for row in res.objective_trace)
        assert misi(meas, x, 3, CFG).objective_trace is None


class TestProjectedGradient:
    def test_matches_misi_for_quadratic_magnitude_fit(self):
        # beta = 2, d = 1, right, unit normalized step reproduces MISI
        rng = np.random.default_rng(SEED + 17)
        for _ in range(5):
            x = Signal(rng.standard_normal(4096))
            meas = _random_measurements(rng, 4096, 2)
            for iters in (1, 3, 5):
                ref = misi(meas, x, iters, CFG)
                cfg = SolverConfig(
                    DivergenceSpec(2.0, "right", 1), step_size=1.0, iterations=iters
                )
                out = projected_gradient(meas, x, cfg, CFG)
                for a, b in zip(ref.sources, out.sources):
                    assert np.max(np.abs(a.samples - b.samples)) < 1e-9

    def test_constraint_after_every_iteration(self):
        rng = np.random.default_rng(SEED + 18)
        x = Signal(rng.standard_normal(3000))
        meas = _random_measurements(rng, 3000, 2)
        for beta, d, direction in [(0.0, 1, "right"), (1.0, 2, "left"), (2.0, 1, "left")]:
            for iters in (1, 2, 5):
                cfg = SolverConfig(
                    DivergenceSpec(beta, direction, d),
                    step_size=1e-3,
                    iterations=iters,
                )
                m = meas if d == 1 else [Measurements(r.data**2, 2) for r in meas]
                res = projected_gradient(m, x, cfg, CFG)
                total = np.sum([s.samples for s in res.sources], axis=0)
                assert np.max(np.abs(total - x.samples)) < 1e-9

    def test_zero_step_is_repeated_projection(self):
        rng = np.random.default_rng(SEED + 19)
        x = Signal(rng.standard_normal(2000))
        meas = _random_measurements(rng, 2000, 2)
        init = amplitude_mask_init(meas, x, CFG)
        projected = project_to_mixture(init, x)
        for iters in (1, 4):
            cfg = SolverConfig(
                DivergenceSpec(1.0, "right", 1), step_size=0.0, iterations=iters
            )
            res = projected_gradient(meas, x, cfg, CFG)
            for a, b in zip(res.sources, projected):
                assert np.max(np.abs(a.samples - b.samples)) < 1e-12

    def test_stationary_at_exact_fit(self):
        rng = np.random.default_rng(SEED + 20)
        s1 = Signal(rng.standard_normal(3000))
        s2 = Signal(rng.standard_normal(3000))
        x = Signal(s1.samples + s2.samples)
        for d in (1, 2):
            meas = provide_spectrograms([s1, s2], ProviderSpec("oracle"), d, CFG)
            cfg = SolverConfig(
                DivergenceSpec(1.0, "right", d), step_size=0.1, iterations=5
            )
            res = projected_gradient(meas, x, cfg, CFG, init=[s1, s2])
            assert np.max(np.abs(res.sources[0].samples - s1.samples)) < 1e-10
            assert np.max(np.abs(res.sources[1].samples - s2.samples)) < 1e-10

    def test_soft_descent_with_step_halving(self):
        rng = np.random.default_rng(SEED + 21)
        x = Signal(rng.standard_normal(2000))
        for beta, d, direction in [(0.0, 1, "right"), (1.0, 1, "left"), (2.0, 2, "right")]:
            meas = _random_measurements(rng, 2000, 2, d=d)
            step = 1e-2
            for _ in range(21):
                cfg = SolverConfig(
                    DivergenceSpec(beta, direction, d),
                    step_size=step,
                    iterations=5,
                    record_trace=True,
                )
                try:
                    res = projected_gradient(meas, x, cfg, CFG)
                except SolverDivergedError:
                    step /= 2.0
                    continue
                # feasible iterates only: entries after each full iteration
                totals = [sum(row) for row in res.objective_trace[1:]]
                diffs = np.diff(totals)
                if np.all(diffs <= 1e-12 * max(abs(t) for t in totals)):
                    break
                step /= 2.0
            else:
                pytest.fail(
                    "no descent after 20 halvings (beta=%s d=%d %s)" % (beta, d, direction)
                )

    def test_divergence_raises_with_iteration_index(self):
        rng = np.random.default_rng(SEED + 22)
        x = Signal(rng.standard_normal(3000))
        meas = _random_measurements(rng, 3000, 2, d=2)
        cfg = SolverConfig(
            DivergenceSpec(2.0, "right", 2), step_size=100.0, iterations=10
        )
        with pytest.raises(SolverDivergedError) as err:
            projected_gradient(meas, x, cfg, CFG)
        assert 0 <= err.value.iteration < 10

    def test_needs_two_sources(self):
        rng = np.random.default_rng(SEED + 23)
        x = Signal(rng.standard_normal(1000))
        meas = _random_measurements(rng, 1000, 1)
        cfg = SolverConfig(DivergenceSpec(2.0, "right", 1))
        with pytest.raises(ValueError):
            projected_gradient(meas, x, cfg, CFG)

    def test_trace_shape(self):
        rng = np.random.default_rng(SEED + 24)
        x = Signal(rng.standard_normal(2000))
        meas = _random_measurements(rng, 2000, 2)
        cfg = SolverConfig(
            DivergenceSpec(1.5, "right", 1),
            step_size=1e-3,
            iterations=3,
            record_trace=True,
        )
        res = projected_gradient(meas, x, cfg, CFG)
        assert isinstance(res, SeparationResult)
        assert res.iterations_run == 3
        assert len(res.objective_trace) == 4
        assert all(len(row) == 2 for row in res.objective_trace)


class TestSolverConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            SolverConfig(DivergenceSpec(2.0), step_size=-0.1)
        with pytest.raises(ValueError):
            SolverConfig(DivergenceSpec(2.0), iterations=-1)
        with pytest.raises(ValueError):
            SolverConfig(DivergenceSpec(2.0), eps_floor=0.0)
