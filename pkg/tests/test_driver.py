import numpy as np
import pytest

from ubo.driver import (
    Mode,
    OptimizerConfig,
    latin_hypercube,
    maximize_acquisition,
    run_optimization,
    select_incumbent,
    unscented_outcome,
)
from ubo.errors import EvaluationError, ParameterDomainError
from ubo.gp import Dataset, GPPosterior, KernelHyperparameters
from ubo.mcmc import SliceSamplerConfig
from ubo.unscented import InputNoise

from spike_plateau import PLATEAU, SIGMA_X, SPIKE, blurred_mean, spike_plateau_snapshot

FAST_SAMPLER = SliceSamplerConfig(num_samples=3, burn_in=20, warm_burn_in=2, thinning=2)


class TestLatinHypercube:
    @pytest.mark.parametrize("p,d", [(5, 1), (10, 2), (7, 4), (1, 3)])
    def test_one_point_per_stratum(self, p, d):
        X = latin_hypercube(p, d, np.random.default_rng(p * d))
        assert X.shape == (p, d)
        assert np.all((X >= 0) & (X < 1))
        for j in range(d):
            np.testing.assert_array_equal(np.sort(np.floor(X[:, j] * p)), np.arange(p))

    def test_p10_d2_histogram(self):
        X = latin_hypercube(10, 2, np.random.default_rng(3))
        for j in range(2):
            counts, _ = np.histogram(X[:, j], bins=10, range=(0, 1))
            np.testing.assert_array_equal(counts, np.ones(10))

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            latin_hypercube(0, 1, np.random.default_rng(0))


class TestMaximizeAcquisition:
    def test_quadratic_peak(self):
        acq = lambda X: -np.sum((X - 0.3) ** 2, axis=1)
        x = maximize_acquisition(acq, 2, 2000, np.random.default_rng(0))
        assert np.linalg.norm(x - 0.3) < 0.01

    def test_constant_in_bounds(self):
        x = maximize_acquisition(lambda X: np.zeros(len(X)), 3, 100, np.random.default_rng(1))
        assert x.shape == (3,) and np.all((x >= 0) & (x <= 1))

    def test_budget_one_returns_the_probe(self):
        seen = []

        def acq(X):
            seen.append(X.copy())
            return np.ones(len(X))

        x = maximize_acquisition(acq, 2, 1, np.random.default_rng(2))
        assert len(seen) == 1 and len(seen[0]) == 1
        np.testing.assert_array_equal(x, seen[0][0])

    def test_result_dominates_every_probe(self):
        seen = []
        f = lambda X: np.sin(9 * X[:, 0]) * np.cos(5 * X[:, 1])

        def acq(X):
            seen.append(X.copy())
            return f(X)

        x = maximize_acquisition(acq, 2, 500, np.random.default_rng(4))
        assert f(x[None])[0] >= f(np.vstack(seen)).max()
        assert sum(len(s) for s in seen) <= 500

    def test_nonfinite_propagates_location(self):
        with pytest.raises(EvaluationError) as err:
            maximize_acquisition(lambda X: np.where(X[:, 0] > 0.5, np.nan, 0.0), 1, 50,
                                 np.random.default_rng(0))
        assert err.value.point[0] > 0.5


class TestUnscentedOutcome:
    def test_zero_noise_is_mixture_mean(self):
        data, post = spike_plateau_snapshot(0)
        x = np.array([0.43])
        assert unscented_outcome(post, x, InputNoise(0.0)) == post.mixture_mean(x[None])[0]

    def test_linear_far_from_data(self):
        data = Dataset([[0.02], [0.05], [0.08]], [1.0, -0.5, 2.0])
        post = GPPosterior(data, [KernelHyperparameters([np.log(0.02)], 0.0, 1e-6)])
        x = np.array([0.9])
        assert unscented_outcome(post, x, InputNoise(0.01)) == pytest.approx(
            post.mixture_mean(x[None])[0], abs=1e-9)

    def test_plateau_beats_spike(self):
        data, post = spike_plateau_snapshot(0)
        uo_spike = unscented_outcome(post, np.array([SPIKE]), InputNoise(SIGMA_X))
        uo_plateau = unscented_outcome(post, np.array([PLATEAU]), InputNoise(SIGMA_X))
        assert uo_plateau > uo_spike
        # dense expectation of the posterior mean agrees on the ordering
        assert blurred_mean(post, PLATEAU, SIGMA_X) > blurred_mean(post, SPIKE, SIGMA_X)

    def test_batch_matches_single(self):
        data, post = spike_plateau_snapshot(1)
        X = np.linspace(0, 1, 11)[:, None]
        batch = unscented_outcome(post, X, InputNoise(SIGMA_X))
        single = [unscented_outcome(post, x, InputNoise(SIGMA_X)) for x in X]
        np.testing.assert_allclose(batch, single, atol=1e-14)


class TestSelectIncumbent:
    def test_classical_argmax(self):
        data = Dataset([[0.1], [0.5], [0.9]], [1.0, 3.0, 2.0])
        post = GPPosterior(data, [KernelHyperparameters.default(1)])
        rep = select_incumbent(data, post, OptimizerConfig(mode=Mode.CLASSICAL))
        assert rep.index == 1 and rep.criterion_value == 3.0
        np.testing.assert_array_equal(rep.x_star, [0.5])

    def test_classical_ties_lowest_index(self):
        data = Dataset([[0.1], [0.5], [0.9]], [3.0, 1.0, 3.0])
        post = GPPosterior(data, [KernelHyperparameters.default(1)])
        assert select_incumbent(data, post, OptimizerConfig(mode=Mode.CLASSICAL)).index == 0

    def test_unscented_zero_noise_matches_classical(self):
        rng = np.random.default_rng(5)
        data = Dataset(rng.uniform(size=(12, 1)), rng.normal(size=12))
        post = GPPosterior(data, [KernelHyperparameters([np.log(0.05)], 0.0, 1e-6)],
                           offset=float(data.outcomes.mean()))
        a = select_incumbent(data, post, OptimizerConfig(mode=Mode.CLASSICAL))
        b = select_incumbent(data, post, OptimizerConfig(mode=Mode.UNSCENTED, input_noise=0.0))
        assert a.index == b.index

    @pytest.mark.parametrize("seed", range(3))
    def test_spike_plateau(self, seed):
        data, post = spike_plateau_snapshot(seed)
        classical = select_incumbent(data, post, OptimizerConfig(mode=Mode.CLASSICAL))
        unscented = select_incumbent(data, post, OptimizerConfig(mode=Mode.UNSCENTED, input_noise=SIGMA_X))
        assert classical.x_star[0] == SPIKE
        assert unscented.x_star[0] == PLATEAU

    def test_empty_dataset_rejected(self):
        data = Dataset(np.empty((0, 1)), [])
        with pytest.raises(ValueError):
            select_incumbent(data, None, OptimizerConfig())


class TestConfig:
    def test_unscented_requires_positive_d_plus_k(self):
        with pytest.raises(ParameterDomainError):
            OptimizerConfig(dim=2, ut_k=-2.0, mode=Mode.UNSCENTED)
        OptimizerConfig(dim=2, ut_k=-2.0, mode=Mode.CLASSICAL)

    @pytest.mark.parametrize("kwargs", [{"dim": 0}, {"initial_samples": 0}, {"iterations": -1},
                                        {"inner_optimizer_budget": 0}, {"seed": -1}])
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ValueError):
            OptimizerConfig(**kwargs)

    def test_mode_from_string(self):
        assert OptimizerConfig(mode="classical_bo").mode is Mode.CLASSICAL


def quad(x):
    return -float((x[0] - 0.5) ** 2)


class TestRunOptimization:
    def test_no_iterations(self):
        cfg = OptimizerConfig(initial_samples=4, iterations=0, sampler=FAST_SAMPLER)
        res = run_optimization(quad, cfg)
        assert res.evaluations == 4 and len(res.dataset) == 4 and len(res.reports) == 1

    def test_quadratic_smoke(self):
        cfg = OptimizerConfig(initial_samples=5, iterations=20, mode=Mode.CLASSICAL, seed=1)
        res = run_optimization(quad, cfg)
        assert abs(res.reports[-1].x_star[0] - 0.5) < 0.05

    def test_accounting_and_growth(self):
        calls = []
        seen = []

        def f(x):
            calls.append(x.copy())
            return quad(x)

        cfg = OptimizerConfig(dim=2, initial_samples=3, iterations=6, sampler=FAST_SAMPLER,
                              inner_optimizer_budget=100, input_noise=0.05)
        res = run_optimization(lambda x: f(x[:1]), cfg,
                               callback=lambda rep, data: seen.append((rep.iteration, len(data))))
        assert len(calls) == 9 == res.evaluations
        assert seen == [(t, 3 + t) for t in range(7)]
        assert np.all((res.dataset.points >= 0) & (res.dataset.points <= 1))

    def test_deterministic(self):
        cfg = OptimizerConfig(initial_samples=3, iterations=5, sampler=FAST_SAMPLER, seed=11)
        a = run_optimization(quad, cfg)
        b = run_optimization(quad, cfg)
        assert a.dataset.points.tobytes() == b.dataset.points.tobytes()

    def test_zero_noise_modes_agree(self):
        kw = dict(initial_samples=3, iterations=5, sampler=FAST_SAMPLER, seed=4, input_noise=0.0)
        a = run_optimization(quad, OptimizerConfig(mode=Mode.CLASSICAL, **kw))
        b = run_optimization(quad, OptimizerConfig(mode=Mode.UNSCENTED, **kw))
        assert a.dataset.points.tobytes() == b.dataset.points.tobytes()

    def test_nonfinite_objective_aborts_with_query(self):
        cfg = OptimizerConfig(initial_samples=3, iterations=2, sampler=FAST_SAMPLER)
        with pytest.raises(EvaluationError) as err:
            run_optimization(lambda x: np.nan, cfg)
        assert err.value.point.shape == (1,)
