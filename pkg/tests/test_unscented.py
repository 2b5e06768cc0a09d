import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ubo.errors import EvaluationError, ParameterDomainError
from ubo.unscented import (
    InputNoise,
    sigma_offsets,
    sigma_points,
    sigma_weights,
    unscented_mean,
    unscented_mean_batch,
)


def gaussian_moment(center, sigma, idx):
    """E[prod_{i in idx} x_i] for x ~ N(center, sigma^2 I), |idx| <= 3, via Isserlis."""
    c = np.asarray(center)
    idx = list(idx)
    if len(idx) == 0:
        return 1.0
    if len(idx) == 1:
        return c[idx[0]]
    if len(idx) == 2:
        i, j = idx
        return c[i] * c[j] + sigma ** 2 * (i == j)
    i, j, k = idx
    return (c[i] * c[j] * c[k]
            + sigma ** 2 * ((i == j) * c[k] + (i == k) * c[j] + (j == k) * c[i]))


def monomial(idx):
    return lambda x: float(np.prod([x[i] for i in idx])) if idx else 1.0


class TestSigmaPoints:
    def test_1d_k0(self):
        sp = sigma_points([0.5], InputNoise(0.01), k=0)
        np.testing.assert_allclose(sp.points[:, 0], [0.5, 0.51, 0.49], atol=1e-15)
        np.testing.assert_array_equal(sp.weights, [0.0, 0.5, 0.5])

    def test_2d_k0(self):
        sp = sigma_points([0.5, 0.5], InputNoise(0.1), k=0)
        a = np.sqrt(2) * 0.1
        expected = [[0.5, 0.5], [0.5 + a, 0.5], [0.5, 0.5 + a], [0.5 - a, 0.5], [0.5, 0.5 - a]]
        np.testing.assert_allclose(sp.points, expected, atol=1e-15)
        np.testing.assert_array_equal(sp.weights, [0.0, 0.25, 0.25, 0.25, 0.25])

    def test_clamped_at_boundary(self):
        sp = sigma_points([0.02], InputNoise(0.05), k=0)
        assert sp.points[2, 0] == 0.0
        assert sp.points[1, 0] == pytest.approx(0.07)

    def test_center_first_and_symmetric(self):
        sp = sigma_points([0.4, 0.6, 0.5], InputNoise(0.03), k=1.0)
        np.testing.assert_array_equal(sp.points[0], sp.center)
        np.testing.assert_allclose(sp.points[1:4] + sp.points[4:7], 2 * sp.points[[0, 0, 0]], atol=1e-15)

    def test_clamping_idempotent(self):
        sp = sigma_points([0.99, 0.01], InputNoise(0.05))
        again = sigma_points(sp.center, InputNoise(0.05))
        np.testing.assert_array_equal(sp.points, again.points)

    @pytest.mark.parametrize("d,k", [(1, -1.0), (1, -3.0), (2, -3.0), (3, -3.0)])
    def test_rejects_nonpositive_d_plus_k(self, d, k):
        with pytest.raises(ParameterDomainError):
            sigma_points(np.full(d, 0.5), InputNoise(0.01), k=k)

    def test_k_minus_3_is_legal_from_d4(self):
        sp = sigma_points(np.full(4, 0.5), InputNoise(0.01), k=-3.0)
        assert sp.weights[0] == pytest.approx(-3.0)
        assert sp.weights.sum() == pytest.approx(1.0)

    def test_zero_noise_collapses(self):
        sp = sigma_points([0.3, 0.7], InputNoise(0.0))
        assert np.all(sp.points == sp.center)

    def test_negative_sigma_rejected(self):
        with pytest.raises(ParameterDomainError):
            InputNoise(-0.1)


class TestUnscentedMean:
    def test_linear_map_exact(self):
        a, b = np.array([2.0, -1.0, 0.5]), 0.3
        c = np.array([0.4, 0.5, 0.6])
        sp = sigma_points(c, InputNoise(0.05), k=1.0)
        assert unscented_mean(lambda x: a @ x + b, sp) == pytest.approx(a @ c + b, abs=1e-12)

    def test_square_second_moment(self):
        # x ~ N(0, 1), k=2: points {0, +-sqrt3}, weights {2/3, 1/6, 1/6}; the box clamp is bypassed
        offsets = sigma_offsets(1, 1.0, k=2.0)
        w = sigma_weights(1, k=2.0)
        np.testing.assert_allclose(offsets[:, 0], [0.0, np.sqrt(3), -np.sqrt(3)])
        np.testing.assert_allclose(w, [2 / 3, 1 / 6, 1 / 6])
        assert float(w @ offsets[:, 0] ** 2) == pytest.approx(1.0, abs=1e-15)

    def test_constant(self):
        sp = sigma_points([0.2, 0.9], InputNoise(0.3))
        assert unscented_mean(lambda x: 4.25, sp) == pytest.approx(4.25, abs=1e-15)

    def test_zero_noise_returns_center_value_exactly(self):
        f = lambda x: np.sin(7 * x).sum() / 3
        for d in (1, 2, 5):
            c = np.linspace(0.1, 0.9, d)
            assert unscented_mean(f, sigma_points(c, InputNoise(0.0))) == f(c)
            assert unscented_mean_batch(lambda X: np.array([f(x) for x in X]), c[None], InputNoise(0.0))[0] == f(c)

    def test_nonfinite_value_names_point(self):
        sp = sigma_points([0.5], InputNoise(0.1))
        with pytest.raises(EvaluationError) as err:
            unscented_mean(lambda x: np.inf if x[0] > 0.55 else 0.0, sp)
        assert err.value.point[0] == pytest.approx(0.6)

    @pytest.mark.parametrize("d", [1, 2, 3])
    @pytest.mark.parametrize("k", [0.0, 1.0, 3.0])
    def test_polynomials_up_to_degree_3(self, d, k):
        rng = np.random.default_rng(d * 10 + int(k))
        c = rng.uniform(0.35, 0.65, d)
        sigma = 0.05
        sp = sigma_points(c, InputNoise(sigma), k)
        for deg in range(4):
            for idx in itertools.combinations_with_replacement(range(d), deg):
                got = unscented_mean(monomial(idx), sp)
                assert got == pytest.approx(gaussian_moment(c, sigma, idx), abs=1e-12), idx

    def test_batch_matches_pointwise(self):
        rng = np.random.default_rng(0)
        C = rng.uniform(size=(20, 2))
        noise = InputNoise(0.07)
        f = lambda X: np.cos(3 * X[:, 0]) * X[:, 1] ** 2
        batch = unscented_mean_batch(f, C, noise)
        single = [unscented_mean(lambda x: f(x[None])[0], sigma_points(c, noise)) for c in C]
        np.testing.assert_allclose(batch, single, atol=1e-14)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 30), st.floats(0.0, 10.0))
def test_weights_normalized(d, k):
    assert sigma_weights(d, k).sum() == pytest.approx(1.0, abs=1e-12)
