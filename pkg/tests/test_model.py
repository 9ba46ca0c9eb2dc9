import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from gammanet.exceptions import InputError, NumericalError
from gammanet.model import (
    Dataset,
    GammaGlmProblem,
    curvature_floor,
    lambda_max,
    local_curvature_bound,
    nll,
    nll_gradient,
)
from oracles import fd_gradient


def density_nll(A, b, k, x):
    """-sum log f(b; k, theta) straight from the Gamma pdf, theta = exp(A x) / k."""
    theta = np.exp(A @ x) / k
    return -float(np.sum(stats.gamma.logpdf(b, a=k, scale=theta)))


def random_problem(rng, m, p, k):
    A = rng.standard_normal((m, p))
    x = 0.5 * rng.standard_normal(p)
    b = rng.gamma(k, np.exp(A @ x) / k)
    return GammaGlmProblem(Dataset(A, b), shape=k), rng.standard_normal(p) * 0.3


class TestDataset:
    def test_rejects_nonpositive_response(self):
        with pytest.raises(InputError, match="row 1"):
            Dataset([[1.0], [2.0]], [1.0, 0.0])

    def test_rejects_nonfinite_design(self):
        with pytest.raises(InputError, match="row 0, column 1"):
            Dataset([[1.0, np.nan]], [1.0])

    def test_shape_mismatch(self):
        with pytest.raises(InputError):
            Dataset(np.ones((3, 2)), np.ones(2))

    def test_immutable(self):
        d = Dataset(np.ones((2, 2)), np.ones(2))
        with pytest.raises(ValueError):
            d.design[0, 0] = 5.0

    def test_problem_validation(self):
        d = Dataset([[1.0]], [1.0])
        for kw in ({"shape": 0.0}, {"lam": -1.0}, {"alpha": 1.5}):
            with pytest.raises(InputError):
                GammaGlmProblem(d, **kw)


class TestNll:
    def test_unit_case(self):
        prob = GammaGlmProblem(Dataset([[0.0]], [1.0]), shape=1.0)
        assert nll(prob, [0.0]) == pytest.approx(1.0, abs=1e-15)

    def test_hand_value_k2(self):
        prob = GammaGlmProblem(Dataset([[1.0]], [math.e]), shape=2.0)
        assert nll(prob, [1.0]) == pytest.approx(3.0 - 2.0 * math.log(2.0), rel=1e-14)
        assert nll(prob, [1.0]) == pytest.approx(1.6137056388801094, rel=1e-14)

    @pytest.mark.parametrize("k", [0.5, 1.0, 1.7, 3.0, 10.0])
    def test_matches_density(self, k):
        rng = np.random.default_rng(int(k * 10))
        prob, x = random_problem(rng, 12, 4, k)
        ref = density_nll(prob.data.design, prob.data.responses, k, x)
        assert nll(prob, x) == pytest.approx(ref, rel=1e-10)

    def test_overflow_names_row(self):
        A = np.array([[0.0], [-1000.0]])
        prob = GammaGlmProblem(Dataset(A, [1.0, 1.0]))
        with pytest.raises(NumericalError, match="row 1") as info:
            nll(prob, [1.0])
        assert info.value.row == 1
        with pytest.raises(NumericalError):
            nll_gradient(prob, [1.0])

    def test_wrong_length(self):
        prob = GammaGlmProblem(Dataset(np.ones((2, 2)), [1.0, 2.0]))
        with pytest.raises(InputError):
            nll(prob, [0.0])

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 2**31), t=st.floats(0.01, 0.99))
    def test_convex_along_segments(self, seed, t):
        rng = np.random.default_rng(seed)
        prob, x1 = random_problem(rng, 10, 3, 1.0)
        x2 = rng.standard_normal(3) * 0.3
        mid = nll(prob, t * x1 + (1 - t) * x2)
        assert mid <= t * nll(prob, x1) + (1 - t) * nll(prob, x2) + 1e-9


class TestGradient:
    def test_zero_at_model_mean(self):
        rng = np.random.default_rng(3)
        A = rng.standard_normal((7, 3))
        x = rng.standard_normal(3)
        prob = GammaGlmProblem(Dataset(A, np.exp(A @ x)), shape=2.5)
        np.testing.assert_allclose(nll_gradient(prob, x), 0.0, atol=1e-12)

    def test_hand_value(self):
        prob = GammaGlmProblem(Dataset([[1.0], [-1.0]], [2.0, 0.5]))
        np.testing.assert_allclose(nll_gradient(prob, [0.0]), [-1.5], rtol=1e-15)

    def test_finite_differences_fixed(self):
        rng = np.random.default_rng(11)
        prob, x = random_problem(rng, 5, 3, 1.7)
        g = nll_gradient(prob, x)
        fd = fd_gradient(prob, x)
        assert np.max(np.abs(g - fd)) / max(np.max(np.abs(g)), 1e-12) < 1e-5

    @settings(max_examples=80, deadline=None)
    @given(
        seed=st.integers(0, 2**31),
        m=st.integers(3, 20),
        p=st.integers(1, 8),
        k=st.sampled_from([0.5, 1.0, 3.0]),
    )
    def test_finite_differences_random(self, seed, m, p, k):
        rng = np.random.default_rng(seed)
        prob, x = random_problem(rng, m, p, k)
        g = nll_gradient(prob, x)
        fd = fd_gradient(prob, x)
        scale = max(np.max(np.abs(g)), 1.0)
        assert np.max(np.abs(g - fd)) / scale < 1e-5


class TestCurvatureBound:
    def test_floor_at_perfect_fit(self):
        A = np.array([[1.0, 0.5], [0.2, -1.0], [0.3, 0.3]])
        x = np.array([0.4, -0.2])
        prob = GammaGlmProblem(Dataset(A, np.exp(A @ x)))
        floor = curvature_floor(prob.data)
        assert floor == pytest.approx(1e-6 * (1 + np.sum(A**2)))
        assert local_curvature_bound(prob, x) == floor

    def test_hand_value(self):
        prob = GammaGlmProblem(Dataset([[1.0], [-1.0]], [2.0, 0.5]))
        assert local_curvature_bound(prob, [0.0]) == pytest.approx(2.5, rel=1e-15)

    def test_k_squared_scaling(self):
        rng = np.random.default_rng(5)
        A = rng.standard_normal((6, 2))
        b = rng.gamma(2.0, 1.0, size=6)
        x = np.array([0.1, -0.3])
        l1 = local_curvature_bound(GammaGlmProblem(Dataset(A, b), shape=1.0), x)
        l2 = local_curvature_bound(GammaGlmProblem(Dataset(A, b), shape=2.0), x)
        assert l2 == pytest.approx(4.0 * l1, rel=1e-13)

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 2**31), scale=st.floats(1e-3, 0.1))
    def test_local_majorization(self, seed, scale):
        rng = np.random.default_rng(seed)
        prob, x = random_problem(rng, 10, 3, 1.0)
        d = rng.standard_normal(3)
        d *= scale / np.linalg.norm(d)
        L = local_curvature_bound(prob, x)
        upper = nll(prob, x) + d @ nll_gradient(prob, x) + 0.5 * L * (d @ d)
        assert nll(prob, x + d) <= upper + 1e-8


class TestLambdaMax:
    def test_all_ones_response(self):
        rng = np.random.default_rng(0)
        d = Dataset(rng.standard_normal((5, 3)), np.ones(5))
        assert lambda_max(d, 2.0, 0.5) == 0.0

    def test_hand_value(self):
        d = Dataset([[1.0], [-1.0]], [2.0, 0.5])
        assert lambda_max(d, 1.0, 1.0) == pytest.approx(1.5, rel=1e-15)

    def test_divides_by_alpha(self):
        d = Dataset([[1.0], [-1.0]], [2.0, 0.5])
        assert lambda_max(d, 1.0, 0.5) == pytest.approx(3.0, rel=1e-15)

    def test_ridge_rejected(self):
        with pytest.raises(InputError):
            lambda_max(Dataset([[1.0]], [2.0]), 1.0, 0.0)
