import numpy as np
import pytest

from margin_dist.baselines import (FmmConfig, lssvm_system, min_margin, train_fmm, train_lssvm,
                                   train_mamc)
from margin_dist.core import Dataset, KernelKind, KernelSpec, decision_scores, gram_matrix
from margin_dist.linear_solver import init_w0
from margin_dist.synthetic import make_two_gaussians

from conftest import random_dataset

LINEAR = KernelSpec(KernelKind.LINEAR)


class TestMAMC:
    def test_equals_init(self, rng):
        data = random_dataset(rng, 40, 5)
        w = train_mamc(data).w
        w0 = init_w0(data)
        assert w @ w0 / (np.linalg.norm(w) * np.linalg.norm(w0)) == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_array_equal(w, w0)

    def test_hand(self):
        model = train_mamc(Dataset([[1, 0], [0, 1]], [1, -1]))
        np.testing.assert_allclose(model.w, [1 / np.sqrt(2), -1 / np.sqrt(2)], atol=1e-15)
        assert model.algorithm == "mamc"

    def test_scale_invariant(self, rng):
        data = random_dataset(rng, 30, 3)
        doubled = Dataset(2 * data.X, data.y)
        np.testing.assert_allclose(train_mamc(doubled).w, train_mamc(data).w, atol=1e-15)


class TestLSSVM:
    def test_symmetric_bias_zero(self):
        data = Dataset([[1.0], [-1.0]], [1, -1])
        for C in (0.01, 1.0, 100.0):
            assert train_lssvm(data, C, LINEAR).bias == pytest.approx(0.0, abs=1e-12)

    def test_dense_oracle(self):
        data = Dataset([[1.0, 0.5], [-0.3, 1.0], [0.2, -1.0]], [1, -1, 1])
        C = 2.0
        K = data.X @ data.X.T
        y = data.y.astype(float)
        # explicit bordered matrix built element by element
        A = np.zeros((4, 4))
        for i in range(3):
            A[0, i + 1] = A[i + 1, 0] = y[i]
            for j in range(3):
                A[i + 1, j + 1] = y[i] * y[j] * K[i, j] + (1 / C if i == j else 0.0)
        sol = np.linalg.solve(A, [0.0, 1.0, 1.0, 1.0])
        model = train_lssvm(data, C, LINEAR)
        assert model.bias == pytest.approx(sol[0], abs=1e-10)
        np.testing.assert_allclose(model.a, sol[1:] * y, atol=1e-10)

    def test_residual(self, rng):
        data = random_dataset(rng, 50, 4)
        for kernel in (LINEAR, KernelSpec(KernelKind.GAUSSIAN, 0.5)):
            model = train_lssvm(data, 3.0, kernel)
            A, rhs = lssvm_system(gram_matrix(data, kernel), data.y, 3.0)
            sol = np.concatenate([[model.bias], model.a * data.y])
            assert np.max(np.abs(A @ sol - rhs)) <= 1e-8

    def test_interpolation_limit(self):
        data = make_two_gaussians(60, 0.2, seed=4)
        model = train_lssvm(data, 1e8, LINEAR)
        scores = decision_scores(model, data.X)
        assert np.all(np.where(scores >= 0, 1, -1) == data.y)

    def test_invalid_C(self):
        with pytest.raises(ValueError):
            train_lssvm(Dataset([[1.0]], [1]), 0.0, LINEAR)

    def test_duplicate_rows_solve(self):
        data = Dataset([[1.0], [1.0], [-1.0]], [1, 1, -1])
        model = train_lssvm(data, 1.0, LINEAR)
        assert np.all(np.isfinite(model.a))


class TestFMM:
    @pytest.mark.parametrize("kwargs", [dict(step=0), dict(iterations=-1), dict(iterations=1.5),
                                        dict(momentum=1.0), dict(temperature=0)])
    def test_invalid_config(self, kwargs):
        with pytest.raises(ValueError):
            FmmConfig(**kwargs)

    def test_antipodal(self):
        data = Dataset([[1.0, 0.0], [-1.0, 0.0]], [1, -1])
        model = train_fmm(data, FmmConfig(iterations=200))
        np.testing.assert_allclose(np.abs(model.w), [1.0, 0.0], atol=1e-8)
        assert min_margin(data, model.w) == pytest.approx(1.0, abs=1e-8)

    def test_antipodal_from_tilted_start(self):
        data = Dataset([[1.0, 0.3], [-1.0, 0.3], [1.0, -0.3]], [1, -1, 1])
        model = train_fmm(data, FmmConfig(step=2.0**-2, iterations=400))
        assert min_margin(data, model.w) > min_margin(data, init_w0(data))

    def test_zero_iterations(self, rng):
        data = random_dataset(rng, 20, 3)
        np.testing.assert_allclose(train_fmm(data, FmmConfig(iterations=0)).w, init_w0(data),
                                   atol=1e-15)

    def test_best_iterate(self, rng):
        for trial in range(5):
            data = random_dataset(rng, 30, 3)
            model = train_fmm(data, FmmConfig(step=1.0, iterations=50))
            assert min_margin(data, model.w) >= min_margin(data, init_w0(data))
            assert np.linalg.norm(model.w) == pytest.approx(1.0, abs=1e-12)

    def test_deterministic(self, rng):
        data = random_dataset(rng, 30, 3)
        cfg = FmmConfig(step=0.25, iterations=40)
        assert train_fmm(data, cfg).w.tobytes() == train_fmm(data, cfg).w.tobytes()

    def test_min_margin_scale_invariant(self, rng):
        data = random_dataset(rng, 10, 3)
        w = rng.standard_normal(3)
        assert min_margin(data, 5 * w) == pytest.approx(min_margin(data, w))
