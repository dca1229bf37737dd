"""Tests for the forward/backward primitives."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from scst_lab.diffcore import ops
from scst_lab.diffcore.tensor import as_tensor, ensure_finite
from scst_lab.exceptions import DimensionError, NonFiniteError


def rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    return float(
        np.max(np.abs(analytic - numeric) / np.maximum(np.abs(analytic) + np.abs(numeric), 1e-4))
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(7)


class TestForward:
    def test_identity_matmul(self):
        """Identity times a column returns the column."""
        out = ops.matmul(np.eye(2), np.array([[2.0], [3.0]]))
        assert_allclose(out, [[2.0], [3.0]])

    def test_zero_matmul(self, rng):
        assert not ops.matmul(np.zeros((2, 3)), rng.normal(size=(3, 4))).any()

    def test_matmul_shape_mismatch(self):
        with pytest.raises(DimensionError, match="Cannot multiply"):
            ops.matmul(np.zeros((2, 3)), np.zeros((2, 3)))

    def test_softmax_uniform(self):
        assert_allclose(ops.softmax(np.zeros(3)), [1 / 3, 1 / 3, 1 / 3])

    def test_softmax_rows_are_distributions(self, rng):
        probs = ops.softmax(rng.normal(scale=20.0, size=(5, 7)))
        assert (probs >= 0).all()
        assert_allclose(probs.sum(axis=-1), 1.0, atol=1e-12)

    def test_softmax_shift_invariance(self, rng):
        x = rng.normal(size=(3, 4))
        assert_allclose(ops.softmax(x + 11.0), ops.softmax(x), atol=1e-15)

    def test_log_softmax_is_stable(self):
        out = ops.log_softmax(np.array([[1000.0, 0.0]]))
        assert_allclose(out, [[0.0, -1000.0]])

    def test_maxout_pairs(self):
        assert_allclose(ops.maxout2(np.array([1.0, 5.0, 2.0, -2.0])), [5.0, 2.0])

    def test_maxout_odd_extent(self):
        with pytest.raises(DimensionError, match="even"):
            ops.maxout2(np.zeros((2, 3)))

    def test_sigmoid_backward_at_zero(self):
        y = ops.sigmoid(np.zeros(1))
        assert_allclose(ops.sigmoid_backward(y, np.array([2.0])), [0.5])

    def test_sigmoid_extremes_stay_finite(self):
        out = ops.sigmoid(np.array([-800.0, 800.0]))
        assert_allclose(out, [0.0, 1.0])

    def test_hadamard_shape_mismatch(self):
        with pytest.raises(DimensionError):
            ops.hadamard(np.zeros(2), np.zeros(3))

    def test_non_finite_is_an_error(self):
        with pytest.raises(NonFiniteError, match="tanh"):
            ops.tanh(np.array([np.nan]))
        with pytest.raises(NonFiniteError):
            as_tensor([1.0, np.inf])
        with pytest.raises(NonFiniteError, match="weights"):
            ensure_finite(np.array([np.inf]), "weights")

    def test_as_tensor_shape_check(self):
        with pytest.raises(DimensionError):
            as_tensor([1.0, 2.0], shape=(3,))


class TestBackward:
    """Analytic backward passes against central finite differences."""

    def check(self, f, x, analytic):
        numeric = ops.numeric_gradient(f, x)
        assert rel_error(analytic, numeric) < 1e-6

    def test_matmul_sum_of_outputs(self, rng):
        """d(sum(a @ b))/da has every row equal to b's column sums."""
        a, b = rng.normal(size=(2, 3)), rng.normal(size=(3, 1))
        da, _ = ops.matmul_backward(a, b, np.ones((2, 1)))
        assert_allclose(da, np.broadcast_to(b.T, (2, 3)))

    def test_matmul_batched(self, rng):
        a, b = rng.normal(size=(2, 3, 4)), rng.normal(size=(4, 5))
        w = rng.normal(size=(2, 3, 5))
        da, db = ops.matmul_backward(a, b, w)
        self.check(lambda: float((ops.matmul(a, b) * w).sum()), a, da)
        self.check(lambda: float((ops.matmul(a, b) * w).sum()), b, db)

    @pytest.mark.parametrize("name", ["sigmoid", "tanh", "softmax"])
    def test_output_based(self, rng, name):
        fwd = getattr(ops, name)
        bwd = getattr(ops, f"{name}_backward")
        x, w = rng.normal(size=(3, 4)), rng.normal(size=(3, 4))
        analytic = bwd(fwd(x), w)
        self.check(lambda: float((fwd(x) * w).sum()), x, analytic)

    def test_maxout(self, rng):
        x, w = rng.normal(size=(3, 6)), rng.normal(size=(3, 3))
        self.check(lambda: float((ops.maxout2(x) * w).sum()), x, ops.maxout2_backward(x, w))

    def test_hadamard(self, rng):
        a, b, w = (rng.normal(size=(2, 3)) for _ in range(3))
        da, db = ops.hadamard_backward(a, b, w)
        self.check(lambda: float((ops.hadamard(a, b) * w).sum()), a, da)
        self.check(lambda: float((ops.hadamard(a, b) * w).sum()), b, db)

    def test_numeric_gradient_restores_input(self, rng):
        x = rng.normal(size=4)
        before = x.copy()
        ops.numeric_gradient(lambda: float((x**2).sum()), x)
        assert_allclose(x, before, atol=0)
