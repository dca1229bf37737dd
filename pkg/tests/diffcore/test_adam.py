"""Tests for the parameter store and ADAM."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from scst_lab.diffcore.adam import AdamConfig, adam_step, annealed_lr
from scst_lab.diffcore.params import ParamStore
from scst_lab.exceptions import DimensionError, NonFiniteError, UsageError


@pytest.fixture
def store() -> ParamStore:
    s = ParamStore()
    s.add("w", np.array([[1.0, -2.0], [0.5, 3.0]]))
    s.add("b", np.array([0.25]))
    return s


def test_zero_gradient_is_identity(store):
    """ADAM with zero gradients leaves parameters unchanged."""
    before = store.fingerprint()
    adam_step(store, AdamConfig(lr=0.1))
    assert store.fingerprint() == before
    assert store.step == 1


def test_first_step_moves_by_lr():
    """Bias correction makes the first step ≈ lr in the gradient's sign."""
    s = ParamStore()
    s.add("x", np.array([2.0]))
    s.accumulate("x", np.array([1.0]))
    adam_step(s, AdamConfig(lr=0.1))
    assert_allclose(s["x"], [1.9], atol=1e-8)
    assert not s.grads["x"].any()


def test_lr_override(store):
    store.accumulate("b", np.array([-4.0]))
    adam_step(store, AdamConfig(lr=0.1), lr=0.01)
    assert_allclose(store["b"], [0.26], atol=1e-8)


def test_non_finite_gradient_is_reported(store):
    store.accumulate("b", np.array([np.nan]))
    before = store.fingerprint()
    with pytest.raises(NonFiniteError, match="parameter b"):
        adam_step(store, AdamConfig())
    assert store.fingerprint() == before
    assert store.step == 0


def test_annealing():
    cfg = AdamConfig(lr=1.0, anneal_factor=0.8, anneal_every=3)
    assert annealed_lr(cfg, 2) == pytest.approx(1.0)
    assert annealed_lr(cfg, 6) == pytest.approx(0.64)


def test_invalid_config():
    with pytest.raises(ValueError):
        AdamConfig(lr=0.0)
    with pytest.raises(ValueError):
        AdamConfig(beta1=1.0)


class TestParamStore:
    def test_duplicate_name(self, store):
        with pytest.raises(UsageError, match="already registered"):
            store.add("w", np.zeros(1))

    def test_gradient_shape(self, store):
        with pytest.raises(DimensionError):
            store.accumulate("w", np.zeros(3))

    def test_accumulate_and_scale(self, store):
        store.accumulate("b", np.array([1.0]))
        store.accumulate("b", np.array([2.0]))
        store.scale_grad(0.5)
        assert_allclose(store.grads["b"], [1.5])

    def test_copy_is_deep(self, store):
        clone = store.copy()
        clone["w"][0, 0] = 99.0
        assert store["w"][0, 0] == 1.0
        assert clone.fingerprint() != store.fingerprint()

    def test_reset_optimizer(self, store):
        store.accumulate("w", np.ones((2, 2)))
        adam_step(store, AdamConfig())
        store.reset_optimizer()
        assert store.step == 0
        assert not store.first_moment["w"].any()
        assert not store.second_moment["w"].any()

    def test_num_parameters(self, store):
        assert store.num_parameters() == 5
        assert list(store) == ["w", "b"]
