"""Targets, advantages, and the future-impact reweighting strategy."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from itemrl import credit


class TestReweightStrategyWorkedExample:
    """Frozen worked example: click pattern [1,0,0,1,0,0]."""

    CREDITS = np.array([1.0, 0.0, 0.0, 1.0, 0.0, 0.0])

    def test_alpha_zero_is_uniform(self):
        w = credit.reweight_strategy(self.CREDITS, 0.0)
        np.testing.assert_allclose(w, np.full(6, 1.0 / 6.0), atol=1e-12, rtol=0)

    def test_alpha_half_interpolates(self):
        w = credit.reweight_strategy(self.CREDITS, 0.5)
        expected = np.array([0.25, 0.125, 0.125, 0.25, 0.125, 0.125])
        np.testing.assert_allclose(w, expected, atol=1e-12, rtol=0)

    def test_alpha_one_is_proportional(self):
        w = credit.reweight_strategy(self.CREDITS, 1.0)
        expected = np.array([0.5, 0.0, 0.0, 0.5, 0.0, 0.0])
        np.testing.assert_allclose(w, expected, atol=1e-12, rtol=0)


class TestReweightStrategyEdges:
    def test_all_miss_alpha_one_falls_back_to_uniform(self):
        w = credit.reweight_strategy(np.zeros(4), 1.0)
        np.testing.assert_allclose(w, np.full(4, 0.25), atol=1e-12, rtol=0)

    def test_alpha_above_one_clamps_negative_shares(self):
        # alpha=2: unnormalized = 2c - 1 -> misses clamp to zero
        w = credit.reweight_strategy(np.array([1.0, 0.0, 1.0]), 2.0)
        np.testing.assert_allclose(w, [0.5, 0.0, 0.5], atol=1e-12, rtol=0)

    def test_negative_alpha_prefers_misses(self):
        # alpha=-1: unnormalized = 2 - c -> [1, 2, 2] -> [0.2, 0.4, 0.4]
        w = credit.reweight_strategy(np.array([1.0, 0.0, 0.0]), -1.0)
        np.testing.assert_allclose(w, [0.2, 0.4, 0.4], atol=1e-12, rtol=0)

    def test_empty_list_rejected(self):
        with pytest.raises(ValueError):
            credit.reweight_strategy(np.zeros((3, 0)), 1.0)

    def test_batched_rows_independent(self):
        rows = np.array([[1.0, 0.0], [0.0, 0.0], [1.0, 1.0]])
        w = credit.reweight_strategy(rows, 1.0)
        np.testing.assert_allclose(w[0], [1.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(w[1], [0.5, 0.5], atol=1e-12)
        np.testing.assert_allclose(w[2], [0.5, 0.5], atol=1e-12)


@settings(max_examples=300, deadline=None)
@given(
    clicks=st.lists(st.integers(0, 1), min_size=1, max_size=12),
    alpha=st.sampled_from([-0.5, 0.0, 0.5, 1.0, 1.5, 2.0]),
)
def test_weights_are_a_distribution(clicks, alpha):
    c = np.array(clicks, dtype=np.float64)
    w = credit.reweight_strategy(c, alpha)
    assert np.all(w >= 0.0)
    assert abs(w.sum() - 1.0) <= 1e-9
    # uniform fallback exactly when every unnormalized weight is <= 0
    unnorm = alpha * c + (1.0 - alpha)
    if np.all(unnorm <= 0.0):
        np.testing.assert_allclose(w, np.full(len(c), 1.0 / len(c)), atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(data=st.data())
def test_reconstruction_identity(data):
    """Any share vector summing to 1 reconstructs the list-level target."""
    rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
    k = data.draw(st.integers(1, 10))
    r = rng.uniform(-1, 1, size=k)
    gamma = rng.uniform(0, 0.999)
    d = float(rng.integers(0, 2))
    v_next = rng.uniform(-10, 10)
    w = rng.dirichlet(np.ones(k))
    psi_w = credit.weighted_item_target(r, w, gamma, d, v_next)
    psi = credit.critic_target(r.sum(), gamma, d, v_next)
    assert abs(psi_w.sum() - psi) <= 1e-9


def test_equal_split_item_target_matches_uniform_weights():
    rng = np.random.default_rng(0)
    k = 6
    r = rng.uniform(-1, 1, size=k)
    psi_eq = credit.item_target(r, 0.9, 0.0, 2.5, k)
    psi_w = credit.weighted_item_target(r, np.full(k, 1.0 / k), 0.9, 0.0, 2.5)
    np.testing.assert_allclose(psi_eq, psi_w, atol=1e-12)


def test_item_target_rejects_bad_k():
    with pytest.raises(ValueError):
        credit.item_target(np.ones(3), 0.9, 0.0, 1.0, 0)


def test_done_masks_future_impact():
    r = np.array([1.0, -0.2])
    w = np.array([0.7, 0.3])
    psi = credit.weighted_item_target(r, w, 0.9, 1.0, 123.0)
    np.testing.assert_allclose(psi, r, atol=1e-12)


def test_advantages_are_target_minus_baseline():
    assert credit.request_advantage(2.0, 0.9, 0.0, 1.0, 0.5) == pytest.approx(
        2.0 + 0.9 - 0.5
    )
    a = credit.item_advantage(np.array([1.0, 2.0]), 3.0, 2)
    np.testing.assert_allclose(a, [-0.5, 0.5], atol=1e-12)
