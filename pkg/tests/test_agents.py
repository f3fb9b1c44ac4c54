"""Agent objectives, action selection, equivalences, and train steps."""

import numpy as np
import pytest

from itemrl import agents, credit
from itemrl.agents import (
    AGENT_KINDS,
    AgentBundle,
    AgentHyper,
    Batch,
    batchify,
    critic_loss,
    critic_item_td_loss,
    hac_losses,
    item_actor_loss,
    request_actor_loss,
    select_list,
    slateq_loss,
    strategy_weights_for,
    supervision_loss,
    train_step,
    train_step_on_batch,
    weight_model_forward,
    weight_model_loss,
)
from itemrl.gradchecks import make_random_batch, make_tiny_bundle
from itemrl.networks import log_softmax
from itemrl.nn import mlp_forward
from itemrl.types import CLICK_DTYPE, ITEM_DTYPE, Feedback, Observation, ReplayBuffer, Transition


def _bundle(kind, seed=0, n_items=20, k=3):
    return make_tiny_bundle(kind, seed, n_items=n_items, k=k)


def _batch(bundle, seed=0, batch_size=4):
    return make_random_batch(bundle, batch_size=batch_size, seed=seed)


class TestHyper:
    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            AgentHyper(kind="dqn").validate()

    def test_gamma_range_checked(self):
        with pytest.raises(ValueError):
            AgentHyper(gamma=1.0).validate()
        with pytest.raises(ValueError):
            AgentHyper(gamma=-0.1).validate()

    def test_all_kinds_build(self):
        for kind in AGENT_KINDS:
            AgentBundle(AgentHyper(kind=kind, item_dim=4, user_dim=2,
                                   user_table=4, state_dim=3, hidden=5),
                        n_items=10, k=2, seed=0)


class TestBatchify:
    def test_shapes_and_values(self):
        def obs(items, clicks):
            return Observation(
                user_id=1,
                hist_items=np.asarray(items, dtype=ITEM_DTYPE),
                hist_clicks=np.asarray(clicks, dtype=CLICK_DTYPE),
            )

        t = Transition(
            obs=obs([1, 2], [1, 0]),
            action=np.array([5, 6]),
            feedback=Feedback(clicks=np.array([1, 0], dtype=CLICK_DTYPE),
                              rewards=np.array([1.0, -0.2])),
            next_obs=obs([1, 2, 5, 6], [1, 0, 1, 0]),
            done=True,
        )
        b = batchify([t, t], history_len=6)
        assert b.action.shape == (2, 2)
        assert b.obs.items.shape == (2, 6)
        np.testing.assert_allclose(b.rewards[0], [1.0, -0.2])
        np.testing.assert_allclose(b.done, [1.0, 1.0])


class TestStrategyWeights:
    def test_uses_clicks_not_rewards(self):
        """All-miss rewards are -0.2 each; the credit values are the click
        bits, so alpha=1 falls back to uniform instead of clamping."""
        bundle = _bundle("item_a2c_w")
        batch = _batch(bundle)
        batch.clicks[:] = 0.0
        batch.rewards[:] = -0.2
        w = strategy_weights_for(batch, 1.0)
        np.testing.assert_allclose(w, 1.0 / batch.clicks.shape[1], atol=1e-12)

    def test_matches_reweight_strategy(self):
        bundle = _bundle("item_a2c_w")
        batch = _batch(bundle)
        np.testing.assert_allclose(
            strategy_weights_for(batch, 0.7),
            credit.reweight_strategy(batch.clicks, 0.7),
            atol=1e-12,
        )


class TestSelectList:
    def test_greedy_is_top_k(self):
        bundle = _bundle("item_a2c_w")
        batch = _batch(bundle)
        items, logp = select_list(bundle, batch.obs, mode="greedy")
        scores, _ = agents._actor_scores(bundle, batch.obs)
        for b in range(items.shape[0]):
            expected = np.argsort(-scores[b])[: bundle.k]
            np.testing.assert_array_equal(items[b], expected)
        # returned log-probabilities match the full-pool softmax
        np.testing.assert_allclose(
            logp, np.take_along_axis(log_softmax(scores), items, axis=1),
            atol=1e-12,
        )

    def test_sampled_lists_distinct_and_in_range(self):
        bundle = _bundle("item_a2c_w")
        batch = _batch(bundle, batch_size=8)
        items, _ = select_list(bundle, batch.obs, mode="sample",
                               rng=np.random.default_rng(0))
        for row in items:
            assert len(set(row.tolist())) == bundle.k
            assert row.min() >= 0 and row.max() < bundle.n_items

    def test_sampling_seeded(self):
        bundle = _bundle("item_a2c_w")
        batch = _batch(bundle)
        a, _ = select_list(bundle, batch.obs, rng=np.random.default_rng(5))
        b, _ = select_list(bundle, batch.obs, rng=np.random.default_rng(5))
        np.testing.assert_array_equal(a, b)

    def test_k_larger_than_catalog_rejected(self):
        bundle = _bundle("item_a2c_w", n_items=2, k=3)
        with pytest.raises(ValueError):
            select_list(bundle, _batch(bundle).obs)

    def test_unknown_mode_rejected(self):
        bundle = _bundle("item_a2c_w")
        with pytest.raises(ValueError):
            select_list(bundle, _batch(bundle).obs, mode="thompson")

    def test_slateq_epsilon_one_randomizes(self):
        bundle = _bundle("slateq")
        bundle.hyper.epsilon = 1.0
        batch = _batch(bundle, batch_size=6)
        items, _ = select_list(bundle, batch.obs, rng=np.random.default_rng(1))
        for row in items:
            assert len(set(row.tolist())) == bundle.k

    def test_hyper_action_kinds_return_distinct_lists(self):
        for kind in ("ddpg", "hac"):
            bundle = _bundle(kind)
            items, _ = select_list(bundle, _batch(bundle).obs,
                                   rng=np.random.default_rng(2))
            for row in items:
                assert len(set(row.tolist())) == bundle.k

    def test_explore_mix_changes_sampling(self):
        bundle = _bundle("item_a2c_w")
        # sharpen the policy so the pure softmax is nearly deterministic
        bundle.stores["actor"].params["item_emb"] *= 50.0
        bundle.stores["actor"].params["proj_W"] *= 50.0
        batch = _batch(bundle, batch_size=8)
        a, _ = select_list(bundle, batch.obs, rng=np.random.default_rng(3))
        bundle.hyper.explore_mix = 0.9
        b, _ = select_list(bundle, batch.obs, rng=np.random.default_rng(3))
        assert not np.array_equal(a, b)
        for row in b:  # mixture still yields distinct valid lists
            assert len(set(row.tolist())) == bundle.k


class TestLossOracles:
    def test_critic_loss_matches_manual_td(self):
        bundle = _bundle("item_a2c_w")
        batch = _batch(bundle)
        v_next, _ = agents._critic_value(bundle, "target_critic", batch.next_obs)
        v_now, _ = agents._critic_value(bundle, "critic", batch.obs)
        target = batch.rewards.sum(axis=1) + bundle.hyper.gamma * (1 - batch.done) * v_next
        expected = float(np.mean((v_now - target) ** 2))
        assert critic_loss(bundle, batch, accumulate=False) == pytest.approx(
            expected, rel=1e-12
        )

    def test_request_actor_loss_matches_manual(self):
        bundle = _bundle("a2c")
        batch = _batch(bundle)
        v_now, v_next = agents._advantage_inputs(bundle, batch)
        A = (batch.rewards.sum(axis=1)
             + bundle.hyper.gamma * (1 - batch.done) * v_next - v_now)
        scores, _ = agents._actor_scores(bundle, batch.obs)
        logp = np.take_along_axis(log_softmax(scores), batch.action, axis=1)
        expected = float(np.mean(-A * logp.sum(axis=1)))
        assert request_actor_loss(bundle, batch, accumulate=False) == pytest.approx(
            expected, rel=1e-12
        )

    def test_item_actor_loss_matches_manual(self):
        bundle = _bundle("item_a2c_w")
        batch = _batch(bundle)
        w = strategy_weights_for(batch, 0.6)
        v_now, v_next = agents._advantage_inputs(bundle, batch)
        K = bundle.k
        future = bundle.hyper.gamma * (1 - batch.done)[:, None] * v_next[:, None]
        A = batch.rewards + w * future - v_now[:, None] / K
        scores, _ = agents._actor_scores(bundle, batch.obs)
        logp = np.take_along_axis(log_softmax(scores), batch.action, axis=1)
        expected = float(np.mean(-A * logp))
        assert item_actor_loss(bundle, batch, w, accumulate=False) == pytest.approx(
            expected, rel=1e-12
        )

    def test_weight_model_loss_is_exact_negation_of_item_actor(self):
        bundle = _bundle("item_a2c_m")
        batch = _batch(bundle)
        weights, _ = weight_model_forward(bundle, batch)
        lw = weight_model_loss(bundle, batch, accumulate=False)
        la = item_actor_loss(bundle, batch, weights, accumulate=False)
        assert lw == pytest.approx(-la, rel=1e-12)

    def test_weight_model_rows_normalized(self):
        bundle = _bundle("item_a2c_m")
        weights, _ = weight_model_forward(bundle, _batch(bundle))
        assert np.all(weights > 0)
        np.testing.assert_allclose(weights.sum(axis=1), 1.0, atol=1e-12)

    def test_weight_model_missing_rejected(self):
        bundle = _bundle("item_a2c_w")
        with pytest.raises(ValueError):
            weight_model_forward(bundle, _batch(bundle))

    def test_supervision_matches_manual_bce(self):
        bundle = _bundle("supervision")
        batch = _batch(bundle)
        scores, _ = agents._actor_scores(bundle, batch.obs)
        s = np.take_along_axis(scores, batch.action, axis=1)
        p = 1.0 / (1.0 + np.exp(-s))
        y = batch.clicks
        expected = float(np.mean(-(y * np.log(p) + (1 - y) * np.log1p(-p))))
        assert supervision_loss(bundle, batch, accumulate=False) == pytest.approx(
            expected, rel=1e-9
        )

    def test_slateq_loss_matches_manual(self):
        bundle = _bundle("slateq")
        batch = _batch(bundle)
        h = bundle.hyper
        K = bundle.k
        pool_online = agents._slateq_pool_q(bundle, "q", batch.next_obs)
        top = np.argpartition(-pool_online, K - 1, axis=1)[:, :K]
        pool_target = agents._slateq_pool_q(bundle, "target_q", batch.next_obs)
        nxt = np.take_along_axis(pool_target, top, axis=1).sum(axis=1)
        target = batch.rewards + (h.gamma / K) * ((1 - batch.done) * nxt)[:, None]
        # Q(s, i_k) recomputed from primitives
        from itemrl.networks import encode_state

        store = bundle.stores["q"]
        state, _ = encode_state(store, "", bundle.enc_spec, batch.obs)
        x = np.concatenate(
            [np.repeat(state[:, None, :], K, axis=1), store["item_emb"][batch.action]],
            axis=2,
        )
        q, _ = mlp_forward(store, "q", bundle.q_spec, x)
        expected = float(np.mean((q[:, :, 0] - target) ** 2))
        assert slateq_loss(bundle, batch, accumulate=False) == pytest.approx(
            expected, rel=1e-12
        )

    def test_ddpg_losses_match_manual(self):
        bundle = _bundle("ddpg")
        batch = _batch(bundle)
        h = bundle.hyper
        z_next, _ = agents._ddpg_z_from(bundle, "target_actor", batch.next_obs)
        q_next, _ = agents._q_forward(bundle, "target_critic", batch.next_obs, z_next)
        target = batch.rewards.sum(axis=1) + h.gamma * (1 - batch.done) * q_next
        z_now = bundle.stores["critic"]["item_emb"][batch.action].mean(axis=1)
        q_now, _ = agents._q_forward(bundle, "critic", batch.obs, z_now)
        z_pi, _ = agents._ddpg_z_from(bundle, "actor", batch.obs)
        q_pi, _ = agents._q_forward(bundle, "critic", batch.obs, z_pi)
        c, a = agents.ddpg_losses(bundle, batch, accumulate=False)
        assert c == pytest.approx(float(np.mean((q_now - target) ** 2)), rel=1e-12)
        assert a == pytest.approx(float(np.mean(-q_pi)), rel=1e-12)

    def test_hac_hyper_term_matches_manual(self):
        bundle = _bundle("hac")
        batch = _batch(bundle)
        _, _, hyper, _ = hac_losses(bundle, batch, accumulate=False)
        z_pi, _ = agents._ddpg_z_from(bundle, "actor", batch.obs)
        mean_vec = bundle.stores["critic"]["item_emb"][batch.action].mean(axis=1)
        gz, _ = mlp_forward(bundle.stores["critic"], "g", bundle.g_spec, mean_vec)
        expected = float(np.mean(np.sum((z_pi - gz) ** 2, axis=1)))
        assert hyper == pytest.approx(expected, rel=1e-12)

    def test_critic_item_td_uses_weighted_targets(self):
        bundle = _bundle("item_a2c_w")
        batch = _batch(bundle)
        w = strategy_weights_for(batch, 1.0)
        v_next, _ = agents._critic_value(bundle, "target_critic", batch.next_obs)
        v_now, _ = agents._critic_value(bundle, "critic", batch.obs)
        K = bundle.k
        psi_w = batch.rewards + w * (
            bundle.hyper.gamma * (1 - batch.done)[:, None] * v_next[:, None]
        )
        expected = float(np.mean(((v_now[:, None] / K - psi_w) ** 2).sum(axis=1)))
        assert critic_item_td_loss(bundle, batch, w, accumulate=False) == pytest.approx(
            expected, rel=1e-12
        )


class TestEquivalences:
    def _trained_params(self, kind, alpha, n_steps=40):
        bundle = make_tiny_bundle(kind, seed=7)
        bundle.hyper.alpha = alpha
        for i in range(n_steps):
            batch = make_random_batch(bundle, batch_size=6, seed=100 + i)
            train_step_on_batch(bundle, batch)
        return {
            f"{sn}.{pn}": p.copy()
            for sn, store in bundle.stores.items()
            for pn, p in store.params.items()
        }

    def test_alpha_zero_equals_equal_split_bitwise(self):
        a = self._trained_params("item_a2c", alpha=0.0)
        b = self._trained_params("item_a2c_w", alpha=0.0)
        assert a.keys() == b.keys()
        for name in a:
            np.testing.assert_array_equal(a[name], b[name], err_msg=name)

    def test_k1_item_and_request_losses_agree(self):
        bundle = make_tiny_bundle("item_a2c_w", seed=3, k=1)
        batch = make_random_batch(bundle, batch_size=5, seed=1)
        w = strategy_weights_for(batch, 1.0)
        np.testing.assert_allclose(w, 1.0, atol=1e-12)
        li = item_actor_loss(bundle, batch, w, accumulate=False)
        lr = request_actor_loss(bundle, batch, accumulate=False)
        assert li == pytest.approx(lr, abs=1e-9)
        lc = critic_loss(bundle, batch, accumulate=False)
        lci = critic_item_td_loss(bundle, batch, w, accumulate=False)
        assert lc == pytest.approx(lci, abs=1e-9)

    def test_uniform_weight_model_reproduces_equal_weight_update(self):
        bundle = make_tiny_bundle("item_a2c_m", seed=5)
        # zero the weight head's output layer: logits constant -> uniform
        wm_store = bundle.stores["weight"]
        last = len(bundle.wm_spec.dims()) - 2
        wm_store.params[f"wm{last}_W"][...] = 0.0
        wm_store.params[f"wm{last}_b"][...] = 0.0
        batch = make_random_batch(bundle, batch_size=6, seed=2)
        weights, _ = weight_model_forward(bundle, batch)
        np.testing.assert_allclose(weights, 1.0 / bundle.k, atol=1e-12)

        equal = np.full_like(weights, 1.0 / bundle.k)
        bundle.stores["actor"].zero_grad()
        l1 = item_actor_loss(bundle, batch, weights)
        g1 = {n: g.copy() for n, g in bundle.stores["actor"].grads.items()}
        bundle.stores["actor"].zero_grad()
        l2 = item_actor_loss(bundle, batch, equal)
        g2 = bundle.stores["actor"].grads
        assert l1 == pytest.approx(l2, abs=1e-9)
        for n in g1:
            np.testing.assert_allclose(g1[n], g2[n], atol=1e-9, err_msg=n)
        bundle.stores["actor"].zero_grad()


class TestGradientIsolation:
    def test_critic_loss_leaves_actor_untouched(self):
        bundle = _bundle("item_a2c_w")
        batch = _batch(bundle)
        critic_loss(bundle, batch)
        for g in bundle.stores["actor"].grads.values():
            np.testing.assert_allclose(g, 0.0)
        bundle.stores["critic"].zero_grad()

    def test_actor_loss_leaves_critic_untouched(self):
        bundle = _bundle("item_a2c_w")
        batch = _batch(bundle)
        item_actor_loss(bundle, batch, strategy_weights_for(batch, 1.0))
        for g in bundle.stores["critic"].grads.values():
            np.testing.assert_allclose(g, 0.0)
        for g in bundle.stores["target_critic"].grads.values():
            np.testing.assert_allclose(g, 0.0)
        bundle.stores["actor"].zero_grad()

    def test_weight_loss_touches_only_weight_store(self):
        bundle = _bundle("item_a2c_m")
        batch = _batch(bundle)
        weight_model_loss(bundle, batch)
        assert any(np.abs(g).max() > 0 for g in bundle.stores["weight"].grads.values())
        for name in ("actor", "critic", "target_critic"):
            for g in bundle.stores[name].grads.values():
                np.testing.assert_allclose(g, 0.0)
        bundle.stores["weight"].zero_grad()

    def test_target_networks_move_only_by_soft_update(self):
        bundle = _bundle("item_a2c_w")
        batch = _batch(bundle)
        before = {n: p.copy() for n, p in bundle.stores["target_critic"].params.items()}
        online_before = {n: p.copy() for n, p in bundle.stores["critic"].params.items()}
        train_step_on_batch(bundle, batch)
        rho = bundle.hyper.rho
        online_after = bundle.stores["critic"].params
        for n, p in bundle.stores["target_critic"].params.items():
            expected = (1 - rho) * before[n] + rho * online_after[n]
            np.testing.assert_allclose(p, expected, atol=1e-12, err_msg=n)
            assert not np.array_equal(online_before[n], online_after[n]) or np.abs(
                bundle.stores["critic"].grads.get(n, np.zeros(1))
            ).max() == 0


class TestTrainStep:
    @pytest.mark.parametrize("kind", AGENT_KINDS)
    def test_smoke_all_kinds(self, kind):
        bundle = make_tiny_bundle(kind, seed=11)
        batch = make_random_batch(bundle, batch_size=6, seed=0)
        diag = train_step_on_batch(bundle, batch)
        for v in diag.values():
            arr = np.asarray(v, dtype=np.float64)
            assert np.all(np.isfinite(arr))
        if kind in ("item_a2c", "item_a2c_w", "item_a2c_m"):
            assert "weights" in diag and "strategy_weights_ref" in diag
        if kind == "item_a2c_m":
            assert "weight_loss" in diag

    def test_item_td_critic_gate(self):
        bundle = make_tiny_bundle("item_a2c_w", seed=1)
        bundle.hyper.critic_item_td = True
        diag = train_step_on_batch(bundle, make_random_batch(bundle, seed=0))
        assert np.isfinite(diag["critic_loss"])

    def test_train_step_samples_from_buffer(self):
        bundle = make_tiny_bundle("item_a2c", seed=2)
        bundle.hyper.batch_size = 4
        buf = ReplayBuffer(capacity=50, seed=0)
        rng = np.random.default_rng(0)

        def obs(n):
            return Observation(
                user_id=int(rng.integers(0, 5)),
                hist_items=rng.integers(0, bundle.n_items, size=n).astype(ITEM_DTYPE),
                hist_clicks=rng.integers(0, 2, size=n).astype(CLICK_DTYPE),
            )

        for _ in range(10):
            clicks = rng.integers(0, 2, size=bundle.k).astype(CLICK_DTYPE)
            buf.push(Transition(
                obs=obs(4),
                action=rng.choice(bundle.n_items, size=bundle.k, replace=False),
                feedback=Feedback(clicks=clicks,
                                  rewards=np.where(clicks == 1, 1.0, -0.2)),
                next_obs=obs(7),
                done=bool(rng.integers(0, 2)),
            ))
        diag = train_step(bundle, buf, history_len=8)
        assert np.isfinite(diag["critic_loss"])
        assert bundle.stores["critic"].step_count == 1
        assert bundle.stores["actor"].step_count == 1

    def test_checkpoint_round_trip(self, tmp_path):
        bundle = make_tiny_bundle("item_a2c_m", seed=4)
        batch = make_random_batch(bundle, seed=0)
        train_step_on_batch(bundle, batch)
        bundle.save(tmp_path / "ckpt")
        fresh = make_tiny_bundle("item_a2c_m", seed=99)
        fresh.load_values(tmp_path / "ckpt")
        a, _ = select_list(bundle, batch.obs, mode="greedy")
        b, _ = select_list(fresh, batch.obs, mode="greedy")
        np.testing.assert_array_equal(a, b)
