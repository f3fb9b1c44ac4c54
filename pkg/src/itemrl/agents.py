"""Learning objectives, action selection, and per-step training for all
agent kinds.

Request-level A2C trains a state-value critic on the list-level TD
target and pushes the whole list's log-probability by a shared
advantage.  The item-decomposed variants keep the same critic but split
the actor update across the K items, with the discounted next-state
value shared equally, by the reward-based strategy, or by an
adversarially trained weight model.  SlateQ, DDPG, Supervision, and HAC
are provided as baselines.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import credit, kernels
from .networks import (
    EncoderSpec,
    ObsBatch,
    batch_observations,
    encode_backward,
    encode_state,
    init_store,
    log_softmax,
    mlp_backward,
    mlp_forward,
    mlp_layout,
    policy_scores,
    policy_scores_backward,
    score_layout,
    softmax,
)
from .nn import NetworkSpec, ParameterStore, embedding_scatter

AGENT_KINDS = (
    "a2c",
    "item_a2c",
    "item_a2c_w",
    "item_a2c_m",
    "slateq",
    "ddpg",
    "supervision",
    "hac",
)


@dataclass
class AgentHyper:
    kind: str = "item_a2c"
    gamma: float = 0.9
    alpha: float = 1.0  # reward-based reweighting strength (item_a2c_w)
    lr_actor: float = 1e-4
    lr_critic: float = 1e-3
    lr_weight: float = 1e-6
    rho: float = 0.01
    batch_size: int = 128
    item_dim: int = 32
    user_dim: int = 8
    user_table: int = 512
    state_dim: int = 32
    hidden: int = 64
    init_scale: float = 0.1
    critic_item_td: bool = False  # item-decomposed critic TD, off by default
    explore_mix: float = 0.0  # uniform mixture into softmax sampling
    explore_noise: float = 0.1  # ddpg/hac hyper-action noise
    epsilon: float = 0.1  # slateq epsilon-greedy
    hac_coef_hyper: float = 1.0
    hac_coef_supervision: float = 1.0

    def validate(self) -> "AgentHyper":
        if self.kind not in AGENT_KINDS:
            raise ValueError(f"unknown agent kind {self.kind!r}")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must be in [0, 1)")
        return self


class AgentBundle:
    """All parameter stores and optimizer state for one agent."""

    def __init__(self, hyper: AgentHyper, n_items: int, k: int, seed: int = 0):
        self.hyper = hyper.validate()
        self.k = k
        self.n_items = n_items
        self.enc_spec = EncoderSpec(
            n_items=n_items,
            item_dim=hyper.item_dim,
            user_dim=hyper.user_dim,
            user_table=hyper.user_table,
            state_dim=hyper.state_dim,
            hidden=hyper.hidden,
        )
        self.rng = np.random.default_rng(seed + 1)
        init_rng = np.random.default_rng(seed)
        self.stores: dict[str, ParameterStore] = {}
        self._build(init_rng)

    # -- network specs ---------------------------------------------------
    @property
    def val_spec(self) -> NetworkSpec:
        e = self.enc_spec
        return NetworkSpec(e.state_dim, (e.hidden,), 1)

    @property
    def wm_spec(self) -> NetworkSpec:
        e = self.enc_spec
        return NetworkSpec(2 * e.state_dim + e.item_dim + 1, (e.hidden,), 1)

    @property
    def q_spec(self) -> NetworkSpec:
        e = self.enc_spec
        return NetworkSpec(e.state_dim + e.item_dim, (e.hidden,), 1)

    @property
    def pi_spec(self) -> NetworkSpec:
        e = self.enc_spec
        return NetworkSpec(e.state_dim, (e.hidden,), e.item_dim)

    @property
    def g_spec(self) -> NetworkSpec:
        e = self.enc_spec
        return NetworkSpec(e.item_dim, (e.hidden,), e.item_dim)

    def _build(self, rng) -> None:
        h = self.hyper
        e = self.enc_spec
        scale = h.init_scale

        def enc_plus(*layouts):
            layout = e.layout("")
            for extra in layouts:
                layout.update(extra)
            return init_store(rng, layout, scale=scale)

        kind = h.kind
        if kind in ("a2c", "item_a2c", "item_a2c_w", "item_a2c_m", "supervision"):
            self.stores["actor"] = enc_plus(score_layout("", e))
            if kind != "supervision":
                self.stores["critic"] = enc_plus(mlp_layout("val", self.val_spec))
                self.stores["target_critic"] = self.stores["critic"].clone()
            if kind == "item_a2c_m":
                self.stores["weight"] = enc_plus(mlp_layout("wm", self.wm_spec))
        elif kind == "slateq":
            self.stores["q"] = enc_plus(mlp_layout("q", self.q_spec))
            self.stores["target_q"] = self.stores["q"].clone()
        elif kind == "ddpg":
            self.stores["actor"] = enc_plus(mlp_layout("pi", self.pi_spec))
            self.stores["critic"] = enc_plus(mlp_layout("q", self.q_spec))
            self.stores["target_actor"] = self.stores["actor"].clone()
            self.stores["target_critic"] = self.stores["critic"].clone()
        elif kind == "hac":
            self.stores["actor"] = enc_plus(
                mlp_layout("pi", self.pi_spec), score_layout("", e)
            )
            self.stores["critic"] = enc_plus(
                mlp_layout("q", self.q_spec), mlp_layout("g", self.g_spec)
            )
            self.stores["target_actor"] = self.stores["actor"].clone()
            self.stores["target_critic"] = self.stores["critic"].clone()

    # -- checkpointing ---------------------------------------------------
    def save(self, directory) -> None:
        import json
        import os

        os.makedirs(directory, exist_ok=True)
        meta = {
            "kind": self.hyper.kind,
            "k": self.k,
            "n_items": self.n_items,
            "stores": list(self.stores),
        }
        with open(os.path.join(directory, "meta.json"), "w") as f:
            json.dump(meta, f)
        for name, store in self.stores.items():
            store.save(os.path.join(directory, f"{name}.npz"))

    def load_values(self, directory) -> None:
        import os

        for name, store in self.stores.items():
            loaded = ParameterStore.load(os.path.join(directory, f"{name}.npz"))
            store.copy_values_from(loaded)


# -- batch preparation ---------------------------------------------------


@dataclass
class Batch:
    obs: ObsBatch
    next_obs: ObsBatch
    action: np.ndarray  # (B, K)
    clicks: np.ndarray  # (B, K) float
    rewards: np.ndarray  # (B, K) float
    done: np.ndarray  # (B,) float


def batchify(transitions, history_len: int) -> Batch:
    obs = batch_observations([t.obs for t in transitions], history_len)
    nxt = batch_observations([t.next_obs for t in transitions], history_len)
    action = np.stack([np.asarray(t.action, dtype=np.int64) for t in transitions])
    clicks = np.stack([t.feedback.clicks for t in transitions]).astype(np.float64)
    rewards = np.stack([t.feedback.rewards for t in transitions]).astype(np.float64)
    done = np.array([float(t.done) for t in transitions])
    return Batch(obs=obs, next_obs=nxt, action=action, clicks=clicks,
                 rewards=rewards, done=done)


# -- shared forward helpers ----------------------------------------------


def _actor_scores(bundle: AgentBundle, obs: ObsBatch, need_cache: bool = False):
    store = bundle.stores["actor"]
    state, enc_cache = encode_state(store, "", bundle.enc_spec, obs)
    scores, head_cache = policy_scores(store, "", bundle.enc_spec, state)
    if need_cache:
        return scores, (enc_cache, head_cache)
    return scores, None


def _critic_value(bundle: AgentBundle, store_name: str, obs: ObsBatch):
    """V(s) forward only, no gradient bookkeeping needed by callers."""
    store = bundle.stores[store_name]
    state, enc_cache = encode_state(store, "", bundle.enc_spec, obs)
    v, val_cache = mlp_forward(store, "val", bundle.val_spec, state)
    return v[:, 0], (enc_cache, val_cache)


def _critic_backward(bundle: AgentBundle, store_name: str, cache, dv: np.ndarray):
    store = bundle.stores[store_name]
    enc_cache, val_cache = cache
    dstate = mlp_backward(store, "val", bundle.val_spec, val_cache,
                          dv[:, None])
    encode_backward(store, "", bundle.enc_spec, enc_cache, dstate)


def _ddpg_z_from(bundle: AgentBundle, store_name: str, obs: ObsBatch):
    store = bundle.stores[store_name]
    state, enc_cache = encode_state(store, "", bundle.enc_spec, obs)
    z, pi_cache = mlp_forward(store, "pi", bundle.pi_spec, state)
    return z, (enc_cache, pi_cache)


def _q_forward(bundle: AgentBundle, store_name: str, obs: ObsBatch, z: np.ndarray):
    """Q(s, z) for one continuous action vector per row."""
    store = bundle.stores[store_name]
    state, enc_cache = encode_state(store, "", bundle.enc_spec, obs)
    x = np.concatenate([state, z], axis=1)
    q, q_cache = mlp_forward(store, "q", bundle.q_spec, x)
    return q[:, 0], (enc_cache, q_cache)


def _q_backward(bundle: AgentBundle, store_name: str, cache, dq: np.ndarray,
                accumulate: bool = True):
    """Returns gradient w.r.t. the z input.  With accumulate=False the
    store's parameters receive no gradient (used by the DDPG actor)."""
    store = bundle.stores[store_name]
    enc_cache, q_cache = cache
    dx = mlp_backward(store, "q", bundle.q_spec, q_cache, dq[:, None],
                      accumulate=accumulate)
    ds_dim = bundle.enc_spec.state_dim
    dstate, dz = dx[:, :ds_dim], dx[:, ds_dim:]
    if accumulate:
        encode_backward(store, "", bundle.enc_spec, enc_cache, dstate)
    return dz


# -- action selection ----------------------------------------------------


def select_list(bundle: AgentBundle, observations, mode: str = "sample",
                rng: np.random.Generator | None = None, history_len: int = 120):
    """Choose a K-item list per observation.

    greedy: top-K by score.  sample: K distinct items by sequential
    softmax sampling without replacement.  Returns (items (B, K),
    log-probabilities (B, K) under the full-pool softmax).
    """
    if rng is None:
        rng = bundle.rng
    k = bundle.k
    if k > bundle.n_items:
        raise ValueError("K exceeds catalog size")
    obs = (
        observations
        if isinstance(observations, ObsBatch)
        else batch_observations(observations, history_len)
    )
    kind = bundle.hyper.kind

    if kind in ("a2c", "item_a2c", "item_a2c_w", "item_a2c_m", "supervision"):
        scores, _ = _actor_scores(bundle, obs)
    elif kind == "slateq":
        scores = _slateq_pool_q(bundle, "q", obs)
        if mode == "sample" and rng.random() < bundle.hyper.epsilon:
            B = scores.shape[0]
            items = np.stack(
                [rng.choice(bundle.n_items, size=k, replace=False) for _ in range(B)]
            )
            logp = log_softmax(scores)
            return items, np.take_along_axis(logp, items, axis=1)
        mode = "greedy"
    elif kind in ("ddpg", "hac"):
        z, _ = _ddpg_z_from(bundle, "actor", obs)
        if mode == "sample" and bundle.hyper.explore_noise > 0:
            z = z + bundle.hyper.explore_noise * rng.standard_normal(z.shape)
        scores = z @ bundle.stores["actor"]["item_emb"].T
        mode = "greedy"  # list is deterministic given the (noisy) hyper-action
    else:  # pragma: no cover
        raise ValueError(kind)

    logp = log_softmax(scores)
    if mode == "greedy":
        top = np.argpartition(-scores, k - 1, axis=1)[:, :k]
        order = np.argsort(-np.take_along_axis(scores, top, axis=1), axis=1)
        items = np.take_along_axis(top, order, axis=1)
    elif mode == "sample":
        probs = softmax(scores)
        mix = bundle.hyper.explore_mix
        if mix > 0.0:
            # persistent entropy floor: keeps exploration alive after the
            # policy softmax saturates
            probs = (1.0 - mix) * probs + mix / probs.shape[1]
        uniforms = rng.random((scores.shape[0], k))
        items = kernels.sequential_topk_sample(probs, uniforms)
    else:
        raise ValueError(f"unknown selection mode {mode!r}")
    return items, np.take_along_axis(logp, items, axis=1)


def _slateq_pool_q(bundle: AgentBundle, store_name: str, obs: ObsBatch) -> np.ndarray:
    """Q(s, i) for every catalog item: first layer split into a state
    part and a precomputed item part to stay affordable at pool scale."""
    store = bundle.stores[store_name]
    spec = bundle.q_spec
    state, _ = encode_state(store, "", bundle.enc_spec, obs)
    ds = bundle.enc_spec.state_dim
    W0, b0 = store["q0_W"], store["q0_b"]
    a = state @ W0[:ds]  # (B, hidden)
    b = store["item_emb"] @ W0[ds:]  # (N, hidden)
    h = np.tanh(a[:, None, :] + b[None, :, :] + b0)  # (B, N, hidden)
    return h @ store["q1_W"][:, 0] + store["q1_b"][0]  # (B, N)


# -- weight model --------------------------------------------------------


def weight_model_forward(bundle: AgentBundle, batch: Batch, need_cache: bool = False):
    """Per-item future-impact shares from the weight model, softmax
    normalized across the K items of each list."""
    if "weight" not in bundle.stores:
        raise ValueError("agent has no weight model")
    store = bundle.stores["weight"]
    e = bundle.enc_spec
    B, K = batch.action.shape
    s_now, enc_now = encode_state(store, "", e, batch.obs)
    s_nxt, enc_nxt = encode_state(store, "", e, batch.next_obs)
    item_vecs = store["item_emb"][batch.action]  # (B, K, de)
    feats = np.concatenate(
        [
            np.repeat(s_now[:, None, :], K, axis=1),
            np.repeat(s_nxt[:, None, :], K, axis=1),
            item_vecs,
            batch.rewards[:, :, None],
        ],
        axis=2,
    )
    logits, wm_cache = mlp_forward(store, "wm", bundle.wm_spec, feats)
    logits = logits[:, :, 0]  # (B, K)
    shifted = logits - logits.max(axis=1, keepdims=True)
    expl = np.exp(shifted)
    weights = expl / expl.sum(axis=1, keepdims=True)
    if need_cache:
        return weights, (enc_now, enc_nxt, wm_cache, weights)
    return weights, None


def _weight_model_backward(bundle: AgentBundle, batch: Batch, cache,
                           dweights: np.ndarray) -> None:
    store = bundle.stores["weight"]
    e = bundle.enc_spec
    enc_now, enc_nxt, wm_cache, weights = cache
    # softmax (over K) backward
    dlogits = weights * (dweights - (dweights * weights).sum(axis=1, keepdims=True))
    dfeats = mlp_backward(store, "wm", bundle.wm_spec, wm_cache,
                          dlogits[:, :, None])
    ds = e.state_dim
    de = e.item_dim
    d_snow = dfeats[:, :, :ds].sum(axis=1)
    d_snxt = dfeats[:, :, ds : 2 * ds].sum(axis=1)
    d_items = dfeats[:, :, 2 * ds : 2 * ds + de]
    encode_backward(store, "", e, enc_now, d_snow)
    encode_backward(store, "", e, enc_nxt, d_snxt)
    embedding_scatter(store, "item_emb", batch.action, d_items)


# -- losses --------------------------------------------------------------


def critic_loss(bundle: AgentBundle, batch: Batch, accumulate: bool = True,
                values_out: dict | None = None) -> float:
    """Mean squared list-level TD error, target critic for V(s').

    `values_out`, when given, receives the forward values v_now/v_next so
    the caller can reuse them as advantage constants without re-encoding.
    """
    h = bundle.hyper
    v_next, _ = _critic_value(bundle, "target_critic", batch.next_obs)
    v_now, cache = _critic_value(bundle, "critic", batch.obs)
    if values_out is not None:
        values_out["v_now"] = v_now
        values_out["v_next"] = v_next
    R = batch.rewards.sum(axis=1)
    target = credit.critic_target(R, h.gamma, batch.done, v_next)
    diff = v_now - target
    loss = float(np.mean(diff**2))
    if accumulate:
        B = len(diff)
        _critic_backward(bundle, "critic", cache, 2.0 * diff / B)
    return loss


def critic_item_td_loss(bundle: AgentBundle, batch: Batch, weights: np.ndarray,
                        accumulate: bool = True,
                        values_out: dict | None = None) -> float:
    """Item-decomposed critic TD (config-gated alternative): per item,
    (Psi_w - V(s)/K)^2, summed over the list and averaged over the batch."""
    h = bundle.hyper
    B, K = batch.action.shape
    v_next, _ = _critic_value(bundle, "target_critic", batch.next_obs)
    v_now, cache = _critic_value(bundle, "critic", batch.obs)
    if values_out is not None:
        values_out["v_now"] = v_now
        values_out["v_next"] = v_next
    psi_w = credit.weighted_item_target(
        batch.rewards, weights, h.gamma, batch.done[:, None], v_next[:, None]
    )
    diff = v_now[:, None] / K - psi_w  # (B, K)
    loss = float(np.mean((diff**2).sum(axis=1)))
    if accumulate:
        dv = (2.0 / B) * diff.sum(axis=1) / K
        _critic_backward(bundle, "critic", cache, dv)
    return loss


def _advantage_inputs(bundle: AgentBundle, batch: Batch):
    """Constant (no-gradient) critic values for actor/weight losses."""
    v_next, _ = _critic_value(bundle, "target_critic", batch.next_obs)
    v_now, _ = _critic_value(bundle, "critic", batch.obs)
    return v_now, v_next


def request_actor_loss(bundle: AgentBundle, batch: Batch,
                       accumulate: bool = True,
                       values: tuple | None = None) -> float:
    """-A(s, a) * log pi(a|s), list log-probability as the sum of
    per-item log-softmax terms; advantage treated as constant.

    `values` optionally supplies precomputed (v_now, v_next) constants.
    """
    h = bundle.hyper
    v_now, v_next = values if values is not None else _advantage_inputs(bundle, batch)
    R = batch.rewards.sum(axis=1)
    A = credit.request_advantage(R, h.gamma, batch.done, v_next, v_now)
    scores, cache = _actor_scores(bundle, batch.obs, need_cache=True)
    logp = log_softmax(scores)
    chosen_logp = np.take_along_axis(logp, batch.action, axis=1)
    loss = float(np.mean(-A * chosen_logp.sum(axis=1)))
    if accumulate:
        B, K = batch.action.shape
        pi = np.exp(logp)
        dscores = (A[:, None] / B) * (K * pi)
        np.add.at(dscores, (np.arange(B)[:, None], batch.action), -A[:, None] / B)
        _actor_backward(bundle, cache, dscores)
    return loss


def item_actor_loss(bundle: AgentBundle, batch: Batch, weights: np.ndarray,
                    accumulate: bool = True, values: tuple | None = None,
                    scores_cache: tuple | None = None) -> float:
    """Mean over batch and items of -A(s, i_k, w_k) * log pi(i_k|s).

    `values` optionally supplies precomputed (v_now, v_next) constants;
    `scores_cache` a precomputed (scores, cache) actor forward.
    """
    h = bundle.hyper
    B, K = batch.action.shape
    if weights.shape != (B, K):
        raise ValueError("weight matrix shape mismatch")
    v_now, v_next = values if values is not None else _advantage_inputs(bundle, batch)
    psi_w = credit.weighted_item_target(
        batch.rewards, weights, h.gamma, batch.done[:, None], v_next[:, None]
    )
    A = credit.item_advantage(psi_w, v_now[:, None], K)  # (B, K)
    if scores_cache is None:
        scores_cache = _actor_scores(bundle, batch.obs, need_cache=True)
    scores, cache = scores_cache
    logp = log_softmax(scores)
    chosen_logp = np.take_along_axis(logp, batch.action, axis=1)
    loss = float(np.mean(-A * chosen_logp))
    if accumulate:
        pi = np.exp(logp)
        coef = A.sum(axis=1) / (B * K)
        dscores = coef[:, None] * pi
        np.add.at(dscores, (np.arange(B)[:, None], batch.action), -A / (B * K))
        _actor_backward(bundle, cache, dscores)
    return loss


def weight_model_loss(bundle: AgentBundle, batch: Batch,
                      accumulate: bool = True, values: tuple | None = None,
                      actor_logp: np.ndarray | None = None) -> float:
    """Adversarial objective: the exact negation of the item actor loss,
    differentiable only through the weight model's shares.

    `values` optionally supplies precomputed (v_now, v_next) constants;
    `actor_logp` the (B, K) chosen-item log-probabilities (constants).
    """
    h = bundle.hyper
    B, K = batch.action.shape
    weights, wm_cache = weight_model_forward(bundle, batch, need_cache=True)
    v_now, v_next = values if values is not None else _advantage_inputs(bundle, batch)
    psi_w = credit.weighted_item_target(
        batch.rewards, weights, h.gamma, batch.done[:, None], v_next[:, None]
    )
    A = credit.item_advantage(psi_w, v_now[:, None], K)
    if actor_logp is None:
        scores, _ = _actor_scores(bundle, batch.obs)
        actor_logp = np.take_along_axis(log_softmax(scores), batch.action, axis=1)
    logp = actor_logp
    loss = float(np.mean(A * logp))
    if accumulate:
        future = h.gamma * (1.0 - batch.done)[:, None] * v_next[:, None]
        dweights = logp * future / (B * K)
        _weight_model_backward(bundle, batch, wm_cache, dweights)
    return loss


def _actor_backward(bundle: AgentBundle, cache, dscores: np.ndarray) -> None:
    store = bundle.stores["actor"]
    enc_cache, head_cache = cache
    dstate = policy_scores_backward(store, "", head_cache, dscores)
    encode_backward(store, "", bundle.enc_spec, enc_cache, dstate)


# -- baselines -----------------------------------------------------------


def slateq_loss(bundle: AgentBundle, batch: Batch, accumulate: bool = True,
                next_action: np.ndarray | None = None) -> float:
    """Per-item Q TD error with the next list chosen greedily by the
    online Q and evaluated by the target Q.

    `next_action` pins the next list explicitly (the target is a
    constant for the gradient, so finite-difference checks pass a fixed
    list to keep the argmax from flipping under perturbation).
    """
    h = bundle.hyper
    B, K = batch.action.shape
    store = bundle.stores["q"]
    e = bundle.enc_spec

    # target: greedy next list under online Q, values from target Q
    if next_action is None:
        pool_q_online = _slateq_pool_q(bundle, "q", batch.next_obs)  # (B, N)
        top = np.argpartition(-pool_q_online, K - 1, axis=1)[:, :K]
    else:
        top = next_action
    pool_q_target = _slateq_pool_q(bundle, "target_q", batch.next_obs)
    next_sum = np.take_along_axis(pool_q_target, top, axis=1).sum(axis=1)
    target = batch.rewards + (h.gamma / K) * ((1.0 - batch.done) * next_sum)[:, None]

    state, enc_cache = encode_state(store, "", e, batch.obs)
    item_vecs = store["item_emb"][batch.action]
    x = np.concatenate(
        [np.repeat(state[:, None, :], K, axis=1), item_vecs], axis=2
    )
    q, q_cache = mlp_forward(store, "q", bundle.q_spec, x)
    q = q[:, :, 0]
    diff = q - target
    loss = float(np.mean(diff**2))
    if accumulate:
        dq = 2.0 * diff / (B * K)
        dx = mlp_backward(store, "q", bundle.q_spec, q_cache, dq[:, :, None])
        ds = e.state_dim
        dstate = dx[:, :, :ds].sum(axis=1)
        d_items = dx[:, :, ds:]
        encode_backward(store, "", e, enc_cache, dstate)
        embedding_scatter(store, "item_emb", batch.action, d_items)
    return loss


def _mean_item_vec(store: ParameterStore, action: np.ndarray):
    vecs = store["item_emb"][action]  # (B, K, de)
    return vecs.mean(axis=1), vecs.shape[1]


def ddpg_losses(bundle: AgentBundle, batch: Batch, accumulate: bool = True):
    """Critic TD on Q(s, z) and actor -Q(s, pi(s)); the stored list is
    represented by the mean of its item embeddings."""
    h = bundle.hyper
    B, K = batch.action.shape
    R = batch.rewards.sum(axis=1)

    # critic side
    z_next, _ = _ddpg_z_from(bundle, "target_actor", batch.next_obs)
    q_next, _ = _q_forward(bundle, "target_critic", batch.next_obs, z_next)
    target = R + h.gamma * (1.0 - batch.done) * q_next
    z_now = bundle.stores["critic"]["item_emb"][batch.action].mean(axis=1)
    q_now, q_cache = _q_forward(bundle, "critic", batch.obs, z_now)
    diff = q_now - target
    critic = float(np.mean(diff**2))
    if accumulate:
        dz = _q_backward(bundle, "critic", q_cache, 2.0 * diff / B)
        embedding_scatter(
            bundle.stores["critic"],
            "item_emb",
            batch.action,
            np.repeat(dz[:, None, :] / K, K, axis=1),
        )

    # actor side: gradient flows through pi only
    z_pi, pi_cache = _ddpg_z_from(bundle, "actor", batch.obs)
    q_pi, q_pi_cache = _q_forward(bundle, "critic", batch.obs, z_pi)
    actor = float(np.mean(-q_pi))
    if accumulate:
        dz_actor = _q_backward(
            bundle, "critic", q_pi_cache, -np.ones(B) / B, accumulate=False
        )
        store = bundle.stores["actor"]
        enc_cache, mlp_cache = pi_cache
        dstate = mlp_backward(store, "pi", bundle.pi_spec, mlp_cache, dz_actor)
        encode_backward(store, "", bundle.enc_spec, enc_cache, dstate)
    return critic, actor


def supervision_loss(bundle: AgentBundle, batch: Batch,
                     accumulate: bool = True) -> float:
    """Mean binary cross entropy between sigmoid item scores and click
    labels over the K exposed items."""
    B, K = batch.action.shape
    scores, cache = _actor_scores(bundle, batch.obs, need_cache=True)
    s = np.take_along_axis(scores, batch.action, axis=1)
    y = batch.clicks
    # numerically stable BCE on logits
    loss = float(np.mean(np.maximum(s, 0.0) - s * y + np.log1p(np.exp(-np.abs(s)))))
    if accumulate:
        p = 1.0 / (1.0 + np.exp(-s))
        dsel = (p - y) / (B * K)
        dscores = np.zeros_like(scores)
        np.add.at(dscores, (np.arange(B)[:, None], batch.action), dsel)
        _actor_backward(bundle, cache, dscores)
    return loss


def hac_losses(bundle: AgentBundle, batch: Batch, accumulate: bool = True):
    """Critic TD on Q(s, g(a)), advantage-weighted list log-probability
    for the actor, hyper-action alignment, and item-wise supervision."""
    h = bundle.hyper
    B, K = batch.action.shape
    R = batch.rewards.sum(axis=1)
    e = bundle.enc_spec
    critic_store = bundle.stores["critic"]
    actor_store = bundle.stores["actor"]

    def g_forward(store, action):
        mean_vec = store["item_emb"][action].mean(axis=1)
        gz, g_cache = mlp_forward(store, "g", bundle.g_spec, mean_vec)
        return gz, (g_cache, action)

    # next action from the target actor's hyper-action, greedy top-K
    z_next, _ = _ddpg_z_from(bundle, "target_actor", batch.next_obs)
    scores_next = z_next @ bundle.stores["target_actor"]["item_emb"].T
    top = np.argpartition(-scores_next, K - 1, axis=1)[:, :K]
    gz_next, _ = g_forward(bundle.stores["target_critic"], top)
    q_next, _ = _q_forward(bundle, "target_critic", batch.next_obs, gz_next)
    target = R + h.gamma * (1.0 - batch.done) * q_next

    gz, g_cache = g_forward(critic_store, batch.action)
    q_now, q_cache = _q_forward(bundle, "critic", batch.obs, gz)
    diff = q_now - target
    critic = float(np.mean(diff**2))
    if accumulate:
        dz = _q_backward(bundle, "critic", q_cache, 2.0 * diff / B)
        gcache, action = g_cache
        dmean = mlp_backward(critic_store, "g", bundle.g_spec, gcache, dz)
        embedding_scatter(
            critic_store, "item_emb", action,
            np.repeat(dmean[:, None, :] / K, K, axis=1),
        )

    # advantage (constant for the actor)
    advantage = target - q_now  # A(s, Z) = Psi - Q(s, g(a))

    # actor: -A log pi(a|s) with scores from the hyper-action
    z_pi, pi_cache = _ddpg_z_from(bundle, "actor", batch.obs)
    scores = z_pi @ actor_store["item_emb"].T
    logp = log_softmax(scores)
    chosen_logp = np.take_along_axis(logp, batch.action, axis=1)
    actor = float(np.mean(-advantage * chosen_logp.sum(axis=1)))

    # hyper alignment toward the critic's inverse module output (constant)
    hyper = float(np.mean(np.sum((z_pi - gz) ** 2, axis=1)))

    # supervision BCE on the same scores
    s_sel = np.take_along_axis(scores, batch.action, axis=1)
    y = batch.clicks
    sup = float(
        np.mean(np.maximum(s_sel, 0.0) - s_sel * y + np.log1p(np.exp(-np.abs(s_sel))))
    )

    if accumulate:
        pi = np.exp(logp)
        dscores = (advantage[:, None] / B) * (K * pi)
        np.add.at(
            dscores, (np.arange(B)[:, None], batch.action), -advantage[:, None] / B
        )
        p = 1.0 / (1.0 + np.exp(-s_sel))
        np.add.at(
            dscores,
            (np.arange(B)[:, None], batch.action),
            h.hac_coef_supervision * (p - y) / (B * K),
        )
        # scores = z_pi @ E^T
        dz_total = dscores @ actor_store["item_emb"]
        actor_store.accumulate("item_emb", dscores.T @ z_pi)
        dz_total = dz_total + h.hac_coef_hyper * 2.0 * (z_pi - gz) / B
        enc_cache, mlp_cache = pi_cache
        dstate = mlp_backward(actor_store, "pi", bundle.pi_spec, mlp_cache, dz_total)
        encode_backward(actor_store, "", e, enc_cache, dstate)
    return critic, actor, hyper, sup


# -- training steps ------------------------------------------------------


def strategy_weights_for(batch: Batch, alpha: float) -> np.ndarray:
    """Click indicators are the credit values: the decomposition weights
    come from the binary click pattern, not the signed rewards."""
    return credit.reweight_strategy(batch.clicks, alpha)


def train_step(bundle: AgentBundle, buffer, history_len: int = 120) -> dict:
    """One full training step per the agent's algorithm; returns
    per-step diagnostics."""
    h = bundle.hyper
    transitions = buffer.sample(h.batch_size)
    batch = batchify(transitions, history_len)
    return train_step_on_batch(bundle, batch)


def train_step_on_batch(bundle: AgentBundle, batch: Batch) -> dict:
    h = bundle.hyper
    kind = h.kind
    diag: dict = {}

    if kind in ("a2c", "item_a2c", "item_a2c_w", "item_a2c_m"):
        # the critic forward values double as the (constant) advantage
        # inputs for the weight-model and actor objectives below
        vals: dict = {}
        if h.critic_item_td and kind != "a2c":
            w_for_critic = _actor_weights(bundle, batch)[0]
            c_loss = critic_item_td_loss(bundle, batch, w_for_critic,
                                         values_out=vals)
        else:
            c_loss = critic_loss(bundle, batch, values_out=vals)
        bundle.stores["critic"].adam_step(h.lr_critic)
        bundle.stores["target_critic"].soft_update_from(bundle.stores["critic"], h.rho)
        diag["critic_loss"] = c_loss
        values = (vals["v_now"], vals["v_next"])

        if kind == "a2c":
            a_loss = request_actor_loss(bundle, batch, values=values)
        else:
            # the actor's parameters are untouched by the critic and
            # weight-model steps, so one forward serves both objectives
            scores_cache = _actor_scores(bundle, batch.obs, need_cache=True)
            if kind == "item_a2c_m":
                chosen_logp = np.take_along_axis(
                    log_softmax(scores_cache[0]), batch.action, axis=1
                )
                w_loss = weight_model_loss(bundle, batch, values=values,
                                           actor_logp=chosen_logp)
                bundle.stores["weight"].adam_step(h.lr_weight)
                diag["weight_loss"] = w_loss
            weights, ref = _actor_weights(bundle, batch)
            a_loss = item_actor_loss(bundle, batch, weights, values=values,
                                     scores_cache=scores_cache)
            diag["weights"] = weights
            diag["strategy_weights_ref"] = ref
        bundle.stores["actor"].adam_step(h.lr_actor)
        diag["actor_loss"] = a_loss

    elif kind == "slateq":
        diag["critic_loss"] = slateq_loss(bundle, batch)
        bundle.stores["q"].adam_step(h.lr_critic)
        bundle.stores["target_q"].soft_update_from(bundle.stores["q"], h.rho)

    elif kind == "ddpg":
        c_loss, a_loss = ddpg_losses(bundle, batch)
        bundle.stores["critic"].adam_step(h.lr_critic)
        bundle.stores["actor"].adam_step(h.lr_actor)
        bundle.stores["target_critic"].soft_update_from(bundle.stores["critic"], h.rho)
        bundle.stores["target_actor"].soft_update_from(bundle.stores["actor"], h.rho)
        diag["critic_loss"], diag["actor_loss"] = c_loss, a_loss

    elif kind == "supervision":
        diag["actor_loss"] = supervision_loss(bundle, batch)
        bundle.stores["actor"].adam_step(h.lr_actor)

    elif kind == "hac":
        c_loss, a_loss, hy_loss, s_loss = hac_losses(bundle, batch)
        bundle.stores["critic"].adam_step(h.lr_critic)
        bundle.stores["actor"].adam_step(h.lr_actor)
        bundle.stores["target_critic"].soft_update_from(bundle.stores["critic"], h.rho)
        bundle.stores["target_actor"].soft_update_from(bundle.stores["actor"], h.rho)
        diag.update(
            critic_loss=c_loss, actor_loss=a_loss, hyper_loss=hy_loss,
            supervision_loss=s_loss,
        )
    else:  # pragma: no cover
        raise ValueError(kind)
    return diag


def _actor_weights(bundle: AgentBundle, batch: Batch):
    """Decomposition weights for the actor update plus the reward-based
    (alpha=1) reference used by the similarity diagnostics."""
    kind = bundle.hyper.kind
    ref = strategy_weights_for(batch, 1.0)
    if kind == "item_a2c":
        B, K = batch.action.shape
        return np.full((B, K), 1.0 / K), ref
    if kind == "item_a2c_w":
        return strategy_weights_for(batch, bundle.hyper.alpha), ref
    if kind == "item_a2c_m":
        weights, _ = weight_model_forward(bundle, batch)
        return weights, ref
    raise ValueError(kind)
