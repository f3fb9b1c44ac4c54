"""State encoder and network heads used by the agents.

The encoder replaces a heavyweight sequence model with click-gated mean
pooling over the recent history: the state is an MLP over
[user embedding, mean of clicked-item embeddings, mean of all history
embeddings], with empty pools contributing zero vectors.

Every head comes as a (forward, backward) pair operating on a
ParameterStore; backward accumulates gradients for all reachable
parameters and returns the gradient w.r.t. its input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .nn import (
    NetworkSpec,
    ParameterStore,
    embedding_scatter,
    init_store,
    mlp_backward,
    mlp_forward,
    mlp_layout,
)


@dataclass(frozen=True)
class EncoderSpec:
    n_items: int
    item_dim: int = 32
    user_dim: int = 8
    user_table: int = 512
    state_dim: int = 32
    hidden: int = 64

    @property
    def mlp_spec(self) -> NetworkSpec:
        return NetworkSpec(
            in_dim=self.user_dim + 2 * self.item_dim,
            hidden=(self.hidden,),
            out_dim=self.state_dim,
        )

    def layout(self, prefix: str) -> dict:
        layout = {
            f"{prefix}item_emb": (self.n_items, self.item_dim),
            f"{prefix}user_emb": (self.user_table, self.user_dim),
        }
        layout.update(mlp_layout(f"{prefix}enc", self.mlp_spec))
        return layout


@dataclass
class ObsBatch:
    """Padded history arrays for a batch of observations."""

    uid: np.ndarray  # (B,)
    items: np.ndarray  # (B, H) padded with 0
    clicks: np.ndarray  # (B, H) float 0/1
    mask: np.ndarray  # (B, H) float 0/1


def batch_observations(observations, history_len: int) -> ObsBatch:
    B = len(observations)
    H = history_len
    uid = np.zeros(B, dtype=np.int64)
    items = np.zeros((B, H), dtype=np.int64)
    clicks = np.zeros((B, H))
    mask = np.zeros((B, H))
    for b, o in enumerate(observations):
        uid[b] = o.user_id
        L = min(len(o.hist_items), H)
        if L:
            items[b, :L] = o.hist_items[-L:]
            clicks[b, :L] = o.hist_clicks[-L:]
            mask[b, :L] = 1.0
    return ObsBatch(uid=uid, items=items, clicks=clicks, mask=mask)


def encode_state(store: ParameterStore, prefix: str, spec: EncoderSpec,
                 obs: ObsBatch):
    """Deterministic state vectors for a batch.  Returns (state, cache)."""
    uid_idx = obs.uid % spec.user_table
    ue = store[f"{prefix}user_emb"][uid_idx]  # (B, du)
    table = store[f"{prefix}item_emb"]
    if np.any(obs.items >= table.shape[0]):
        raise IndexError("item id out of catalog range")
    ev = table[obs.items]  # (B, H, de)

    click_w = obs.clicks * obs.mask
    cnt_c = np.maximum(click_w.sum(axis=1, keepdims=True), 1.0)
    pooled_c = np.einsum("bh,bhd->bd", click_w, ev) / cnt_c
    cnt_a = np.maximum(obs.mask.sum(axis=1, keepdims=True), 1.0)
    pooled_a = np.einsum("bh,bhd->bd", obs.mask, ev) / cnt_a

    x = np.concatenate([ue, pooled_c, pooled_a], axis=1)
    state, mlp_cache = mlp_forward(store, f"{prefix}enc", spec.mlp_spec, x)
    cache = (obs, uid_idx, click_w, cnt_c, cnt_a, mlp_cache)
    return state, cache


def encode_backward(store: ParameterStore, prefix: str, spec: EncoderSpec,
                    cache, dstate: np.ndarray) -> None:
    obs, uid_idx, click_w, cnt_c, cnt_a, mlp_cache = cache
    dx = mlp_backward(store, f"{prefix}enc", spec.mlp_spec, mlp_cache, dstate)
    du = spec.user_dim
    de = spec.item_dim
    due, dpc, dpa = dx[:, :du], dx[:, du : du + de], dx[:, du + de :]

    embedding_scatter(store, f"{prefix}user_emb", uid_idx, due)
    # per-slot weight of each history embedding in the two pooled means
    kernels.pooled_history_scatter(
        store.grads[f"{prefix}item_emb"], obs.items,
        click_w / cnt_c, obs.mask / cnt_a, dpc, dpa,
    )


# -- score head: dot-product item selector -------------------------------


def score_layout(prefix: str, spec: EncoderSpec) -> dict:
    return {
        f"{prefix}proj_W": (spec.state_dim, spec.item_dim),
        f"{prefix}proj_b": (spec.item_dim,),
    }


def policy_scores(store: ParameterStore, prefix: str, spec: EncoderSpec,
                  state: np.ndarray):
    """score(i|s) = <proj(state), item_emb_i> over the full pool."""
    p = state @ store[f"{prefix}proj_W"] + store[f"{prefix}proj_b"]
    scores = p @ store[f"{prefix}item_emb"].T  # (B, N)
    return scores, (state, p)


def policy_scores_backward(store: ParameterStore, prefix: str, cache,
                           dscores: np.ndarray) -> np.ndarray:
    state, p = cache
    E = store[f"{prefix}item_emb"]
    dp = dscores @ E
    store.accumulate(f"{prefix}item_emb", dscores.T @ p)
    store.accumulate(f"{prefix}proj_W", state.T @ dp)
    store.accumulate(f"{prefix}proj_b", dp.sum(axis=0))
    return dp @ store[f"{prefix}proj_W"].T


def log_softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def softmax(scores: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(scores))


# -- builders ------------------------------------------------------------


def build_encoder_head_store(rng, spec: EncoderSpec, prefix_heads: dict,
                             scale: float = 0.1) -> ParameterStore:
    """Store with one encoder (unprefixed names within the store) plus
    arbitrary extra head layouts."""
    layout = spec.layout("")
    for head_layout in prefix_heads.values():
        layout.update(head_layout)
    return init_store(rng, layout, scale=scale)
