"""Synthetic, seedable sessionized user environment.

Each simulated user carries a private unit-norm preference vector; items
carry private unit-norm latents.  Clicks are independent Bernoulli draws
with probability logistic(b + beta * <pref, latent>).  Clicking drifts
the preference toward the clicked items; misses burn patience, and the
session ends when patience runs out or the depth cap is hit.  Agents
only ever see item ids and click bits, never the latents.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .types import CLICK_DTYPE, ITEM_DTYPE, Feedback, Observation, make_rec_list


@dataclass
class EnvConfig:
    n_items: int = 1000
    d_env: int = 16
    k: int = 6
    max_depth: int = 20
    batch_users: int = 64
    click_bias: float = -3.0
    click_scale: float = 9.0
    drift: float = 0.1
    patience_init: float = 20.0
    patience_miss_cost: float = 0.5
    reward_click: float = 1.0
    reward_miss: float = -0.2
    history_len: int = 120
    seed: int = 0

    def validate(self) -> "EnvConfig":
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.reward_click <= self.reward_miss:
            raise ValueError("reward_click must exceed reward_miss")
        if self.n_items < self.k:
            raise ValueError("catalog smaller than list size")
        return self


def _unit_rows(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    v = rng.standard_normal((n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@dataclass
class ItemCatalog:
    latent: np.ndarray  # (N, d_env) unit rows, environment-private

    @property
    def n_items(self) -> int:
        return len(self.latent)


@dataclass
class SessionState:
    user_id: int
    pref: np.ndarray  # unit vector, environment-private
    patience: float
    depth: int
    hist_items: np.ndarray  # (H,) ring storage, chronological prefix valid
    hist_clicks: np.ndarray
    hist_len: int
    done: bool = False


def logistic(x):
    return 1.0 / (1.0 + np.exp(-x))


def click_probability(cfg: EnvConfig, state: SessionState, catalog: ItemCatalog,
                      item: int) -> float:
    dot = float(state.pref @ catalog.latent[item])
    return float(logistic(cfg.click_bias + cfg.click_scale * dot))


def observation_of(cfg: EnvConfig, state: SessionState) -> Observation:
    L = state.hist_len
    return Observation(
        user_id=state.user_id,
        hist_items=state.hist_items[:L].copy(),
        hist_clicks=state.hist_clicks[:L].copy(),
    )


class UserEnv:
    """Batched environment stepping `batch_users` sessions in a fixed
    deterministic order on one thread."""

    def __init__(self, cfg: EnvConfig):
        self.cfg = cfg.validate()
        self._rng = np.random.default_rng(cfg.seed)
        self.catalog = ItemCatalog(latent=_unit_rows(self._rng, cfg.n_items, cfg.d_env))
        self._next_user_id = 0
        self.sessions: list[SessionState] = []

    def _new_session(self) -> SessionState:
        cfg = self.cfg
        uid = self._next_user_id
        self._next_user_id += 1
        pref = _unit_rows(self._rng, 1, cfg.d_env)[0]
        return SessionState(
            user_id=uid,
            pref=pref,
            patience=cfg.patience_init,
            depth=0,
            hist_items=np.zeros(cfg.history_len, dtype=ITEM_DTYPE),
            hist_clicks=np.zeros(cfg.history_len, dtype=CLICK_DTYPE),
            hist_len=0,
        )

    def reset(self) -> list[Observation]:
        self.sessions = [self._new_session() for _ in range(self.cfg.batch_users)]
        return [observation_of(self.cfg, s) for s in self.sessions]

    def replace_session(self, slot: int) -> Observation:
        """A finished user's slot is filled by a freshly drawn user."""
        self.sessions[slot] = self._new_session()
        return observation_of(self.cfg, self.sessions[slot])

    def step_session(self, state: SessionState, action) -> tuple[Feedback, bool]:
        """Advance one session by one request.  Mutates `state`."""
        cfg = self.cfg
        if state.done:
            raise RuntimeError("cannot step a finished session")
        items = make_rec_list(action, n_items=cfg.n_items)
        if len(items) != cfg.k:
            raise ValueError(f"action length {len(items)} != K={cfg.k}")

        lat = self.catalog.latent[items]  # (K, d)
        p = logistic(cfg.click_bias + cfg.click_scale * (lat @ state.pref))
        clicks = (self._rng.random(cfg.k) < p).astype(CLICK_DTYPE)
        rewards = np.where(clicks == 1, cfg.reward_click, cfg.reward_miss)

        # preference drift toward clicked items, norm restored
        if clicks.any():
            drifted = state.pref + cfg.drift * lat[clicks == 1].sum(axis=0)
            state.pref = drifted / np.linalg.norm(drifted)

        # history append (newest last, oldest dropped beyond the window)
        H = cfg.history_len
        L = state.hist_len
        if L + cfg.k <= H:
            state.hist_items[L : L + cfg.k] = items
            state.hist_clicks[L : L + cfg.k] = clicks
            state.hist_len = L + cfg.k
        else:
            keep = H - cfg.k
            state.hist_items[:keep] = state.hist_items[L - keep : L]
            state.hist_clicks[:keep] = state.hist_clicks[L - keep : L]
            state.hist_items[keep:] = items
            state.hist_clicks[keep:] = clicks
            state.hist_len = H

        misses = int(cfg.k - clicks.sum())
        state.patience -= 1.0 + cfg.patience_miss_cost * misses
        state.depth += 1
        done = state.patience <= 0.0 or state.depth >= cfg.max_depth
        state.done = done
        return Feedback(clicks=clicks, rewards=rewards.astype(np.float64)), done


def oracle_action(cfg: EnvConfig, state: SessionState, catalog: ItemCatalog) -> np.ndarray:
    """Cheat policy for tests: top-K items by private preference alignment."""
    scores = catalog.latent @ state.pref
    top = np.argpartition(-scores, cfg.k - 1)[: cfg.k]
    return top[np.argsort(-scores[top])]
