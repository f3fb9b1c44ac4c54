"""Target values, advantages, and future-impact reweighting.

The list-level TD target splits across the K items of a request: each
item keeps its own immediate reward and receives a share w_k of the
discounted next-state value.  Any nonnegative share vector summing to 1
reconstructs the list-level target exactly when summed over the list.
"""

from __future__ import annotations

import numpy as np


def critic_target(R, gamma, d, v_next):
    """List-level TD target: R + gamma * (1 - d) * V(s')."""
    return R + gamma * (1.0 - d) * v_next


def request_advantage(R, gamma, d, v_next, v_now):
    """Target minus the current-state baseline."""
    return critic_target(R, gamma, d, v_next) - v_now


def item_target(r, gamma, d, v_next, k: int):
    """Equal-split item target: r_k + (1/K) * gamma * (1 - d) * V(s')."""
    if k < 1:
        raise ValueError("K must be >= 1")
    return r + gamma * (1.0 - d) * v_next / k


def reweight_strategy(credits, alpha: float) -> np.ndarray:
    """Future-impact shares interpolating between an equal split
    (alpha=0) and a split proportional to per-item credit (alpha=1).

    `credits` is a (..., K) array of nonnegative per-item credit values
    (click indicators in this package).  Unnormalized weights
    alpha * credit + (1 - alpha) are clamped at zero and renormalized to
    sum 1; if every unnormalized weight is <= 0 the split falls back to
    uniform 1/K.
    """
    c = np.asarray(credits, dtype=np.float64)
    if c.shape[-1] == 0:
        raise ValueError("K must be >= 1")
    k = c.shape[-1]
    unnorm = alpha * c + (1.0 - alpha)
    clamped = np.maximum(unnorm, 0.0)
    total = clamped.sum(axis=-1, keepdims=True)
    uniform = np.full_like(c, 1.0 / k)
    with np.errstate(invalid="ignore", divide="ignore"):
        weights = np.where(total > 0.0, clamped / np.where(total > 0, total, 1.0), uniform)
    return weights


def weighted_item_target(r, w, gamma, d, v_next):
    """Reweighted item target: r_k + w_k * gamma * (1 - d) * V(s')."""
    return r + w * gamma * (1.0 - d) * v_next


def item_advantage(psi_w, v_now, k: int):
    """Item advantage against the per-item baseline V(s)/K."""
    return psi_w - v_now / k
