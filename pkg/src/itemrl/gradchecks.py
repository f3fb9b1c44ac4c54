"""Finite-difference verification of every loss family's analytic
gradients, on small random instances.

Shared by the CLI `gradcheck` command, the test suite, and the
acceptance gate.
"""

from __future__ import annotations

import numpy as np

from . import agents
from .agents import AgentBundle, AgentHyper, Batch
from .networks import ObsBatch
from .nn import grad_check

TINY = dict(item_dim=6, user_dim=3, user_table=8, state_dim=5, hidden=7,
            init_scale=0.3)

LOSS_FAMILIES = [
    "critic_td",        # list-level critic TD
    "request_actor",    # request-level advantage actor
    "item_actor",       # item-decomposed actor with reweighting
    "weight_model",     # adversarial weight-model objective
    "critic_item_td",   # config-gated item-decomposed critic TD
    "slateq",
    "ddpg_critic",
    "ddpg_actor",
    "supervision",
    "hac_critic",
    "hac_actor",
]


def make_tiny_bundle(kind: str, seed: int, n_items: int = 20, k: int = 3) -> AgentBundle:
    hyper = AgentHyper(kind=kind, **TINY)
    return AgentBundle(hyper, n_items=n_items, k=k, seed=seed)


def make_random_batch(bundle: AgentBundle, batch_size: int = 4, seed: int = 0,
                      history_len: int = 12) -> Batch:
    rng = np.random.default_rng(seed)
    B, K, N = batch_size, bundle.k, bundle.n_items

    def rand_obs():
        uid = rng.integers(0, 1000, size=B)
        items = rng.integers(0, N, size=(B, history_len))
        clicks = rng.integers(0, 2, size=(B, history_len)).astype(np.float64)
        mask = np.zeros((B, history_len))
        for b in range(B):
            mask[b, : rng.integers(0, history_len + 1)] = 1.0
        return ObsBatch(uid=uid, items=items, clicks=clicks * mask, mask=mask)

    action = np.stack([rng.choice(N, size=K, replace=False) for _ in range(B)])
    clicks = rng.integers(0, 2, size=(B, K)).astype(np.float64)
    rewards = np.where(clicks == 1, 1.0, -0.2)
    done = rng.integers(0, 2, size=B).astype(np.float64)
    return Batch(obs=rand_obs(), next_obs=rand_obs(), action=action,
                 clicks=clicks, rewards=rewards, done=done)


def check_family(family: str, seed: int = 0, max_entries: int = 12):
    """Run one finite-difference comparison; returns max relative error."""
    rng = np.random.default_rng(seed + 99)

    if family in ("critic_td", "request_actor", "item_actor", "weight_model",
                  "critic_item_td"):
        kind = "item_a2c_m" if family == "weight_model" else "item_a2c_w"
        bundle = make_tiny_bundle(kind, seed)
        batch = make_random_batch(bundle, seed=seed)
        weights = agents.strategy_weights_for(batch, alpha=0.7)
        if family == "critic_td":
            stores = {"critic": bundle.stores["critic"]}
            fn = lambda s: agents.critic_loss(bundle, batch)
        elif family == "critic_item_td":
            stores = {"critic": bundle.stores["critic"]}
            fn = lambda s: agents.critic_item_td_loss(bundle, batch, weights)
        elif family == "request_actor":
            stores = {"actor": bundle.stores["actor"]}
            fn = lambda s: agents.request_actor_loss(bundle, batch)
        elif family == "item_actor":
            stores = {"actor": bundle.stores["actor"]}
            fn = lambda s: agents.item_actor_loss(bundle, batch, weights)
        else:  # weight_model
            stores = {"weight": bundle.stores["weight"]}
            fn = lambda s: agents.weight_model_loss(bundle, batch)

    elif family == "slateq":
        bundle = make_tiny_bundle("slateq", seed)
        batch = make_random_batch(bundle, seed=seed)
        # the target is a constant: pin the greedy next list so FD
        # perturbations cannot flip the argmax
        pool_q = agents._slateq_pool_q(bundle, "q", batch.next_obs)
        top = np.argpartition(-pool_q, bundle.k - 1, axis=1)[:, : bundle.k]
        stores = {"q": bundle.stores["q"]}
        fn = lambda s: agents.slateq_loss(bundle, batch, next_action=top)

    elif family in ("ddpg_critic", "ddpg_actor"):
        bundle = make_tiny_bundle("ddpg", seed)
        batch = make_random_batch(bundle, seed=seed)
        idx = 0 if family == "ddpg_critic" else 1
        store_name = "critic" if family == "ddpg_critic" else "actor"
        stores = {store_name: bundle.stores[store_name]}
        fn = lambda s: agents.ddpg_losses(bundle, batch)[idx]

    elif family == "supervision":
        bundle = make_tiny_bundle("supervision", seed)
        batch = make_random_batch(bundle, seed=seed)
        stores = {"actor": bundle.stores["actor"]}
        fn = lambda s: agents.supervision_loss(bundle, batch)

    elif family in ("hac_critic", "hac_actor"):
        bundle = make_tiny_bundle("hac", seed)
        batch = make_random_batch(bundle, seed=seed)
        coef_h = bundle.hyper.hac_coef_hyper
        coef_s = bundle.hyper.hac_coef_supervision
        if family == "hac_critic":
            stores = {"critic": bundle.stores["critic"]}
            fn = lambda s: agents.hac_losses(bundle, batch)[0]
        else:
            stores = {"actor": bundle.stores["actor"]}

            def fn(s):
                _, a, hy, sup = agents.hac_losses(bundle, batch)
                return a + coef_h * hy + coef_s * sup

    else:
        raise ValueError(f"unknown loss family {family!r}")

    max_rel, _ = grad_check(fn, stores, max_entries_per_param=max_entries, rng=rng)
    return max_rel


def check_all(n_instances: int = 1, tol: float = 1e-4, max_entries: int = 12,
              report=print):
    """Check every family on `n_instances` random instances each.
    Returns True iff everything passes at `tol`."""
    all_ok = True
    for family in LOSS_FAMILIES:
        worst = 0.0
        for seed in range(n_instances):
            worst = max(worst, check_family(family, seed=seed,
                                            max_entries=max_entries))
        ok = worst <= tol
        all_ok &= ok
        if report is not None:
            report(f"{'PASS' if ok else 'FAIL'} {family:15s} "
                   f"max_rel_err={worst:.3e} (tol {tol:g})")
    return all_ok
