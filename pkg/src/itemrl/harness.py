"""Online training orchestration, evaluation metrics, multi-seed
aggregation, and parameter sweeps.

Each training step performs one batched rollout over the environment's
active sessions, pushes the resulting request transitions into the
replay buffer, runs one training step, and emits one metrics record.
Window statistics cover only sessions that terminated within the
window (default: the last 100 steps), matching the evaluation protocol
of reporting the final-window mean of undiscounted session totals.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .agents import AgentBundle, AgentHyper, select_list, train_step
from .env import EnvConfig, UserEnv, observation_of
from .networks import batch_observations
from .types import Feedback, ReplayBuffer, Transition

CURVE_COLUMNS = [
    "step",
    "mean_reward",
    "max_reward",
    "min_reward",
    "mean_depth",
    "max_depth",
    "min_depth",
    "reward_variance",
    "critic_loss",
    "actor_loss",
    "weight_loss",
    "cosine_sim",
    "pearson",
]


@dataclass
class RunConfig:
    env: EnvConfig = field(default_factory=EnvConfig)
    agent: AgentHyper = field(default_factory=AgentHyper)
    steps: int = 5000
    eval_window: int = 100
    buffer_capacity: int = 100_000
    seed: int = 0

    def validate(self) -> "RunConfig":
        self.env.validate()
        self.agent.validate()
        if self.eval_window > self.steps:
            raise ValueError("evaluation window exceeds total steps")
        return self


def session_total_reward(feedback_trace) -> float:
    """Undiscounted session total: per-request mean item reward summed
    over the session's requests."""
    if not feedback_trace:
        raise ValueError("empty session trace")
    return float(sum(np.mean(fb.rewards) for fb in feedback_trace))


def weight_similarity(model_weights: np.ndarray, strategy_weights: np.ndarray):
    """Row-mean cosine similarity plus entry-pooled Pearson correlation.

    Zero-norm rows are skipped from the cosine mean; their count is
    returned alongside the two statistics.
    """
    u = np.asarray(model_weights, dtype=np.float64)
    v = np.asarray(strategy_weights, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError("weight matrices must share a shape")
    nu = np.linalg.norm(u, axis=1)
    nv = np.linalg.norm(v, axis=1)
    ok = (nu > 0) & (nv > 0)
    skipped = int((~ok).sum())
    cosine = float(np.mean((u[ok] * v[ok]).sum(axis=1) / (nu[ok] * nv[ok]))) if ok.any() else math.nan
    uf, vf = u.reshape(-1), v.reshape(-1)
    su, sv = uf.std(), vf.std()
    if su > 0 and sv > 0:
        pearson = float(np.mean((uf - uf.mean()) * (vf - vf.mean())) / (su * sv))
    else:
        pearson = math.nan
    return cosine, pearson, skipped


class _SessionTracker:
    """Per-slot accumulation of the running session totals."""

    def __init__(self, n_slots: int):
        self.reward = [0.0] * n_slots
        self.depth = [0] * n_slots

    def update(self, slot: int, fb: Feedback) -> None:
        self.reward[slot] += float(np.mean(fb.rewards))
        self.depth[slot] += 1

    def pop(self, slot: int) -> tuple[float, int]:
        out = (self.reward[slot], self.depth[slot])
        self.reward[slot] = 0.0
        self.depth[slot] = 0
        return out


def run_training(config: RunConfig, oracle: bool = False, progress=None):
    """Train one agent online.  Returns (records, summary).

    `oracle` swaps the learned policy for a cheat policy that reads the
    environment's private latents (test-only diagnostic); no training
    happens in that mode.
    """
    config.validate()
    seed = config.seed
    env_cfg = replace(config.env, seed=config.env.seed + 7919 * seed)
    env = UserEnv(env_cfg)
    bundle = AgentBundle(config.agent, n_items=env_cfg.n_items, k=env_cfg.k,
                         seed=seed + 1)
    buffer = ReplayBuffer(capacity=config.buffer_capacity, seed=seed + 2)
    act_rng = np.random.default_rng(seed + 3)

    env.reset()
    tracker = _SessionTracker(env_cfg.batch_users)
    finished: deque = deque()  # (step, total_reward, depth)
    records: list[dict] = []
    H = env_cfg.history_len

    from .env import oracle_action

    for step in range(1, config.steps + 1):
        obs_list = [observation_of(env_cfg, s) for s in env.sessions]
        if oracle:
            items = np.stack(
                [oracle_action(env_cfg, s, env.catalog) for s in env.sessions]
            )
        else:
            obs_batch = batch_observations(obs_list, H)
            items, _ = select_list(bundle, obs_batch, mode="sample", rng=act_rng,
                                   history_len=H)
        for slot in range(env_cfg.batch_users):
            state = env.sessions[slot]
            fb, done = env.step_session(state, items[slot])
            next_obs = observation_of(env_cfg, state)
            buffer.push(
                Transition(obs=obs_list[slot], action=items[slot].copy(),
                           feedback=fb, next_obs=next_obs, done=done)
            )
            tracker.update(slot, fb)
            if done:
                total, depth = tracker.pop(slot)
                finished.append((step, total, depth))
                env.replace_session(slot)

        diag = {}
        if not oracle and len(buffer) >= config.agent.batch_size:
            diag = train_step(bundle, buffer, history_len=H)
            for key in ("critic_loss", "actor_loss", "weight_loss"):
                val = diag.get(key)
                if val is not None and not math.isfinite(val):
                    raise FloatingPointError(
                        f"non-finite {key}={val} at step {step}; aborting run"
                    )

        while finished and finished[0][0] <= step - config.eval_window:
            finished.popleft()
        rec = _metrics_record(step, finished, diag)
        records.append(rec)
        if progress is not None:
            progress(step, rec)

    summary = summarize(config, records, finished)
    return records, summary, bundle


def _metrics_record(step: int, finished, diag: dict) -> dict:
    rec = dict.fromkeys(CURVE_COLUMNS)
    rec["step"] = step
    if finished:
        rewards = np.array([f[1] for f in finished])
        depths = np.array([f[2] for f in finished])
        rec.update(
            mean_reward=float(rewards.mean()),
            max_reward=float(rewards.max()),
            min_reward=float(rewards.min()),
            mean_depth=float(depths.mean()),
            max_depth=float(depths.max()),
            min_depth=float(depths.min()),
            reward_variance=float(rewards.var()),
        )
    for key in ("critic_loss", "actor_loss", "weight_loss"):
        if key in diag:
            rec[key] = float(diag[key])
    if "weights" in diag:
        cos, pea, _ = weight_similarity(diag["weights"], diag["strategy_weights_ref"])
        rec["cosine_sim"] = cos
        rec["pearson"] = pea
    return rec


def summarize(config: RunConfig, records, finished) -> dict:
    rewards = np.array([f[1] for f in finished]) if finished else np.array([np.nan])
    depths = np.array([f[2] for f in finished]) if finished else np.array([np.nan])
    return {
        "config": config_to_dict(config),
        "n_sessions": len(finished),
        "mean_reward": float(rewards.mean()),
        "max_reward": float(rewards.max()),
        "min_reward": float(rewards.min()),
        "mean_depth": float(depths.mean()),
        "max_depth": float(depths.max()),
        "min_depth": float(depths.min()),
        "reward_variance": float(rewards.var()),
    }


def config_to_dict(config: RunConfig) -> dict:
    return {
        "env": asdict(config.env),
        "agent": asdict(config.agent),
        "steps": config.steps,
        "eval_window": config.eval_window,
        "buffer_capacity": config.buffer_capacity,
        "seed": config.seed,
    }


# -- artifacts -----------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float) and math.isnan(x):
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_curve_csv(records, path) -> None:
    with open(path, "w") as f:
        f.write(",".join(CURVE_COLUMNS) + "\n")
        for rec in records:
            f.write(",".join(_fmt(rec[c]) for c in CURVE_COLUMNS) + "\n")


def write_summary_json(summaries, aggregate, path) -> None:
    with open(path, "w") as f:
        json.dump({"per_seed": summaries, "aggregate": aggregate}, f, indent=2)


# -- multi-seed aggregation and sweeps -----------------------------------

SUMMARY_METRICS = [
    "mean_reward", "max_reward", "min_reward",
    "mean_depth", "max_depth", "min_depth", "reward_variance",
]


def aggregate_seeds(summaries: list[dict]) -> dict:
    """Across-seed statistics of the per-run window aggregates.
    Std uses the population convention."""
    if not summaries:
        raise ValueError("need at least one summary")
    out = {}
    for metric in SUMMARY_METRICS:
        vals = np.array([s[metric] for s in summaries], dtype=np.float64)
        out[metric] = {
            "mean": float(vals.mean()),
            "std": float(vals.std()),
            "max": float(vals.max()),
            "min": float(vals.min()),
        }
    return out


def run_seeds(config: RunConfig, seeds, progress=None):
    """Run one configuration across seeds; returns per-seed summaries,
    the aggregate table row, and the per-seed record streams."""
    summaries, streams = [], []
    for s in seeds:
        cfg = replace(config, seed=int(s))
        records, summary, _ = run_training(cfg, progress=progress)
        summaries.append(summary)
        streams.append(records)
    return summaries, aggregate_seeds(summaries), streams


def sweep(config: RunConfig, parameter: str, values, seeds):
    """Full cross of (value x seed) runs.  Per-run failures are recorded
    and the sweep continues.  Returns table rows."""
    if parameter not in ("alpha", "k"):
        raise ValueError("sweep parameter must be 'alpha' or 'k'")
    if not list(values):
        raise ValueError("empty sweep value list")
    rows = []
    run_rows = []
    for value in values:
        per_seed = []
        failures = []
        for s in seeds:
            cfg = replace(config, seed=int(s))
            if parameter == "alpha":
                cfg = replace(cfg, agent=replace(config.agent, alpha=float(value)))
            else:
                cfg = replace(cfg, env=replace(config.env, k=int(value)))
            try:
                _, summary, _ = run_training(cfg)
                per_seed.append(summary)
                run_rows.append(
                    {"parameter": parameter, "value": value, "seed": int(s),
                     "mean_reward": summary["mean_reward"],
                     "mean_depth": summary["mean_depth"]}
                )
            except Exception as exc:  # keep sweeping past individual failures
                failures.append(f"seed {s}: {exc}")
        row = {"parameter": parameter, "value": value,
               "n_ok": len(per_seed), "failures": "; ".join(failures)}
        if per_seed:
            agg = aggregate_seeds(per_seed)
            for metric in ("mean_reward", "mean_depth"):
                row[f"{metric}_mean"] = agg[metric]["mean"]
                row[f"{metric}_std"] = agg[metric]["std"]
            row["max_reward"] = agg["max_reward"]["mean"]
            row["min_reward"] = agg["min_reward"]["mean"]
            row["max_depth"] = agg["max_depth"]["mean"]
            row["min_depth"] = agg["min_depth"]["mean"]
        rows.append(row)
    return rows, run_rows


SWEEP_COLUMNS = [
    "parameter", "value", "n_ok",
    "mean_reward_mean", "mean_reward_std", "max_reward", "min_reward",
    "mean_depth_mean", "mean_depth_std", "max_depth", "min_depth",
    "failures",
]


def write_sweep_csv(rows, path) -> None:
    with open(path, "w") as f:
        f.write(",".join(SWEEP_COLUMNS) + "\n")
        for row in rows:
            f.write(",".join(_fmt(row.get(c)) for c in SWEEP_COLUMNS) + "\n")


SWEEP_RUN_COLUMNS = ["parameter", "value", "seed", "mean_reward", "mean_depth"]


def write_sweep_runs_csv(run_rows, path) -> None:
    """One row per (value, seed) run; the per-value distributions feed
    box-style ablation figures downstream."""
    with open(path, "w") as f:
        f.write(",".join(SWEEP_RUN_COLUMNS) + "\n")
        for row in run_rows:
            f.write(",".join(_fmt(row.get(c)) for c in SWEEP_RUN_COLUMNS) + "\n")
