"""Command-line entry points: train, sweep, gradcheck, weights, eval."""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import config as cfgmod
from . import credit, gradchecks, harness
from .agents import AGENT_KINDS, AgentBundle, select_list
from .config import ConfigError
from .env import UserEnv, observation_of
from .networks import batch_observations


def _run_id(settings, seed: int, kind: str) -> str:
    digest = hashlib.sha256(
        (cfgmod.serialize_config(settings) + f"|seed={seed}").encode()
    ).hexdigest()[:12]
    return f"{kind}_s{seed}_{digest}"


def _prepare_out_dir(root: str, run_id: str, force: bool) -> str:
    path = os.path.join(root, run_id)
    if os.path.exists(path) and os.listdir(path) and not force:
        raise ConfigError(
            f"output {path} already exists; pass --force to overwrite"
        )
    os.makedirs(path, exist_ok=True)
    return path


def _apply_overrides(settings, args) -> None:
    if getattr(args, "agent", None):
        settings["agent"]["kind"] = args.agent
    if getattr(args, "alpha", None) is not None:
        settings["agent"]["alpha"] = args.alpha
    if getattr(args, "steps", None) is not None:
        settings["training"]["steps"] = args.steps
        settings["training"]["eval_window"] = min(
            int(settings["training"]["eval_window"]), args.steps
        )
    if getattr(args, "out", None):
        settings["output"]["dir"] = args.out
    if getattr(args, "force", False):
        settings["output"]["force"] = True


def cmd_train(args) -> int:
    settings = cfgmod.load_config(args.config)
    _apply_overrides(settings, args)
    seed = args.seed if args.seed is not None else cfgmod.seeds_from_settings(settings)[0]
    run_cfg = cfgmod.settings_to_run_config(settings, seed=seed)
    run_id = _run_id(settings, seed, run_cfg.agent.kind)
    out = _prepare_out_dir(cfgmod.output_dir(settings), run_id,
                           bool(settings["output"]["force"]))

    records, summary, bundle = harness.run_training(run_cfg)
    harness.write_curve_csv(records, os.path.join(out, "curve.csv"))
    harness.write_summary_json(
        [summary], harness.aggregate_seeds([summary]),
        os.path.join(out, "summary.json"),
    )
    bundle.save(os.path.join(out, "checkpoint"))
    print(f"run {run_id}: mean_reward={summary['mean_reward']:.4f} "
          f"mean_depth={summary['mean_depth']:.4f} -> {out}")
    return 0


def cmd_sweep(args) -> int:
    settings = cfgmod.load_config(args.config)
    _apply_overrides(settings, args)
    values = [float(v) for v in args.values.split(",") if v.strip() != ""]
    if not values:
        raise ConfigError("empty --values list")
    if args.param == "k":
        values = [int(v) for v in values]
    seeds = (
        list(range(args.seeds))
        if args.seeds is not None
        else cfgmod.seeds_from_settings(settings)
    )
    run_cfg = cfgmod.settings_to_run_config(settings)
    run_id = _run_id(settings, 0, f"sweep_{args.param}")
    out = _prepare_out_dir(cfgmod.output_dir(settings), run_id,
                           bool(settings["output"]["force"]))
    rows, run_rows = harness.sweep(run_cfg, args.param, values, seeds)
    harness.write_sweep_csv(rows, os.path.join(out, "sweep.csv"))
    harness.write_sweep_runs_csv(run_rows, os.path.join(out, "sweep_runs.csv"))
    for row in rows:
        print(f"{args.param}={row['value']}: "
              f"reward {row.get('mean_reward_mean', float('nan')):.4f}"
              f" +/- {row.get('mean_reward_std', float('nan')):.4f}"
              + (f"  [{row['failures']}]" if row["failures"] else ""))
    print(f"-> {out}")
    return 0


def cmd_gradcheck(args) -> int:
    ok = gradchecks.check_all(n_instances=args.instances, tol=args.tol)
    return 0 if ok else 1


def cmd_weights(args) -> int:
    try:
        rewards = [float(x) for x in args.rewards.split(",") if x.strip() != ""]
    except ValueError:
        print("error: rewards must be a comma-separated number list",
              file=sys.stderr)
        return 2
    if not rewards:
        print("error: empty reward list", file=sys.stderr)
        return 2
    w = credit.reweight_strategy(np.array(rewards), args.alpha)
    print(",".join(f"{x:.6f}" for x in w))
    return 0


def cmd_eval(args) -> int:
    settings = cfgmod.load_config(args.config)
    with open(os.path.join(args.checkpoint, "meta.json")) as f:
        meta = json.load(f)
    settings["agent"]["kind"] = meta["kind"]
    run_cfg = cfgmod.settings_to_run_config(settings, seed=args.seed)
    if run_cfg.env.n_items != meta["n_items"] or run_cfg.env.k != meta["k"]:
        raise ConfigError("checkpoint was trained with a different env shape")

    env_cfg = replace(run_cfg.env, seed=run_cfg.env.seed + 7919 * args.seed)
    env = UserEnv(env_cfg)
    bundle = AgentBundle(run_cfg.agent, n_items=env_cfg.n_items, k=env_cfg.k,
                         seed=args.seed + 1)
    bundle.load_values(args.checkpoint)

    env.reset()
    finished = []
    totals = [0.0] * env_cfg.batch_users
    depths = [0] * env_cfg.batch_users
    for _ in range(args.steps):
        obs_list = [observation_of(env_cfg, s) for s in env.sessions]
        obs_batch = batch_observations(obs_list, env_cfg.history_len)
        items, _ = select_list(bundle, obs_batch, mode="greedy")
        for slot in range(env_cfg.batch_users):
            fb, done = env.step_session(env.sessions[slot], items[slot])
            totals[slot] += float(np.mean(fb.rewards))
            depths[slot] += 1
            if done:
                finished.append((totals[slot], depths[slot]))
                totals[slot], depths[slot] = 0.0, 0
                env.replace_session(slot)
    if not finished:
        print("no sessions finished; increase --steps")
        return 1
    rw = np.array([f[0] for f in finished])
    dp = np.array([f[1] for f in finished])
    print(f"greedy eval over {len(finished)} sessions: "
          f"mean_reward={rw.mean():.4f} mean_depth={dp.mean():.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="itemrl",
        description="List-wise recommendation RL: request-level A2C vs "
                    "item-decomposed variants on a synthetic user simulator.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train one agent, one seed")
    t.add_argument("config", nargs="?", default=None)
    t.add_argument("--seed", type=int, default=None)
    t.add_argument("--agent", choices=list(AGENT_KINDS))
    t.add_argument("--alpha", type=float, default=None)
    t.add_argument("--steps", type=int, default=None)
    t.add_argument("--out", default=None)
    t.add_argument("--force", action="store_true")
    t.set_defaults(fn=cmd_train)

    s = sub.add_parser("sweep", help="alpha or list-size sweep across seeds")
    s.add_argument("config", nargs="?", default=None)
    s.add_argument("--param", choices=["alpha", "k"], required=True)
    s.add_argument("--values", required=True)
    s.add_argument("--seeds", type=int, default=None,
                   help="number of seeds (0..n-1); default: config seed list")
    s.add_argument("--agent", default=None)
    s.add_argument("--steps", type=int, default=None)
    s.add_argument("--out", default=None)
    s.add_argument("--force", action="store_true")
    s.set_defaults(fn=cmd_sweep)

    g = sub.add_parser("gradcheck", help="finite-difference check of every loss")
    g.add_argument("--instances", type=int, default=10)
    g.add_argument("--tol", type=float, default=1e-4)
    g.set_defaults(fn=cmd_gradcheck)

    w = sub.add_parser("weights", help="print reweighting strategy output")
    w.add_argument("rewards")
    w.add_argument("--alpha", type=float, default=1.0)
    w.set_defaults(fn=cmd_weights)

    e = sub.add_parser("eval", help="greedy evaluation of a checkpoint")
    e.add_argument("checkpoint")
    e.add_argument("config", nargs="?", default=None)
    e.add_argument("--steps", type=int, default=200)
    e.add_argument("--seed", type=int, default=1234)
    e.set_defaults(fn=cmd_eval)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
