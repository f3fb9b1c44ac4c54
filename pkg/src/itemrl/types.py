"""MDP vocabulary shared by the agents and the environment, plus the
uniform experience replay buffer.

A transition records one request: the observation the policy acted on,
the list it recommended, the per-item click feedback, the next
observation, and the session-end flag.  The end flag is per request;
all K items of a request share it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

ITEM_DTYPE = np.int16  # catalog ids; supports N up to 32767
CLICK_DTYPE = np.uint8


class TransitionError(ValueError):
    """Raised for malformed transitions or invalid list actions."""


@dataclass(frozen=True)
class Observation:
    """Agent-visible view of a session: user id plus the recent
    (item, click) history window, chronological, most recent last.

    Environment latents never appear here.
    """

    user_id: int
    hist_items: np.ndarray  # (L,) item ids, L <= H
    hist_clicks: np.ndarray  # (L,) 0/1

    def __post_init__(self):
        if len(self.hist_items) != len(self.hist_clicks):
            raise TransitionError("history items/clicks length mismatch")

    @property
    def history(self) -> list[tuple[int, bool]]:
        return [
            (int(i), bool(c)) for i, c in zip(self.hist_items, self.hist_clicks)
        ]

    def __len__(self) -> int:
        return len(self.hist_items)


def make_rec_list(items, n_items: int | None = None) -> np.ndarray:
    """Validate and return a list action: distinct item ids, fixed order."""
    arr = np.asarray(items, dtype=np.int64)
    if arr.ndim != 1 or len(arr) == 0:
        raise TransitionError("a list action must be a nonempty 1-d sequence")
    lst = arr.tolist()
    if len(set(lst)) != len(lst):
        raise TransitionError("duplicate items in one list are forbidden")
    if min(lst) < 0:
        raise TransitionError("negative item id")
    if n_items is not None and max(lst) >= n_items:
        raise TransitionError(f"item id out of range [0, {n_items})")
    return arr


@dataclass(frozen=True)
class Feedback:
    """Per-item click bits and their mapped rewards for one request."""

    clicks: np.ndarray  # (K,) 0/1
    rewards: np.ndarray  # (K,) float

    def __post_init__(self):
        if len(self.clicks) != len(self.rewards):
            raise TransitionError("clicks/rewards length mismatch")


@dataclass(frozen=True)
class Transition:
    obs: Observation
    action: np.ndarray  # (K,) item ids
    feedback: Feedback
    next_obs: Observation
    done: bool

    def __post_init__(self):
        if len(self.action) != len(self.feedback.clicks):
            raise TransitionError(
                "action and feedback disagree on list size "
                f"({len(self.action)} vs {len(self.feedback.clicks)})"
            )
        make_rec_list(self.action)


class ReplayBuffer:
    """Fixed-capacity ring of transitions with seeded uniform sampling
    (with replacement).  Single-writer, single-reader; not thread safe.
    """

    def __init__(self, capacity: int = 100_000, seed: int = 0):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._data: list[Transition] = []
        self._cursor = 0
        self.seed = seed
        self._rng = np.random.default_rng(seed)

    def __len__(self) -> int:
        return len(self._data)

    def push(self, t: Transition) -> None:
        if not isinstance(t, Transition):
            raise TransitionError("expected a Transition")
        if len(self._data) < self.capacity:
            self._data.append(t)
        else:
            self._data[self._cursor] = t
        self._cursor = (self._cursor + 1) % self.capacity

    def sample(self, batch: int) -> list[Transition]:
        if not self._data:
            raise ValueError("cannot sample from an empty buffer")
        idx = self._rng.integers(0, len(self._data), size=batch)
        return [self._data[i] for i in idx]

    def __getitem__(self, i: int) -> Transition:
        return self._data[i]


def transition_to_record(t: Transition) -> dict:
    """Compact JSON-friendly record of one request for offline inspection."""
    return {
        "user_id": int(t.obs.user_id),
        "items": [int(i) for i in t.action],
        "clicks": [int(c) for c in t.feedback.clicks],
        "rewards": [float(r) for r in t.feedback.rewards],
        "done": int(t.done),
    }


def _obs_to_dict(o: Observation) -> dict:
    return {
        "user_id": int(o.user_id),
        "hist_items": [int(i) for i in o.hist_items],
        "hist_clicks": [int(c) for c in o.hist_clicks],
    }


def _obs_from_dict(d: dict) -> Observation:
    return Observation(
        user_id=d["user_id"],
        hist_items=np.asarray(d["hist_items"], dtype=ITEM_DTYPE),
        hist_clicks=np.asarray(d["hist_clicks"], dtype=CLICK_DTYPE),
    )


def transition_to_json(t: Transition) -> str:
    """Full lossless serialization of one transition."""
    return json.dumps(
        {
            "obs": _obs_to_dict(t.obs),
            "action": [int(i) for i in t.action],
            "clicks": [int(c) for c in t.feedback.clicks],
            "rewards": [float(r) for r in t.feedback.rewards],
            "next_obs": _obs_to_dict(t.next_obs),
            "done": bool(t.done),
        }
    )


def transition_from_json(s: str) -> Transition:
    d = json.loads(s)
    return Transition(
        obs=_obs_from_dict(d["obs"]),
        action=np.asarray(d["action"], dtype=np.int64),
        feedback=Feedback(
            clicks=np.asarray(d["clicks"], dtype=CLICK_DTYPE),
            rewards=np.asarray(d["rewards"], dtype=np.float64),
        ),
        next_obs=_obs_from_dict(d["next_obs"]),
        done=d["done"],
    )


def dump_transition_log(transitions, path) -> None:
    """Newline-delimited records, one request per line."""
    with open(path, "w") as f:
        for t in transitions:
            f.write(json.dumps(transition_to_record(t)) + "\n")


def load_transition_log(path) -> list[dict]:
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]
