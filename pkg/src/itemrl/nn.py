"""Minimal deterministic neural toolkit: named parameter stores,
fixed-architecture MLPs with hand-derived gradients, an adaptive-moment
optimizer, target-network soft updates, and a finite-difference
gradient checker.

All arithmetic is float64.  Forward passes are pure; gradients
accumulate into the store's gradient slots until `zero_grad`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels

DTYPE = np.float64


class ParameterStore:
    """Flat named collection of learnable arrays with parallel gradient
    slots and optimizer moments.  Exclusively owned by one training loop.
    """

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}
        self.step_count = 0

    def add(self, name: str, value: np.ndarray) -> None:
        if name in self.params:
            raise ValueError(f"duplicate parameter name: {name}")
        arr = np.asarray(value, dtype=DTYPE)
        self.params[name] = arr
        self.grads[name] = np.zeros_like(arr)
        self._m[name] = np.zeros_like(arr)
        self._v[name] = np.zeros_like(arr)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.params[name]

    def names(self):
        return list(self.params)

    def zero_grad(self) -> None:
        for g in self.grads.values():
            g[...] = 0.0

    def accumulate(self, name: str, grad: np.ndarray) -> None:
        if grad.shape != self.params[name].shape:
            raise ValueError(
                f"gradient shape {grad.shape} != parameter shape "
                f"{self.params[name].shape} for {name}"
            )
        self.grads[name] += grad

    def adam_step(self, lr: float, beta1: float = 0.9, beta2: float = 0.999,
                  eps: float = 1e-8) -> None:
        """Adaptive-moment update over every parameter; clears gradients."""
        for name, g in self.grads.items():
            if not np.all(np.isfinite(g)):
                raise FloatingPointError(f"non-finite gradient in {name}")
        self.step_count += 1
        for name, p in self.params.items():
            kernels.adam_update(
                p.reshape(-1),
                self.grads[name].reshape(-1),
                self._m[name].reshape(-1),
                self._v[name].reshape(-1),
                self.step_count,
                lr,
                beta1,
                beta2,
                eps,
            )
        self.zero_grad()

    def soft_update_from(self, online: "ParameterStore", rho: float) -> None:
        """target <- (1 - rho) * target + rho * online, elementwise."""
        if set(self.params) != set(online.params):
            raise ValueError("parameter name mismatch in soft update")
        for name, p in self.params.items():
            src = online.params[name]
            if src.shape != p.shape:
                raise ValueError(f"shape mismatch for {name}")
            p *= 1.0 - rho
            p += rho * src

    def clone(self) -> "ParameterStore":
        out = ParameterStore()
        for name, p in self.params.items():
            out.add(name, p.copy())
        return out

    def copy_values_from(self, other: "ParameterStore") -> None:
        for name, p in self.params.items():
            p[...] = other.params[name]

    # -- checkpointing ---------------------------------------------------
    def save(self, path) -> None:
        np.savez(path, __version__=np.array([1]), **self.params)

    @classmethod
    def load(cls, path) -> "ParameterStore":
        data = np.load(path)
        out = cls()
        for name in data.files:
            if name == "__version__":
                continue
            out.add(name, data[name])
        return out


def init_store(rng: np.random.Generator, layout: dict[str, tuple], scale: float = 0.1
               ) -> ParameterStore:
    """Scaled-uniform init for every named shape; bias names (ending in
    'b' or containing '.b') start at zero."""
    store = ParameterStore()
    for name, shape in layout.items():
        if name.endswith("_b"):
            store.add(name, np.zeros(shape))
        else:
            store.add(name, rng.uniform(-scale, scale, size=shape))
    return store


# -- layers --------------------------------------------------------------


def linear_forward(store: ParameterStore, prefix: str, x: np.ndarray):
    W, b = store[prefix + "_W"], store[prefix + "_b"]
    if x.shape[-1] != W.shape[0]:
        raise ValueError(f"input dim {x.shape[-1]} != {W.shape[0]} for {prefix}")
    return x @ W + b, x


def linear_backward(store: ParameterStore, prefix: str, cache, dy: np.ndarray,
                    accumulate: bool = True):
    x = cache
    W = store[prefix + "_W"]
    if accumulate:
        flat_x = x.reshape(-1, x.shape[-1])
        flat_dy = dy.reshape(-1, dy.shape[-1])
        store.accumulate(prefix + "_W", flat_x.T @ flat_dy)
        store.accumulate(prefix + "_b", flat_dy.sum(axis=0))
    return dy @ W.T


@dataclass(frozen=True)
class NetworkSpec:
    in_dim: int
    hidden: tuple
    out_dim: int
    nonlinearity: str = "tanh"

    def dims(self):
        return (self.in_dim, *self.hidden, self.out_dim)


def mlp_layout(prefix: str, spec: NetworkSpec) -> dict[str, tuple]:
    dims = spec.dims()
    layout = {}
    for i in range(len(dims) - 1):
        layout[f"{prefix}{i}_W"] = (dims[i], dims[i + 1])
        layout[f"{prefix}{i}_b"] = (dims[i + 1],)
    return layout


def mlp_forward(store: ParameterStore, prefix: str, spec: NetworkSpec, x: np.ndarray):
    """Affine + tanh stack; final layer affine.  Returns (y, cache)."""
    n_layers = len(spec.dims()) - 1
    caches = []
    h = x
    for i in range(n_layers):
        z, lin_cache = linear_forward(store, f"{prefix}{i}", h)
        if i < n_layers - 1:
            h = np.tanh(z)
            caches.append((lin_cache, h))
        else:
            h = z
            caches.append((lin_cache, None))
    return h, caches


def mlp_backward(store: ParameterStore, prefix: str, spec: NetworkSpec, caches,
                 dy: np.ndarray, accumulate: bool = True) -> np.ndarray:
    n_layers = len(spec.dims()) - 1
    d = dy
    for i in range(n_layers - 1, -1, -1):
        lin_cache, act = caches[i]
        if act is not None:
            d = d * (1.0 - act * act)  # tanh'
        d = linear_backward(store, f"{prefix}{i}", lin_cache, d, accumulate)
    return d


def embedding_gather(store: ParameterStore, name: str, ids: np.ndarray) -> np.ndarray:
    table = store[name]
    if np.any(ids < 0) or np.any(ids >= table.shape[0]):
        raise IndexError(f"id out of range for embedding table {name}")
    return table[ids]


def embedding_scatter(store: ParameterStore, name: str, ids: np.ndarray,
                      dvecs: np.ndarray) -> None:
    grad = store.grads[name]
    flat = dvecs.reshape(-1, dvecs.shape[-1])
    if flat.shape[-1] != grad.shape[-1]:
        raise ValueError(
            f"gradient dim {flat.shape[-1]} != embedding dim "
            f"{grad.shape[-1]} for {name}"
        )
    kernels.scatter_rows_add(grad, ids.reshape(-1), flat)


# -- gradient checking ---------------------------------------------------


def grad_check(loss_fn, stores: dict[str, ParameterStore], eps: float = 1e-4,
               max_entries_per_param: int = 24, rng: np.random.Generator | None = None):
    """Compare analytic gradients against central finite differences.

    `loss_fn(stores)` must return a scalar loss and populate gradients in
    the given stores (it must zero them itself or rely on clean slots).
    Returns (max_rel_err, report_rows).
    """
    if rng is None:
        rng = np.random.default_rng(0)
    for s in stores.values():
        s.zero_grad()
    loss_fn(stores)
    analytic = {
        (sn, pn): s.grads[pn].copy()
        for sn, s in stores.items()
        for pn in s.params
    }
    max_rel = 0.0
    rows = []
    for sn, s in stores.items():
        for pn, p in s.params.items():
            flat = p.reshape(-1)
            n = flat.size
            idx = (
                np.arange(n)
                if n <= max_entries_per_param
                else rng.choice(n, size=max_entries_per_param, replace=False)
            )
            ana_flat = analytic[(sn, pn)].reshape(-1)
            for i in idx:
                orig = flat[i]
                flat[i] = orig + eps
                for st in stores.values():
                    st.zero_grad()
                lp = loss_fn(stores)
                flat[i] = orig - eps
                for st in stores.values():
                    st.zero_grad()
                lm = loss_fn(stores)
                flat[i] = orig
                fd = (lp - lm) / (2.0 * eps)
                ana = ana_flat[i]
                # floor avoids spurious failures on near-zero gradients,
                # where FD noise dominates
                denom = max(abs(fd), abs(ana), 1e-4)
                rel = abs(fd - ana) / denom
                if rel > max_rel:
                    max_rel = rel
                rows.append((sn, pn, int(i), float(ana), float(fd), float(rel)))
    for s in stores.values():
        s.zero_grad()
    return max_rel, rows
