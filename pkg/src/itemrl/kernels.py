"""Hot numeric kernels with optional numba acceleration.

Set ITEMRL_NO_NUMBA=1 to force the pure-numpy fallback path.  Both paths
run the same arithmetic in the same order, so results are bit-identical
regardless of the backend.
"""

import os

import numpy as np

_want_numba = os.environ.get("ITEMRL_NO_NUMBA", "0") not in ("1", "true", "yes")

if _want_numba:
    try:
        from numba import njit

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is an optional extra
        HAVE_NUMBA = False
else:
    HAVE_NUMBA = False

if not HAVE_NUMBA:

    def njit(*args, **kwargs):
        # identity decorator, supports bare and parametrized use
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(fn):
            return fn

        return wrap


@njit(cache=True)
def _sequential_topk_numba(probs, uniforms, out):
    B, N = probs.shape
    K = out.shape[1]
    for b in range(B):
        p = probs[b].copy()
        used = np.zeros(N, dtype=np.bool_)
        total = 1.0
        for k in range(K):
            u = uniforms[b, k] * total
            acc = 0.0
            chosen = -1
            last = -1
            # inverse CDF over items that still carry probability mass;
            # items with zero mass (including already-chosen ones) are
            # never eligible, so rounding in `total` cannot repeat a pick
            for j in range(N):
                pj = p[j]
                if pj > 0.0:
                    acc += pj
                    last = j
                    if acc >= u:
                        chosen = j
                        break
            if chosen < 0:
                chosen = last  # numeric underflow at the tail
            if chosen < 0:
                # no remaining mass at all (softmax so peaked that fewer
                # than K items round to nonzero): first unchosen item
                for j in range(N):
                    if not used[j]:
                        chosen = j
                        break
            used[chosen] = True
            out[b, k] = chosen
            total -= p[chosen]
            p[chosen] = 0.0
            if total < 0.0:
                total = 0.0


def _sequential_topk_numpy(probs, uniforms, out):
    B, N = probs.shape
    K = out.shape[1]
    for b in range(B):
        p = probs[b].copy()
        used = np.zeros(N, dtype=np.bool_)
        total = 1.0
        for k in range(K):
            u = uniforms[b, k] * total
            acc = 0.0
            chosen = -1
            last = -1
            for j in range(N):
                pj = p[j]
                if pj > 0.0:
                    acc += pj
                    last = j
                    if acc >= u:
                        chosen = j
                        break
            if chosen < 0:
                chosen = last
            if chosen < 0:
                for j in range(N):
                    if not used[j]:
                        chosen = j
                        break
            used[chosen] = True
            out[b, k] = chosen
            total -= p[chosen]
            p[chosen] = 0.0
            if total < 0.0:
                total = 0.0


def sequential_topk_sample(probs, uniforms):
    """Sample K distinct indices per row by sequential softmax sampling
    without replacement (inverse-CDF on the renormalized remainder).

    probs: (B, N) rows summing to 1.  uniforms: (B, K) in [0, 1).
    Returns (B, K) int64 indices.
    """
    B, K = uniforms.shape
    out = np.empty((B, K), dtype=np.int64)
    if HAVE_NUMBA:
        _sequential_topk_numba(
            np.ascontiguousarray(probs), np.ascontiguousarray(uniforms), out
        )
    else:
        _sequential_topk_numpy(probs, uniforms, out)
    return out


@njit(cache=True)
def _scatter_rows_numba(grad, ids, dvecs):
    R, D = dvecs.shape
    for r in range(R):
        row = ids[r]
        for j in range(D):
            grad[row, j] += dvecs[r, j]


def _scatter_rows_numpy(grad, ids, dvecs):
    np.add.at(grad, ids, dvecs)


def scatter_rows_add(grad, ids, dvecs):
    """grad[ids[r]] += dvecs[r], in place.  Duplicate ids accumulate in
    row order, so both backends add in the same sequence.

    grad: (N, D).  ids: (R,) int row indices.  dvecs: (R, D).
    """
    if HAVE_NUMBA:
        _scatter_rows_numba(
            grad, np.ascontiguousarray(ids), np.ascontiguousarray(dvecs)
        )
    else:
        _scatter_rows_numpy(grad, ids, dvecs)


@njit(cache=True)
def _pooled_scatter_numba(grad, items, wc, wa, dpc, dpa):
    B, H = items.shape
    D = grad.shape[1]
    for b in range(B):
        for h in range(H):
            row = items[b, h]
            c = wc[b, h]
            a = wa[b, h]
            for j in range(D):
                grad[row, j] += c * dpc[b, j] + a * dpa[b, j]


def _pooled_scatter_numpy(grad, items, wc, wa, dpc, dpa):
    w = wc[:, :, None] * dpc[:, None, :] + wa[:, :, None] * dpa[:, None, :]
    np.add.at(grad, items.reshape(-1), w.reshape(-1, w.shape[-1]))


def pooled_history_scatter(grad, items, wc, wa, dpc, dpa):
    """Embedding-table gradient of two weighted mean pools in one pass:
    grad[items[b, h]] += wc[b, h] * dpc[b] + wa[b, h] * dpa[b], in place.

    grad: (N, D).  items: (B, H) int.  wc, wa: (B, H) per-slot pooling
    weights.  dpc, dpa: (B, D) upstream gradients of the two pools.
    """
    if HAVE_NUMBA:
        _pooled_scatter_numba(
            grad,
            np.ascontiguousarray(items),
            np.ascontiguousarray(wc),
            np.ascontiguousarray(wa),
            np.ascontiguousarray(dpc),
            np.ascontiguousarray(dpa),
        )
    else:
        _pooled_scatter_numpy(grad, items, wc, wa, dpc, dpa)


@njit(cache=True)
def _adam_numba(p, g, m, v, lr, beta1, beta2, eps, bc1, bc2):
    n = p.shape[0]
    for i in range(n):
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i]
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i]
        mhat = m[i] / bc1
        vhat = v[i] / bc2
        p[i] -= lr * mhat / (np.sqrt(vhat) + eps)


def _adam_numpy(p, g, m, v, lr, beta1, beta2, eps, bc1, bc2):
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * g * g
    p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


def adam_update(p, g, m, v, step, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """In-place adaptive-moment update on flat float64 views.

    `step` is the 1-based update count used for bias correction.
    """
    bc1 = 1.0 - beta1**step
    bc2 = 1.0 - beta2**step
    if HAVE_NUMBA:
        _adam_numba(p, g, m, v, lr, beta1, beta2, eps, bc1, bc2)
    else:
        _adam_numpy(p, g, m, v, lr, beta1, beta2, eps, bc1, bc2)
