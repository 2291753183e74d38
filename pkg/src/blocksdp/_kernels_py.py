"""Pure-numpy versions of the hot kernels; used when the extension is absent."""
from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix(z):
    z = z + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def pair_uniforms(seed, lo, hi):
    """splitmix64 chain over (seed, lo, hi) mapped to [0, 1)."""
    with np.errstate(over="ignore"):
        h = _mix(np.full(np.shape(lo), seed, dtype=np.uint64))
        h = _mix(h ^ np.asarray(lo, dtype=np.uint64))
        h = _mix(h ^ np.asarray(hi, dtype=np.uint64))
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


TIE_RTOL = 1e-12


def best_labeling(C, chunk=65536):
    """Exhaustive argmax of ``sum_ij C[i, j, z_i, z_j]`` over z in [K]^n.

    Labelings are visited in lexicographic order and the incumbent is only
    replaced by a value larger by more than ``TIE_RTOL * (1 + |best|)``, so
    ties (including ties spoiled by summation rounding) go to the first
    labeling.
    """
    C = np.ascontiguousarray(C, dtype=np.float64)
    n, K = C.shape[0], C.shape[2]
    total = K ** n
    powers = K ** np.arange(n - 1, -1, -1, dtype=np.int64)
    best_val, best_code = -np.inf, 0
    for start in range(0, total, chunk):
        codes = np.arange(start, min(total, start + chunk), dtype=np.int64)
        Z = (codes[:, None] // powers[None, :]) % K
        vals = np.zeros(codes.size)
        for i in range(n):
            for j in range(n):
                vals += C[i, j, Z[:, i], Z[:, j]]
        top = float(vals.max())
        if start == 0 or top > best_val + TIE_RTOL * (1.0 + abs(best_val)):
            k = int(np.argmax(vals >= top - TIE_RTOL * (1.0 + abs(top))))
            best_val, best_code = float(vals[k]), int(codes[k])
    z = (best_code // powers) % K
    return z.astype(np.int64), best_val


def nonneg_dual_update(X, U, W_prev, weights):
    """W = max(0, X + U); U += X - W.  Rows of the 2-D inputs carry weights.

    ``U`` is updated in place.  Returns ``(W, weighted ||X - W||^2,
    weighted ||W - W_prev||^2)``.
    """
    W = np.maximum(X + U, 0.0)
    diff = X - W
    U += diff
    w = np.asarray(weights, dtype=np.float64)
    prim = float(w @ np.einsum("ij,ij->i", diff, diff))
    step = W - W_prev
    dual = float(w @ np.einsum("ij,ij->i", step, step))
    return W, prim, dual
