"""Evaluation functionals: label and community errors, KL risks, subspace
and coordinate alignment errors."""
from __future__ import annotations

import numpy as np
from scipy.linalg import orthogonal_procrustes
from scipy.optimize import linear_sum_assignment

from . import kernels
from .model import empirical_density
from .objective import BRUTE_FORCE_LIMIT, ThetaHat

__all__ = [
    "misclassification",
    "community_set_error",
    "kl_bernoulli",
    "normalized_kl_risk",
    "best_blockmodel_risk",
    "subspace_distance",
    "aligned_rms",
    "disagreement_fraction",
]


def misclassification(zhat, z) -> float:
    """Fraction of mislabeled nodes under the best relabeling of ``zhat``."""
    zhat = np.asarray(zhat, dtype=np.int64)
    z = np.asarray(z, dtype=np.int64)
    if zhat.shape != z.shape:
        raise ValueError("label vectors differ in length")
    if z.size == 0:
        return 0.0
    K = int(max(zhat.max(), z.max())) + 1
    conf = np.zeros((K, K))
    np.add.at(conf, (zhat, z), 1.0)
    r, c = linear_sum_assignment(-conf)
    return float(z.size - conf[r, c].sum()) / z.size


def community_set_error(Chat, C) -> float:
    """Total symmetric difference under the best matching of sets, over ``sum |C_l|``.

    Unmatched sets on either side cost their own size.
    """
    Chat = [set(s) for s in Chat]
    C = [set(s) for s in C]
    total = sum(len(s) for s in C)
    if total == 0:
        return 0.0
    m = max(len(Chat), len(C))
    Chat = Chat + [set()] * (m - len(Chat))
    C = C + [set()] * (m - len(C))
    cost = np.array([[len(a ^ b) for b in C] for a in Chat], dtype=float)
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].sum()) / total


def kl_bernoulli(p, q):
    """Bernoulli KL divergence with ``0 log 0 = 0``; ``inf`` when undefined."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(p > 0, p * np.log(p / q), 0.0)
        t0 = np.where(p < 1, (1 - p) * np.log((1 - p) / (1 - q)), 0.0)
    out = t1 + t0
    out = np.where(np.isnan(out), np.inf, out)
    return float(out) if out.ndim == 0 else out


def normalized_kl_risk(P, Q) -> float:
    """``sum_{i != j} KL(P_ij, Q_ij) / (n^2 rho)`` with ``rho`` the density of P."""
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if P.shape != Q.shape:
        raise ValueError("shape mismatch")
    n = P.shape[0]
    rho = empirical_density(P)
    if rho == 0:
        raise ValueError("P has zero density")
    off = ~np.eye(n, dtype=bool)
    return float(kl_bernoulli(P[off], Q[off]).sum()) / (n * n * rho)


def best_blockmodel_risk(P, th: ThetaHat, limit: int = BRUTE_FORCE_LIMIT,
                         return_labels: bool = False):
    """Exhaustive minimum of :func:`normalized_kl_risk` over ``theta_hat[z, z]``."""
    P = np.asarray(P, dtype=float)
    n, K = P.shape[0], th.K
    if K ** n > limit:
        raise ValueError(f"K**n = {K}**{n} exceeds the brute-force limit {limit}")
    C = -kl_bernoulli(P[:, :, None, None], th.theta[None, None, :, :])
    idx = np.arange(n)
    C[idx, idx] = 0.0
    z, val = kernels.best_labeling(np.ascontiguousarray(C))
    risk = -val / (n * n * empirical_density(P))
    return (risk, np.asarray(z)) if return_labels else risk


def _check_orthonormal(V, tol=1e-8):
    G = V.T @ V
    if np.max(np.abs(G - np.eye(G.shape[0]))) > tol:
        raise ValueError("columns are not orthonormal")


def subspace_distance(Vhat, V) -> float:
    """``min_O ||Vhat O - V||_F^2`` over orthogonal O (Procrustes)."""
    Vhat = np.asarray(Vhat, dtype=float)
    V = np.asarray(V, dtype=float)
    _check_orthonormal(Vhat)
    _check_orthonormal(V)
    O, _ = orthogonal_procrustes(Vhat, V)
    return float(np.linalg.norm(Vhat @ O - V) ** 2)


def aligned_rms(yhat, y) -> float:
    """Root mean squared row error after centering and the best orthogonal map."""
    yhat = np.asarray(yhat, dtype=float)
    y = np.asarray(y, dtype=float)
    if yhat.shape != y.shape:
        raise ValueError("shape mismatch")
    a = yhat - yhat.mean(0)
    b = y - y.mean(0)
    O, _ = orthogonal_procrustes(a, b)
    return float(np.sqrt(((a @ O - b) ** 2).sum(1).mean()))


def disagreement_fraction(Phat, theta, z) -> float:
    """Fraction of off-diagonal dyads where ``Phat_ij != theta[z_i, z_j]``."""
    Phat = np.asarray(Phat)
    z = np.asarray(z, dtype=np.int64)
    target = np.asarray(theta)[np.ix_(z, z)]
    n = z.size
    off = ~np.eye(n, dtype=bool)
    return float((Phat[off] != target[off]).sum()) / (n * (n - 1))
