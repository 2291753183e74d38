"""Generative models for blockmodel and latent-space networks.

Labels are 0-based integer arrays in Python; the text file formats in
:mod:`blocksdp.io` use 1-based class numbers.  Edge draws use a uniform
that is a pure function of ``(seed, min(i, j), max(i, j))`` so that a graph
is reproducible pair by pair regardless of generation order.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from . import kernels

__all__ = [
    "BlockParams",
    "LatentConfig",
    "SparseScaling",
    "MisspecReport",
    "sample_labels",
    "block_probability_matrix",
    "pair_uniforms",
    "sample_adjacency",
    "latent_probability_matrix",
    "empirical_density",
    "equal_value_classes",
    "value_partition",
    "check_density",
    "check_odds_bounds",
    "check_sparse_scaling",
    "check_misspecification",
    "expected_spectrum",
    "community_theta",
    "overlapping_theta",
    "class_weights",
    "circle_coords",
]


def _check_pi(pi) -> np.ndarray:
    pi = np.asarray(pi, dtype=float)
    if pi.ndim != 1 or pi.size == 0 or np.any(pi < 0):
        raise ValueError("pi must be a nonempty nonnegative vector")
    if abs(pi.sum() - 1.0) > 1e-12:
        raise ValueError(f"pi sums to {pi.sum()!r}, not 1")
    return pi


@dataclass(frozen=True)
class BlockParams:
    theta: np.ndarray
    pi: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        if theta.ndim != 2 or theta.shape[0] != theta.shape[1]:
            raise ValueError("theta must be square")
        if not np.array_equal(theta, theta.T):
            raise ValueError("theta must be symmetric")
        if np.any(theta < 0) or np.any(theta > 1):
            raise ValueError("theta entries must lie in [0, 1]")
        pi = _check_pi(self.pi)
        if pi.size != theta.shape[0]:
            raise ValueError("pi and theta sizes differ")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "pi", pi)

    @property
    def K(self) -> int:
        return self.theta.shape[0]


@dataclass(frozen=True)
class LatentConfig:
    coords: np.ndarray
    sigma: float

    def __post_init__(self):
        coords = np.atleast_2d(np.asarray(self.coords, dtype=float))
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if np.any(coords < 0) or np.any(coords > 1):
            raise ValueError("latent coordinates must lie in [0, 1]")
        object.__setattr__(self, "coords", coords)

    @property
    def d(self) -> int:
        return self.coords.shape[1]


@dataclass(frozen=True)
class SparseScaling:
    """``theta* = alpha * Bstar`` and the fitted ``Bhat``."""

    alpha: float
    Bstar: np.ndarray
    Bhat: np.ndarray | None = None


def sample_labels(pi, n: int, seed=None) -> np.ndarray:
    """Draw ``n`` i.i.d. class labels (0-based) from ``pi``."""
    pi = _check_pi(pi)
    if n <= 0:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    return rng.choice(pi.size, size=n, p=pi).astype(np.int64)


def block_probability_matrix(theta, z, zero_diagonal: bool = True) -> np.ndarray:
    """``P_ij = theta[z_i, z_j]`` with the diagonal zeroed."""
    theta = np.asarray(theta, dtype=float)
    z = np.asarray(z, dtype=np.int64)
    if z.size and (z.min() < 0 or z.max() >= theta.shape[0]):
        raise ValueError("label out of range")
    P = theta[np.ix_(z, z)]
    if zero_diagonal:
        np.fill_diagonal(P, 0.0)
    return P


def pair_uniforms(seed: int, n: int, ids=None) -> np.ndarray:
    """Symmetric n x n matrix of uniforms keyed by unordered node-id pairs.

    ``ids`` renames the nodes (default ``0 .. n-1``); two calls that agree on
    the ids of a pair agree on its uniform.  The diagonal is set to 1.
    """
    ids = np.arange(n, dtype=np.uint64) if ids is None else np.asarray(ids, dtype=np.uint64)
    iu, ju = np.triu_indices(n, k=1)
    a, b = ids[iu], ids[ju]
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    u = kernels.pair_uniforms(int(seed) & 0xFFFFFFFFFFFFFFFF, lo, hi)
    U = np.ones((n, n))
    U[iu, ju] = u
    U[ju, iu] = u
    return U


def sample_adjacency(P, seed: int = 0, ids=None) -> np.ndarray:
    """Symmetric binary adjacency with ``A_ij ~ Bernoulli(P_ij)`` for i < j."""
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    U = pair_uniforms(seed, n, ids)
    A = (U < P).astype(np.int8)
    np.fill_diagonal(A, 0)
    return A


def latent_probability_matrix(coords, sigma: float) -> np.ndarray:
    """Logistic link on negative scaled Euclidean distance, zero diagonal."""
    cfg = coords if isinstance(coords, LatentConfig) else LatentConfig(coords, sigma)
    y = cfg.coords
    dist = np.sqrt(np.maximum(((y[:, None, :] - y[None, :, :]) ** 2).sum(-1), 0.0))
    P = expit(-dist / cfg.sigma)
    np.fill_diagonal(P, 0.0)
    return P


def empirical_density(A) -> float:
    """``sum_ij A_ij / (n (n - 1))``; every edge is counted twice."""
    A = np.asarray(A)
    n = A.shape[0]
    if n < 2:
        raise ValueError("need at least two nodes")
    return float(A.sum()) / (n * (n - 1))


def equal_value_classes(B) -> np.ndarray:
    """Cell ids of the equal-value partition of ``[K]^2``.

    Cells are numbered in increasing order of their value, so cell 0 holds
    the smallest entry.  Equality is exact.
    """
    B = np.asarray(B, dtype=float)
    _, inv = np.unique(B, return_inverse=True)
    return inv.reshape(B.shape)


def value_partition(cells) -> list[frozenset]:
    """Convert a cell-id array into a list of frozensets of index pairs."""
    cells = np.asarray(cells)
    out = []
    for c in range(int(cells.max()) + 1):
        out.append(frozenset(zip(*map(lambda v: v.tolist(), np.nonzero(cells == c)))))
    return out


def check_density(P) -> bool:
    """Density at least ``1/n``."""
    P = np.asarray(P)
    return empirical_density(P) >= 1.0 / P.shape[0]


def check_odds_bounds(theta_hat, rho: float) -> float:
    """Smallest ``c`` with ``rho/c <= odds(theta_hat) <= c*rho`` entrywise."""
    t = np.asarray(theta_hat, dtype=float)
    odds = t / (1.0 - t)
    return float(max(np.max(odds) / rho, rho / np.min(odds)))


def check_sparse_scaling(scaling: SparseScaling, pi, tol: float = 1e-9) -> list[str]:
    """Report violations of the ``theta* = alpha B*`` parametrization."""
    pi = _check_pi(pi)
    B = np.asarray(scaling.Bstar, dtype=float)
    problems = []
    if np.any(B < 0):
        problems.append("Bstar has negative entries")
    if np.linalg.matrix_rank(B) < B.shape[0]:
        problems.append("Bstar is rank deficient")
    total = pi @ B @ pi
    if abs(total - 1.0) > tol:
        problems.append(f"pi' Bstar pi = {total:.6g}, not 1")
    return problems


@dataclass(frozen=True)
class MisspecReport:
    ok: bool
    partition_match: bool
    violations: tuple = field(default=())

    def __bool__(self) -> bool:
        return self.ok


def check_misspecification(Bhat, Bstar) -> MisspecReport:
    """Same equal-value structure, and ``Bhat_ab`` is the Poisson-Bregman
    closest value of ``Bhat`` to ``Bstar_ab``.

    ``violations`` lists ``((a, b), (c, d))`` for which
    ``Bstar_ab log(Bhat_ab / Bhat_cd) - (Bhat_ab - Bhat_cd) > 0`` fails.
    """
    Bhat = np.asarray(Bhat, dtype=float)
    Bstar = np.asarray(Bstar, dtype=float)
    if np.any(Bhat <= 0) or np.any(Bstar <= 0):
        raise ValueError("both matrices must be strictly positive")
    qh, qs = equal_value_classes(Bhat), equal_value_classes(Bstar)
    K = Bhat.shape[0]
    # same partition iff the pair of labelings is a bijection
    pairs = set(zip(qh.ravel().tolist(), qs.ravel().tolist()))
    match = len(pairs) == len(np.unique(qh)) == len(np.unique(qs))
    violations = []
    idx = [(a, b) for a in range(K) for b in range(K)]
    for a, b in idx:
        for c, d in idx:
            if qs[c, d] == qs[a, b]:
                continue
            gap = Bstar[a, b] * np.log(Bhat[a, b] / Bhat[c, d]) - (Bhat[a, b] - Bhat[c, d])
            if not gap > 0:
                violations.append(((a, b), (c, d)))
    return MisspecReport(match and not violations, match, tuple(violations))


def expected_spectrum(Bstar, z, alpha: float, K: int | None = None) -> np.ndarray:
    """Eigenvalues of ``n alpha D^1/2 B* D^1/2``, D the class frequencies of z.

    Sorted in decreasing order.  These are the nonzero eigenvalues of the
    block matrix ``alpha * B*[z, z]`` with its diagonal kept.
    """
    B = np.asarray(Bstar, dtype=float)
    K = B.shape[0] if K is None else K
    z = np.asarray(z, dtype=np.int64)
    n = z.size
    freq = np.bincount(z, minlength=K) / n
    root = np.sqrt(freq)
    M = root[:, None] * B * root[None, :]
    return np.sort(n * alpha * np.linalg.eigvalsh(M))[::-1]


def class_weights(K: int, balanced: bool = True) -> np.ndarray:
    """Uniform class frequencies, or frequencies proportional to ``K, .., 1``."""
    if balanced:
        return np.full(K, 1.0 / K)
    w = np.arange(K, 0, -1, dtype=float)
    return w / w.sum()


def community_theta(K: int, pi, degree: float, n: int, ratio: float = 10.0) -> np.ndarray:
    """Community ``theta`` with ``gamma0 = ratio * gamma1`` and expected degree ``degree``."""
    pi = _check_pi(pi)
    shape = ratio * np.eye(K) + (1 - np.eye(K))
    scale = degree / (n * (pi @ shape @ pi))
    theta = scale * shape
    if theta.max() > 1:
        raise ValueError("target degree too high for this ratio")
    return theta


def overlapping_theta(k: int, pi, degree: float, n: int, ratio: float = 10.0) -> np.ndarray:
    """Overlapping ``theta`` on K = k**2 digit-pair classes, same scaling rule."""
    pi = _check_pi(pi)
    a = np.arange(k * k)
    a1, a2 = a // k, a % k
    shared = (a1[:, None] == a1[None, :]) | (a2[:, None] == a2[None, :])
    shape = np.where(shared, ratio, 1.0)
    scale = degree / (n * (pi @ shape @ pi))
    theta = scale * shape
    if theta.max() > 1:
        raise ValueError("target degree too high for this ratio")
    return theta


def circle_coords(n: int, seed=None, radius: float = 0.5, center=(0.5, 0.5)) -> np.ndarray:
    """Points at uniform random angles on a circle inside the unit square.

    The default is the inscribed circle.
    """
    rng = np.random.default_rng(seed)
    ang = rng.uniform(0, 2 * np.pi, size=n)
    y = np.column_stack([center[0] + radius * np.cos(ang), center[1] + radius * np.sin(ang)])
    if np.any(y < -1e-12) or np.any(y > 1 + 1e-12):
        warnings.warn("circle leaves the unit square; clipping")
    return np.clip(y, 0.0, 1.0)
