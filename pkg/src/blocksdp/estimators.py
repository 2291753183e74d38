"""Estimates derived from an SDP solution: dyad-level MAP and randomized
estimates, class labels, block densities, overlapping communities and
latent coordinates."""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
from scipy.special import expit

from .blocks import cell_masses
from .model import equal_value_classes, pair_uniforms
from .objective import ThetaHat, make_theta_hat
from .scheme import toric_scheme

__all__ = [
    "EstimateBundle",
    "map_estimate_P",
    "randomized_estimate_P",
    "kmeans",
    "spectral_cluster",
    "diagonal_map",
    "round_labels",
    "estimate_theta",
    "threshold_graph",
    "maximal_cliques",
    "overlapping_communities",
    "true_overlapping_communities",
    "ToricGrid",
    "toric_grid",
    "latent_theta",
    "map_estimate_D",
    "randomized_estimate_D",
    "embed_coordinates",
    "estimate_bundle",
]

MASS_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class EstimateBundle:
    Phat: np.ndarray
    zhat: np.ndarray
    theta_est: np.ndarray
    Ptilde: np.ndarray | None = None
    communities: list | None = None
    Dhat: np.ndarray | None = None
    coords: np.ndarray | None = None
    extras: dict = field(default_factory=dict)


def _symmetric_masses(X, cells, count):
    m = cell_masses(X, cells, count)
    return 0.5 * (m + m.transpose(0, 2, 1))


def _map_by_cells(X, cells, values):
    m = _symmetric_masses(X, cells, len(values))
    # cells are numbered by increasing value, argmax keeps the first maximum
    out = np.asarray(values)[np.argmax(m, axis=0)]
    np.fill_diagonal(out, 0.0)
    return out


def _sample_by_cells(X, cells, values, seed):
    m = cell_masses(X, cells, len(values))
    n = m.shape[1]
    iu, ju = np.triu_indices(n, k=1)
    probs = m[:, iu, ju]
    total = probs.sum(axis=0)
    if np.any(np.abs(total - 1.0) > MASS_TOL):
        raise ValueError(f"block mass deviates from 1 by {np.max(np.abs(total - 1)):.3g}")
    probs = np.clip(probs, 0.0, None)
    cdf = np.cumsum(probs / probs.sum(axis=0), axis=0)
    u = pair_uniforms(seed, n)[iu, ju]
    pick = np.minimum((u[None, :] >= cdf).sum(axis=0), len(values) - 1)
    out = np.zeros((n, n))
    out[iu, ju] = np.asarray(values)[pick]
    out[ju, iu] = out[iu, ju]
    return out


def map_estimate_P(X, th: ThetaHat) -> np.ndarray:
    """Per dyad, the theta value carrying the most block mass (smallest on ties)."""
    return _map_by_cells(X, th.value_classes, th.values)


def randomized_estimate_P(X, th: ThetaHat, seed: int = 0) -> np.ndarray:
    """Per dyad i < j, a theta value drawn with probability equal to its block mass."""
    return _sample_by_cells(X, th.value_classes, th.values, seed)


def diagonal_map(X, th: ThetaHat) -> np.ndarray:
    """MAP theta value of each diagonal block ``X^(ii)``.

    For an integral solution this is ``theta[z_i, z_i]``; it is also right
    for a solution averaged over label permutations, whose diagonal blocks
    put all their mass on the diagonal cells.
    """
    m = cell_masses(X, th.value_classes, len(th.values))
    idx = np.arange(m.shape[1])
    return np.asarray(th.values)[np.argmax(m[:, idx, idx], axis=0)]


def round_labels(P, X, th: ThetaHat, seed=0) -> np.ndarray:
    """Spectral clustering of an edge estimate with its diagonal restored.

    ``P`` (the MAP or randomized estimate) has a zero diagonal.  On small
    graphs that zero diagonal adds eigenvalues of size ``-theta`` that can
    outrank the class signal, so the diagonal is refilled from
    :func:`diagonal_map` before clustering.
    """
    M = np.array(P, dtype=float)
    np.fill_diagonal(M, diagonal_map(X, th))
    return spectral_cluster(M, th.K, seed=seed)


def _kmeans_pp(points, K, rng):
    n = points.shape[0]
    centers = [points[rng.integers(n)]]
    d2 = ((points - centers[0]) ** 2).sum(1)
    for _ in range(1, K):
        tot = d2.sum()
        idx = rng.integers(n) if tot <= 0 else rng.choice(n, p=d2 / tot)
        centers.append(points[idx])
        d2 = np.minimum(d2, ((points - points[idx]) ** 2).sum(1))
    return np.array(centers)


def _lloyd(points, centers, max_iter):
    K = centers.shape[0]
    labels = None
    for _ in range(max_iter):
        dist = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(-1)
        new = np.argmin(dist, axis=1)
        counts = np.bincount(new, minlength=K)
        for empty in np.flatnonzero(counts == 0):
            # split the largest cluster: move its farthest point
            big = int(np.argmax(counts))
            members = np.flatnonzero(new == big)
            far = members[np.argmax(dist[members, big])]
            new[far] = empty
            counts = np.bincount(new, minlength=K)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        centers = np.array([points[labels == c].mean(0) for c in range(K)])
    inertia = float(((points - centers[labels]) ** 2).sum())
    return labels, inertia


def kmeans(points, K: int, seed=0, n_init: int = 10, max_iter: int = 100) -> np.ndarray:
    """Lloyd's algorithm with k-means++ seeding; best inertia over restarts."""
    points = np.asarray(points, dtype=float)
    if K > points.shape[0]:
        raise ValueError("more clusters than points")
    rng = np.random.default_rng(seed)
    best, best_inertia = None, np.inf
    for _ in range(n_init):
        labels, inertia = _lloyd(points, _kmeans_pp(points, K, rng), max_iter)
        if inertia < best_inertia - 1e-12:
            best, best_inertia = labels, inertia
    return best.astype(np.int64)


def spectral_cluster(M, K: int, seed=0) -> np.ndarray:
    """K-means on the eigenvectors of the K largest-magnitude eigenvalues."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if K > n:
        raise ValueError("K exceeds the number of nodes")
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    top = np.argsort(-np.abs(w), kind="stable")[:K]
    return kmeans(V[:, top], K, seed=seed)


def estimate_theta(A, zhat, K: int | None = None) -> np.ndarray:
    """Between-block edge densities; the pair count of cell (a, a) is n_a**2."""
    A = np.asarray(A, dtype=float)
    z = np.asarray(zhat, dtype=np.int64)
    K = int(z.max()) + 1 if K is None else K
    Z = np.zeros((z.size, K))
    Z[np.arange(z.size), z] = 1.0
    edges = Z.T @ A @ Z
    sizes = Z.sum(0)
    pairs = np.outer(sizes, sizes)
    out = np.zeros((K, K))
    nz = pairs > 0
    if not nz.all():
        warnings.warn("empty class in zhat; density set to 0")
    out[nz] = edges[nz] / pairs[nz]
    return out


def threshold_graph(theta_est, gamma0: float, gamma1: float) -> np.ndarray:
    if not gamma0 > gamma1:
        raise ValueError("need gamma0 > gamma1")
    return (np.asarray(theta_est) >= 0.5 * (gamma0 + gamma1)).astype(np.int64)


def maximal_cliques(G) -> list[tuple]:
    """All maximal cliques of a small graph, sorted.  Self-loops are ignored."""
    G = np.asarray(G)
    K = G.shape[0]
    g = nx.Graph()
    g.add_nodes_from(range(K))
    g.add_edges_from((a, b) for a in range(K) for b in range(a + 1, K) if G[a, b])
    return sorted(tuple(sorted(c)) for c in nx.find_cliques(g))


def overlapping_communities(zhat, cliques) -> list[frozenset]:
    z = np.asarray(zhat)
    return [frozenset(np.flatnonzero(np.isin(z, list(c))).tolist()) for c in cliques]


def true_overlapping_communities(z, k: int) -> list[frozenset]:
    """The 2k digit communities: first digit equal to l, then second digit."""
    z = np.asarray(z)
    first, second = z // k, z % k
    return ([frozenset(np.flatnonzero(first == l).tolist()) for l in range(k)]
            + [frozenset(np.flatnonzero(second == l).tolist()) for l in range(k)])


@dataclass(frozen=True, eq=False)
class ToricGrid:
    k: int
    d: int
    points: np.ndarray
    sqdist: np.ndarray
    cells: np.ndarray
    values: np.ndarray


def toric_grid(k: int, d: int) -> ToricGrid:
    """Grid points ``digits / k`` in ``[0, 2)^d`` and squared torus distances."""
    if k < 1 or d < 1:
        raise ValueError("k and d must be >= 1")
    m = 2 * k
    digits = np.array(list(itertools.product(range(m), repeat=d)), dtype=np.int64)
    diff = np.abs(digits[:, None, :] - digits[None, :, :])
    steps = np.minimum(diff, m - diff)
    # integer squared steps keep equal distances bitwise equal
    sq = (steps ** 2).sum(-1).astype(float) / k ** 2
    cells = equal_value_classes(sq)
    values = np.array([sq[cells == c][0] for c in range(cells.max() + 1)])
    return ToricGrid(k, d, digits / k, sq, cells, values)


def latent_theta(k: int, d: int, sigma: float) -> ThetaHat:
    """``logistic(-delta / sigma)`` on the toric grid, with the toric scheme attached."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    grid = toric_grid(k, d)
    theta = expit(-np.sqrt(grid.sqdist) / sigma)
    return make_theta_hat(theta, basis=toric_scheme(k, d))


def map_estimate_D(X, grid: ToricGrid) -> np.ndarray:
    """Per dyad, the squared grid distance carrying the most block mass."""
    return _map_by_cells(X, grid.cells, grid.values)


def randomized_estimate_D(X, grid: ToricGrid, seed: int = 0) -> np.ndarray:
    return _sample_by_cells(X, grid.cells, grid.values, seed)


def embed_coordinates(D, d: int) -> np.ndarray:
    """Classical MDS: top-d eigencoordinates of ``-1/2 H D H``."""
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    H = np.eye(n) - 1.0 / n
    G = -0.5 * H @ D @ H
    w, V = np.linalg.eigh(0.5 * (G + G.T))
    order = np.argsort(-w)[:d]
    w, V = w[order], V[:, order]
    Y = np.zeros((n, d))
    Y[:, :w.size] = V * np.sqrt(np.clip(w, 0.0, None))
    if np.sum(w > 0) < d:
        warnings.warn("fewer than d positive eigenvalues; padding with zeros")
    return Y


def estimate_bundle(X, th: ThetaHat, A, seed: int = 0, overlapping_k: int | None = None,
                    grid: ToricGrid | None = None) -> EstimateBundle:
    """Every estimate for one solution.

    ``overlapping_k`` adds the community sets, ``grid`` adds D-hat and
    coordinates of dimension ``grid.d``.
    """
    Phat = map_estimate_P(X, th)
    Ptilde = randomized_estimate_P(X, th, seed)
    zhat = round_labels(Phat, X, th, seed=seed)
    theta_est = estimate_theta(A, zhat, th.K)
    communities = Dhat = coords = None
    if overlapping_k is not None:
        G = threshold_graph(theta_est, th.values.max(), th.values.min())
        communities = overlapping_communities(zhat, maximal_cliques(G))
    if grid is not None:
        Dhat = map_estimate_D(X, grid)
        coords = embed_coordinates(Dhat, grid.d)
    return EstimateBundle(Phat, zhat, theta_est, Ptilde, communities, Dhat, coords)
