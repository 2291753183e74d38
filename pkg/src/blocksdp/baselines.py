"""Spectral comparison methods: clustering of A and USVT."""
from __future__ import annotations

import numpy as np

from .estimators import embed_coordinates, spectral_cluster
from .model import empirical_density

__all__ = [
    "spectral_cluster_adjacency",
    "usvt_estimate",
    "distances_from_probabilities",
    "coordinates_from_probabilities",
    "usvt_latent",
]

USVT_C = 2.01
LOGIT_EPS = 1e-6


def spectral_cluster_adjacency(A, K: int, seed=0) -> np.ndarray:
    return spectral_cluster(np.asarray(A, dtype=float), K, seed=seed)


def usvt_estimate(A, c: float = USVT_C) -> np.ndarray:
    """Keep singular values above ``c sqrt(n rho)``, clip to [0, 1].

    ``rho`` is the empirical density floored at ``1/n``.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if n < 2:
        raise ValueError("need at least two nodes")
    rho = max(empirical_density(A), 1.0 / n)
    # A is symmetric: singular values are |eigenvalues|
    w, V = np.linalg.eigh(A)
    keep = np.abs(w) > c * np.sqrt(n * rho)
    P = (V[:, keep] * w[keep]) @ V[:, keep].T
    P = np.clip(0.5 * (P + P.T), 0.0, 1.0)
    np.fill_diagonal(P, 0.0)
    return P


def distances_from_probabilities(P, sigma: float, eps: float = LOGIT_EPS) -> np.ndarray:
    """Invert ``P = logistic(-dist / sigma)`` to squared distances."""
    P = np.clip(np.asarray(P, dtype=float), eps, 1 - eps)
    dist = np.maximum(sigma * np.log((1 - P) / P), 0.0)
    D = dist ** 2
    np.fill_diagonal(D, 0.0)
    return D


def coordinates_from_probabilities(P, sigma: float, d: int, eps: float = LOGIT_EPS) -> np.ndarray:
    """Latent coordinates from a probability matrix: link inversion, then MDS."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    return embed_coordinates(distances_from_probabilities(P, sigma, eps), d)


def usvt_latent(A, sigma: float, d: int, c: float = USVT_C, eps: float = LOGIT_EPS) -> np.ndarray:
    """USVT estimate of P, inverted through the logistic link, then MDS."""
    return coordinates_from_probabilities(usvt_estimate(A, c), sigma, d, eps)
