"""Likelihood objective ``F`` of the SDP, its idealized version and a
brute-force oracle for the underlying combinatorial problem."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .blocks import BlockMatrix, SpanBlockMatrix
from .model import equal_value_classes
from .scheme import SchemeBasis, decompose

__all__ = [
    "THETA_EPS",
    "ThetaHat",
    "make_theta_hat",
    "build_objective",
    "build_objective_span",
    "build_ideal_objective",
    "indicator_outer",
    "combinatorial_value",
    "brute_force_ml",
    "BRUTE_FORCE_LIMIT",
]

THETA_EPS = 1e-12
BRUTE_FORCE_LIMIT = 10 ** 6


@dataclass(frozen=True, eq=False)
class ThetaHat:
    """Working parameter matrix, clamped into ``[eps, 1 - eps]``.

    ``value_classes`` is the equal-value partition of ``theta`` (cell ids in
    increasing value order, see :func:`blocksdp.model.equal_value_classes`).
    ``basis``/``coeffs`` are set when ``theta`` lies in a scheme span.
    """

    theta: np.ndarray
    value_classes: np.ndarray
    values: np.ndarray
    basis: SchemeBasis | None = None
    coeffs: np.ndarray | None = None

    @property
    def K(self) -> int:
        return self.theta.shape[0]


def make_theta_hat(theta, basis: SchemeBasis | None = None, eps: float = THETA_EPS) -> ThetaHat:
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 2 or theta.shape[0] != theta.shape[1]:
        raise ValueError("theta must be square")
    if not np.allclose(theta, theta.T, rtol=0, atol=1e-12):
        raise ValueError("theta must be symmetric")
    theta = np.clip(0.5 * (theta + theta.T), eps, 1 - eps)
    cells = equal_value_classes(theta)
    values = np.array([theta[cells == c][0] for c in range(cells.max() + 1)])
    coeffs = None
    if basis is not None:
        if basis.K != theta.shape[0]:
            raise ValueError("basis size does not match theta")
        coeffs = decompose(theta, basis)
    return ThetaHat(theta, cells, values, basis, coeffs)


def _check_sizes(M, th: ThetaHat) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("expected a square matrix")
    return M


def _objective_from(M, th: ThetaHat, include_diagonal_blocks: bool) -> BlockMatrix:
    M = _check_sizes(M, th)
    n, K = M.shape[0], th.K
    lt, l1t = np.log(th.theta), np.log1p(-th.theta)
    F = M[:, None, :, None] * lt[None, :, None, :] + (1 - M)[:, None, :, None] * l1t[None, :, None, :]
    if not include_diagonal_blocks:
        idx = np.arange(n)
        F[idx, :, idx, :] = 0.0
    return BlockMatrix(F.reshape(n * K, n * K), K)


def build_objective(A, th: ThetaHat, include_diagonal_blocks: bool = False) -> BlockMatrix:
    """Dense ``F`` with ``F^(ij)_ab = A_ij log th_ab + (1 - A_ij) log(1 - th_ab)``.

    Diagonal blocks are zero unless ``include_diagonal_blocks`` is set, in
    which case they follow the formula with ``A_ii = 0``.
    """
    return _objective_from(A, th, include_diagonal_blocks)


def build_ideal_objective(P, th: ThetaHat, include_diagonal_blocks: bool = False) -> BlockMatrix:
    """As :func:`build_objective` with the edge probabilities ``P`` in place of ``A``."""
    return _objective_from(P, th, include_diagonal_blocks)


def build_objective_span(A, th: ThetaHat, include_diagonal_blocks: bool = False) -> SpanBlockMatrix:
    """``F`` in scheme coordinates; requires ``th`` to carry a basis."""
    if th.basis is None:
        raise ValueError("theta_hat has no scheme attached")
    A = _check_sizes(A, th)
    g = th.coeffs
    coeffs = (A[None, :, :] * np.log(g)[:, None, None]
              + (1 - A)[None, :, :] * np.log1p(-g)[:, None, None])
    if not include_diagonal_blocks:
        idx = np.arange(A.shape[0])
        coeffs[:, idx, idx] = 0.0
    return SpanBlockMatrix(coeffs, th.basis)


def indicator_outer(z, K: int) -> BlockMatrix:
    """``x(z) x(z)^T`` for the stacked one-hot vector ``x(z)``."""
    z = np.asarray(z, dtype=np.int64)
    x = np.zeros((z.size, K))
    x[np.arange(z.size), z] = 1.0
    x = x.ravel()
    return BlockMatrix(np.outer(x, x), K)


def combinatorial_value(F, z) -> float:
    """``sum_ij F^(ij)[z_i, z_j]``."""
    z = np.asarray(z, dtype=np.int64)
    if isinstance(F, SpanBlockMatrix):
        B = F.basis.mats.astype(float)[:, z][:, :, z]
        return float(np.einsum("sij,sij->", F.coeffs, B))
    if z.size != F.n:
        raise ValueError("label vector length does not match F")
    Fb = F.blocks()
    return float(Fb[np.arange(z.size)[:, None], z[:, None], np.arange(z.size)[None, :], z[None, :]].sum())


def brute_force_ml(F, limit: int = BRUTE_FORCE_LIMIT):
    """Exhaustive maximizer of :func:`combinatorial_value`.

    Returns ``(z, value)``; ties go to the lexicographically first labeling.
    """
    F = F.to_dense()
    n, K = F.n, F.K
    if K ** n > limit:
        raise ValueError(f"K**n = {K}**{n} exceeds the brute-force limit {limit}")
    C = np.ascontiguousarray(F.blocks().transpose(0, 2, 1, 3))
    z, val = kernels.best_labeling(C)
    return np.asarray(z, dtype=np.int64), float(val)
