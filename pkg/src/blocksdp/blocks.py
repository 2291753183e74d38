"""Block matrices of size nK x nK addressed by (node pair, class pair).

``M[i*K + a, j*K + b]`` is entry ``(a, b)`` of block ``(i, j)`` (0-based).
Two storage forms are used:

* :class:`BlockMatrix` holds the dense matrix.
* :class:`SpanBlockMatrix` holds, for a scheme ``B_0 .. B_l``, one n x n
  coefficient matrix per scheme member so that block ``(i, j)`` equals
  ``sum_s coeffs[s, i, j] * B_s``.  All ADMM iterates stay in this form when
  the objective lies in the span, which is what makes the structured solver
  cheap.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scheme import NotInSpanError, SchemeBasis

__all__ = ["BlockMatrix", "SpanBlockMatrix", "indicator_stack", "cell_masses"]


@dataclass(frozen=True)
class BlockMatrix:
    data: np.ndarray
    K: int

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2 or data.shape[0] != data.shape[1] or data.shape[0] % self.K:
            raise ValueError(f"expected square matrix with side divisible by K={self.K}")
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[0] // self.K

    def blocks(self) -> np.ndarray:
        """View with axes ``(i, a, j, b)``."""
        n, K = self.n, self.K
        return self.data.reshape(n, K, n, K)

    def block(self, i: int, j: int) -> np.ndarray:
        K = self.K
        return self.data[i * K:(i + 1) * K, j * K:(j + 1) * K]

    def block_sums(self) -> np.ndarray:
        return self.blocks().sum(axis=(1, 3))

    def to_dense(self) -> "BlockMatrix":
        return self

    def frobenius(self) -> float:
        return float(np.linalg.norm(self.data))

    def inner(self, other) -> float:
        return float(np.vdot(self.data, other.to_dense().data))

    def symmetry_error(self) -> float:
        return float(np.max(np.abs(self.data - self.data.T))) if self.data.size else 0.0

    def to_span(self, basis: SchemeBasis, tol: float = 1e-9) -> "SpanBlockMatrix":
        """Span coordinates of every block; raises NotInSpanError if any block is off-span."""
        if basis.K != self.K:
            raise ValueError("basis size does not match K")
        Xb = self.blocks().transpose(0, 2, 1, 3)
        coeffs = np.empty((basis.size, self.n, self.n))
        spread = 0.0
        for s, B in enumerate(basis.mats):
            vals = Xb[:, :, B.astype(bool)]
            coeffs[s] = vals.mean(axis=2)
            if vals.size:
                spread = max(spread, float(np.max(vals.max(axis=2) - vals.min(axis=2))))
        if spread > tol:
            raise NotInSpanError(f"block outside scheme span (spread {spread:.3g})", spread)
        return SpanBlockMatrix(coeffs, basis)


@dataclass(frozen=True, eq=False)
class SpanBlockMatrix:
    coeffs: np.ndarray
    basis: SchemeBasis

    @property
    def n(self) -> int:
        return self.coeffs.shape[1]

    @property
    def K(self) -> int:
        return self.basis.K

    def to_dense(self) -> BlockMatrix:
        n, K = self.n, self.K
        full = np.einsum("sij,sab->iajb", self.coeffs, self.basis.mats.astype(float))
        return BlockMatrix(full.reshape(n * K, n * K), K)

    def block(self, i: int, j: int) -> np.ndarray:
        return np.tensordot(self.coeffs[:, i, j], self.basis.mats.astype(float), axes=1)

    def block_sums(self) -> np.ndarray:
        return np.tensordot(self.basis.support_sizes, self.coeffs, axes=1)

    def frobenius(self) -> float:
        w = self.basis.support_sizes
        return float(np.sqrt(np.tensordot(w, np.einsum("sij,sij->s", self.coeffs, self.coeffs), axes=1)))

    def inner(self, other) -> float:
        if isinstance(other, SpanBlockMatrix):
            w = self.basis.support_sizes
            return float(w @ np.einsum("sij,sij->s", self.coeffs, other.coeffs))
        return self.to_dense().inner(other)

    def symmetry_error(self) -> float:
        return float(np.max(np.abs(self.coeffs - self.coeffs.transpose(0, 2, 1))))


def indicator_stack(cells: np.ndarray, count: int | None = None) -> np.ndarray:
    """One-hot (C, K, K) stack from a (K, K) array of cell ids."""
    cells = np.asarray(cells)
    C = int(cells.max()) + 1 if count is None else count
    return (cells[None, :, :] == np.arange(C)[:, None, None]).astype(float)


def cell_masses(X, cells: np.ndarray, count: int | None = None) -> np.ndarray:
    """Mass of each block of ``X`` on each cell of a partition of [K]^2.

    Parameters
    ----------
    X : BlockMatrix or SpanBlockMatrix
    cells : (K, K) int array of cell ids ``0 .. C-1``

    Returns
    -------
    (C, n, n) array with ``out[c, i, j] = sum_{(a,b) in cell c} X^(ij)_ab``.
    """
    ind = indicator_stack(cells, count)
    if isinstance(X, SpanBlockMatrix):
        overlap = np.einsum("sab,cab->cs", X.basis.mats.astype(float), ind)
        return np.tensordot(overlap, X.coeffs, axes=1)
    return np.einsum("iajb,cab->cij", X.blocks(), ind, optimize=True)
