"""Association schemes: axiom checks, shared eigenbasis and span coordinates.

A scheme is a list of binary symmetric K x K matrices ``B_0 .. B_l`` with
``B_0 = I``, ``sum(B_i) = J`` and products closed in the span.  Every
member is diagonalized by one orthonormal basis, which is what the
structured PSD projection in :mod:`blocksdp.solver` relies on.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

__all__ = [
    "SchemeError",
    "NotInSpanError",
    "SchemeReport",
    "SchemeBasis",
    "verify_scheme",
    "common_eigenbasis",
    "make_basis",
    "community_scheme",
    "overlapping_scheme",
    "toric_scheme",
    "circulant_classes",
    "expand",
    "decompose",
    "save_scheme_csv",
    "load_scheme_csv",
    "scheme_from_spec",
]

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61,
           67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131, 137,
           139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193, 197, 199)


class SchemeError(ValueError):
    """Raised for malformed scheme input or an ambiguous eigenspace grouping."""


class NotInSpanError(ValueError):
    """Raised when a matrix is not constant on the supports of a scheme."""

    def __init__(self, message: str, spread: float):
        super().__init__(message)
        self.spread = spread


@dataclass(frozen=True)
class SchemeReport:
    ok: bool
    violations: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def _as_int_mats(mats) -> list[np.ndarray]:
    out = []
    if len(mats) == 0:
        raise SchemeError("empty scheme")
    K = np.asarray(mats[0]).shape[0]
    for idx, m in enumerate(mats):
        m = np.asarray(m)
        if m.ndim != 2 or m.shape != (K, K):
            raise SchemeError(f"matrix {idx} is not {K}x{K}")
        if not np.all((m == 0) | (m == 1)):
            raise SchemeError(f"matrix {idx} is not binary")
        mi = m.astype(np.int64)
        if not np.array_equal(mi, mi.T):
            raise SchemeError(f"matrix {idx} is not symmetric")
        out.append(mi)
    return out


def _exact_in_span(target: np.ndarray, mats: list[np.ndarray]) -> bool:
    """Exact rational test that ``target`` lies in span(mats)."""
    cols = [[Fraction(int(v)) for v in m.ravel()] for m in mats]
    rows = [list(r) for r in zip(*cols)]
    aug = [r + [Fraction(int(t))] for r, t in zip(rows, target.ravel())]
    ncol = len(mats)
    pivot_row = 0
    for c in range(ncol):
        piv = next((r for r in range(pivot_row, len(aug)) if aug[r][c] != 0), None)
        if piv is None:
            continue
        aug[pivot_row], aug[piv] = aug[piv], aug[pivot_row]
        p = aug[pivot_row][c]
        for r in range(len(aug)):
            if r != pivot_row and aug[r][c] != 0:
                f = aug[r][c] / p
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[pivot_row])]
        pivot_row += 1
    # residual is zero iff no row reads 0 = nonzero
    return all(any(v != 0 for v in r[:ncol]) or r[ncol] == 0 for r in aug)


def verify_scheme(mats) -> SchemeReport:
    """Check the three association-scheme axioms in integer arithmetic.

    Parameters
    ----------
    mats : sequence of (K, K) binary symmetric arrays

    Returns
    -------
    SchemeReport
        ``ok`` is True when all axioms hold; otherwise ``violations`` names
        each failing axiom.
    """
    B = _as_int_mats(mats)
    K = B[0].shape[0]
    violations = []
    if not np.array_equal(B[0], np.eye(K, dtype=np.int64)):
        violations.append("axiom 1: B_0 != I")
    total = sum(B)
    partition = np.array_equal(total, np.ones((K, K), dtype=np.int64))
    if not partition:
        violations.append("axiom 2: sum of B_i != J")
    for i, j in itertools.combinations_with_replacement(range(len(B)), 2):
        prod = B[i] @ B[j]
        if partition:
            # disjoint supports: in span iff constant on each support
            ok = all(np.unique(prod[b == 1]).size <= 1 for b in B)
        else:
            ok = _exact_in_span(prod, B)
        if not ok:
            violations.append(f"axiom 3: B_{i} B_{j} not in span")
    return SchemeReport(not violations, tuple(violations))


@dataclass(frozen=True, eq=False)
class SchemeBasis:
    """An association scheme together with its common eigenstructure.

    Attributes
    ----------
    mats : (l+1, K, K) int array
        The scheme matrices, ``mats[0]`` is the identity.
    eigvecs : (K, K) array
        Orthonormal columns; the columns of ``partition[0]`` span the
        eigenspace containing the all-ones vector, whose normalized form is
        column ``partition[0][0]``.
    partition : tuple of index tuples
        Eigenspace cells ``S_0 .. S_m``.
    eigtable : (l+1, m+1) array
        ``eigtable[i, j]`` is the eigenvalue of ``B_i`` on cell ``S_j``.
    """

    mats: np.ndarray
    eigvecs: np.ndarray
    partition: tuple
    eigtable: np.ndarray
    name: str = "custom"
    projectors: np.ndarray = field(init=False, repr=False)
    support_sizes: np.ndarray = field(init=False, repr=False)
    _to_coeffs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        V = self.eigvecs
        E = np.stack([V[:, list(S)] @ V[:, list(S)].T for S in self.partition])
        object.__setattr__(self, "projectors", E)
        object.__setattr__(self, "support_sizes",
                           self.mats.reshape(len(self.mats), -1).sum(axis=1).astype(float))
        table = self.eigtable
        if table.shape[0] == table.shape[1]:
            inv = np.linalg.inv(table)
        else:
            inv = np.linalg.pinv(table)
        object.__setattr__(self, "_to_coeffs", inv)

    @property
    def K(self) -> int:
        return self.mats.shape[1]

    @property
    def size(self) -> int:
        """Number of scheme matrices, ``l + 1``."""
        return self.mats.shape[0]

    @property
    def cell_sizes(self) -> np.ndarray:
        return np.array([len(S) for S in self.partition], dtype=float)

    @property
    def support_index(self) -> np.ndarray:
        """(K, K) int array naming the scheme matrix that covers each entry."""
        return np.argmax(self.mats, axis=0)

    def to_eigen(self, coeffs: np.ndarray) -> np.ndarray:
        """Map span coefficients (axis 0) to eigenvalue coefficients."""
        return np.tensordot(self.eigtable.T, coeffs, axes=1)

    def from_eigen(self, lams: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`to_eigen`."""
        return np.tensordot(self._to_coeffs.T, lams, axes=1)

    def reconstruction_error(self) -> float:
        """Max over i of ``||B_i - sum_j eigtable[i, j] E_j||_F``."""
        recon = np.tensordot(self.eigtable, self.projectors, axes=1)
        return float(max(np.linalg.norm(recon[i] - self.mats[i]) for i in range(self.size)))


def _weight_candidates(L: int):
    yield np.asarray(_PRIMES[:L], dtype=float)
    yield np.sqrt(np.asarray(_PRIMES[:L], dtype=float))
    rng = np.random.default_rng(0)
    for _ in range(8):
        yield rng.uniform(1.0, 2.0, size=L)


def common_eigenbasis(mats, weights=None, rtol: float = 1e-8):
    """Shared eigenvectors, eigenspace partition and eigenvalue table.

    A generic element ``sum_i w_i B_i`` is diagonalized and its eigenvectors
    are grouped by eigenvalue.  Without explicit weights the first primes are
    tried, then square roots of primes, then a few seeded random draws; the
    first weight vector whose grouping diagonalizes every matrix wins.

    Returns
    -------
    V : (K, K) array
    partition : tuple of tuples
    eigtable : (l+1, m+1) array

    Raises
    ------
    SchemeError
        If the grouping does not diagonalize every matrix, which happens when
        two eigenspaces collide under the chosen weights.
    """
    B = np.asarray(mats, dtype=float)
    L = B.shape[0]
    if weights is not None:
        return _eigenbasis_with(B, np.asarray(weights, dtype=float), rtol)
    if L > len(_PRIMES):
        raise SchemeError("too many matrices for default weights; pass weights")
    err = None
    for w in _weight_candidates(L):
        try:
            return _eigenbasis_with(B, w, rtol)
        except SchemeError as exc:
            err = exc
    raise err


def _eigenbasis_with(B: np.ndarray, weights: np.ndarray, rtol: float):
    L, K = B.shape[0], B.shape[1]
    if weights.shape != (L,):
        raise SchemeError("one weight per scheme matrix required")
    M = np.tensordot(weights, B, axes=1)
    w, V = np.linalg.eigh(M)
    scale = max(1.0, float(np.max(np.abs(w))))
    order = np.argsort(-w, kind="stable")
    w, V = w[order], V[:, order]
    groups: list[list[int]] = []
    for k in range(K):
        if groups and abs(w[k] - w[groups[-1][0]]) <= rtol * scale:
            groups[-1].append(k)
        else:
            groups.append([k])
    gaps = np.abs(np.diff(w))
    close = gaps[(gaps > rtol * scale) & (gaps < 1e3 * rtol * scale)]
    if close.size:
        raise SchemeError("eigenvalue gap close to grouping tolerance; "
                          "supply different weights")

    # put the ones-direction cell first, with 1/sqrt(K) as its first column
    ones = np.ones(K) / np.sqrt(K)
    overlaps = [np.linalg.norm(V[:, g].T @ ones) for g in groups]
    g1 = int(np.argmax(overlaps))
    if abs(overlaps[g1] - 1.0) > 1e-8:
        raise SchemeError("all-ones vector is not an eigenvector of the generic element")
    groups.insert(0, groups.pop(g1))
    cols = groups[0]
    sub = V[:, cols]
    Q, _ = np.linalg.qr(np.column_stack([ones, sub]))
    Q = Q[:, : len(cols)]
    if Q[:, 0] @ ones < 0:
        Q[:, 0] = -Q[:, 0]
    V = V.copy()
    V[:, cols] = Q

    partition = []
    idx = 0
    V_out = np.empty_like(V)
    for g in groups:
        V_out[:, idx: idx + len(g)] = V[:, g]
        partition.append(tuple(range(idx, idx + len(g))))
        idx += len(g)

    table = np.empty((L, len(partition)))
    for j, S in enumerate(partition):
        vs = V_out[:, list(S)]
        diag = np.einsum("ka,ikl,la->ia", vs, B, vs)
        table[:, j] = diag[:, 0]
        if np.max(np.abs(diag - diag[:, :1])) > 1e-8 * max(1.0, K):
            raise SchemeError("eigenspace grouping is ambiguous; supply different weights")
    E = np.stack([V_out[:, list(S)] @ V_out[:, list(S)].T for S in partition])
    recon = np.tensordot(table, E, axes=1)
    if np.max(np.abs(recon - B)) > 1e-8 * max(1.0, K):
        raise SchemeError("eigenspace grouping does not diagonalize the scheme; "
                          "supply different weights")
    return V_out, tuple(partition), table


def make_basis(mats, name: str = "custom", weights=None, check: bool = True) -> SchemeBasis:
    """Build a :class:`SchemeBasis`, verifying the axioms first."""
    if check:
        report = verify_scheme(mats)
        if not report.ok:
            raise SchemeError("; ".join(report.violations))
    B = np.asarray(mats, dtype=np.int64)
    V, partition, table = common_eigenbasis(B, weights=weights)
    return SchemeBasis(B, V, partition, table, name=name)


def community_scheme(K: int) -> SchemeBasis:
    """``{I, J - I}``: equal in-class and equal between-class values."""
    if K < 1:
        raise ValueError("K must be >= 1")
    eye = np.eye(K, dtype=np.int64)
    if K == 1:
        return make_basis([eye], name="community")
    return make_basis([eye, 1 - eye], name="community")


def overlapping_scheme(k: int) -> SchemeBasis:
    """Scheme on K = k**2 classes indexed by digit pairs ``(a1, a2)``.

    ``B_1`` marks pairs sharing exactly one digit, ``B_2`` pairs sharing none.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    eye = np.eye(k, dtype=np.int64)
    off = 1 - eye
    B0 = np.kron(eye, eye)
    B1 = np.kron(off, eye) + np.kron(eye, off)
    B2 = np.kron(off, off)
    return make_basis([B0, B1, B2], name="overlapping")


def circulant_classes(k: int) -> list[np.ndarray]:
    """Distance classes ``C^(0) .. C^(k)`` of the cycle on 2k vertices."""
    m = 2 * k
    a = np.arange(m)
    diff = np.abs(a[:, None] - a[None, :])
    dist = np.minimum(diff, m - diff)
    return [(dist == j).astype(np.int64) for j in range(k + 1)]


def toric_scheme(k: int, d: int) -> SchemeBasis:
    """d-fold tensor power of the 2k-cycle distance scheme, K = (2k)**d.

    Matrices are ordered lexicographically by their distance tuples
    ``(j_1, .., j_d)``, so the first one is the identity.
    """
    if k < 1 or d < 1:
        raise ValueError("k and d must be >= 1")
    C = circulant_classes(k)
    mats = []
    for tup in itertools.product(range(k + 1), repeat=d):
        m = np.ones((1, 1), dtype=np.int64)
        for j in tup:
            m = np.kron(m, C[j])
        mats.append(m)
    K = (2 * k) ** d
    assert len(mats) == (k + 1) ** d <= K
    return make_basis(mats, name="toric")


def expand(gamma, basis: SchemeBasis) -> np.ndarray:
    """``sum_i gamma_i B_i``."""
    gamma = np.asarray(gamma, dtype=float)
    if gamma.shape != (basis.size,):
        raise ValueError(f"expected {basis.size} coefficients, got {gamma.shape}")
    return np.tensordot(gamma, basis.mats.astype(float), axes=1)


def decompose(M, basis: SchemeBasis, tol: float = 1e-12) -> np.ndarray:
    """Span coordinates of ``M``; raises :class:`NotInSpanError` otherwise."""
    M = np.asarray(M, dtype=float)
    if M.shape != (basis.K, basis.K):
        raise ValueError("shape mismatch")
    gamma = np.empty(basis.size)
    spread = 0.0
    for i, B in enumerate(basis.mats):
        vals = M[B == 1]
        gamma[i] = vals[0]
        spread = max(spread, float(vals.max() - vals.min()))
    if spread > tol:
        raise NotInSpanError(f"matrix not in scheme span (spread {spread:.3g})", spread)
    return gamma


def save_scheme_csv(basis: SchemeBasis, out_dir) -> None:
    """Dump a scheme for debugging: one CSV per B_i plus the eigenbasis."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i, B in enumerate(basis.mats):
        np.savetxt(out / f"B{i}.csv", B, fmt="%d", delimiter=",")
    np.savetxt(out / "eigvecs.csv", basis.eigvecs, delimiter=",")
    np.savetxt(out / "eigtable.csv", basis.eigtable, delimiter=",")
    with open(out / "partition.txt", "w") as fh:
        for S in basis.partition:
            fh.write(" ".join(str(s) for s in S) + "\n")


def load_scheme_csv(src) -> list[np.ndarray]:
    """Read ``B0.csv, B1.csv, ..`` from a directory (integer matrices)."""
    src = Path(src)
    files = sorted((f for f in src.glob("B*.csv") if f.stem[1:].isdigit()),
                   key=lambda f: int(f.stem[1:]))
    if not files:
        raise SchemeError(f"{src}: no B<i>.csv files")
    return [np.atleast_2d(np.loadtxt(f, delimiter=",", dtype=np.int64)) for f in files]


def scheme_from_spec(spec: str) -> SchemeBasis:
    """Named scheme from a short spec string.

    ``community:K``, ``overlapping:k``, ``toric:k,d`` or a directory of
    ``B<i>.csv`` files.
    """
    spec = spec.strip()
    name, _, args = spec.partition(":")
    try:
        vals = [int(a) for a in args.split(",")] if args else []
    except ValueError:
        raise SchemeError(f"bad scheme spec {spec!r}") from None
    if name == "community" and len(vals) == 1:
        return community_scheme(vals[0])
    if name == "overlapping" and len(vals) == 1:
        return overlapping_scheme(vals[0])
    if name == "toric" and len(vals) == 2:
        return toric_scheme(vals[0], vals[1])
    if Path(spec).is_dir():
        return make_basis(load_scheme_csv(spec), name=Path(spec).name)
    raise SchemeError(f"bad scheme spec {spec!r}; expected community:K, overlapping:k, "
                      "toric:k,d or a directory")
