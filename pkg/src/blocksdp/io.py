"""Text formats: edge lists, label files, CSV matrices, solution archives
and estimate bundles."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .blocks import BlockMatrix, SpanBlockMatrix
from .scheme import SchemeBasis, make_basis

__all__ = [
    "write_edge_list",
    "read_edge_list",
    "write_labels",
    "read_labels",
    "write_matrix",
    "read_matrix",
    "save_solution",
    "load_solution",
    "save_bundle",
]


def write_edge_list(A, path) -> None:
    """``n=<int>`` header, then ``i j`` per edge with i < j (0-based)."""
    A = np.asarray(A)
    n = A.shape[0]
    iu, ju = np.nonzero(np.triu(A, k=1))
    with open(path, "w") as fh:
        fh.write(f"n={n}\n")
        for i, j in zip(iu.tolist(), ju.tolist()):
            fh.write(f"{i} {j}\n")


def read_edge_list(path) -> np.ndarray:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    if not lines or not lines[0].startswith("n="):
        raise ValueError(f"{path}: missing 'n=<int>' header")
    n = int(lines[0][2:])
    A = np.zeros((n, n), dtype=np.int8)
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise ValueError(f"{path}: malformed edge line {ln!r}")
        i, j = int(parts[0]), int(parts[1])
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise ValueError(f"{path}: bad edge {i} {j}")
        A[i, j] = A[j, i] = 1
    return A


def write_labels(z, path) -> None:
    """One class number per line, 1-based."""
    with open(path, "w") as fh:
        for v in np.asarray(z, dtype=np.int64):
            fh.write(f"{v + 1}\n")


def read_labels(path) -> np.ndarray:
    with open(path) as fh:
        z = np.array([int(ln) for ln in fh if ln.strip()], dtype=np.int64)
    if z.size and z.min() < 1:
        raise ValueError(f"{path}: labels must be 1-based")
    return z - 1


def write_matrix(M, path) -> None:
    np.savetxt(path, np.atleast_2d(np.asarray(M, dtype=float)), delimiter=",", fmt="%.17g")


def read_matrix(path) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=float))


def save_solution(X, path, **meta) -> None:
    """Store a solution matrix (dense or span form) in ``.npz``."""
    if isinstance(X, SpanBlockMatrix):
        np.savez_compressed(path, kind="span", coeffs=X.coeffs, mats=X.basis.mats,
                            scheme_name=X.basis.name, **meta)
    else:
        np.savez_compressed(path, kind="dense", data=X.data, K=X.K, **meta)


def load_solution(path, basis: SchemeBasis | None = None):
    with np.load(path, allow_pickle=False) as f:
        kind = str(f["kind"])
        if kind == "span":
            if basis is None:
                basis = make_basis(f["mats"], name=str(f["scheme_name"]), check=False)
            return SpanBlockMatrix(f["coeffs"].copy(), basis)
        return BlockMatrix(f["data"].copy(), int(f["K"]))


def save_bundle(bundle, out_dir) -> Path:
    """Write phat.csv, zhat.txt, theta_est.csv and the optional extras."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_matrix(bundle.Phat, out / "phat.csv")
    write_labels(bundle.zhat, out / "zhat.txt")
    write_matrix(bundle.theta_est, out / "theta_est.csv")
    if bundle.Ptilde is not None:
        write_matrix(bundle.Ptilde, out / "ptilde.csv")
    if bundle.communities is not None:
        with open(out / "communities.txt", "w") as fh:
            for s in bundle.communities:
                fh.write(" ".join(str(i) for i in sorted(s)) + "\n")
    if bundle.Dhat is not None:
        write_matrix(bundle.Dhat, out / "dhat.csv")
    if bundle.coords is not None:
        write_matrix(bundle.coords, out / "coords.csv")
    return out
