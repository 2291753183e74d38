"""ADMM for ``max <F, X>`` over PSD, entrywise nonnegative nK x nK matrices
whose K x K blocks each sum to one.

Iterates are kept either as dense :class:`~blocksdp.blocks.BlockMatrix` or,
when ``F`` lies blockwise in the span of an association scheme, as
:class:`~blocksdp.blocks.SpanBlockMatrix`.  In the span form the PSD
projection reduces to one n x n eigendecomposition per scheme eigenspace.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .blocks import BlockMatrix, SpanBlockMatrix
from .scheme import NotInSpanError, SchemeBasis

__all__ = [
    "SolverConfig",
    "AdmmState",
    "SdpSolution",
    "SolverDivergence",
    "project_affine",
    "project_psd_dense",
    "extract_eigencoeffs",
    "project_psd_structured",
    "project_psd_span",
    "zero_state",
    "admm_step",
    "residuals",
    "solve",
    "feasibility_error",
    "write_trace",
]


class SolverDivergence(RuntimeError):
    def __init__(self, message, history):
        super().__init__(message)
        self.history = history


@dataclass(frozen=True)
class SolverConfig:
    """ADMM settings.

    ``penalty`` is the ADMM step parameter; when None it is
    ``penalty_scale * ||F||_F / (nK)`` (or ``penalty_scale`` when F = 0).
    """

    penalty: float | None = None
    penalty_scale: float = 10.0
    max_iter: int = 2000
    tol_primal: float = 1e-5
    tol_dual: float = 1e-5
    mode: str = "auto"
    span_check_blocks: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.penalty is not None and not self.penalty > 0:
            raise ValueError("penalty must be positive")
        if not (self.tol_primal > 0 and self.tol_dual > 0):
            raise ValueError("tolerances must be positive")
        if self.mode not in ("dense", "structured", "auto"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass(frozen=True, eq=False)
class AdmmState:
    X: object
    W: object
    Y: object
    U: object
    V: object
    t: int = 0
    history: tuple = ()
    W_prev: object = None
    Y_prev: object = None


@dataclass(frozen=True, eq=False)
class SdpSolution:
    X: object
    objective: float
    iterations: int
    converged: bool
    mode_used: str
    penalty: float
    history: tuple = field(default=(), repr=False)
    trace: tuple = field(default=(), repr=False)


# -- projections -----------------------------------------------------------

def project_affine(M):
    """Shift every block by a constant so that it sums to one."""
    if isinstance(M, SpanBlockMatrix):
        K = M.K
        shift = (M.block_sums() - 1.0) / K ** 2
        return SpanBlockMatrix(M.coeffs - shift[None, :, :], M.basis)
    n, K = M.n, M.K
    Mb = M.blocks()
    shift = (Mb.sum(axis=(1, 3)) - 1.0) / K ** 2
    out = Mb - shift[:, None, :, None]
    return BlockMatrix(out.reshape(n * K, n * K), K)


def _psd_part(S: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(S)
    pos = w > 0
    if pos.all():
        return S.copy()
    Vp = V[:, pos]
    out = (Vp * w[pos]) @ Vp.T
    return 0.5 * (out + out.T)


def project_psd_dense(M: BlockMatrix, sym_tol: float = 1e-8) -> BlockMatrix:
    """Nearest PSD matrix in Frobenius norm (clip negative eigenvalues)."""
    M = M.to_dense()
    if M.symmetry_error() > sym_tol:
        raise ValueError("matrix is not symmetric")
    S = 0.5 * (M.data + M.data.T)
    return BlockMatrix(_psd_part(S), M.K)


def _check_span(M: BlockMatrix, basis: SchemeBasis, sample: int | None, seed: int = 0,
                tol: float = 1e-9) -> None:
    n = M.n
    Mb = M.blocks()
    if sample is None or sample >= n * n:
        pairs = [(i, j) for i in range(n) for j in range(n)]
    else:
        rng = np.random.default_rng(seed)
        pairs = list(zip(rng.integers(0, n, sample).tolist(), rng.integers(0, n, sample).tolist()))
    for i, j in pairs:
        blk = Mb[i, :, j, :]
        for B in basis.mats:
            vals = blk[B == 1]
            if vals.size and vals.max() - vals.min() > tol * max(1.0, np.abs(vals).max()):
                raise NotInSpanError(f"block ({i}, {j}) outside scheme span",
                                     float(vals.max() - vals.min()))


def extract_eigencoeffs(M: BlockMatrix, basis: SchemeBasis, check: str = "sample") -> np.ndarray:
    """Eigenvalue of every block on every scheme eigenspace.

    Returns an array of shape ``(m+1, n, n)`` with
    ``out[l, i, j] = trace(E_l M^(ij)) / |S_l|``.  ``check`` is ``"sample"``
    (32 random blocks), ``"full"`` or ``"none"``.
    """
    if basis.K != M.K:
        raise ValueError("basis size does not match K")
    if check != "none":
        _check_span(M, basis, None if check == "full" else 32)
    Mb = M.blocks()
    tr = np.einsum("iajb,lba->lij", Mb, basis.projectors, optimize=True)
    return tr / basis.cell_sizes[:, None, None]


def _assemble(lams: np.ndarray, basis: SchemeBasis) -> BlockMatrix:
    n, K = lams.shape[1], basis.K
    full = np.einsum("lij,lab->iajb", lams, basis.projectors, optimize=True)
    return BlockMatrix(full.reshape(n * K, n * K), K)


def project_psd_structured(M: BlockMatrix, basis: SchemeBasis, check: str = "sample") -> BlockMatrix:
    """PSD projection via ``sum_l P+(Lambda_l) (x) E_l`` assembled blockwise."""
    lams = extract_eigencoeffs(M, basis, check=check)
    lams = np.stack([_psd_part(0.5 * (L + L.T)) for L in lams])
    return _assemble(lams, basis)


def project_psd_span(M: SpanBlockMatrix) -> SpanBlockMatrix:
    """PSD projection of a span-form matrix, staying in span form."""
    basis = M.basis
    lams = basis.to_eigen(M.coeffs)
    lams = np.stack([_psd_part(0.5 * (L + L.T)) for L in lams])
    return SpanBlockMatrix(basis.from_eigen(lams), basis)


# -- iteration -------------------------------------------------------------

def _raw(M) -> np.ndarray:
    return M.coeffs if isinstance(M, SpanBlockMatrix) else M.data


def _wrap(arr: np.ndarray, like):
    if isinstance(like, SpanBlockMatrix):
        return SpanBlockMatrix(arr, like.basis)
    return BlockMatrix(arr, like.K)


def _weights_2d(M):
    """2-D view of the raw array plus per-row Frobenius weights."""
    if isinstance(M, SpanBlockMatrix):
        S = M.coeffs.shape[0]
        return M.basis.support_sizes, (S, -1)
    return np.ones(1), (1, -1)


def zero_state(F) -> AdmmState:
    z = np.zeros_like(_raw(F))
    mk = lambda: _wrap(z.copy(), F)  # noqa: E731
    return AdmmState(mk(), mk(), mk(), mk(), mk())


def _frob(M) -> float:
    return M.frobenius()


def admm_step(state: AdmmState, F, config: SolverConfig, basis: SchemeBasis | None = None,
              penalty: float | None = None) -> AdmmState:
    """One sweep of the five ADMM updates.

    With dense iterates and ``config.mode == "structured"`` the PSD step
    uses :func:`project_psd_structured`; span-form iterates always use the
    span projection.
    """
    rho = penalty if penalty is not None else _default_penalty(F, config)
    W, Y, U, V = (_raw(state.W), _raw(state.Y), _raw(state.U), _raw(state.V))
    Fr = _raw(F)
    X = project_affine(_wrap(0.5 * (W - U + Y - V + Fr / rho), F))
    Xr = _raw(X)

    weights, shape2 = _weights_2d(F)
    U_new = U.copy()
    W_new2, prim_w, dual_w = kernels.nonneg_dual_update(
        np.ascontiguousarray(Xr).reshape(shape2), U_new.reshape(shape2),
        np.ascontiguousarray(W).reshape(shape2), weights)
    W_new = W_new2.reshape(Xr.shape)

    XV = _wrap(Xr + V, F)
    if isinstance(XV, SpanBlockMatrix):
        Y_new = project_psd_span(XV)
    elif config.mode == "structured":
        if basis is None:
            raise ValueError("structured mode needs a scheme basis")
        Y_new = project_psd_structured(XV, basis, check="none")
    else:
        Y_new = project_psd_dense(XV, sym_tol=np.inf)
    Yr = _raw(Y_new)
    V_new = V + Xr - Yr

    new = AdmmState(X, _wrap(W_new, F), Y_new, _wrap(U_new, F), _wrap(V_new, F),
                    t=state.t + 1, history=state.history, W_prev=state.W, Y_prev=state.Y)
    p, d = residuals(new, rho)
    obj = X.inner(F) if isinstance(X, SpanBlockMatrix) else float(np.vdot(Xr, Fr))
    return replace(new, history=state.history + ((p, d, obj),))


def residuals(state: AdmmState, penalty: float = 1.0):
    """``(primal, dual)`` scaled by ``1/(nK)``."""
    if state.W_prev is None:
        raise ValueError("residuals need at least one completed step")
    X = state.X
    nK = X.n * X.K
    prim = max(_frob(_wrap(_raw(X) - _raw(state.W), X)), _frob(_wrap(_raw(X) - _raw(state.Y), X)))
    dual = max(_frob(_wrap(_raw(state.W) - _raw(state.W_prev), X)),
               _frob(_wrap(_raw(state.Y) - _raw(state.Y_prev), X)))
    return prim / nK, penalty * dual / nK


def _default_penalty(F, config: SolverConfig) -> float:
    if config.penalty is not None:
        return config.penalty
    nK = F.n * F.K
    norm = F.frobenius()
    return config.penalty_scale * (norm / nK if norm > 0 else 1.0)


def _span_ok(F: BlockMatrix, basis: SchemeBasis, config: SolverConfig) -> bool:
    try:
        _check_span(F, basis, config.span_check_blocks, seed=config.seed)
    except NotInSpanError:
        return False
    return True


def solve(F, config: SolverConfig | None = None, basis: SchemeBasis | None = None,
          callback=None) -> SdpSolution:
    """Run ADMM to the residual tolerances or ``max_iter``.

    The reported ``X`` is the final nonnegative iterate ``W`` shifted back
    onto the block-sum constraints.

    Raises
    ------
    SolverDivergence
        If the larger residual exceeds 100 times its running minimum.
    """
    config = config or SolverConfig()
    if F.symmetry_error() > 1e-8 * max(1.0, F.frobenius()):
        raise ValueError("F is not symmetric")

    mode = config.mode
    if isinstance(F, SpanBlockMatrix):
        Fw = F
        mode_used = "structured" if mode != "dense" else "dense"
        if mode == "dense":
            Fw = F.to_dense()
        basis = F.basis
    else:
        if mode == "auto":
            mode = "structured" if basis is not None and _span_ok(F, basis, config) else "dense"
        if mode == "structured":
            if basis is None:
                raise ValueError("structured mode needs a scheme basis")
            Fw = F.to_span(basis)
        else:
            Fw = F
        mode_used = mode

    rho = _default_penalty(Fw, config)
    state = zero_state(Fw)
    step_cfg = replace(config, mode="dense" if isinstance(Fw, BlockMatrix) else "structured")
    best = np.inf
    floor = min(config.tol_primal, config.tol_dual)
    converged = False
    trace = []
    t0 = time.perf_counter()
    for _ in range(config.max_iter):
        state = admm_step(state, Fw, step_cfg, basis, penalty=rho)
        p, d, obj = state.history[-1]
        trace.append((state.t, obj, p, d, 1e3 * (time.perf_counter() - t0)))
        if callback is not None:
            callback(state)
        if p < config.tol_primal and d < config.tol_dual:
            converged = True
            break
        r = max(p, d)
        if state.t > 10 and r > 100 * max(best, floor):
            raise SolverDivergence(f"residual {r:.3g} grew 100x from {best:.3g}", state.history)
        best = min(best, r)

    X = project_affine(state.W)
    if isinstance(F, SpanBlockMatrix) and isinstance(X, BlockMatrix):
        objective = X.inner(F.to_dense())
    else:
        objective = X.inner(Fw)
    return SdpSolution(X, objective, state.t, converged, mode_used, rho,
                       history=state.history, trace=tuple(trace))


def feasibility_error(X) -> float:
    """Largest violation among nonnegativity, PSD-ness and unit block sums."""
    if isinstance(X, SpanBlockMatrix):
        neg = max(0.0, -float(X.coeffs.min()))
        lams = X.basis.to_eigen(X.coeffs)
        eig = max(0.0, -min(float(np.linalg.eigvalsh(0.5 * (L + L.T)).min()) for L in lams))
        sums = X.block_sums()
    else:
        neg = max(0.0, -float(X.data.min()))
        eig = max(0.0, -float(np.linalg.eigvalsh(0.5 * (X.data + X.data.T)).min()))
        sums = X.block_sums()
    return max(neg, eig, float(np.max(np.abs(sums - 1.0))))


def write_trace(solution: SdpSolution, path) -> None:
    """Per-iteration CSV: iter, objective, primal_residual, dual_residual, wall_ms."""
    with open(path, "w") as fh:
        fh.write("iter,objective,primal_residual,dual_residual,wall_ms\n")
        for it, obj, p, d, ms in solution.trace:
            fh.write(f"{it},{obj:.12g},{p:.6e},{d:.6e},{ms:.3f}\n")
