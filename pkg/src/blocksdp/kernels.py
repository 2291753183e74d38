"""Kernel dispatch: compiled extension when importable, numpy otherwise.

Set ``BLOCKSDP_PURE_PYTHON=1`` to force the numpy versions.
"""
from __future__ import annotations

import os

from . import _kernels_py as python_backend

compiled_backend = None
if os.environ.get("BLOCKSDP_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from ._ext import kernels as compiled_backend
    except ImportError:
        compiled_backend = None

_active = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "compiled" if compiled_backend is not None else "python"


def pair_uniforms(seed, lo, hi):
    return _active.pair_uniforms(seed, lo, hi)


def best_labeling(C):
    return _active.best_labeling(C)


def nonneg_dual_update(X, U, W_prev, weights):
    return _active.nonneg_dual_update(X, U, W_prev, weights)
