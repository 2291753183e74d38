"""Semidefinite programming estimators for general stochastic blockmodels.

The solver relaxes maximum-likelihood class assignment to an SDP over
nK x nK block matrices and solves it by ADMM.  When the fitted
``theta_hat`` lies in the span of an association scheme the PSD step
reduces to K x K work per eigenspace (see :mod:`blocksdp.solver`).
"""
from .kernels import BACKEND
from .objective import ThetaHat, build_objective, build_objective_span, make_theta_hat
from .scheme import (SchemeBasis, community_scheme, overlapping_scheme, scheme_from_spec,
                     toric_scheme, verify_scheme)
from .solver import SdpSolution, SolverConfig, solve

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ThetaHat",
    "make_theta_hat",
    "build_objective",
    "build_objective_span",
    "SchemeBasis",
    "community_scheme",
    "overlapping_scheme",
    "toric_scheme",
    "scheme_from_spec",
    "verify_scheme",
    "SolverConfig",
    "SdpSolution",
    "solve",
]
