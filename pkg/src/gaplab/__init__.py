"""Gap labels of one-dimensional Schrodinger operators.

Four numerically independent labels are computed per spectral gap: the
rotation number of the left-decaying solution's phase, the integrated
density of states, the rotation number of the Dirichlet-value circle map,
and the edge-state trace invariant.  They agree; the package computes all of
them with error estimates and cross-verifies the equalities.
"""

from .dirichlet import (beta, interlacing_check, left_dirichlet_values,
                        mu_tilde, right_dirichlet_values, trace_flow)
from .harness import ExperimentConfig, GapLabelReport, run
from .klabel import boundary_force, build_halfline, edge_projector, pi_curves, pi_trace
from .potentials import PotentialSpec, WindowChain
from .rotation import johnson_moser_alpha, lambda_mean, rotation_number
from .spectrum import Gap, detect_gaps, dirichlet_eigenvalues, eigenvalue_count, ids

__all__ = [
    "PotentialSpec", "WindowChain", "Gap", "ExperimentConfig",
    "GapLabelReport",
    "eigenvalue_count", "dirichlet_eigenvalues", "ids", "detect_gaps",
    "lambda_mean", "rotation_number", "johnson_moser_alpha",
    "right_dirichlet_values", "left_dirichlet_values", "trace_flow",
    "interlacing_check", "mu_tilde", "beta",
    "build_halfline", "edge_projector", "pi_trace", "pi_curves",
    "boundary_force",
    "run",
]

__version__ = "0.1.0"
