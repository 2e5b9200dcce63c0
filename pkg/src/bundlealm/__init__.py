"""Bundle-based augmented Lagrangian solver for conic problems.

Solves  min <c, x>  s.t.  A x = b,  x in Omega  for compact convex Omega
(simplex-like, second-order-cone, and trace-bounded semidefinite sets)
by minimizing the dual of the augmented Lagrangian with an adaptively
updated inner approximation of Omega.
"""

from .cones import NonnegL1, PsdTrace, SocBound
from .generators import gen_2d_lp, gen_matrix_completion, gen_rank1_sdp
from .model import (Certificate, ConicProblem, LinearMap, smat, svec,
                    validate_problem)
from .probio import read_problem, read_sdpa, write_problem
from .solver import (InvariantViolation, SolveResult, SolverConfig,
                     bundle_alm_solve, bundle_alm_step, init_state)

__version__ = "0.1.0"

__all__ = [
    "NonnegL1",
    "SocBound",
    "PsdTrace",
    "Certificate",
    "ConicProblem",
    "LinearMap",
    "svec",
    "smat",
    "validate_problem",
    "gen_2d_lp",
    "gen_rank1_sdp",
    "gen_matrix_completion",
    "read_problem",
    "write_problem",
    "read_sdpa",
    "SolverConfig",
    "SolveResult",
    "InvariantViolation",
    "bundle_alm_solve",
    "bundle_alm_step",
    "init_state",
    "__version__",
]
