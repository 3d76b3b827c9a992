"""Positive solutions of Lichnerowicz-type equations with nonlinear Neumann
boundary conditions on weighted-graph discretizations of manifolds."""
from .errors import (ConstructionFailure, DomainError, HypothesisFailure, InvalidArgument, LichnerowiczError,
                     NonConvergence, NumericError, SchemeFailure)
from .fields import Exponents, PowerSum, ProblemSpec, Tabulated, b_theta, dual_problem
from .mesh import (BoundaryClass, DiscreteDomain, Exhaustion, build_exhaustion, build_interval_mesh,
                   build_radial_mesh, build_rectangle_mesh, restrict)
from .operators import assemble_schrodinger, residual, solve_shifted
from .spectral import dirichlet_first, zaremba_first

__version__ = "0.1.0"
