"""LP-based branch and bound MIP solver with conflict-driven diving."""

from .model import (FEAS_TOL, INT_TOL, INF, LocalBounds, Point, Problem,
                    check_feasible, pseudo_solution, validate)
from .mps import MpsFormatError, load_mps, parse_mps, write_mps
from .simplex import FarkasRay, LpResult, solve_lp, verify_farkas_ray
from .propagation import BoundChange, PropResult, RowSystem, propagate
from .locks import LockTable, WeightedLocks, problem_locks, weighted_locks
from .conflict import (ConflictConstraint, ConflictPool, LockSignViolation,
                       Proof, analyze_infeasibility, build_farkas_proof)
from .heuristics import (CONFLICT, COEF, FARKAS, HEURISTICS, DiveContext,
                         HeuristicSpec)
from .diving import (DivePolicy, DiveStats, FARKAS_POLICY, LOCKS_POLICY,
                     dive, lp_resolve_due, round_to_solution)
from .solver import Config, SolveResult, SolveStats, solve
from .bench import (RunRecord, dual_integral, performance_profile,
                    primal_integral, run_benchmark, shifted_geomean,
                    summarize)
from . import generate

__version__ = "0.1.0"

__all__ = [
    "FEAS_TOL", "INT_TOL", "INF", "LocalBounds", "Point", "Problem",
    "check_feasible", "pseudo_solution", "validate",
    "MpsFormatError", "load_mps", "parse_mps", "write_mps",
    "FarkasRay", "LpResult", "solve_lp", "verify_farkas_ray",
    "BoundChange", "PropResult", "RowSystem", "propagate",
    "LockTable", "WeightedLocks", "problem_locks", "weighted_locks",
    "ConflictConstraint", "ConflictPool", "LockSignViolation", "Proof",
    "analyze_infeasibility", "build_farkas_proof",
    "CONFLICT", "COEF", "FARKAS", "HEURISTICS", "DiveContext",
    "HeuristicSpec",
    "DivePolicy", "DiveStats", "FARKAS_POLICY", "LOCKS_POLICY", "dive",
    "lp_resolve_due", "round_to_solution",
    "Config", "SolveResult", "SolveStats", "solve",
    "RunRecord", "dual_integral", "performance_profile",
    "primal_integral", "run_benchmark", "shifted_geomean", "summarize",
    "generate",
    "__version__",
]
