"""Shared fixtures and independent oracles.

The oracles here deliberately avoid the library's own algorithms: the MIP
oracle enumerates all 0/1 assignments, and the LP oracle enumerates basic
points from every n-subset of tight constraints.  Expected values in the
test modules were produced by these.
"""

import itertools
import math

import numpy as np
import pytest

from divebnb import FEAS_TOL, INT_TOL, LocalBounds, Problem, check_feasible


# ---------------------------------------------------------------- instances

def make_e4() -> Problem:
    """min -x1 - x2 s.t. -2x1 - 2x2 >= -3, x binary."""
    return Problem.build([-1.0, -1.0], [[-2.0, -2.0]], [-3.0],
                         [0.0, 0.0], [1.0, 1.0], [0, 1], name="e4")


def make_e1(integer: bool = False) -> Problem:
    """x1 + x2 >= 2 and x1 + x2 <= 1 within [0, 10]^2: infeasible."""
    return Problem.build([0.0, 0.0], [[1.0, 1.0], [-1.0, -1.0]], [2.0, -1.0],
                         [0.0, 0.0], [10.0, 10.0],
                         [0, 1] if integer else [], name="e1")


@pytest.fixture
def e4():
    return make_e4()


@pytest.fixture
def e1():
    return make_e1()


# ------------------------------------------------------------------ oracles

def brute_force_binary(p: Problem):
    """Exact optimum of a pure-binary instance by full enumeration.

    Returns (objective, solution) or None when no assignment is feasible.
    """
    assert p.int_set.size == p.n, "oracle only covers pure-binary instances"
    best = None
    for bits in itertools.product((0.0, 1.0), repeat=p.n):
        x = np.array(bits)
        if check_feasible(p, x) is None:
            v = float(p.c @ x)
            if best is None or v < best[0] - 1e-12:
                best = (v, x)
    return best


def enumerate_feasible_binary(p: Problem):
    """All feasible 0/1 assignments of a pure-binary instance."""
    assert p.int_set.size == p.n
    out = []
    for bits in itertools.product((0.0, 1.0), repeat=p.n):
        x = np.array(bits)
        if check_feasible(p, x) is None:
            out.append(x)
    return out


def all_binary_points(n: int) -> np.ndarray:
    """All 2^n 0/1 assignments as a (2^n, n) float matrix."""
    return ((np.arange(2 ** n)[:, None] >> np.arange(n)) & 1).astype(float)


def feasible_binary_matrix(p: Problem, tol: float = 1e-9) -> np.ndarray:
    """Feasible 0/1 assignments of a pure-binary instance, one per row.

    Vectorized for acceptance-scale batches; checks the raw data only.
    """
    assert p.int_set.size == p.n
    X = all_binary_points(p.n)
    if p.m:
        A = p.dense()
        scale = np.maximum(1.0, np.abs(A).max(axis=1))
        keep = np.all(X @ A.T >= (p.b - tol * scale)[None, :], axis=1)
        X = X[keep]
    return X


def brute_force_binary_fast(p: Problem):
    """Vectorized twin of brute_force_binary; same contract."""
    X = feasible_binary_matrix(p)
    if X.shape[0] == 0:
        return None
    vals = X @ p.c
    k = int(np.argmin(vals))
    return float(vals[k]), X[k]


def lp_vertex_solve(p: Problem, bounds: LocalBounds | None = None):
    """LP oracle by vertex enumeration; needs a bounded feasible region.

    Every n-subset of {rows, lb facets, ub facets} is solved as an equality
    system; feasible solutions are candidate vertices.  Returns
    ("optimal", obj) or ("infeasible", None).  Only suitable for tiny
    finite-box instances.
    """
    lb = bounds.lb if bounds is not None else p.lb
    ub = bounds.ub if bounds is not None else p.ub
    assert np.all(np.isfinite(lb)) and np.all(np.isfinite(ub))
    n = p.n
    A = p.dense()
    facets = [(A[i], p.b[i]) for i in range(p.m)]
    eye = np.eye(n)
    facets += [(eye[j], lb[j]) for j in range(n)]
    facets += [(-eye[j], -ub[j]) for j in range(n)]
    best = None
    for combo in itertools.combinations(range(len(facets)), n):
        M = np.array([facets[k][0] for k in combo])
        rhs = np.array([facets[k][1] for k in combo])
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        x = np.linalg.solve(M, rhs)
        if np.any(x < lb - 1e-8) or np.any(x > ub + 1e-8):
            continue
        if np.any(A @ x < p.b - 1e-8):
            continue
        v = float(p.c @ x)
        if best is None or v < best:
            best = v
    if best is None:
        return "infeasible", None
    return "optimal", best
