"""Canonical MIP instance model.

Instances are kept in a single normalized form::

    min c^T x   s.t.  A x >= b,  lb <= x <= ub,  x_j integral for j in int_set

All rows are >= rows; <=, = and ranged rows are expanded before a Problem is
built (see divebnb.mps).  Maximization problems are negated at load time and
the original sense/offset are kept only for reporting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

INF = float("inf")

#: default feasibility tolerance for row and bound checks
FEAS_TOL = 1e-6
#: default integrality tolerance
INT_TOL = 1e-6


def _as_float_array(v, n=None):
    a = np.asarray(v, dtype=float).ravel()
    if n is not None and a.size != n:
        raise ValueError(f"expected length {n}, got {a.size}")
    return a


@dataclass
class Problem:
    """Normalized MIP instance ``min c^T x, A x >= b, lb <= x <= ub``.

    ``A`` is stored as synchronized row-major (CSR) and column-major (CSC)
    views of the same coefficients.  ``int_set`` holds the indices of the
    integer variables in increasing order.
    """

    c: np.ndarray
    A: sp.csr_matrix
    A_csc: sp.csc_matrix
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    int_set: np.ndarray
    var_names: list[str]
    row_names: list[str]
    # reporting-only metadata: user objective = obj_sense * (c^T x) + obj_offset
    obj_sense: int = 1
    obj_offset: float = 0.0
    name: str = "problem"
    _dense: np.ndarray | None = field(default=None, repr=False, compare=False)
    _int_mask: np.ndarray | None = field(default=None, repr=False, compare=False)

    # ------------------------------------------------------------------ build

    @classmethod
    def build(cls, c, rows, rhs, lb, ub, integers=(), var_names=None,
              row_names=None, obj_sense=1, obj_offset=0.0, name="problem"):
        """Build a Problem from >= rows, tightening integer bounds.

        ``rows`` may be a dense array, a scipy sparse matrix, or a list of
        row vectors.  Fractional finite bounds of integer variables are
        tightened to ceil(lb)/floor(ub) here so every later bound on an
        integer variable is integral.
        """
        c = _as_float_array(c)
        n = c.size
        A = sp.csr_matrix(np.asarray(rows, dtype=float).reshape(-1, n)
                          if not sp.issparse(rows) else rows, dtype=float)
        if A.shape[1] != n:
            raise ValueError(f"A has {A.shape[1]} columns, c has {n}")
        A.sum_duplicates()
        b = _as_float_array(rhs, A.shape[0])
        lb = _as_float_array(lb, n).copy()
        ub = _as_float_array(ub, n).copy()
        int_set = np.unique(np.asarray(integers, dtype=np.int64))
        if int_set.size and (int_set[0] < 0 or int_set[-1] >= n):
            raise ValueError("integer index out of range")
        for j in int_set:
            if math.isfinite(lb[j]):
                lb[j] = math.ceil(lb[j] - INT_TOL)
            if math.isfinite(ub[j]):
                ub[j] = math.floor(ub[j] + INT_TOL)
        if var_names is None:
            var_names = [f"x{j}" for j in range(n)]
        if row_names is None:
            row_names = [f"r{i}" for i in range(A.shape[0])]
        return cls(c=c, A=A, A_csc=A.tocsc(), b=b, lb=lb, ub=ub,
                   int_set=int_set, var_names=list(var_names),
                   row_names=list(row_names), obj_sense=obj_sense,
                   obj_offset=obj_offset, name=name)

    # ------------------------------------------------------------- properties

    @property
    def n(self) -> int:
        return self.c.size

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def int_mask(self) -> np.ndarray:
        if self._int_mask is None:
            mask = np.zeros(self.n, dtype=bool)
            mask[self.int_set] = True
            object.__setattr__(self, "_int_mask", mask)
        return self._int_mask

    def dense(self) -> np.ndarray:
        """Dense copy of A, cached (desk-scale instances only)."""
        if self._dense is None:
            object.__setattr__(self, "_dense", self.A.toarray())
        return self._dense

    def user_objective(self, internal_obj: float) -> float:
        """Map an internal (minimization) objective back to the user's sense."""
        return self.obj_sense * internal_obj + self.obj_offset

    def normalized(self) -> "Problem":
        """Re-apply normalization (integer bound tightening); idempotent."""
        return Problem.build(self.c, self.A, self.b, self.lb, self.ub,
                             self.int_set, self.var_names, self.row_names,
                             self.obj_sense, self.obj_offset, self.name)

    def with_extra_row(self, row: np.ndarray, rhs: float,
                       row_name: str = "cutoff") -> "Problem":
        """Problem with one appended >= row (used for the objective cutoff)."""
        A = sp.vstack([self.A, sp.csr_matrix(np.asarray(row, dtype=float)
                                             .reshape(1, -1))], format="csr")
        return Problem(c=self.c, A=A, A_csc=A.tocsc(),
                       b=np.append(self.b, float(rhs)),
                       lb=self.lb, ub=self.ub, int_set=self.int_set,
                       var_names=self.var_names,
                       row_names=self.row_names + [row_name],
                       obj_sense=self.obj_sense, obj_offset=self.obj_offset,
                       name=self.name)

    def permuted(self, perm: np.ndarray) -> "Problem":
        """Problem with variables reordered as x_new[k] = x_old[perm[k]]."""
        perm = np.asarray(perm, dtype=np.int64)
        A = self.A_csc[:, perm].tocsr()
        ints = np.flatnonzero(self.int_mask[perm])
        return Problem(c=self.c[perm], A=A, A_csc=A.tocsc(), b=self.b,
                       lb=self.lb[perm], ub=self.ub[perm],
                       int_set=ints,
                       var_names=[self.var_names[j] for j in perm],
                       row_names=self.row_names, obj_sense=self.obj_sense,
                       obj_offset=self.obj_offset, name=self.name)


@dataclass
class Point:
    """A variable assignment with its cached objective value."""

    values: np.ndarray
    objective: float

    @classmethod
    def of(cls, p: Problem, values) -> "Point":
        v = _as_float_array(values, p.n)
        return cls(values=v, objective=float(p.c @ v))


@dataclass
class LocalBounds:
    """Mutable local bound vectors layered over a Problem's global bounds."""

    lb: np.ndarray
    ub: np.ndarray

    @classmethod
    def of(cls, p: Problem) -> "LocalBounds":
        return cls(lb=p.lb.copy(), ub=p.ub.copy())

    def copy(self) -> "LocalBounds":
        return LocalBounds(lb=self.lb.copy(), ub=self.ub.copy())

    def consistent(self, tol: float = FEAS_TOL) -> bool:
        return bool(np.all(self.lb <= self.ub + tol))


@dataclass
class Violation:
    """First feasibility violation found by check_feasible."""

    kind: str          # "bound" | "integrality" | "row"
    index: int
    amount: float

    def __str__(self):
        return f"{self.kind} violation at {self.index} by {self.amount:.3g}"


def validate(p: Problem) -> str | None:
    """Return a description of the first broken instance invariant, or None."""
    n, m = p.n, p.m
    if p.b.size != m:
        return f"b has length {p.b.size}, expected {m}"
    if p.lb.size != n or p.ub.size != n:
        return "bound vector length mismatch"
    if np.any(p.lb > p.ub):
        j = int(np.argmax(p.lb > p.ub))
        return f"crossed bounds at variable {j}: [{p.lb[j]}, {p.ub[j]}]"
    for j in p.int_set:
        if math.isfinite(p.lb[j]) and abs(p.lb[j] - round(p.lb[j])) > INT_TOL:
            return f"non-integral lower bound {p.lb[j]} on integer variable {j}"
        if math.isfinite(p.ub[j]) and abs(p.ub[j] - round(p.ub[j])) > INT_TOL:
            return f"non-integral upper bound {p.ub[j]} on integer variable {j}"
    if not np.all(np.isfinite(p.A.data)):
        return "non-finite coefficient in A"
    if not np.all(np.isfinite(p.c)):
        return "non-finite objective coefficient"
    if np.any(np.isnan(p.b)):
        return "NaN right-hand side"
    # row-major and column-major views must agree entry for entry
    diff = p.A - p.A_csc
    if diff.nnz and abs(diff).max() > 0:
        return "CSR and CSC views disagree"
    if len(p.var_names) != n or len(p.row_names) != m:
        return "name list length mismatch"
    return None


def check_feasible(p: Problem, x, feas_tol: float = FEAS_TOL,
                   int_tol: float = INT_TOL) -> Violation | None:
    """Check a point against bounds, integrality, and rows.

    Rows are checked as A x >= b - feas_tol * rowscale with
    rowscale = max(1, ||row||_inf).  Returns the first violation in the
    order bounds, integrality, rows, or None if feasible.
    """
    x = _as_float_array(x, p.n)
    below = p.lb - x
    above = x - p.ub
    for j in range(p.n):
        if below[j] > feas_tol:
            return Violation("bound", j, float(below[j]))
        if above[j] > feas_tol:
            return Violation("bound", j, float(above[j]))
    for j in p.int_set:
        gap = abs(x[j] - round(x[j]))
        if gap > int_tol:
            return Violation("integrality", int(j), float(gap))
    act = p.A @ x
    rowscale = np.maximum(1.0, _row_inf_norms(p))
    slack = act - (p.b - feas_tol * rowscale)
    bad = np.flatnonzero(slack < 0)
    if bad.size:
        i = int(bad[0])
        return Violation("row", i, float(p.b[i] - act[i]))
    return None


def _row_inf_norms(p: Problem) -> np.ndarray:
    out = np.zeros(p.m)
    absd = np.abs(p.A.data)
    ptr = p.A.indptr
    for i in range(p.m):
        if ptr[i + 1] > ptr[i]:
            out[i] = absd[ptr[i]:ptr[i + 1]].max()
    return out


class UnboundedPseudoSolution(ValueError):
    """Raised when a variable with nonzero cost has an infinite best bound."""

    def __init__(self, indices):
        self.indices = list(indices)
        super().__init__(
            f"unbounded pseudo solution: infinite best bound at variables "
            f"{self.indices}")


def pseudo_solution(p: Problem, bounds: LocalBounds | None = None) -> Point:
    """Every variable at its objective-wise best bound.

    x_j = ub_j if c_j < 0, lb_j if c_j > 0; for c_j = 0 the finite bound is
    preferred (lb first), else 0.  Raises UnboundedPseudoSolution when a
    variable with c_j != 0 has an infinite best bound.
    """
    lb = bounds.lb if bounds is not None else p.lb
    ub = bounds.ub if bounds is not None else p.ub
    x = np.zeros(p.n)
    bad = []
    for j in range(p.n):
        if p.c[j] < 0:
            x[j] = ub[j]
            if not math.isfinite(ub[j]):
                bad.append(j)
        elif p.c[j] > 0:
            x[j] = lb[j]
            if not math.isfinite(lb[j]):
                bad.append(j)
        else:
            if math.isfinite(lb[j]):
                x[j] = lb[j]
            elif math.isfinite(ub[j]):
                x[j] = ub[j]
            else:
                x[j] = 0.0
    if bad:
        raise UnboundedPseudoSolution(bad)
    return Point.of(p, x)
