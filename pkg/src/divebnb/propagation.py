"""Activity-based bound propagation for >= rows.

For a row ``a^T x >= beta`` the maximum activity over the current box is
``maxact = sum_{a_j > 0} a_j ub_j + sum_{a_j < 0} a_j lb_j``.  If
``maxact < beta - feas_tol`` the row is infeasible under the box; otherwise
every variable j with a_j != 0 gets the deduction

    a_j > 0:  x_j >= (beta - maxact_others) / a_j
    a_j < 0:  x_j <= (beta - maxact_others) / a_j

where maxact_others excludes j's own contribution.  Infinite contributions
are counted separately: two or more make a row silent, exactly one blocks
deductions for every variable except the one contributing it.  Deduced
bounds of integer variables are rounded inward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import INT_TOL, LocalBounds, Problem

FEAS_TOL = 1e-6
PROP_EPS = 1e-7        # minimum bound movement that counts as progress
ROUND_LIMIT = 100      # sweeps per propagate() call
_INT_ROUND = 1e-6      # inward-rounding tolerance for integer deductions


@dataclass
class BoundChange:
    """One bound tightening, with enough context to undo it."""

    var: int
    which: str            # "lb" | "ub"
    old: float
    new: float
    reason: tuple         # ("row", i) | ("conflict", id) | ("branch",) |
                          # ("dive",) | ("cutoff",)


@dataclass
class PropResult:
    changes: list
    infeasible_reason: tuple | None    # ("row", i) / ("conflict", id) or None
    useful_conflicts: set


def apply_change(bounds: LocalBounds, ch: BoundChange):
    if ch.which == "lb":
        bounds.lb[ch.var] = ch.new
    else:
        bounds.ub[ch.var] = ch.new


def undo_changes(bounds: LocalBounds, changes):
    for ch in reversed(changes):
        if ch.which == "lb":
            bounds.lb[ch.var] = ch.old
        else:
            bounds.ub[ch.var] = ch.old


class RowSystem:
    """Growable collection of >= rows with one vectorized deduction sweep.

    Used both for the model rows of a Problem and for the conflict pool.
    ``ids`` carries caller-side identifiers (row index or conflict id);
    ``kind`` tags the reason tuples produced by sweeps.
    """

    def __init__(self, n: int, kind: str = "row"):
        self.n = n
        self.kind = kind
        self.indptr = np.zeros(1, dtype=np.int64)
        self.indices = np.zeros(0, dtype=np.int64)
        self.data = np.zeros(0)
        self.rhs = np.zeros(0)
        self.ids = np.zeros(0, dtype=np.int64)
        self._rownos = None

    @property
    def rownos(self) -> np.ndarray:
        """Row number of each stored nonzero (cached)."""
        if self._rownos is None:
            self._rownos = np.repeat(np.arange(self.nrows),
                                     np.diff(self.indptr))
        return self._rownos

    @classmethod
    def from_problem(cls, p: Problem) -> "RowSystem":
        rs = cls(p.n, kind="row")
        A = p.A
        rs.indptr = A.indptr.astype(np.int64)
        rs.indices = A.indices.astype(np.int64)
        rs.data = A.data.astype(float)
        rs.rhs = p.b.astype(float)
        rs.ids = np.arange(p.m, dtype=np.int64)
        return rs

    @property
    def nrows(self) -> int:
        return self.rhs.size

    def append(self, indices, values, rhs: float, row_id: int):
        indices = np.asarray(indices, dtype=np.int64)
        values = np.asarray(values, dtype=float)
        if indices.size == 0:
            raise ValueError("empty rows are not stored")
        self.indptr = np.append(self.indptr,
                                self.indptr[-1] + indices.size)
        self.indices = np.append(self.indices, indices)
        self.data = np.append(self.data, values)
        self.rhs = np.append(self.rhs, float(rhs))
        self.ids = np.append(self.ids, np.int64(row_id))
        self._rownos = None

    def remove(self, pos: int):
        """Drop the row at position pos (pool eviction)."""
        lo, hi = self.indptr[pos], self.indptr[pos + 1]
        self.indices = np.delete(self.indices, slice(lo, hi))
        self.data = np.delete(self.data, slice(lo, hi))
        width = hi - lo
        self.indptr = np.delete(self.indptr, pos)
        self.indptr[pos:] -= width
        self.rhs = np.delete(self.rhs, pos)
        self.ids = np.delete(self.ids, pos)
        self._rownos = None

    def max_activity(self, lb: np.ndarray, ub: np.ndarray):
        """Per-row finite activity part and infinite-contribution count."""
        cols = self.indices
        contrib = np.where(self.data > 0, self.data * ub[cols],
                           self.data * lb[cols])
        finite = np.isfinite(contrib)
        fin = np.where(finite, contrib, 0.0)
        # bincount handles rows with no nonzeros (empty MPS rows)
        fin_sum = np.bincount(self.rownos, weights=fin, minlength=self.nrows)
        inf_cnt = np.bincount(self.rownos[~finite],
                              minlength=self.nrows).astype(np.int64)
        return fin_sum, inf_cnt, contrib, finite

    def sweep(self, bounds: LocalBounds, int_mask: np.ndarray,
              feas_tol: float = FEAS_TOL, prop_eps: float = PROP_EPS):
        """One deduction pass over all rows; mutates bounds in place.

        Returns (changes, infeasible_reason, useful_row_positions).
        """
        if self.nrows == 0:
            return [], None, set()
        lb, ub = bounds.lb, bounds.ub
        fin_sum, inf_cnt, contrib, finite = self.max_activity(lb, ub)
        maxact = np.where(inf_cnt > 0, np.inf, fin_sum)
        bad = np.flatnonzero(maxact < self.rhs - feas_tol)
        if bad.size:
            pos = int(bad[0])
            return [], (self.kind, int(self.ids[pos])), {pos}
        cols = self.indices
        rownos = self.rownos
        cnt = inf_cnt[rownos]
        # residual max activity of the other variables in the row
        others = np.where(cnt == 0, fin_sum[rownos] - np.where(finite, contrib, 0.0),
                          np.where((cnt == 1) & ~finite, fin_sum[rownos], np.inf))
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (self.rhs[rownos] - others) / self.data
        usable = np.isfinite(t)
        pos_coef = self.data > 0
        is_int = int_mask[cols]
        # integer deductions are rounded inward
        t_lo = np.where(is_int, np.ceil(t - _INT_ROUND), t)
        t_up = np.where(is_int, np.floor(t + _INT_ROUND), t)
        lo_gain = usable & pos_coef & (t_lo > lb[cols] + prop_eps)
        up_gain = usable & ~pos_coef & (t_up < ub[cols] - prop_eps)
        changes: list[BoundChange] = []
        useful: set[int] = set()
        if not (lo_gain.any() or up_gain.any()):
            return changes, None, useful
        new_lb = np.full(self.n, -np.inf)
        new_ub = np.full(self.n, np.inf)
        np.maximum.at(new_lb, cols[lo_gain], t_lo[lo_gain])
        np.minimum.at(new_ub, cols[up_gain], t_up[up_gain])
        imp_lo = np.flatnonzero(new_lb > lb + prop_eps)
        imp_up = np.flatnonzero(new_ub < ub - prop_eps)
        # provenance: first nonzero achieving the winning deduction
        for j in imp_lo:
            k = np.flatnonzero(lo_gain & (cols == j) & (t_lo >= new_lb[j]))[0]
            reason = (self.kind, int(self.ids[rownos[k]]))
            useful.add(int(rownos[k]))
            changes.append(BoundChange(int(j), "lb", float(lb[j]),
                                       float(new_lb[j]), reason))
            lb[j] = new_lb[j]
        for j in imp_up:
            k = np.flatnonzero(up_gain & (cols == j) & (t_up <= new_ub[j]))[0]
            reason = (self.kind, int(self.ids[rownos[k]]))
            useful.add(int(rownos[k]))
            changes.append(BoundChange(int(j), "ub", float(ub[j]),
                                       float(new_ub[j]), reason))
            ub[j] = new_ub[j]
        crossed = np.flatnonzero(lb > ub + feas_tol)
        if crossed.size:
            j = int(crossed[0])
            # blame the row that produced the last change on j
            for ch in reversed(changes):
                if ch.var == j:
                    return changes, ch.reason, useful
            fallback = changes[-1].reason if changes \
                else (self.kind, int(self.ids[0]))
            return changes, fallback, useful
        return changes, None, useful


def propagate_row(a_indices, a_values, beta: float, bounds: LocalBounds,
                  int_mask: np.ndarray, feas_tol: float = FEAS_TOL,
                  prop_eps: float = PROP_EPS):
    """Propagate a single >= row; returns (changes, infeasible: bool).

    Reference implementation of the sweep semantics for one row; mutates
    bounds in place.  An empty row is infeasible iff beta > feas_tol.
    """
    a_indices = np.asarray(a_indices, dtype=np.int64)
    a_values = np.asarray(a_values, dtype=float)
    if a_indices.size == 0:
        return [], beta > feas_tol
    lb, ub = bounds.lb, bounds.ub
    contrib = np.where(a_values > 0, a_values * ub[a_indices],
                       a_values * lb[a_indices])
    finite = np.isfinite(contrib)
    fin_sum = float(contrib[finite].sum())
    inf_cnt = int((~finite).sum())
    if inf_cnt == 0 and fin_sum < beta - feas_tol:
        return [], True
    changes = []
    for k in range(a_indices.size):
        j = int(a_indices[k])
        a = a_values[k]
        if inf_cnt == 0:
            others = fin_sum - contrib[k]
        elif inf_cnt == 1 and not finite[k]:
            others = fin_sum
        else:
            continue
        t = (beta - others) / a
        if not math.isfinite(t):
            continue
        if a > 0:
            if int_mask[j]:
                t = math.ceil(t - _INT_ROUND)
            if t > lb[j] + prop_eps:
                changes.append(BoundChange(j, "lb", float(lb[j]), float(t),
                                           ("row", -1)))
                lb[j] = t
        else:
            if int_mask[j]:
                t = math.floor(t + _INT_ROUND)
            if t < ub[j] - prop_eps:
                changes.append(BoundChange(j, "ub", float(ub[j]), float(t),
                                           ("row", -1)))
                ub[j] = t
    if np.any(lb[a_indices] > ub[a_indices] + feas_tol):
        return changes, True
    return changes, False


def propagate(model_sys: RowSystem, pool_sys: RowSystem | None,
              bounds: LocalBounds, int_mask: np.ndarray,
              round_limit: int = ROUND_LIMIT,
              feas_tol: float = FEAS_TOL) -> PropResult:
    """Sweep model rows then pool rows to a fixpoint (or round_limit).

    Returns all applied changes (already written into bounds; callers undo
    via undo_changes on infeasibility), the infeasible reason if any, and
    the ids of pool constraints that produced deductions or detected the
    infeasibility (ids stay valid across pool evictions).
    """
    all_changes: list[BoundChange] = []
    useful_pool: set[int] = set()
    for _ in range(round_limit):
        moved = False
        ch, reason, _ = model_sys.sweep(bounds, int_mask, feas_tol)
        all_changes.extend(ch)
        if reason is not None:
            return PropResult(all_changes, reason, useful_pool)
        moved |= bool(ch)
        if pool_sys is not None and pool_sys.nrows:
            ch, reason, useful = pool_sys.sweep(bounds, int_mask, feas_tol)
            all_changes.extend(ch)
            useful_pool |= {int(pool_sys.ids[pos]) for pos in useful}
            if reason is not None:
                return PropResult(all_changes, reason, useful_pool)
            moved |= bool(ch)
        if not moved:
            break
    return PropResult(all_changes, None, useful_pool)
