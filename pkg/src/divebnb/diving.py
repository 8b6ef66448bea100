"""Generic diving procedure shared by all three heuristics.

One dive repeatedly scores the fractional integer candidates, fixes the
best one in its rounding direction, propagates, and occasionally resolves
the LP.  An infeasible fixing is analyzed (the Farkas ray becomes a pooled
conflict constraint when possible) and undone with a one-level backtrack;
the candidate stays retired.  Every fresh LP solution is rounded and kept
when feasible, so a dive can produce a solution even if it never reaches
an integral LP point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .conflict import ConflictPool, analyze_infeasibility
from .heuristics import DiveContext, HeuristicSpec
from .locks import LockTable
from .model import INT_TOL, LocalBounds, Point, Problem, check_feasible
from .propagation import (BoundChange, RowSystem, apply_change, propagate,
                          undo_changes)
from .simplex import FarkasRay, solve_lp


@dataclass
class DivePolicy:
    """LP-resolve cadence and switches for one dive."""

    lp_every_node: bool = False
    lp_trigger_fraction: float = 0.15
    max_dive_depth: int | None = None
    propagate: bool = True
    lp_iter_limit: int | None = None

    def __post_init__(self):
        if not 0.0 < self.lp_trigger_fraction <= 1.0:
            raise ValueError("lp_trigger_fraction must lie in (0, 1]")


FARKAS_POLICY = DivePolicy(lp_every_node=True)
LOCKS_POLICY = DivePolicy(lp_every_node=False, lp_trigger_fraction=0.15)


def lp_resolve_due(policy: DivePolicy, changes_since_lp: int, n: int) -> bool:
    """LP is resolved every step, or once enough bounds changed."""
    if policy.lp_every_node:
        return True
    return changes_since_lp > policy.lp_trigger_fraction * n


@dataclass
class DiveStats:
    name: str
    depth: int = 0             # deepest fixing level reached
    lp_solves: int = 0         # includes the starting LP of the dive
    conflicts: int = 0         # poolable proofs built (pre-dedup)
    solutions: int = 0         # strict improvements of the dive-best point
    fixings: int = 0
    backtracks: int = 0
    abort: str | None = None


def round_to_solution(p: Problem, x: np.ndarray) -> Point | None:
    """Round integers to nearest (half away from zero upward) and verify."""
    z = np.asarray(x, dtype=float).copy()
    ints = np.flatnonzero(p.int_mask)
    z[ints] = np.floor(z[ints] + 0.5)
    if check_feasible(p, z) is not None:
        return None
    return Point.of(p, z)


def _map_cutoff_reasons(changes, infeasible_reason, m_base: int):
    """Rows past the model block are the objective cutoff row."""
    for ch in changes:
        if ch.reason[0] == "row" and ch.reason[1] >= m_base:
            ch.reason = ("cutoff",)
    if (infeasible_reason is not None and infeasible_reason[0] == "row"
            and infeasible_reason[1] >= m_base):
        return ("cutoff",)
    return infeasible_reason


def _fractional(p: Problem, x: np.ndarray) -> set[int]:
    ints = np.flatnonzero(p.int_mask)
    phi = np.abs(x[ints] - np.round(x[ints]))
    return {int(j) for j in ints[phi > INT_TOL]}


def dive(p: Problem, pool: ConflictPool, start, spec: HeuristicSpec,
         policy: DivePolicy, *, bounds: LocalBounds, vlocks: LockTable,
         kappa: float = 0.75, lp_problem: Problem | None = None,
         prop_sys: RowSystem | None = None, node_depth: int = 0):
    """Run one dive from an optimal LP result; returns (solution, stats).

    ``bounds`` belongs to the caller and is copied; ``lp_problem`` is the
    model plus the active objective-cutoff row (defaults to the model).
    Pool admissions make the dive's conflicts visible to later propagation
    immediately.
    """
    lp_p = lp_problem if lp_problem is not None else p
    sys_ext = prop_sys if prop_sys is not None else RowSystem.from_problem(lp_p)
    work = bounds.copy()
    stats = DiveStats(name=spec.name, lp_solves=1)
    xt = np.asarray(start.x, dtype=float).copy()
    basis = start.basis
    best: Point | None = None

    def record(xvals) -> None:
        nonlocal best
        cand = round_to_solution(p, xvals)
        if cand is not None and (best is None
                                 or cand.objective < best.objective - 1e-12):
            best = cand
            stats.solutions += 1

    record(xt)
    candidates = _fractional(p, xt)
    selected: set[int] = set()
    trail: list[tuple[list[BoundChange], list[int]]] = []
    pre_changes: list[BoundChange] = []

    # integer candidates in no row at all are pre-set to their best bound
    for j in sorted(candidates):
        if vlocks.down[j] or vlocks.up[j] or p.c[j] == 0.0:
            continue
        target = work.ub[j] if p.c[j] < 0 else work.lb[j]
        if not math.isfinite(target):
            continue
        if p.c[j] < 0:
            ch = BoundChange(j, "lb", float(work.lb[j]), float(target),
                             ("dive",))
        else:
            ch = BoundChange(j, "ub", float(work.ub[j]), float(target),
                             ("dive",))
        apply_change(work, ch)
        pre_changes.append(ch)
        candidates.discard(j)
    changes_since_lp = len(pre_changes)
    if pre_changes and policy.propagate:
        res = propagate(sys_ext, pool.rows, work, p.int_mask)
        res.infeasible_reason = _map_cutoff_reasons(
            res.changes, res.infeasible_reason, p.m)
        pre_changes.extend(res.changes)
        pool.mark_useful(res.useful_conflicts)
        if res.infeasible_reason is not None:
            undo_changes(work, pre_changes)
            return None, stats

    guard = len(np.flatnonzero(p.int_mask)) + 2
    while guard > 0:
        guard -= 1
        if not _fractional(p, xt) or not candidates:
            break
        if policy.max_dive_depth is not None \
                and len(trail) >= policy.max_dive_depth:
            break
        ctx = DiveContext.of(p.c, xt, work, vlocks, pool.locks, kappa)
        cand = np.array(sorted(candidates), dtype=np.int64)
        up_mask, scores = spec.scores_fn(ctx, cand)
        k = int(np.argmax(scores))
        j = int(cand[k])
        go_up = bool(up_mask[k])
        candidates.discard(j)
        selected.add(j)
        if go_up:
            fix = BoundChange(j, "lb", float(work.lb[j]),
                              float(math.ceil(xt[j])), ("dive",))
        else:
            fix = BoundChange(j, "ub", float(work.ub[j]),
                              float(math.floor(xt[j])), ("dive",))
        apply_change(work, fix)
        stats.fixings += 1
        batch = [fix]
        removed: list[int] = []
        if policy.propagate:
            res = propagate(sys_ext, pool.rows, work, p.int_mask)
            res.infeasible_reason = _map_cutoff_reasons(
                res.changes, res.infeasible_reason, p.m)
            batch.extend(res.changes)
            pool.mark_useful(res.useful_conflicts)
            if res.infeasible_reason is not None:
                analyze_infeasibility(p, pool, work, res.infeasible_reason,
                                      origin="dive", depth=node_depth)
                undo_changes(work, batch)
                stats.backtracks += 1
                continue
            for k2 in sorted(candidates):
                if work.lb[k2] >= work.ub[k2] - INT_TOL:
                    candidates.discard(k2)
                    removed.append(k2)
        trail.append((batch, removed))
        stats.depth = max(stats.depth, len(trail))
        changes_since_lp += len(batch)
        if not lp_resolve_due(policy, changes_since_lp, p.n):
            continue
        res = solve_lp(lp_p, work, warm=basis,
                       iter_limit=policy.lp_iter_limit)
        stats.lp_solves += 1
        if res.status == "optimal":
            xt = res.x.copy()
            basis = res.basis
            changes_since_lp = 0
            candidates = _fractional(p, xt) - selected
            record(xt)
        elif res.status == "infeasible":
            status, _ = analyze_lp_ray(p, pool, work, res.ray,
                                       origin="dive", depth=node_depth)
            if status in ("pooled", "duplicate"):
                stats.conflicts += 1
            batch, removed = trail.pop()
            undo_changes(work, batch)
            candidates.update(removed)
            changes_since_lp -= len(batch)
            stats.backtracks += 1
        else:
            stats.abort = res.status
            break
    for batch, _ in reversed(trail):
        undo_changes(work, batch)
    undo_changes(work, pre_changes)
    return best, stats


def analyze_lp_ray(p: Problem, pool: ConflictPool, bounds, ray: FarkasRay,
                   origin: str = "node", depth: int = 0):
    """Analyze a ray that may span extra (cutoff) rows beyond the model.

    A positive multiplier on a cutoff row makes the aggregate valid only
    for improving solutions, so such rays prune without being pooled.
    Returns (status, constraint) like analyze_infeasibility, with the
    extra status "cutoff_involved".
    """
    y = ray.y
    if y.size > p.m:
        tail = y[p.m:]
        if tail.size and float(tail.max(initial=0.0)) \
                > 1e-9 * max(1.0, float(np.abs(y).max())):
            return "cutoff_involved", None
        ray = FarkasRay(y=y[:p.m].copy(), s=ray.s)
    return analyze_infeasibility(p, pool, bounds, ray,
                                 origin=origin, depth=depth)
