"""LP-based branch and bound with conflict analysis and diving heuristics.

Node processing order: propagate, solve the node LP, analyze infeasibility
(Farkas ray -> pooled conflict), prune by bound against the incumbent,
run the scheduled diving heuristics, re-check the bound, branch on the
most fractional integer variable.  The search is depth-first with a jump
to the best-bound open node at a fixed interval.

Once an incumbent exists, the row -c^T x >= -(incumbent - delta) is part
of every node and dive LP, so only improving solutions remain feasible.
Rays that put weight on that row prune their node but are never pooled:
pooled constraints must stay valid for every integer-feasible point, not
just improving ones.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .conflict import ConflictPool, PoolStats, Proof
from .diving import (FARKAS_POLICY, LOCKS_POLICY, _map_cutoff_reasons,
                     analyze_lp_ray, dive)
from .heuristics import HEURISTICS
from .locks import problem_locks
from .model import (FEAS_TOL, INT_TOL, LocalBounds, Point, Problem,
                    check_feasible, validate)
from .propagation import BoundChange, RowSystem, propagate
from .simplex import BASIC, Basis, solve_lp

HEURISTIC_ORDER = ("farkas", "coef", "conflict")


@dataclass
class Config:
    heuristics: tuple = ()
    kappa: float = 0.75
    dive_freq: int = 10
    node_limit: int | None = None
    time_limit: float | None = None
    seed: int = 0
    pool_capacity: int = 10000
    backtrack_interval: int = 100
    collect_timeline: bool = True

    def __post_init__(self):
        names = tuple(h for h in HEURISTIC_ORDER if h in self.heuristics)
        unknown = set(self.heuristics) - set(HEURISTIC_ORDER)
        if unknown:
            raise ValueError(f"unknown heuristics: {sorted(unknown)}")
        self.heuristics = names
        if not 0.0 <= self.kappa <= 1.0:
            raise ValueError("kappa must lie in [0, 1]")
        if self.dive_freq < 1:
            raise ValueError("dive_freq must be >= 1")


@dataclass
class HeurStats:
    """Aggregated dive outcomes of one heuristic within a solve."""

    dives: int = 0
    depth_sum: int = 0
    lp_solves: int = 0
    conflicts: int = 0
    solutions: int = 0    # dive-best improvements found inside dives
    improving: int = 0    # accepted as new incumbents

    @property
    def avg_depth(self) -> float:
        return self.depth_sum / self.dives if self.dives else 0.0


@dataclass
class SolveStats:
    nodes: int = 0
    lp_solves: int = 0
    lp_iterations: int = 0
    node_conflicts: int = 0       # pooled/duplicate proofs from node LPs
    cutoff_rays: int = 0          # rays involving the cutoff row (not pooled)
    propagation_prunes: int = 0
    numerical_prunes: int = 0
    incumbent_updates: int = 0
    timeline: list = field(default_factory=list)   # (t, bound, incumbent)
    heur: dict = field(default_factory=dict)       # name -> HeurStats
    pool: PoolStats | None = None

    @property
    def conflicts_total(self) -> int:
        dives = sum(h.conflicts for h in self.heur.values())
        return self.node_conflicts + dives


@dataclass
class SolveResult:
    status: str                  # optimal | infeasible | unbounded | limit
    x: np.ndarray | None         # original variable order
    objective: float | None      # user-space (sense and offset applied)
    bound: float                 # user-space dual bound
    internal_objective: float | None
    internal_bound: float
    stats: SolveStats
    wall_time: float
    pool_size: int = 0
    direction: np.ndarray | None = None   # unbounded ray when applicable
    conflicts: list = field(default_factory=list)  # (idx, vals, rhs) in
                                                   # original variable order


@dataclass
class Node:
    id: int
    parent: "Node | None"
    changes: list
    depth: int
    bound: float          # parent LP objective, -inf at the root
    basis: Basis | None

    def materialize(self, root: LocalBounds) -> LocalBounds:
        chain = []
        nd = self
        while nd is not None:
            chain.append(nd)
            nd = nd.parent
        out = root.copy()
        for nd in reversed(chain):
            for ch in nd.changes:
                if ch.which == "lb":
                    out.lb[ch.var] = ch.new
                else:
                    out.ub[ch.var] = ch.new
        return out


def _patch_basis(basis: Basis | None, n: int, m: int) -> Basis | None:
    """Extend a pre-cutoff basis with the cutoff slack as basic."""
    if basis is None:
        return None
    have = basis.vstat.size - n
    if have == m:
        return basis
    if have > m:
        return None    # stale (larger) basis: fall back to cold start
    extra = np.arange(n + have, n + m, dtype=basis.basic.dtype)
    return Basis(np.concatenate([basis.basic, extra]),
                 np.concatenate([basis.vstat,
                                 np.full(m - have, BASIC,
                                         dtype=basis.vstat.dtype)]))


def select_branch(x: np.ndarray, int_idx: np.ndarray):
    """Most fractional integer variable, ties to the lowest index.

    Returns (j, up_first) with j None when x is integral on int_idx;
    up_first says the ceil child is explored before the floor child.
    """
    phi = x[int_idx] - np.floor(x[int_idx])
    frac = np.minimum(phi, 1.0 - phi)
    if not (frac > INT_TOL).any():
        return None, False
    scores = np.where(frac > INT_TOL, frac, -1.0)
    kb = int(np.argmax(scores))
    return int(int_idx[kb]), bool(phi[kb] >= 0.5)


def _integral_objective(p: Problem) -> bool:
    ints = p.int_mask
    if not np.all(p.c[~ints] == 0.0):
        return False
    ci = p.c[ints]
    return bool(np.all(ci == np.round(ci)))


def solve(p: Problem, config: Config | None = None, *,
          initial_conflicts=None) -> SolveResult:
    """Branch-and-bound solve of a normalized problem.

    ``initial_conflicts`` optionally seeds the pool with (indices, values,
    rhs) triples in original variable order, e.g. from a previous result's
    ``conflicts`` field.
    """
    config = config or Config()
    t0 = time.monotonic()
    err = validate(p)
    if err:
        raise ValueError(err)
    n = p.n
    if config.seed != 0:
        perm = np.random.default_rng(config.seed).permutation(n)
        work = p.permuted(perm)
    else:
        perm = np.arange(n)
        work = p
    pool = ConflictPool(work, capacity=config.pool_capacity)
    if initial_conflicts:
        inv = np.empty(n, dtype=np.int64)
        inv[perm] = np.arange(n)
        for idx, vals, rhs in initial_conflicts:
            mapped = inv[np.asarray(idx, dtype=np.int64)]
            order = np.argsort(mapped)
            pool.add(Proof(mapped[order],
                           np.asarray(vals, dtype=float)[order],
                           float(rhs)), origin="seed", depth=0)
    vlocks = problem_locks(work)
    model_sys = RowSystem.from_problem(work)
    root_bounds = LocalBounds.of(work)
    int_idx = np.flatnonzero(work.int_mask)
    enabled = list(config.heuristics)
    objective_is_integral = _integral_objective(work)
    c_nonzero = bool(np.any(work.c != 0.0))

    stats = SolveStats()
    for h in enabled:
        stats.heur[h] = HeurStats()

    incumbent: Point | None = None
    lp_p = work
    prop_sys = model_sys
    delta = 0.0

    def install_cutoff():
        nonlocal lp_p, prop_sys, delta
        obj = incumbent.objective
        delta = 1.0 if objective_is_integral else 1e-6 * (1.0 + abs(obj))
        lp_p = work.with_extra_row(-work.c, -(obj - delta))
        prop_sys = RowSystem.from_problem(lp_p)

    last_event = [None, None]

    def record_event(glb):
        if not config.collect_timeline:
            return
        inc = p.user_objective(incumbent.objective) if incumbent else None
        bd = p.user_objective(glb) if math.isfinite(glb) else \
            (-math.inf if p.obj_sense * glb < 0 else math.inf)
        if [bd, inc] != last_event:
            last_event[0], last_event[1] = bd, inc
            stats.timeline.append((time.monotonic() - t0, bd, inc))

    def accept(point: Point) -> bool:
        nonlocal incumbent
        vals = np.asarray(point.values, dtype=float).copy()
        vals[int_idx] = np.round(vals[int_idx])
        point = Point.of(work, vals)
        if check_feasible(work, point.values) is not None:
            return False
        if incumbent is None \
                or point.objective < incumbent.objective - 1e-9:
            incumbent = point
            stats.incumbent_updates += 1
            install_cutoff()
            return True
        return False

    def cut_prune(obj: float) -> bool:
        # improving solutions satisfy obj <= incumbent - delta, so a node
        # whose bound exceeds that threshold cannot contain one
        return incumbent is not None \
            and obj > incumbent.objective - delta + FEAS_TOL

    stack = [Node(0, None, [], 0, -math.inf, None)]
    next_id = 1
    status: str | None = None
    direction = None
    farkas_root_success = False
    record_event(-math.inf)

    while stack:
        if config.node_limit is not None \
                and stats.nodes >= config.node_limit:
            status = "limit"
            break
        if config.time_limit is not None \
                and time.monotonic() - t0 > config.time_limit:
            status = "limit"
            break
        if (config.backtrack_interval and stats.nodes
                and stats.nodes % config.backtrack_interval == 0):
            k = min(range(len(stack)),
                    key=lambda i: (stack[i].bound, stack[i].id))
            stack.append(stack.pop(k))
        node = stack.pop()
        stats.nodes += 1
        if cut_prune(node.bound):
            pool.end_node()
            continue
        bounds = node.materialize(root_bounds)
        res = propagate(prop_sys, pool.rows, bounds, work.int_mask)
        res.infeasible_reason = _map_cutoff_reasons(
            res.changes, res.infeasible_reason, work.m)
        node.changes.extend(res.changes)
        pool.mark_useful(res.useful_conflicts)
        if res.infeasible_reason is not None:
            stats.propagation_prunes += 1
            pool.end_node()
            record_event(_open_bound(stack, incumbent))
            continue
        lp = solve_lp(lp_p, bounds,
                      warm=_patch_basis(node.basis, n, lp_p.m))
        stats.lp_solves += 1
        stats.lp_iterations += lp.iterations
        if lp.status == "infeasible":
            st, _ = analyze_lp_ray(work, pool, bounds, lp.ray,
                                   origin="node", depth=node.depth)
            if st in ("pooled", "duplicate"):
                stats.node_conflicts += 1
            elif st == "cutoff_involved":
                stats.cutoff_rays += 1
            pool.end_node()
            record_event(_open_bound(stack, incumbent))
            continue
        if lp.status == "unbounded":
            status = "unbounded"
            direction = lp.direction
            break
        if lp.status in ("iterlimit", "numerical"):
            stats.numerical_prunes += 1
            pool.end_node()
            continue
        obj = lp.obj
        if cut_prune(obj):
            pool.end_node()
            record_event(_open_bound(stack, incumbent))
            continue
        jb, up_first = select_branch(lp.x, int_idx)
        if jb is None:
            accept(Point.of(work, lp.x))
            pool.end_node()
            record_event(_open_bound(stack, incumbent))
            continue
        for name in enabled:
            if name == "farkas":
                if not c_nonzero:
                    continue
                if node.depth != 0 and not (
                        farkas_root_success
                        and node.depth % config.dive_freq == 0):
                    continue
                policy = FARKAS_POLICY
            else:
                if node.depth % config.dive_freq != 0:
                    continue
                policy = LOCKS_POLICY
            sol, dstats = dive(work, pool, lp, HEURISTICS[name], policy,
                               bounds=bounds, vlocks=vlocks,
                               kappa=config.kappa, lp_problem=lp_p,
                               prop_sys=prop_sys, node_depth=node.depth)
            hs = stats.heur[name]
            hs.dives += 1
            hs.depth_sum += dstats.depth
            hs.lp_solves += dstats.lp_solves
            hs.conflicts += dstats.conflicts
            hs.solutions += dstats.solutions
            if name == "farkas" and node.depth == 0:
                farkas_root_success = sol is not None
            if sol is not None and accept(sol):
                hs.improving += 1
                record_event(_open_bound(stack, incumbent))
        if cut_prune(obj):
            pool.end_node()
            record_event(_open_bound(stack, incumbent))
            continue
        xj = float(lp.x[jb])
        down = Node(next_id, node,
                    [BoundChange(jb, "ub", float(bounds.ub[jb]),
                                 math.floor(xj), ("branch",))],
                    node.depth + 1, obj, lp.basis)
        up = Node(next_id + 1, node,
                  [BoundChange(jb, "lb", float(bounds.lb[jb]),
                               math.ceil(xj), ("branch",))],
                  node.depth + 1, obj, lp.basis)
        next_id += 2
        if up_first:
            stack.extend([down, up])     # up child explored first
        else:
            stack.extend([up, down])
        pool.end_node()
        record_event(_open_bound(stack, incumbent))

    wall = time.monotonic() - t0
    stats.pool = pool.stats
    if status == "unbounded":
        glb = -math.inf
        inc = incumbent
    elif status == "limit":
        glb = _open_bound(stack, incumbent)
        inc = incumbent
    else:
        inc = incumbent
        status = "optimal" if incumbent is not None else "infeasible"
        glb = incumbent.objective if incumbent is not None else math.inf
    record_event(glb)
    x_user = None
    obj_user = None
    obj_int = None
    if inc is not None:
        x_user = np.empty(n)
        x_user[perm] = inc.values
        obj_int = inc.objective
        obj_user = p.user_objective(obj_int)
    if math.isfinite(glb):
        bound_user = p.user_objective(glb)
    else:
        bound_user = -math.inf if p.obj_sense * glb < 0 else math.inf
    dir_user = None
    if direction is not None:
        dir_user = np.empty(n)
        dir_user[perm] = direction
    conflicts_out = []
    for idx, vals, rhs in pool.export():
        u = perm[idx]
        order = np.argsort(u)
        conflicts_out.append((u[order], vals[order], rhs))
    return SolveResult(status=status, x=x_user, objective=obj_user,
                       bound=bound_user, internal_objective=obj_int,
                       internal_bound=glb, stats=stats, wall_time=wall,
                       pool_size=len(pool), direction=dir_user,
                       conflicts=conflicts_out)


def _open_bound(stack, incumbent) -> float:
    glb = min((nd.bound for nd in stack), default=math.inf)
    if incumbent is not None:
        glb = min(glb, incumbent.objective)
    return glb
