"""Bounded-variable revised simplex over ``A x >= b, lb <= x <= ub``.

The solver works on the slack form ``[A | -I] z = b`` with surplus variables
``w = A x - b in [0, inf)``.  Cold starts use the all-surplus basis: when the
objective-preferred nonbasic placement is dual feasible the dual simplex
restores primal feasibility (or proves infeasibility), otherwise a primal
phase-1 (infeasibility minimization) precedes primal phase-2.  Warm restarts
after bound tightening go through the dual simplex, which is where Farkas
rays of infeasible subproblem LPs come from.

Infeasibility certificates are returned as rays ``(y, s)`` with

    y >= 0,   y^T A + s = 0,   y^T b + s{lb, ub} > 0

where ``s{lb, ub} = sum_{s_j > 0} s_j lb_j + sum_{s_j < 0} s_j ub_j``; any box
point x has s^T x >= s{lb, ub}, so the three conditions witness emptiness.
The basis inverse is kept explicitly and rebuilt by dense LU with partial
pivoting every REFACTOR_EVERY pivots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .model import LocalBounds, Problem

FEAS_TOL = 1e-6
DUAL_TOL = 1e-6
FARKAS_TOL = 1e-6
PIVOT_TOL = 1e-9
DEGEN_EPS = 1e-9
REFACTOR_EVERY = 100

# variable status codes
BASIC, AT_LOWER, AT_UPPER, FREE = 0, 1, 2, 3


@dataclass
class Basis:
    """Restart information: basic variable list plus nonbasic statuses.

    Variables 0..n-1 are structural, n..n+m-1 are row surpluses.
    """

    basic: np.ndarray
    vstat: np.ndarray

    def copy(self) -> "Basis":
        return Basis(self.basic.copy(), self.vstat.copy())


@dataclass
class FarkasRay:
    """Dual ray (y, s) certifying LP infeasibility under creating bounds."""

    y: np.ndarray
    s: np.ndarray


@dataclass
class RayReport:
    ok: bool
    eq_residual: float     # ||y^T A + s||_inf, scaled
    violation: float       # y^T b + s{lb,ub}
    message: str = ""


@dataclass
class LpResult:
    status: str            # optimal | infeasible | unbounded | iterlimit | numerical
    x: np.ndarray | None = None
    obj: float | None = None
    y: np.ndarray | None = None
    redcost: np.ndarray | None = None
    ray: FarkasRay | None = None
    direction: np.ndarray | None = None
    basis: Basis | None = None
    iterations: int = 0


def support_value(s: np.ndarray, lb: np.ndarray, ub: np.ndarray) -> float:
    """s{lb, ub}: tightest lower bound on s^T x over the box."""
    total = 0.0
    for j in range(s.size):
        if s[j] > 0.0:
            total += s[j] * lb[j]
        elif s[j] < 0.0:
            total += s[j] * ub[j]
    if math.isnan(total):
        return -math.inf
    return total


def verify_farkas_ray(p: Problem, bounds: LocalBounds, ray: FarkasRay,
                      tol: float = FARKAS_TOL) -> RayReport:
    """Check the three ray conditions against the given local bounds."""
    y, s = ray.y, ray.s
    if y.size != p.m or s.size != p.n:
        return RayReport(False, math.inf, -math.inf, "dimension mismatch")
    if np.any(y < -tol):
        return RayReport(False, math.inf, -math.inf, "negative row multiplier")
    ya = y @ p.A
    scale = max(1.0, float(np.abs(ya).max(initial=0.0)),
                float(np.abs(s).max(initial=0.0)))
    resid = float(np.abs(ya + s).max(initial=0.0)) / scale
    sval = support_value(s, bounds.lb, bounds.ub)
    viol = float(y @ p.b) + sval
    ok = bool(resid <= tol and viol > tol)
    msg = "" if ok else "residual too large" if resid > tol else "no violation"
    return RayReport(ok, resid, viol, msg)


class _Numerical(Exception):
    pass


class _IterLimit(Exception):
    pass


class _Engine:
    """One simplex run over a Problem with local bounds."""

    def __init__(self, p: Problem, bounds: LocalBounds, iter_limit: int,
                 bland: bool = False):
        self.p = p
        m, n = p.m, p.n
        self.m, self.n = m, n
        self.N = n + m
        self.A = p.dense()
        self.b = p.b
        self.cN = np.concatenate([p.c, np.zeros(m)])
        self.lbN = np.concatenate([bounds.lb, np.zeros(m)])
        self.ubN = np.concatenate([bounds.ub, np.full(m, np.inf)])
        self.lo_fin = np.isfinite(self.lbN)
        self.up_fin = np.isfinite(self.ubN)
        self.iter_limit = iter_limit
        self.bland = bland
        self.iters = 0
        self.degen = 0
        self.basic = np.arange(n, n + m, dtype=np.int64)
        self.vstat = np.zeros(self.N, dtype=np.int8)
        self.Binv = np.eye(m)
        self.pivots_since_refactor = 0
        self._ray: FarkasRay | None = None
        self._direction: np.ndarray | None = None

    # ----------------------------------------------------------- basis setup

    def cold_start(self):
        n, m = self.n, self.m
        self.basic = np.arange(n, n + m, dtype=np.int64)
        vs = np.full(self.N, AT_LOWER, dtype=np.int8)
        lo_fin, up_fin = self.lo_fin, self.up_fin
        c = self.cN
        # prefer the objective-best bound so the start is dual feasible
        # whenever the referenced bounds are finite
        want_up = (c < 0) & up_fin
        vs[want_up] = AT_UPPER
        only_up = ~lo_fin & up_fin & ~want_up
        vs[only_up] = AT_UPPER
        vs[~lo_fin & ~up_fin] = FREE
        vs[self.basic] = BASIC
        self.vstat = vs
        self.Binv = -np.eye(m)   # surplus columns are -I
        self.pivots_since_refactor = 0

    def load_warm(self, warm: Basis | None) -> bool:
        m = self.m
        if warm is None or warm.basic.size != m or warm.vstat.size != self.N:
            return False
        basic = warm.basic
        if (np.unique(basic).size != m or (m > 0 and (basic.min() < 0
                                                      or basic.max() >= self.N))):
            return False
        self.basic = basic.copy()
        vs = warm.vstat.copy()
        inbasis = np.zeros(self.N, dtype=bool)
        inbasis[basic] = True
        vs[(vs == BASIC) & ~inbasis] = AT_LOWER
        # repair statuses that reference infinite bounds
        lo_fin, up_fin = self.lo_fin, self.up_fin
        bad = (vs == AT_LOWER) & ~lo_fin
        vs[bad & up_fin] = AT_UPPER
        vs[bad & ~up_fin] = FREE
        bad = (vs == AT_UPPER) & ~up_fin
        vs[bad & lo_fin] = AT_LOWER
        vs[bad & ~lo_fin] = FREE
        bad = (vs == FREE) & (lo_fin | up_fin)
        vs[bad & lo_fin] = AT_LOWER
        vs[bad & ~lo_fin & up_fin] = AT_UPPER
        vs[basic] = BASIC
        self.vstat = vs
        try:
            self.refactor()
        except _Numerical:
            return False
        return True

    def col(self, j: int) -> np.ndarray:
        if j < self.n:
            return self.A[:, j]
        e = np.zeros(self.m)
        e[j - self.n] = -1.0
        return e

    def refactor(self):
        m, n = self.m, self.n
        if m == 0:
            self.Binv = np.eye(0)
            self.pivots_since_refactor = 0
            return
        B = np.zeros((m, m))
        struct = self.basic < n
        if struct.any():
            B[:, struct] = self.A[:, self.basic[struct]]
        slack_cols = np.flatnonzero(~struct)
        B[self.basic[slack_cols] - n, slack_cols] = -1.0
        try:
            lu, piv = scipy.linalg.lu_factor(B, check_finite=False)
        except (ValueError, scipy.linalg.LinAlgError):
            raise _Numerical("singular basis")
        if np.abs(np.diag(lu)).min(initial=np.inf) < 1e-12:
            raise _Numerical("singular basis")
        self.Binv = scipy.linalg.lu_solve((lu, piv), np.eye(m),
                                          check_finite=False)
        self.pivots_since_refactor = 0

    def _update_binv(self, w: np.ndarray, r: int):
        piv = w[r]
        if abs(piv) < PIVOT_TOL:
            raise _Numerical("tiny pivot")
        factor = w / piv
        factor[r] = 0.0
        self.Binv -= np.outer(factor, self.Binv[r])
        self.Binv[r] /= piv
        self.pivots_since_refactor += 1
        if self.pivots_since_refactor >= REFACTOR_EVERY:
            self.refactor()

    # --------------------------------------------------------------- kernels

    def nonbasic_values(self) -> np.ndarray:
        v = np.where(self.vstat == AT_LOWER, self.lbN,
                     np.where(self.vstat == AT_UPPER, self.ubN, 0.0))
        v[self.vstat == BASIC] = 0.0
        return v

    def compute_xB(self, v: np.ndarray) -> np.ndarray:
        rhs = self.b - self.A @ v[:self.n] + v[self.n:]
        xB = self.Binv @ rhs
        if not np.all(np.isfinite(xB)):
            raise _Numerical("non-finite basic values")
        return xB

    def duals(self, cost: np.ndarray):
        y = self.Binv.T @ cost[self.basic]
        d = np.empty(self.N)
        d[:self.n] = cost[:self.n] - self.A.T @ y
        d[self.n:] = cost[self.n:] + y
        return y, d

    def _tick(self):
        self.iters += 1
        if self.iters > self.iter_limit:
            raise _IterLimit()

    def _note_step(self, step: float):
        if abs(step) <= DEGEN_EPS:
            self.degen += 1
            if self.degen > 2 * self.N:
                self.bland = True
        else:
            self.degen = 0

    def _choose(self, elig: np.ndarray, score: np.ndarray) -> int:
        idx = np.flatnonzero(elig)
        if self.bland:
            return int(idx[0])
        return int(idx[np.argmax(score[idx])])

    # --------------------------------------------------------- primal phases

    def primal(self, phase1: bool) -> str:
        """Primal simplex; phase1 minimizes total bound violation.

        Returns "optimal"/"feasible", "unbounded" (direction stashed) or
        "infeasible" (phase-1 optimum with positive violation, ray stashed).
        """
        m = self.m
        while True:
            self._tick()
            v = self.nonbasic_values()
            xB = self.compute_xB(v)
            lbB, ubB = self.lbN[self.basic], self.ubN[self.basic]
            viol_low = lbB - xB > FEAS_TOL
            viol_up = xB - ubB > FEAS_TOL
            if phase1:
                total = float((lbB - xB)[viol_low].sum()
                              + (xB - ubB)[viol_up].sum())
                if total <= FEAS_TOL:
                    return "feasible"
                cost = np.zeros(self.N)
                cost[self.basic[viol_low]] = -1.0
                cost[self.basic[viol_up]] = 1.0
            else:
                cost = self.cN
            y, d = self.duals(cost)
            elig = (((self.vstat == AT_LOWER) & (d < -DUAL_TOL))
                    | ((self.vstat == AT_UPPER) & (d > DUAL_TOL))
                    | ((self.vstat == FREE) & (np.abs(d) > DUAL_TOL)))
            if not elig.any():
                if phase1:
                    self._ray = self._ray_from_pi(y)
                    return "infeasible"
                return "optimal"
            e = self._choose(elig, np.abs(d))
            delta = 1.0 if (self.vstat[e] == AT_LOWER
                            or (self.vstat[e] == FREE and d[e] < 0)) else -1.0
            w = self.Binv @ self.col(e)
            g = -delta * w
            dec = g < -PIVOT_TOL
            inc = g > PIVOT_TOL
            with np.errstate(divide="ignore", invalid="ignore"):
                if phase1:
                    # feasible basics block at the bound they approach;
                    # violated ones block where they re-enter their box
                    lo_block = np.where(dec & ~viol_low, (xB - lbB) / -g, np.inf)
                    lo_enter = np.where(inc & viol_low, (lbB - xB) / g, np.inf)
                    up_block = np.where(inc & ~viol_up, (ubB - xB) / g, np.inf)
                    up_enter = np.where(dec & viol_up, (xB - ubB) / -g, np.inf)
                    t_lo = np.minimum(lo_block, lo_enter)
                    t_up = np.minimum(up_block, up_enter)
                else:
                    t_lo = np.where(dec, (xB - lbB) / -g, np.inf)
                    t_up = np.where(inc, (ubB - xB) / g, np.inf)
            t_lo = np.nan_to_num(np.maximum(t_lo, 0.0), nan=np.inf,
                                 posinf=np.inf)
            t_up = np.nan_to_num(np.maximum(t_up, 0.0), nan=np.inf,
                                 posinf=np.inf)
            t_basic = np.minimum(t_lo, t_up)
            span = self.ubN[e] - self.lbN[e] if self.vstat[e] != FREE else np.inf
            span = max(span, 0.0)
            tb = float(t_basic.min(initial=np.inf))
            if not math.isfinite(tb) and not math.isfinite(span):
                if phase1:
                    raise _Numerical("unbounded phase-1 step")
                self._direction = self._unbounded_direction(e, delta, g)
                return "unbounded"
            if span <= tb:
                self.vstat[e] = AT_UPPER if self.vstat[e] == AT_LOWER \
                    else AT_LOWER
                self._note_step(span)
                continue
            r = self._pick_leaving(t_basic, tb, g)
            q = self.basic[r]
            # the leaving variable settles at the bound whose ratio won
            self.vstat[q] = AT_LOWER if t_lo[r] <= t_up[r] else AT_UPPER
            self.basic[r] = e
            self.vstat[e] = BASIC
            self._update_binv(w, r)
            self._note_step(tb)

    def _pick_leaving(self, t_basic: np.ndarray, tb: float,
                      g: np.ndarray) -> int:
        ties = np.flatnonzero(t_basic <= tb + 1e-12)
        if ties.size == 1:
            return int(ties[0])
        if self.bland:
            return int(ties[np.argmin(self.basic[ties])])
        return int(ties[np.argmax(np.abs(g[ties]))])

    def _unbounded_direction(self, e: int, delta: float,
                             g: np.ndarray) -> np.ndarray:
        d = np.zeros(self.n)
        if e < self.n:
            d[e] = delta
        struct = self.basic < self.n
        d[self.basic[struct]] += g[struct]
        return d

    # ------------------------------------------------------------ dual phase

    def dual(self) -> str:
        """Dual simplex from a dual-feasible basis.

        Returns "feasible" once primal feasibility is restored, or
        "infeasible" with the ray stashed in self._ray.
        """
        n = self.n
        while True:
            self._tick()
            v = self.nonbasic_values()
            xB = self.compute_xB(v)
            lbB, ubB = self.lbN[self.basic], self.ubN[self.basic]
            below = lbB - xB
            above = xB - ubB
            viol = np.maximum(np.maximum(below, above), 0.0)
            if viol.max(initial=0.0) <= FEAS_TOL:
                return "feasible"
            if self.bland:
                cand = np.flatnonzero(viol > FEAS_TOL)
                r = int(cand[np.argmin(self.basic[cand])])
            else:
                r = int(np.argmax(viol))
            is_below = below[r] > above[r]
            rho = self.Binv[r]
            alpha = np.empty(self.N)
            alpha[:n] = rho @ self.A
            alpha[n:] = -rho
            if is_below:
                elig = (((self.vstat == AT_LOWER) & (alpha < -PIVOT_TOL))
                        | ((self.vstat == AT_UPPER) & (alpha > PIVOT_TOL))
                        | ((self.vstat == FREE) & (np.abs(alpha) > PIVOT_TOL)))
            else:
                elig = (((self.vstat == AT_LOWER) & (alpha > PIVOT_TOL))
                        | ((self.vstat == AT_UPPER) & (alpha < -PIVOT_TOL))
                        | ((self.vstat == FREE) & (np.abs(alpha) > PIVOT_TOL)))
            if not elig.any():
                sigma = -1.0 if is_below else 1.0
                self._ray = self._ray_from_pi(sigma * rho)
                return "infeasible"
            _, d = self.duals(self.cN)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.abs(d / alpha)
            ratio[~elig] = np.inf
            ratio = np.nan_to_num(ratio, nan=np.inf, posinf=np.inf)
            best = float(ratio.min())
            ties = np.flatnonzero(ratio <= best + 1e-12)
            if self.bland:
                e = int(ties[0])
            else:
                e = int(ties[np.argmax(np.abs(alpha[ties]))])
            w = self.Binv @ self.col(e)
            if abs(w[r]) < PIVOT_TOL:
                raise _Numerical("tiny dual pivot")
            q = self.basic[r]
            self.vstat[q] = AT_LOWER if is_below else AT_UPPER
            self.basic[r] = e
            self.vstat[e] = BASIC
            self._update_binv(w, r)
            self._note_step(best)

    # -------------------------------------------------------------- ray glue

    def _ray_from_pi(self, pi: np.ndarray) -> FarkasRay:
        y = np.maximum(pi, 0.0)
        scale = float(np.abs(y).max(initial=0.0))
        if scale > 0:
            y = y / scale
        s = -(y @ self.A)
        s[np.abs(s) <= 1e-9 * max(1.0, float(np.abs(s).max(initial=0.0)))] = 0.0
        return FarkasRay(y=y, s=s)

    # ------------------------------------------------------------ entry point

    def run(self) -> LpResult:
        v = self.nonbasic_values()
        xB = self.compute_xB(v)
        lbB, ubB = self.lbN[self.basic], self.ubN[self.basic]
        primal_ok = bool(np.all(lbB - xB <= FEAS_TOL)
                         and np.all(xB - ubB <= FEAS_TOL))
        _, d = self.duals(self.cN)
        if self._dual_feasible(d):
            if self.dual() == "infeasible":
                return self._finish_infeasible()
            st = self.primal(phase1=False)   # usually returns immediately
        else:
            if not primal_ok:
                if self.primal(phase1=True) == "infeasible":
                    return self._finish_infeasible()
            st = self.primal(phase1=False)
        if st == "unbounded":
            return LpResult("unbounded", direction=self._direction,
                            iterations=self.iters)
        return self._finish_optimal()

    def _dual_feasible(self, d: np.ndarray) -> bool:
        bad = (((self.vstat == AT_LOWER) & (d < -DUAL_TOL))
               | ((self.vstat == AT_UPPER) & (d > DUAL_TOL))
               | ((self.vstat == FREE) & (np.abs(d) > DUAL_TOL)))
        return not bad.any()

    def _finish_optimal(self) -> LpResult:
        v = self.nonbasic_values()
        xB = self.compute_xB(v)
        v[self.basic] = xB
        x = v[:self.n].copy()
        # snap values sitting numerically on a bound
        lo, up = self.lbN[:self.n], self.ubN[:self.n]
        snap = np.isfinite(lo) & (np.abs(x - lo) < 1e-9)
        x[snap] = lo[snap]
        snap = np.isfinite(up) & (np.abs(x - up) < 1e-9)
        x[snap] = up[snap]
        y, d = self.duals(self.cN)
        return LpResult("optimal", x=x, obj=float(self.p.c @ x), y=y,
                        redcost=d[:self.n].copy(),
                        basis=Basis(self.basic.copy(), self.vstat.copy()),
                        iterations=self.iters)

    def _finish_infeasible(self) -> LpResult:
        return LpResult("infeasible", ray=self._ray,
                        basis=Basis(self.basic.copy(), self.vstat.copy()),
                        iterations=self.iters)


def solve_lp(p: Problem, bounds: LocalBounds, warm: Basis | None = None,
             iter_limit: int | None = None) -> LpResult:
    """Solve the LP relaxation of ``p`` under local bounds.

    Warm bases are restarted through the dual simplex when still dual
    feasible.  A numerical breakdown (or an infeasibility ray that fails
    verification) triggers one cold retry under Bland's rule before giving
    up with status "numerical".
    """
    if iter_limit is None:
        iter_limit = 50 * (p.n + p.m) + 200
    for attempt, bland in ((0, False), (1, True)):
        eng = _Engine(p, bounds, iter_limit=iter_limit, bland=bland)
        if attempt > 0 or not eng.load_warm(warm):
            eng.cold_start()
        try:
            res = eng.run()
        except _IterLimit:
            return LpResult("iterlimit", iterations=eng.iters)
        except _Numerical:
            continue
        if res.status == "infeasible":
            rep = verify_farkas_ray(p, bounds, res.ray)
            if not rep.ok:
                continue
        return res
    return LpResult("numerical")
