"""Rounding and scoring rules for the three diving heuristics.

Each heuristic is a pair of pure functions over the dive context: a
direction (round up or down) and a score (higher is selected first).

* farkas: round toward the pseudo solution (the bound suggested by the
  objective sign) and score by |c_j| * dual impact * relative
  fractionality, so the dive drives the LP objective upward and aims at
  an infeasibility proof or a cheap feasible point.
* coef: round to the direction with fewer variable locks (safe).
* conflict: round to the direction with the larger kappa-weighted mix of
  conflict locks and variable locks (risky, fail-fast).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .locks import LockTable, WeightedLocks, weighted_locks
from .model import LocalBounds

EPS_OBJ = 1e-6      # score weight for zero-objective candidates

UP, DOWN = "up", "down"


@dataclass
class DiveContext:
    """Frozen view of one scoring round inside a dive."""

    c: np.ndarray
    xtilde: np.ndarray
    bounds: LocalBounds
    vlocks: LockTable
    wlocks: WeightedLocks

    @classmethod
    def of(cls, c, xtilde, bounds, vlocks, conf_locks=None,
           kappa: float = 0.75) -> "DiveContext":
        conf = conf_locks if conf_locks is not None \
            else LockTable.zeros(len(c))
        return cls(np.asarray(c, dtype=float), np.asarray(xtilde, dtype=float),
                   bounds, vlocks, weighted_locks(vlocks, conf, kappa))

    def frac(self, j: int) -> float:
        return float(self.xtilde[j] - math.floor(self.xtilde[j]))


def dual_impact(j: int, c, xtilde, bounds: LocalBounds) -> float:
    """Distance the rounding can push x_j toward its objective-best bound.

    Defined for c_j != 0 with the referenced bound finite; raises
    otherwise (callers substitute 1 for infinite bounds).
    """
    cj = float(c[j])
    if cj == 0.0:
        raise ValueError("dual impact needs a nonzero objective coefficient")
    if cj < 0.0:
        lo = bounds.lb[j]
        if not math.isfinite(lo):
            raise ValueError("referenced lower bound is infinite")
        return float(math.ceil(xtilde[j]) - lo)
    up = bounds.ub[j]
    if not math.isfinite(up):
        raise ValueError("referenced upper bound is infinite")
    return float(up - math.floor(xtilde[j]))


def farkas_round(ctx: DiveContext, j: int) -> str:
    cj = ctx.c[j]
    if cj < 0.0:
        return UP
    if cj > 0.0:
        return DOWN
    return UP if ctx.frac(j) >= 0.5 else DOWN


def farkas_score(ctx: DiveContext, j: int) -> float:
    phi = ctx.frac(j)
    phi_p = 1.0 - phi if farkas_round(ctx, j) == UP else phi
    cj = float(ctx.c[j])
    if cj == 0.0:
        return EPS_OBJ * phi_p
    try:
        delta = dual_impact(j, ctx.c, ctx.xtilde, ctx.bounds)
    except ValueError:
        delta = 1.0
    return abs(cj) * delta * phi_p


def coef_round(ctx: DiveContext, j: int) -> str:
    down, up = ctx.vlocks.down[j], ctx.vlocks.up[j]
    if up < down:
        return UP
    if down < up:
        return DOWN
    return UP if ctx.frac(j) >= 0.5 else DOWN


def coef_score(ctx: DiveContext, j: int) -> float:
    d = coef_round(ctx, j)
    return float(ctx.vlocks.up[j] if d == UP else ctx.vlocks.down[j])


def conflict_round(ctx: DiveContext, j: int) -> str:
    down_w, up_w = ctx.wlocks.down_w[j], ctx.wlocks.up_w[j]
    if up_w > down_w:
        return UP
    if down_w > up_w:
        return DOWN
    return UP if ctx.frac(j) >= 0.5 else DOWN


def conflict_score(ctx: DiveContext, j: int) -> float:
    d = conflict_round(ctx, j)
    return float(ctx.wlocks.up_w[j] if d == UP else ctx.wlocks.down_w[j])


# ------------------------------------------------- vectorized dive scoring

def _frac_all(xt: np.ndarray, cand: np.ndarray) -> np.ndarray:
    return xt[cand] - np.floor(xt[cand])


def farkas_scores(ctx: DiveContext, cand: np.ndarray):
    """(up_mask, scores) over the candidate index array."""
    c = ctx.c[cand]
    phi = _frac_all(ctx.xtilde, cand)
    up = (c < 0) | ((c == 0) & (phi >= 0.5))
    phi_p = np.where(up, 1.0 - phi, phi)
    lo = ctx.bounds.lb[cand]
    hi = ctx.bounds.ub[cand]
    delta = np.where(c < 0, np.ceil(ctx.xtilde[cand]) - lo,
                     hi - np.floor(ctx.xtilde[cand]))
    delta = np.where(np.isfinite(delta), delta, 1.0)
    scores = np.where(c == 0, EPS_OBJ * phi_p, np.abs(c) * delta * phi_p)
    return up, scores


def coef_scores(ctx: DiveContext, cand: np.ndarray):
    down = ctx.vlocks.down[cand]
    up_l = ctx.vlocks.up[cand]
    phi = _frac_all(ctx.xtilde, cand)
    up = (up_l < down) | ((up_l == down) & (phi >= 0.5))
    scores = np.where(up, up_l, down).astype(float)
    return up, scores


def conflict_scores(ctx: DiveContext, cand: np.ndarray):
    down_w = ctx.wlocks.down_w[cand]
    up_w = ctx.wlocks.up_w[cand]
    phi = _frac_all(ctx.xtilde, cand)
    up = (up_w > down_w) | ((up_w == down_w) & (phi >= 0.5))
    scores = np.where(up, up_w, down_w)
    return up, scores


@dataclass(frozen=True)
class HeuristicSpec:
    """A named (round, score) pair plus its vectorized form."""

    name: str
    round_fn: object
    score_fn: object
    scores_fn: object   # (ctx, cand) -> (up_mask, scores)


FARKAS = HeuristicSpec("farkas", farkas_round, farkas_score, farkas_scores)
COEF = HeuristicSpec("coef", coef_round, coef_score, coef_scores)
CONFLICT = HeuristicSpec("conflict", conflict_round, conflict_score,
                         conflict_scores)

HEURISTICS = {h.name: h for h in (FARKAS, COEF, CONFLICT)}
