"""Rounding directions and scores for the three diving heuristics."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from divebnb import DiveContext, LockTable, Problem
from divebnb.heuristics import (COEF, CONFLICT, FARKAS, coef_round,
                                coef_score, conflict_round, conflict_score,
                                dual_impact, farkas_round, farkas_score)
from divebnb.model import LocalBounds


def ctx_for(c, xt, lb, ub, vdown, vup, cdown=None, cup=None, kappa=0.75):
    n = len(c)
    p = Problem.build(c, np.zeros((0, n)), [], lb, ub)
    bounds = LocalBounds.of(p)
    vlocks = LockTable(down=np.asarray(vdown, dtype=float),
                       up=np.asarray(vup, dtype=float))
    conf = None
    if cdown is not None:
        conf = LockTable(down=np.asarray(cdown, dtype=float),
                         up=np.asarray(cup, dtype=float))
    return DiveContext.of(np.asarray(c, dtype=float),
                          np.asarray(xt, dtype=float), bounds, vlocks,
                          conf, kappa)


# ------------------------------------------------------------- dual impact

def test_dual_impact_positive_cost():
    ctx = ctx_for([2.0], [3.4], [0.0], [7.0], [0], [0])
    assert dual_impact(0, ctx.c, ctx.xtilde, ctx.bounds) == pytest.approx(4.0)


def test_dual_impact_negative_cost():
    ctx = ctx_for([-1.0], [3.4], [0.0], [7.0], [0], [0])
    assert dual_impact(0, ctx.c, ctx.xtilde, ctx.bounds) == pytest.approx(4.0)


def test_dual_impact_at_bound_is_zero():
    ctx = ctx_for([-1.0], [1.0], [1.0], [7.0], [0], [0])
    assert dual_impact(0, ctx.c, ctx.xtilde, ctx.bounds) == pytest.approx(0.0)


def test_dual_impact_zero_cost_errors():
    ctx = ctx_for([0.0], [1.0], [0.0], [7.0], [0], [0])
    with pytest.raises(ValueError):
        dual_impact(0, ctx.c, ctx.xtilde, ctx.bounds)


def test_dual_impact_infinite_bound_errors():
    ctx = ctx_for([2.0], [3.4], [0.0], [np.inf], [0], [0])
    with pytest.raises(ValueError):
        dual_impact(0, ctx.c, ctx.xtilde, ctx.bounds)


# ------------------------------------------------------- objective rounding

def test_farkas_round_negative_cost_up():
    ctx = ctx_for([-1.0], [0.3], [0.0], [1.0], [0], [0])
    assert farkas_round(ctx, 0) == "up"


def test_farkas_round_positive_cost_down_despite_fraction():
    ctx = ctx_for([3.0], [0.9], [0.0], [1.0], [0], [0])
    assert farkas_round(ctx, 0) == "down"


def test_farkas_round_zero_cost_by_fraction():
    up = ctx_for([0.0], [0.6], [0.0], [1.0], [0], [0])
    down = ctx_for([0.0], [0.4], [0.0], [1.0], [0], [0])
    assert farkas_round(up, 0) == "up"
    assert farkas_round(down, 0) == "down"


def test_farkas_score_product():
    # |c|=2, Delta=4, phi'=0.6 -> 4.8 (c>0 rounds down, phi=0.6)
    ctx = ctx_for([2.0], [3.6], [0.0], [7.0], [0], [0])
    assert farkas_score(ctx, 0) == pytest.approx(4.8)


def test_farkas_score_e4_candidate():
    # on E4's dive start (0.75, 0.75): |c|=1, Delta=ceil(0.75)-0=1,
    # phi'=1-0.75=0.25
    ctx = ctx_for([-1.0, -1.0], [0.75, 0.75], [0.0, 0.0], [1.0, 1.0],
                  [0, 0], [1, 1])
    assert farkas_score(ctx, 0) == pytest.approx(0.25)
    assert farkas_score(ctx, 1) == pytest.approx(0.25)


def test_farkas_score_zero_cost_epsilon():
    ctx = ctx_for([0.0], [0.7], [0.0], [1.0], [0], [0])
    # rounds up with phi'=0.3, scaled by the 1e-6 fallback factor
    assert farkas_score(ctx, 0) == pytest.approx(3e-7)


def test_farkas_score_infinite_bound_uses_unit_impact():
    ctx = ctx_for([-2.0], [0.5], [0.0], [np.inf], [0], [0])
    # Delta falls back to 1, phi' = 0.5
    assert farkas_score(ctx, 0) == pytest.approx(1.0)


# ------------------------------------------------------------ lock rounding

def test_coef_round_to_fewer_locks():
    ctx = ctx_for([0.0], [0.5], [0.0], [1.0], [2], [0])
    assert coef_round(ctx, 0) == "up"
    assert coef_score(ctx, 0) == pytest.approx(0.0)


def test_coef_round_tie_by_fraction():
    ctx = ctx_for([0.0], [0.2], [0.0], [1.0], [3], [3])
    assert coef_round(ctx, 0) == "down"
    assert coef_score(ctx, 0) == pytest.approx(3.0)


def test_coef_round_unlocked_by_fraction():
    ctx = ctx_for([0.0], [0.8], [0.0], [1.0], [0], [0])
    assert coef_round(ctx, 0) == "up"
    assert coef_score(ctx, 0) == pytest.approx(0.0)


def test_conflict_round_to_larger_weighted_locks():
    ctx = ctx_for([0.0], [0.5], [0.0], [1.0], [2], [2], [0], [4],
                  kappa=0.75)
    # omega+ = 0.75*4 + 0.25*2 = 3.5 > omega- = 0.5
    assert conflict_round(ctx, 0) == "up"
    assert conflict_score(ctx, 0) == pytest.approx(3.5)


def test_conflict_round_tie_by_fraction():
    ctx = ctx_for([0.0], [0.4], [0.0], [1.0], [2], [2], [2], [2])
    assert conflict_round(ctx, 0) == "down"
    assert conflict_score(ctx, 0) == pytest.approx(2.0)


def test_conflict_kappa_zero_reverses_coef():
    ctx = ctx_for([0.0], [0.5], [0.0], [1.0], [1], [4], [9], [9],
                  kappa=0.0)
    assert coef_round(ctx, 0) == "down"      # fewer locks down
    assert conflict_round(ctx, 0) == "up"    # larger locks up


def test_conflict_score_unlocked_direction_zero():
    ctx = ctx_for([0.0], [0.5], [0.0], [1.0], [0], [0], [0], [0])
    assert conflict_score(ctx, 0) == pytest.approx(0.0)


def test_selection_takes_larger_score_first():
    ctx = ctx_for([0.0, 0.0], [0.5, 0.5], [0.0, 0.0], [1.0, 1.0],
                  [0, 0], [0, 0], [0, 0], [5, 2], kappa=1.0)
    cand = np.array([0, 1])
    up, scores = CONFLICT.scores_fn(ctx, cand)
    assert bool(up[0]) and bool(up[1])
    assert int(cand[np.argmax(scores)]) == 0


# ------------------------------------------------- vectorized == scalar

@given(st.integers(0, 2 ** 31 - 1))
def test_vectorized_scores_match_scalar(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 8))
    c = rng.integers(-5, 6, size=n).astype(float)
    xt = np.round(rng.uniform(0.05, 0.95, size=n), 3)
    vdown = rng.integers(0, 5, size=n)
    vup = rng.integers(0, 5, size=n)
    cdown = rng.integers(0, 5, size=n)
    cup = rng.integers(0, 5, size=n)
    ctx = ctx_for(c, xt, np.zeros(n), np.ones(n), vdown, vup, cdown, cup)
    cand = np.arange(n)
    for spec, rounder, scorer in ((FARKAS, farkas_round, farkas_score),
                                  (COEF, coef_round, coef_score),
                                  (CONFLICT, conflict_round, conflict_score)):
        up, scores = spec.scores_fn(ctx, cand)
        for j in range(n):
            assert (up[j] and rounder(ctx, j) == "up") \
                or (not up[j] and rounder(ctx, j) == "down"), (spec.name, j)
            assert scores[j] == pytest.approx(scorer(ctx, j), rel=1e-12), \
                (spec.name, j)


def test_farkas_direction_matches_pseudo_solution():
    """Objective rounding always moves toward the variable's best bound."""
    rng = np.random.default_rng(33)
    for _ in range(40):
        n = int(rng.integers(1, 6))
        c = rng.integers(-5, 6, size=n).astype(float)
        xt = rng.uniform(0.1, 0.9, size=n)
        ctx = ctx_for(c, xt, np.zeros(n), np.ones(n),
                      np.zeros(n), np.zeros(n))
        for j in range(n):
            if c[j] == 0:
                continue
            want = "up" if c[j] < 0 else "down"
            assert farkas_round(ctx, j) == want


def test_scores_scale_invariant_in_lock_units():
    """Doubling every lock count doubles conflict scores, keeps direction."""
    base = ctx_for([0.0], [0.5], [0.0], [1.0], [2], [1], [3], [1])
    double = ctx_for([0.0], [0.5], [0.0], [1.0], [4], [2], [6], [2])
    assert conflict_round(base, 0) == conflict_round(double, 0)
    assert conflict_score(double, 0) == pytest.approx(
        2 * conflict_score(base, 0))
