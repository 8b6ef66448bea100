"""Bound propagation: single-row arithmetic, fixpoint sweeps, undo."""

import numpy as np
import pytest

from divebnb import LocalBounds, Problem, RowSystem, check_feasible, propagate
from divebnb.propagation import (BoundChange, apply_change, propagate_row,
                                 undo_changes)
from divebnb.generate import random_binary_mip

from conftest import make_e4, enumerate_feasible_binary


def prop(p, bounds):
    return propagate(RowSystem.from_problem(p), None, bounds, p.int_mask)


def test_single_row_tightens_partner():
    # 2x1 + x2 >= 4 with x1 <= 1 forces x2 >= 2
    p = Problem.build([0.0, 0.0], [[2.0, 1.0]], [4.0], [0, 0], [1, 5])
    bounds = LocalBounds.of(p)
    res = prop(p, bounds)
    assert res.infeasible_reason is None
    assert bounds.lb[1] == pytest.approx(2.0)


def test_empty_support_row_infeasible():
    # 0^T x >= 1 can never hold
    p = Problem.build([0.0], [[0.0]], [1.0], [0], [1])
    bounds = LocalBounds.of(p)
    res = prop(p, bounds)
    assert res.infeasible_reason is not None


def test_redundant_row_no_changes():
    p = Problem.build([0.0], [[1.0]], [0.0], [0], [1])
    bounds = LocalBounds.of(p)
    res = prop(p, bounds)
    assert res.changes == [] and res.infeasible_reason is None


def test_e4_fix_chain():
    """After x1 >= 1 the row bounds x2 <= 0.5, rounded to the fixing x2 = 0."""
    p = make_e4()
    bounds = LocalBounds.of(p)
    bounds.lb[0] = 1.0
    res = prop(p, bounds)
    assert res.infeasible_reason is None
    assert bounds.ub[1] == 0.0


def test_contradicting_rows_infeasible():
    p = Problem.build([0.0], [[1.0], [-1.0]], [1.0, 0.0], [0], [5])
    bounds = LocalBounds.of(p)
    res = prop(p, bounds)
    assert res.infeasible_reason is not None


def test_undo_restores_bounds():
    p = make_e4()
    bounds = LocalBounds.of(p)
    before = (bounds.lb.copy(), bounds.ub.copy())
    ch = BoundChange(0, "lb", 0.0, 1.0, ("branch",))
    apply_change(bounds, ch)
    res = prop(p, bounds)
    undo_changes(bounds, res.changes)
    undo_changes(bounds, [ch])
    assert np.array_equal(bounds.lb, before[0])
    assert np.array_equal(bounds.ub, before[1])


def test_fixpoint_idempotent():
    p = Problem.build([0.0, 0.0], [[2.0, 1.0]], [4.0], [0, 0], [1, 5])
    bounds = LocalBounds.of(p)
    prop(p, bounds)
    again = prop(p, bounds)
    assert again.changes == []


def test_no_integers_wide_bounds_empty_trail():
    p = Problem.build([0.0, 0.0], [[1.0, 1.0]], [-10.0],
                      [-100, -100], [100, 100])
    bounds = LocalBounds.of(p)
    res = prop(p, bounds)
    assert res.changes == []


def test_scalar_row_reference_matches_sweep():
    rng = np.random.default_rng(12)
    for _ in range(50):
        n = int(rng.integers(2, 6))
        a = rng.integers(-3, 4, size=n).astype(float)
        if not a.any():
            a[0] = 1.0
        beta = float(rng.integers(-4, 5))
        p = Problem.build(np.zeros(n), a.reshape(1, -1), [beta],
                          np.zeros(n), rng.integers(1, 4, size=n),
                          range(n))
        b1 = LocalBounds.of(p)
        b2 = LocalBounds.of(p)
        idx = np.flatnonzero(a)
        ch, infeas = propagate_row(idx, a[idx], beta, b1, p.int_mask)
        res = prop(p, b2)
        assert infeas == (res.infeasible_reason is not None)
        assert np.array_equal(b1.lb, b2.lb)
        assert np.array_equal(b1.ub, b2.ub)


def test_propagation_sound_by_enumeration():
    """No feasible 0/1 point is cut off by propagated bounds."""
    rng = np.random.default_rng(5)
    for k in range(40):
        n = int(rng.integers(2, 7))
        m = int(rng.integers(1, 5))
        p = random_binary_mip(rng, n, m)
        feas = enumerate_feasible_binary(p)
        bounds = LocalBounds.of(p)
        res = prop(p, bounds)
        if res.infeasible_reason is not None:
            assert not feas, f"case {k}: lost feasible points"
            continue
        for x in feas:
            assert np.all(x >= bounds.lb - 1e-9), f"case {k}"
            assert np.all(x <= bounds.ub + 1e-9), f"case {k}"


def test_pool_rows_participate_and_mark_useful():
    p = Problem.build([0.0, 0.0], np.zeros((0, 2)), [], [0, 0], [1, 1],
                      [0, 1])
    pool_sys = RowSystem(2, kind="conflict")
    pool_sys.append(np.array([1]), np.array([-4.0]), -3.0, row_id=17)
    bounds = LocalBounds.of(p)
    res = propagate(RowSystem.from_problem(p), pool_sys, bounds, p.int_mask)
    # -4 x2 >= -3 gives x2 <= 0.75, rounded to 0 for the integer variable
    assert bounds.ub[1] == 0.0
    assert 17 in res.useful_conflicts


def test_infeasible_reason_names_the_row():
    p = Problem.build([0.0], [[0.0]], [2.0], [0], [1])
    bounds = LocalBounds.of(p)
    res = prop(p, bounds)
    kind, ident = res.infeasible_reason
    assert kind == "row" and ident == 0
