"""Variable and conflict lock counting plus the weighted combination."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from divebnb import LockTable, Problem, problem_locks, weighted_locks
from divebnb.generate import random_binary_mip

from conftest import make_e4


def test_sign_counting_example():
    p = Problem.build([0.0, 0.0], [[1, -2], [3, 0], [0, -1]], [0, 0, 0],
                      [0, 0], [1, 1])
    locks = problem_locks(p)
    # down locks count positive coefficients, up locks negative ones
    assert list(locks.down) == [2, 0]
    assert list(locks.up) == [0, 2]


def test_empty_row_set():
    p = Problem.build([0.0, 0.0], np.zeros((0, 2)), [], [0, 0], [1, 1])
    locks = problem_locks(p)
    assert not locks.down.any() and not locks.up.any()


def test_e4_row_locks():
    locks = problem_locks(make_e4())
    assert list(locks.down) == [0, 0]
    assert list(locks.up) == [1, 1]


def test_weighted_locks_example():
    conf = LockTable(down=np.array([0]), up=np.array([4]))
    var = LockTable(down=np.array([0]), up=np.array([2]))
    w = weighted_locks(var, conf, kappa=0.75)
    assert w.up_w[0] == pytest.approx(3.5)


def test_kappa_zero_is_variable_locks():
    conf = LockTable(down=np.array([9.0]), up=np.array([9.0]))
    var = LockTable(down=np.array([2.0]), up=np.array([5.0]))
    w = weighted_locks(var, conf, kappa=0.0)
    assert w.down_w[0] == 2.0 and w.up_w[0] == 5.0


def test_kappa_one_is_conflict_locks():
    conf = LockTable(down=np.array([9.0]), up=np.array([8.0]))
    var = LockTable(down=np.array([2.0]), up=np.array([5.0]))
    w = weighted_locks(var, conf, kappa=1.0)
    assert w.down_w[0] == 9.0 and w.up_w[0] == 8.0


def test_kappa_out_of_range_errors():
    t = LockTable.zeros(1)
    with pytest.raises(ValueError):
        weighted_locks(t, t, kappa=1.5)


def test_incremental_add_drop_matches_recount():
    rng = np.random.default_rng(1)
    n = 6
    table = LockTable.zeros(n)
    rows = []
    for _ in range(12):
        k = int(rng.integers(1, n + 1))
        idx = np.sort(rng.choice(n, size=k, replace=False))
        vals = rng.integers(-3, 4, size=k).astype(float)
        vals[vals == 0] = 1.0
        table.add_row(idx, vals)
        rows.append((idx, vals))
    drop = rows.pop(5)
    table.drop_row(*drop)
    dense = np.zeros((len(rows), n))
    for i, (idx, vals) in enumerate(rows):
        dense[i, idx] = vals
    p = Problem.build(np.zeros(n), dense, np.zeros(len(rows)),
                      np.zeros(n), np.ones(n))
    ref = problem_locks(p)
    assert np.array_equal(table.down, ref.down)
    assert np.array_equal(table.up, ref.up)


def test_lock_soundness_by_enumeration():
    """A variable with zero down locks can always be floored safely.

    Lowering such a variable never decreases any row activity below its
    previous level, so row feasibility is preserved.
    """
    rng = np.random.default_rng(8)
    for k in range(30):
        n = int(rng.integers(2, 6))
        m = int(rng.integers(1, 5))
        p = random_binary_mip(rng, n, m)
        locks = problem_locks(p)
        A = p.dense()
        for j in range(n):
            x = rng.uniform(0, 1, size=n)
            base = A @ x
            if locks.down[j] == 0:
                y = x.copy()
                y[j] = 0.0
                assert np.all(A @ y >= base - 1e-12), f"case {k} var {j}"
            if locks.up[j] == 0:
                y = x.copy()
                y[j] = 1.0
                assert np.all(A @ y >= base - 1e-12), f"case {k} var {j}"


@given(st.integers(0, 10), st.integers(0, 10),
       st.floats(0, 1, allow_nan=False))
def test_weighted_between_components(conf_locks, var_locks, kappa):
    conf = LockTable(down=np.array([float(conf_locks)]),
                     up=np.array([0.0]))
    var = LockTable(down=np.array([float(var_locks)]), up=np.array([0.0]))
    w = weighted_locks(var, conf, kappa=kappa)
    lo = min(conf_locks, var_locks)
    hi = max(conf_locks, var_locks)
    assert lo - 1e-12 <= w.down_w[0] <= hi + 1e-12
