"""Random instance generators.

MIP generation plants a feasible binary point so that searches and dives
have solutions to find; LP infeasibility is planted through an explicit
certificate (or a direct contradiction), never left to chance.
"""

from __future__ import annotations

import numpy as np

from .model import Problem


def _random_row(rng: np.random.Generator, n: int, density: float,
                coef_range: int) -> np.ndarray:
    k = max(2, int(round(density * n)))
    k = int(rng.integers(2, k + 1)) if k > 2 else 2
    support = rng.choice(n, size=min(k, n), replace=False)
    row = np.zeros(n)
    vals = rng.integers(1, coef_range + 1, size=support.size)
    signs = rng.choice([-1, 1], size=support.size)
    row[support] = vals * signs
    return row


def random_binary_mip(rng: np.random.Generator, n: int, m: int, *,
                      density: float = 0.5, coef_range: int = 4,
                      obj_range: int = 10, zero_obj_frac: float = 0.0,
                      slack_range: int = 3,
                      name: str = "rand") -> Problem:
    """Binary MIP in >= form with a planted feasible point.

    Each row's rhs is set at or below the planted point's activity, so the
    instance is feasible by construction while randomly signed
    coefficients still give both up and down locks.
    """
    z = rng.integers(0, 2, size=n).astype(float)
    A = np.vstack([_random_row(rng, n, density, coef_range)
                   for _ in range(m)])
    slack = rng.integers(0, slack_range + 1, size=m).astype(float)
    b = A @ z - slack
    c = rng.integers(-obj_range, obj_range + 1, size=n).astype(float)
    if zero_obj_frac > 0:
        mask = rng.random(n) < zero_obj_frac
        c[mask] = 0.0
    else:
        c[c == 0] = 1.0
    return Problem.build(c, A, b, np.zeros(n), np.ones(n), range(n),
                         name=name)


def conflict_rich_mip(rng: np.random.Generator, n: int, *,
                      row_factor: float = 0.9, traps_per_10: float = 1.2,
                      cover2: bool = True,
                      name: str = "rich") -> Problem:
    """Binary MIP whose LP relaxation hides integer-infeasible pockets.

    Each pocket is a trigger variable t plus three auxiliaries: pairwise
    covers x_i + x_j >= x_t and the packing x_a + x_b + x_d <= 2 - x_t.
    At x_t = 1 the three covers demand a fractional point the packing
    forbids, so the LP dies while single-row bound propagation stays
    silent.  The trigger gets a negative objective coefficient, which
    makes objective-led and high-lock-led roundings walk straight into
    the pocket while low-lock-led roundings avoid it.  A planted point
    with every trigger at 0 keeps the instance feasible.
    """
    z = rng.integers(0, 2, size=n).astype(float)
    c = rng.integers(-9, 10, size=n).astype(float)
    c[c == 0] = 1.0
    rows: list[np.ndarray] = []
    rhs: list[float] = []
    ntraps = max(1, int(round(n / 10 * traps_per_10)))
    order = rng.permutation(n)
    used = 0
    for _ in range(ntraps):
        if used + 4 > n:
            break
        t, a, b, d = (int(v) for v in order[used:used + 4])
        used += 4
        z[t] = 0.0
        if z[a] + z[b] + z[d] > 2:
            z[d] = 0.0
        c[t] = -float(rng.integers(3, 10))
        for i, j in ((a, b), (a, d), (b, d)):
            row = np.zeros(n)
            row[i] = 1.0
            row[j] = 1.0
            row[t] = -1.0
            rows.append(row)
            rhs.append(0.0)
        row = np.zeros(n)
        row[[a, b, d]] = -1.0
        row[t] = -1.0
        rows.append(row)
        rhs.append(-2.0)
    ones = np.flatnonzero(z > 0.5)
    zeros = np.flatnonzero(z < 0.5)
    target = len(rows) + int(round(row_factor * n))
    while len(rows) < target:
        r = rng.random()
        if r < 0.35 and ones.size >= 2:
            # cover demanding two of a small set, two planted ones inside
            k = int(rng.integers(4, 7)) if cover2 else int(rng.integers(3, 6))
            base = rng.choice(ones, size=2, replace=False)
            rest = rng.choice(n, size=max(0, k - 2), replace=False)
            sup = np.unique(np.concatenate([base, rest]))
            row = np.zeros(n)
            row[sup] = 1.0
            rows.append(row)
            rhs.append(2.0 if cover2 else 1.0)
        elif r < 0.6 and zeros.size >= 2:
            k = int(rng.integers(2, 4))
            sup = np.unique(rng.choice(zeros, size=min(k, zeros.size),
                                       replace=False))
            row = np.zeros(n)
            row[sup] = -1.0
            rows.append(row)
            rhs.append(-1.0)
        else:
            k = int(rng.integers(4, 9))
            sup = rng.choice(n, size=min(k, n), replace=False)
            row = np.zeros(n)
            row[sup] = (rng.integers(1, 4, size=sup.size)
                        * rng.choice([-1, 1], size=sup.size))
            rows.append(row)
            rhs.append(float(row @ z) - float(rng.integers(0, 2)))
    return Problem.build(c, np.vstack(rows), rhs, np.zeros(n), np.ones(n),
                         range(n), name=name)


def random_lp(rng: np.random.Generator, n: int, m: int, *,
              coef_range: int = 5, name: str = "lp") -> Problem:
    """Feasible bounded LP: box [0, u] with rows satisfied at a planted
    interior point."""
    x0 = rng.uniform(0.5, 2.5, size=n)
    ub = x0 + rng.uniform(0.5, 3.0, size=n)
    A = rng.integers(-coef_range, coef_range + 1, size=(m, n)).astype(float)
    b = A @ x0 - rng.uniform(0.1, 2.0, size=m)
    c = rng.integers(-coef_range, coef_range + 1, size=n).astype(float)
    return Problem.build(c, A, b, np.zeros(n), ub, [], name=name)


def random_infeasible_lp(rng: np.random.Generator, n: int, m: int, *,
                         name: str = "infeas") -> Problem:
    """Infeasible LP built by one of three certified recipes.

    1. a contradicting >= pair (a.x >= b1 and -a.x >= -b2 with b2 < b1),
    2. a row violated by the bounds alone (max activity < rhs),
    3. a planted positive combination y of the rows whose aggregate
       violates the box (a direct Farkas certificate, possibly with
       bound multipliers).
    """
    m = max(m, 2)
    recipe = int(rng.integers(0, 3))
    lb = np.zeros(n)
    ub = rng.integers(1, 5, size=n).astype(float)
    rows = [rng.integers(-4, 5, size=n).astype(float) for _ in range(m - 1)]
    point = rng.uniform(0, 1, size=n) * ub
    rhs = [float(r @ point) - float(rng.uniform(0.0, 2.0)) for r in rows]
    if recipe == 0:
        a = rng.integers(-4, 5, size=n).astype(float)
        if not a.any():
            a[0] = 1.0
        cut = float(rng.uniform(0.5, 3.0))
        base = float(a @ point)
        rows = rows[:m - 2] + [a, -a]
        rhs = rhs[:m - 2] + [base + 1.0, -(base + 1.0 - cut)]
    elif recipe == 1:
        a = rng.integers(-4, 5, size=n).astype(float)
        if not a.any():
            a[0] = 1.0
        maxact = float(np.where(a > 0, a * ub, a * lb).sum())
        rows.append(a)
        rhs.append(maxact + float(rng.uniform(0.5, 2.0)))
    else:
        # plant y >= 0 over fresh rows so that the aggregate row has
        # max activity below the aggregate rhs
        k = max(2, m // 2)
        R = rng.integers(-4, 5, size=(k, n)).astype(float)
        y = rng.integers(1, 4, size=k).astype(float)
        agg = y @ R
        maxact = float(np.where(agg > 0, agg * ub, agg * lb).sum())
        target = maxact + float(rng.uniform(0.5, 2.0))
        beta = np.empty(k)
        beta[1:] = [float(R[i] @ point) for i in range(1, k)]
        beta[0] = (target - float(y[1:] @ beta[1:])) / float(y[0])
        rows = rows[:max(0, m - k)] + [R[i] for i in range(k)]
        rhs = rhs[:max(0, m - k)] + [float(v) for v in beta]
    c = rng.integers(-3, 4, size=n).astype(float)
    return Problem.build(c, np.vstack(rows), rhs, lb, ub, [], name=name)
