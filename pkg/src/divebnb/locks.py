"""Variable locks, conflict locks, and their weighted combination.

A down lock of x_j is a row that can become violated when x_j decreases:
in >= form those are the rows with a positive coefficient on j.  Up locks
count negative coefficients.  The same counting applied to the conflict
pool gives conflict locks; conflict diving mixes both with a convex
weight kappa.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class LockTable:
    """Per-variable lock counts over one set of >= rows."""

    down: np.ndarray    # count of rows with positive coefficient
    up: np.ndarray      # count of rows with negative coefficient

    @classmethod
    def zeros(cls, n: int) -> "LockTable":
        return cls(np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64))

    def copy(self) -> "LockTable":
        return LockTable(self.down.copy(), self.up.copy())

    def add_row(self, indices, values):
        """Incremental +1 per signed nonzero (pool admission)."""
        indices = np.asarray(indices, dtype=np.int64)
        values = np.asarray(values, dtype=float)
        self.down[indices[values > 0]] += 1
        self.up[indices[values < 0]] += 1

    def drop_row(self, indices, values):
        """Incremental -1 per signed nonzero (pool eviction)."""
        indices = np.asarray(indices, dtype=np.int64)
        values = np.asarray(values, dtype=float)
        self.down[indices[values > 0]] -= 1
        self.up[indices[values < 0]] -= 1


def compute_locks(n: int, indices: np.ndarray, values: np.ndarray) -> LockTable:
    """Exact lock counts from the nonzeros of a row set in >= form."""
    indices = np.asarray(indices, dtype=np.int64)
    values = np.asarray(values, dtype=float)
    down = np.bincount(indices[values > 0], minlength=n).astype(np.int64)
    up = np.bincount(indices[values < 0], minlength=n).astype(np.int64)
    return LockTable(down, up)


def problem_locks(p) -> LockTable:
    """Locks of the model rows (the objective cutoff row never counts)."""
    A = p.A
    return compute_locks(p.n, A.indices, A.data)


@dataclass
class WeightedLocks:
    """Convex combination of conflict locks and variable locks."""

    kappa: float
    down_w: np.ndarray
    up_w: np.ndarray


def weighted_locks(var: LockTable, conf: LockTable,
                   kappa: float) -> WeightedLocks:
    if not 0.0 <= kappa <= 1.0:
        raise ValueError(f"kappa must lie in [0, 1], got {kappa}")
    down_w = kappa * conf.down + (1.0 - kappa) * var.down
    up_w = kappa * conf.up + (1.0 - kappa) * var.up
    return WeightedLocks(kappa, down_w, up_w)
