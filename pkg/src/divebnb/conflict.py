"""Farkas proofs and the conflict pool.

An infeasible LP yields a ray (y, s); the aggregated row (y^T A) x >= y^T b
is implied by the model rows alone (y >= 0), so it stays valid in every
node of the tree while being violated under the bounds that produced the
ray.  Pooled proofs feed bound propagation and the conflict lock counts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .locks import LockTable, problem_locks
from .model import Problem
from .propagation import RowSystem
from .simplex import FARKAS_TOL, FarkasRay, RayReport, verify_farkas_ray

SNAP_TOL = 1e-9          # coefficient snap threshold, relative to row norm
DUP_TOL = 1e-9           # proportionality tolerance for duplicate rows
POOL_CAPACITY = 10000


@dataclass
class ConflictConstraint:
    """One pooled proof row: values[k] * x[indices[k]] summed >= rhs."""

    id: int
    indices: np.ndarray
    values: np.ndarray
    rhs: float
    origin: str             # "node" or "dive"
    depth: int
    age: int = 0

    def activity(self, x: np.ndarray) -> float:
        return float(self.values @ x[self.indices])


@dataclass
class Proof:
    """A built Farkas proof before pool admission."""

    indices: np.ndarray
    values: np.ndarray
    rhs: float

    @property
    def empty(self) -> bool:
        return self.indices.size == 0


def build_farkas_proof(p: Problem, ray: FarkasRay, bounds=None,
                       tol: float = FARKAS_TOL):
    """Aggregate the ray into a proof row; returns (proof | None, report).

    The ray is re-verified against the creating bounds first; tiny
    coefficients (below SNAP_TOL times the row norm) are snapped to zero
    so that variables at infinite bounds cannot poison the activity.
    """
    report = verify_farkas_ray(p, bounds, ray, tol=tol)
    if not report.ok:
        return None, report
    a = ray.y @ p.dense()
    norm = float(np.abs(a).max(initial=0.0))
    if norm > 0.0:
        a[np.abs(a) < SNAP_TOL * norm] = 0.0
    idx = np.flatnonzero(a)
    proof = Proof(idx.astype(np.int64), a[idx].copy(), float(ray.y @ p.b))
    return proof, report


class LockSignViolation(AssertionError):
    """A pooled proof coefficient has a sign absent from the model column."""


@dataclass
class PoolStats:
    created: int = 0         # poolable proofs built (before dedup)
    admitted: int = 0
    duplicates: int = 0
    evicted: int = 0
    empty_proofs: int = 0    # rhs > 0 with empty support: prune only
    rejected_rays: int = 0


class ConflictPool:
    """Bounded pool of globally valid proof rows with age-based eviction.

    Ages advance once per processed node; a constraint that propagated or
    certified infeasibility during the node gets its age reset.  At
    capacity the highest-age entry (oldest first on ties) is dropped.
    """

    def __init__(self, p: Problem, capacity: int = POOL_CAPACITY):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.problem = p
        self.capacity = capacity
        self.rows = RowSystem(p.n, kind="conflict")
        self.entries: list[ConflictConstraint] = []
        self.model_locks = problem_locks(p)
        self.locks = LockTable.zeros(p.n)     # conflict locks, incremental
        self.stats = PoolStats()
        self._next_id = 0
        self._by_support: dict[bytes, list[int]] = {}
        self._useful_ids: set[int] = set()

    def __len__(self) -> int:
        return len(self.entries)

    def _assert_lock_signs(self, indices, values):
        down, up = self.model_locks.down, self.model_locks.up
        for j, v in zip(indices, values):
            if v > 0 and down[j] == 0:
                raise LockSignViolation(
                    f"proof has positive coefficient on x{j} but no model "
                    f"row does")
            if v < 0 and up[j] == 0:
                raise LockSignViolation(
                    f"proof has negative coefficient on x{j} but no model "
                    f"row does")

    def _duplicate_of(self, key: bytes, values, rhs):
        for pos in self._by_support.get(key, ()):
            ex = self.entries[pos]
            t = values[0] / ex.values[0]
            if t <= 0:
                continue
            scale = max(1.0, float(np.abs(values).max()))
            if (np.abs(values - t * ex.values).max() <= DUP_TOL * scale
                    and abs(rhs - t * ex.rhs) <= DUP_TOL * max(1.0, abs(rhs))):
                return ex
        return None

    def _rebuild_support_index(self):
        self._by_support = {}
        for pos, e in enumerate(self.entries):
            self._by_support.setdefault(e.indices.tobytes(), []).append(pos)

    def add(self, proof: Proof, origin: str = "node", depth: int = 0):
        """Admit a proof; returns (status, constraint-or-existing)."""
        if proof.empty:
            raise ValueError("empty proofs are not pooled")
        self._assert_lock_signs(proof.indices, proof.values)
        key = proof.indices.tobytes()
        dup = self._duplicate_of(key, proof.values, proof.rhs)
        if dup is not None:
            self.stats.duplicates += 1
            return "duplicate", dup
        if len(self.entries) >= self.capacity:
            self._evict()
        cc = ConflictConstraint(self._next_id, proof.indices, proof.values,
                                proof.rhs, origin, depth)
        self._next_id += 1
        self.entries.append(cc)
        self.rows.append(cc.indices, cc.values, cc.rhs, cc.id)
        self.locks.add_row(cc.indices, cc.values)
        self._by_support.setdefault(key, []).append(len(self.entries) - 1)
        self.stats.admitted += 1
        return "admitted", cc

    def _evict(self):
        ages = np.array([e.age for e in self.entries])
        pos = int(np.argmax(ages))    # first max = oldest among ties
        victim = self.entries.pop(pos)
        self.rows.remove(pos)
        self.locks.drop_row(victim.indices, victim.values)
        self._rebuild_support_index()
        self.stats.evicted += 1

    def mark_useful(self, ids):
        """Record constraints that propagated or proved infeasibility."""
        self._useful_ids.update(int(i) for i in ids)

    def end_node(self):
        """Advance ages by one node; useful constraints reset to 0."""
        for e in self.entries:
            if e.id in self._useful_ids:
                e.age = 0
            else:
                e.age += 1
        self._useful_ids.clear()

    def export(self) -> list[tuple[np.ndarray, np.ndarray, float]]:
        """Snapshot of the pooled constraints as (indices, values, rhs)."""
        return [(e.indices.copy(), e.values.copy(), float(e.rhs))
                for e in self.entries]

    def dump(self) -> str:
        """One constraint per line, human-readable."""
        names = self.problem.var_names
        out = []
        for e in self.entries:
            terms = " ".join(f"{v:+g} {names[j]}"
                             for j, v in zip(e.indices, e.values))
            out.append(f"[{e.id}] age={e.age} origin={e.origin}"
                       f" depth={e.depth}: {terms} >= {e.rhs:g}")
        return "\n".join(out)


def analyze_infeasibility(p: Problem, pool: ConflictPool, bounds, cause,
                          origin: str = "node", depth: int = 0):
    """Turn an infeasibility cause into a pooled constraint when possible.

    cause is either a FarkasRay from an infeasible LP or a reason tuple
    ("row" | "conflict", id) from propagation.  Propagation causes create
    nothing new (the violated row is already in the system); rays build a
    proof, and proofs with empty support prune without being pooled.

    Returns (status, constraint-or-None) with status in
    {"pooled", "duplicate", "empty", "invalid", "propagation"}.
    """
    if not isinstance(cause, FarkasRay):
        return "propagation", None
    proof, report = build_farkas_proof(p, cause, bounds)
    if proof is None:
        pool.stats.rejected_rays += 1
        return "invalid", None
    if proof.empty:
        pool.stats.empty_proofs += 1
        return "empty", None
    pool.stats.created += 1
    status, cc = pool.add(proof, origin=origin, depth=depth)
    return ("pooled" if status == "admitted" else "duplicate"), cc
