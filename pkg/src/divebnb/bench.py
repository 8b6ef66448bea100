"""Benchmark runner and evaluation metrics.

Metrics operate on the (time, bound, incumbent) event timelines recorded
by the solver.  The runner executes an instances x settings x seeds grid,
writes one flat CSV row per run, and can emit raw timelines as JSONL.
"""

from __future__ import annotations

import csv
import json
import math
import time as _time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, asdict
from pathlib import Path

import numpy as np

from .model import Problem
from .solver import Config, solve

FINISHED = ("optimal", "infeasible", "unbounded")


@dataclass
class RunRecord:
    """One solver run flattened for CSV output."""

    instance: str
    seed: int
    setting: str
    status: str
    time: float
    nodes: int
    objective: float
    bound: float
    conflicts: int
    farkas_dives: int
    farkas_avg_depth: float
    farkas_conflicts: int
    farkas_solutions: int
    farkas_improving: int
    coef_dives: int
    coef_avg_depth: float
    coef_conflicts: int
    coef_solutions: int
    coef_improving: int
    conflict_dives: int
    conflict_avg_depth: float
    conflict_conflicts: int
    conflict_solutions: int
    conflict_improving: int
    primal_integral: float
    dual_integral: float


def _gap(value: float | None, ref: float | None) -> float:
    """Relative gap in [0, 1]; 1 with no value, sign mismatch, or no
    reference."""
    if value is None or ref is None:
        return 1.0
    if not (math.isfinite(value) and math.isfinite(ref)):
        return 1.0
    if value * ref < 0:
        return 1.0
    if value == 0.0 and ref == 0.0:
        return 0.0
    return min(1.0, abs(value - ref) / max(abs(value), abs(ref), 1e-9))


def _step_integral(steps: list[tuple[float, float | None]], horizon: float,
                   ref: float | None) -> float:
    """Integrate the piecewise-constant gap of (time, value) steps over
    [0, horizon]."""
    if horizon <= 0:
        return 0.0
    total = 0.0
    cur: float | None = None
    prev = 0.0
    for t, val in steps:
        t = min(max(t, 0.0), horizon)
        if t > prev:
            total += _gap(cur, ref) * (t - prev)
            prev = t
        cur = val
    if prev < horizon:
        total += _gap(cur, ref) * (horizon - prev)
    return total


def primal_integral(events: list[tuple[float, float, float | None]],
                    horizon: float, ref: float | None) -> float:
    """Integral of the incumbent's relative gap to ref over [0, horizon].

    events are (time, bound, incumbent) tuples; before the first event the
    gap is 1 (no incumbent).
    """
    steps = [(t, inc) for t, _, inc in events]
    return _step_integral(steps, horizon, ref)


def dual_integral(events: list[tuple[float, float, float | None]],
                  horizon: float, ref: float | None) -> float:
    """Same integral on the proven bound instead of the incumbent."""
    steps = [(t, b) for t, b, _ in events]
    return _step_integral(steps, horizon, ref)


def shifted_geomean(values, shift: float) -> float:
    """exp(mean(log(v + shift))) - shift; errors on empty input."""
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        raise ValueError("shifted_geomean of empty input")
    if np.any(arr + shift <= 0):
        raise ValueError("shifted_geomean needs values > -shift")
    return float(np.exp(np.mean(np.log(arr + shift))) - shift)


def performance_profile(records: list[RunRecord],
                        taus=None) -> dict[str, list[tuple[float, float]]]:
    """Fraction of runs each setting solves within tau x best time.

    A run cell is an (instance, seed) pair; every setting must cover the
    same cells.  Unsolved runs count as infinite time.  Cells unsolved by
    every setting are dropped from all numerators; denominators stay the
    full cell count.
    """
    by_setting: dict[str, dict[tuple[str, int], float]] = {}
    for r in records:
        cell = (r.instance, r.seed)
        t = r.time if r.status in FINISHED else math.inf
        by_setting.setdefault(r.setting, {})[cell] = t
    settings = sorted(by_setting)
    cells = sorted(by_setting[settings[0]])
    for s in settings[1:]:
        if sorted(by_setting[s]) != cells:
            raise ValueError("settings cover different (instance, seed) cells")
    best = {c: min(by_setting[s][c] for s in settings) for c in cells}
    usable = [c for c in cells if math.isfinite(best[c])]
    if taus is None:
        ratios = sorted({by_setting[s][c] / max(best[c], 1e-12)
                         for s in settings for c in usable
                         if math.isfinite(by_setting[s][c])})
        taus = [1.0] + [r for r in ratios if r > 1.0]
    total = len(cells)
    out: dict[str, list[tuple[float, float]]] = {}
    for s in settings:
        pts = []
        for tau in taus:
            hit = sum(1 for c in usable
                      if by_setting[s][c] <= tau * max(best[c], 1e-12))
            pts.append((float(tau), hit / total if total else 0.0))
        out[s] = pts
    return out


def _run_one(problem: Problem, setting_name: str, cfg_kwargs: dict,
             seed: int) -> tuple[object, float]:
    cfg = Config(seed=seed, **cfg_kwargs)
    t0 = _time.perf_counter()
    res = solve(problem, cfg)
    return res, _time.perf_counter() - t0


def _record_from(instance: str, seed: int, setting: str, res,
                 elapsed: float, horizon: float,
                 ref: float | None) -> RunRecord:
    h = res.stats.heur

    def hs(name, attr):
        st = h.get(name)
        return getattr(st, attr) if st is not None else 0

    def avg(name):
        st = h.get(name)
        return st.avg_depth if st is not None and st.dives else 0.0

    obj = res.objective if res.objective is not None else math.nan
    return RunRecord(
        instance=instance, seed=seed, setting=setting, status=res.status,
        time=elapsed, nodes=res.stats.nodes, objective=obj,
        bound=res.bound, conflicts=res.stats.conflicts_total,
        farkas_dives=hs("farkas", "dives"),
        farkas_avg_depth=avg("farkas"),
        farkas_conflicts=hs("farkas", "conflicts"),
        farkas_solutions=hs("farkas", "solutions"),
        farkas_improving=hs("farkas", "improving"),
        coef_dives=hs("coef", "dives"),
        coef_avg_depth=avg("coef"),
        coef_conflicts=hs("coef", "conflicts"),
        coef_solutions=hs("coef", "solutions"),
        coef_improving=hs("coef", "improving"),
        conflict_dives=hs("conflict", "dives"),
        conflict_avg_depth=avg("conflict"),
        conflict_conflicts=hs("conflict", "conflicts"),
        conflict_solutions=hs("conflict", "solutions"),
        conflict_improving=hs("conflict", "improving"),
        primal_integral=primal_integral(res.stats.timeline, horizon, ref),
        dual_integral=dual_integral(res.stats.timeline, horizon, ref),
    )


def _pool_entry(args):
    name, problem, setting, cfg_kwargs, seed = args
    res, elapsed = _run_one(problem, setting, cfg_kwargs, seed)
    return (name, seed, setting, res, elapsed)


def run_benchmark(instances: list[tuple[str, Problem]],
                  settings: dict[str, dict], seeds: list[int], *,
                  workers: int = 1, csv_path=None, trace_path=None,
                  horizon: float | None = None) -> list[RunRecord]:
    """Run every instance under every setting and seed.

    Returns records in deterministic (instance, seed, setting) order.  The
    integral horizon defaults to each grid cell's longest wall time so
    settings stay comparable within a cell.
    """
    tasks = [(name, prob, setting, settings[setting], seed)
             for name, prob in instances
             for seed in seeds
             for setting in settings]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            raw = list(ex.map(_pool_entry, tasks))
    else:
        raw = [_pool_entry(t) for t in tasks]
    raw.sort(key=lambda r: (r[0], r[1], sorted(settings).index(r[2])))

    # reference objective per instance: best finite incumbent seen anywhere
    sense = {name: prob.obj_sense for name, prob in instances}
    ref: dict[str, float | None] = {}
    for name, seed, setting, res, elapsed in raw:
        if res.objective is not None and math.isfinite(res.objective):
            cur = ref.get(name)
            better = (cur is None
                      or (sense[name] > 0 and res.objective < cur)
                      or (sense[name] < 0 and res.objective > cur))
            if better:
                ref[name] = res.objective
    cell_h: dict[tuple[str, int], float] = {}
    for name, seed, setting, res, elapsed in raw:
        key = (name, seed)
        cell_h[key] = max(cell_h.get(key, 0.0), elapsed)

    records = []
    traces = []
    for name, seed, setting, res, elapsed in raw:
        h = horizon if horizon is not None else cell_h[(name, seed)]
        records.append(_record_from(name, seed, setting, res, elapsed,
                                    h, ref.get(name)))
        traces.append({"instance": name, "seed": seed, "setting": setting,
                       "events": [[t, b, i] for t, b, i in
                                  res.stats.timeline]})
    if csv_path is not None:
        write_csv(records, csv_path)
    if trace_path is not None:
        with open(trace_path, "w") as fh:
            for tr in traces:
                fh.write(json.dumps(tr) + "\n")
    return records


def write_csv(records: list[RunRecord], path) -> None:
    names = [f.name for f in fields(RunRecord)]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=names)
        w.writeheader()
        for r in records:
            w.writerow(asdict(r))


def read_csv(path) -> list[RunRecord]:
    out = []
    with open(path) as fh:
        for row in csv.DictReader(fh):
            kw = {f.name: _coerce(f.type, row[f.name])
                  for f in fields(RunRecord)}
            out.append(RunRecord(**kw))
    return out


def _coerce(tp, raw: str):
    if tp in ("int", int):
        return int(raw)
    if tp in ("float", float):
        return float(raw)
    return raw


def summarize(records: list[RunRecord], *,
              brackets=(10.0, 100.0, 1000.0),
              time_limit: float | None = None,
              bracket_divisor: float = 1.0) -> dict:
    """Per-setting aggregates plus affected / bracket subsets.

    A cell is affected when settings disagree on node counts.  Bracket
    [k, tilim] keeps cells that at least one setting solved and every
    setting needed at least k / divisor seconds on.
    """
    cells: dict[tuple[str, int], dict[str, RunRecord]] = {}
    for r in records:
        cells.setdefault((r.instance, r.seed), {})[r.setting] = r
    settings = sorted({r.setting for r in records})

    def agg(cell_keys):
        out = {}
        for s in settings:
            rs = [cells[c][s] for c in cell_keys if s in cells[c]]
            if not rs:
                out[s] = None
                continue
            out[s] = {
                "runs": len(rs),
                "solved": sum(1 for r in rs if r.status in FINISHED),
                "time_sgm": shifted_geomean([r.time for r in rs], 1.0),
                "nodes_sgm": shifted_geomean([r.nodes for r in rs], 100.0),
                "primal_integral_mean": float(np.mean(
                    [r.primal_integral for r in rs])),
            }
        return out

    all_cells = sorted(cells)
    affected = [c for c in all_cells
                if len({cells[c][s].nodes for s in cells[c]}) > 1]
    result = {"all": agg(all_cells), "affected": agg(affected),
              "n_cells": len(all_cells), "n_affected": len(affected)}
    for k in brackets:
        lo = k / bracket_divisor
        keep = []
        for c in all_cells:
            rs = cells[c]
            if not any(r.status in FINISHED for r in rs.values()):
                continue
            if all(r.time >= lo for r in rs.values()):
                keep.append(c)
        result[f"bracket_{int(k)}"] = {"n_cells": len(keep),
                                       "aggregates": agg(keep)}
    return result
