"""Benchmark metric tests with hand-computed expected values, plus an
end-to-end grid run with CSV and trace output."""

import json
import math

import numpy as np
import pytest

from divebnb.bench import (RunRecord, _gap, dual_integral,
                           performance_profile, primal_integral, read_csv,
                           run_benchmark, shifted_geomean, summarize,
                           write_csv)
from divebnb.generate import random_binary_mip

from conftest import make_e4


def rec(instance="i", seed=0, setting="s", status="optimal", time=1.0,
        nodes=1, objective=0.0, bound=0.0, conflicts=0,
        primal=0.0, dual=0.0):
    zero = dict.fromkeys(
        [f"{h}_{k}" for h in ("farkas", "coef", "conflict")
         for k in ("dives", "avg_depth", "conflicts", "solutions",
                   "improving")], 0)
    return RunRecord(instance=instance, seed=seed, setting=setting,
                     status=status, time=time, nodes=nodes,
                     objective=objective, bound=bound, conflicts=conflicts,
                     primal_integral=primal, dual_integral=dual, **zero)


# ------------------------------------------------------------------- gaps

def test_gap_edge_cases():
    assert _gap(None, -1.0) == 1.0
    assert _gap(-1.0, None) == 1.0
    assert _gap(-math.inf, -1.0) == 1.0
    assert _gap(1.0, -1.0) == 1.0          # sign mismatch
    assert _gap(0.0, 0.0) == 0.0
    assert _gap(-0.5, -1.0) == 0.5
    assert _gap(10.0, 1.0) == 0.9
    assert _gap(1.0, 10.0) == 0.9          # symmetric denominator


# -------------------------------------------------------------- integrals

def test_primal_integral_worked_example():
    # gap 1 for 50s, then |-0.5 - -1| / 1 = 0.5 for the remaining 50s
    events = [(0.0, -math.inf, None), (50.0, -1.5, -0.5)]
    assert primal_integral(events, 100.0, -1.0) == 75.0


def test_primal_integral_immediate_optimum():
    assert primal_integral([(0.0, -2.0, -1.0)], 100.0, -1.0) == 0.0


def test_primal_integral_no_incumbent():
    assert primal_integral([], 100.0, -1.0) == 100.0
    assert primal_integral([(0.0, -math.inf, None)], 100.0, -1.0) == 100.0


def test_primal_integral_clamps_to_horizon():
    # the incumbent lands after the horizon and must not count
    events = [(0.0, -math.inf, None), (150.0, -1.0, -1.0)]
    assert primal_integral(events, 100.0, -1.0) == 100.0


def test_dual_integral_examples():
    assert dual_integral([(0.0, -1.0, None)], 100.0, -1.0) == 0.0
    assert dual_integral([(0.0, -math.inf, None)], 100.0, -1.0) == 100.0
    events = [(0.0, -math.inf, None), (50.0, -1.0, None)]
    assert dual_integral(events, 100.0, -1.0) == 50.0


def test_integrals_zero_horizon():
    assert primal_integral([], 0.0, -1.0) == 0.0
    assert dual_integral([], 0.0, -1.0) == 0.0


# --------------------------------------------------------- shifted geomean

def test_shifted_geomean_constant():
    assert shifted_geomean([7.0, 7.0, 7.0], 10.0) == pytest.approx(7.0)


def test_shifted_geomean_zeros():
    assert shifted_geomean([0.0, 0.0], 1.0) == pytest.approx(0.0)


def test_shifted_geomean_known_value():
    want = math.sqrt(202.0) - 1.0
    assert shifted_geomean([1.0, 100.0], 1.0) == pytest.approx(want,
                                                               abs=1e-12)


def test_shifted_geomean_errors():
    with pytest.raises(ValueError):
        shifted_geomean([], 1.0)
    with pytest.raises(ValueError):
        shifted_geomean([-2.0], 1.0)


# ------------------------------------------------------ performance profile

def test_profile_single_setting_fraction_solved():
    records = [rec(instance="a", setting="A", status="optimal", time=1.0),
               rec(instance="b", setting="A", status="limit", time=5.0)]
    prof = performance_profile(records)
    assert prof["A"] == [(1.0, 0.5)]


def test_profile_dominance():
    records = [rec(instance="a", setting="A", time=1.0),
               rec(instance="b", setting="A", time=1.0),
               rec(instance="a", setting="B", time=2.0),
               rec(instance="b", setting="B", time=2.0)]
    prof = performance_profile(records)
    assert prof["A"] == [(1.0, 1.0), (2.0, 1.0)]
    assert prof["B"] == [(1.0, 0.0), (2.0, 1.0)]


def test_profile_excludes_fully_unsolved_cells():
    records = [rec(instance="a", setting="A", time=1.0),
               rec(instance="a", setting="B", time=1.0),
               rec(instance="b", setting="A", status="limit", time=9.0),
               rec(instance="b", setting="B", status="limit", time=9.0)]
    prof = performance_profile(records)
    # cell b drops from numerators but stays in the denominator
    assert prof["A"][-1][1] == 0.5
    assert prof["B"][-1][1] == 0.5


def test_profile_grid_mismatch_errors():
    records = [rec(instance="a", setting="A"),
               rec(instance="b", setting="B")]
    with pytest.raises(ValueError):
        performance_profile(records)


def test_profile_explicit_taus():
    records = [rec(instance="a", setting="A", time=1.0),
               rec(instance="a", setting="B", time=3.0)]
    prof = performance_profile(records, taus=[1.0, 2.0, 4.0])
    assert prof["B"] == [(1.0, 0.0), (2.0, 0.0), (4.0, 1.0)]


# ------------------------------------------------------------- grid runner

def test_run_benchmark_grid(tmp_path):
    rng = np.random.default_rng(3)
    instances = [("e4", make_e4()),
                 ("rand", random_binary_mip(rng, 6, 5, name="rand"))]
    settings = {"none": {}, "farkas": {"heuristics": ("farkas",)}}
    csv_path = tmp_path / "out.csv"
    trace_path = tmp_path / "out.jsonl"
    records = run_benchmark(instances, settings, [0, 1],
                            csv_path=csv_path, trace_path=trace_path)
    assert len(records) == 8
    # deterministic order: instance, then seed, then setting name
    key = [(r.instance, r.seed, r.setting) for r in records]
    assert key == sorted(key, key=lambda k: (k[0], k[1],
                                             sorted(settings).index(k[2])))
    assert all(r.status == "optimal" for r in records)
    for name in ("e4", "rand"):
        objs = {r.objective for r in records if r.instance == name}
        assert len(objs) == 1
    # best incumbent is the reference, so solved runs end at gap 0 and
    # the integral is bounded by the cell horizon
    for r in records:
        assert 0.0 <= r.primal_integral <= max(x.time for x in records
                                               if (x.instance, x.seed)
                                               == (r.instance, r.seed))

    got = read_csv(csv_path)
    assert got == records

    lines = [json.loads(s) for s in trace_path.read_text().splitlines()]
    assert len(lines) == 8
    assert {(d["instance"], d["seed"], d["setting"]) for d in lines} \
        == set(key)
    assert all(isinstance(d["events"], list) for d in lines)


def test_write_csv_columns(tmp_path):
    from dataclasses import fields
    path = tmp_path / "one.csv"
    write_csv([rec()], path)
    header = path.read_text().splitlines()[0].split(",")
    assert header == [f.name for f in fields(RunRecord)]


def test_summarize_shapes():
    records = [rec(instance="a", seed=0, setting="A", nodes=5, time=1.0),
               rec(instance="a", seed=0, setting="B", nodes=9, time=2.0),
               rec(instance="b", seed=0, setting="A", nodes=3, time=1.0),
               rec(instance="b", seed=0, setting="B", nodes=3, time=1.0)]
    out = summarize(records, brackets=(10.0,))
    assert out["n_cells"] == 2
    assert out["n_affected"] == 1          # only cell a differs in nodes
    assert out["all"]["A"]["runs"] == 2
    assert out["all"]["A"]["solved"] == 2
    assert out["all"]["A"]["time_sgm"] == pytest.approx(1.0)
    assert out["affected"]["B"]["runs"] == 1
    assert "bracket_10" in out
    assert out["bracket_10"]["n_cells"] == 0   # all runs faster than 10s


def test_summarize_bracket_divisor():
    records = [rec(instance="a", setting="A", time=2.0),
               rec(instance="a", setting="B", time=3.0)]
    out = summarize(records, brackets=(10.0,), bracket_divisor=10.0)
    # threshold 10/10 = 1s keeps the cell
    assert out["bracket_10"]["n_cells"] == 1
