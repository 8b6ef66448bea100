"""Command line interface: solve one MPS file or benchmark a directory."""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

from .bench import run_benchmark, summarize, write_csv
from .mps import load_mps
from .solver import Config, solve


def _parse_heuristics(text: str) -> tuple[str, ...]:
    if not text or text.lower() in ("none", "off"):
        return ()
    if text.lower() == "all":
        return ("farkas", "coef", "conflict")
    return tuple(part.strip() for part in text.split(",") if part.strip())


def _cmd_solve(args) -> int:
    problem = load_mps(args.file)
    cfg = Config(heuristics=_parse_heuristics(args.heuristics),
                 kappa=args.kappa, time_limit=args.time_limit,
                 node_limit=args.node_limit, seed=args.seed)
    t0 = time.perf_counter()
    res = solve(problem, cfg)
    elapsed = time.perf_counter() - t0
    if args.json:
        payload = {
            "instance": problem.name,
            "status": res.status,
            "objective": res.objective,
            "bound": res.bound,
            "time": elapsed,
            "nodes": res.stats.nodes,
            "lp_iterations": res.stats.lp_iterations,
            "conflicts": res.stats.conflicts_total,
            "pool_size": res.pool_size,
            "heuristics": {
                name: {"dives": st.dives, "avg_depth": st.avg_depth,
                       "conflicts": st.conflicts,
                       "solutions": st.solutions,
                       "improving": st.improving}
                for name, st in sorted(res.stats.heur.items())
            },
            "solution": (dict(zip(problem.var_names,
                                  (float(v) for v in res.x)))
                         if res.x is not None else None),
        }
        print(json.dumps(payload, indent=2))
        return 0
    print(f"instance   {problem.name}")
    print(f"status     {res.status}")
    if res.objective is not None:
        print(f"objective  {res.objective:.6g}")
    print(f"bound      {res.bound:.6g}" if math.isfinite(res.bound)
          else f"bound      {res.bound}")
    print(f"nodes      {res.stats.nodes}")
    print(f"time       {elapsed:.3f}s")
    print(f"conflicts  {res.stats.conflicts_total} "
          f"(pool size {res.pool_size})")
    for name, st in sorted(res.stats.heur.items()):
        print(f"  {name:<9} dives {st.dives:>4}  avg depth "
              f"{st.avg_depth:6.2f}  conflicts {st.conflicts:>5}  "
              f"solutions {st.solutions:>3}  improving {st.improving:>3}")
    if res.x is not None and len(res.x) <= 25:
        for nm, v in zip(problem.var_names, res.x):
            print(f"    {nm} = {v:.6g}")
    return 0 if res.status in ("optimal", "infeasible", "unbounded") else 1


def _load_settings(path: Path) -> tuple[dict[str, dict], dict]:
    text = path.read_bytes()
    if path.suffix.lower() == ".json":
        data = json.loads(text)
    else:
        import tomli
        data = tomli.loads(text.decode())
    raw = data.get("settings", data)
    limits = data.get("limits", {}) if "settings" in data else {}
    settings = {}
    for name, entry in raw.items():
        if not isinstance(entry, dict):
            raise ValueError(f"setting {name!r} must be a table")
        kw = dict(entry)
        if "heuristics" in kw:
            kw["heuristics"] = tuple(kw["heuristics"])
        settings[name] = kw
    return settings, limits


def _cmd_bench(args) -> int:
    root = Path(args.dir)
    files = sorted(root.glob("*.mps"))
    if not files:
        print(f"no .mps files under {root}", file=sys.stderr)
        return 2
    settings, limits = _load_settings(Path(args.settings))
    seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    for name in settings:
        settings[name].setdefault("time_limit", limits.get("time_limit",
                                                           args.time_limit))
        settings[name].setdefault("node_limit", limits.get("node_limit",
                                                           args.node_limit))
    instances = [(f.stem, load_mps(f)) for f in files]
    out = Path(args.out)
    trace = out.with_suffix(".jsonl") if args.trace else None
    records = run_benchmark(instances, settings, seeds,
                            workers=args.workers, csv_path=out,
                            trace_path=trace)
    summary = summarize(records)
    print(f"wrote {len(records)} runs to {out}")
    if trace is not None:
        print(f"wrote timelines to {trace}")
    for name in sorted(settings):
        agg = summary["all"][name]
        if agg is None:
            continue
        print(f"  {name:<12} solved {agg['solved']:>3}/{agg['runs']:<3} "
              f"time sgm {agg['time_sgm']:8.3f}s  "
              f"nodes sgm {agg['nodes_sgm']:10.1f}  "
              f"primal integral {agg['primal_integral_mean']:.3f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="divebnb",
        description="LP-based branch and bound with conflict-driven diving")
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="solve a single MPS instance")
    ps.add_argument("file", help="MPS file path")
    ps.add_argument("--heuristics", default="all",
                    help="comma list of farkas,coef,conflict "
                         "(or 'all' / 'none')")
    ps.add_argument("--kappa", type=float, default=0.75,
                    help="conflict lock weight in [0, 1]")
    ps.add_argument("--time-limit", type=float, default=None)
    ps.add_argument("--node-limit", type=int, default=None)
    ps.add_argument("--seed", type=int, default=0,
                    help="variable permutation seed (0 keeps input order)")
    ps.add_argument("--json", action="store_true",
                    help="print a JSON report instead of text")
    ps.set_defaults(func=_cmd_solve)

    pb = sub.add_parser("bench", help="run a benchmark grid over a "
                                      "directory of MPS files")
    pb.add_argument("dir", help="directory containing .mps files")
    pb.add_argument("--settings", required=True,
                    help="TOML or JSON file mapping setting names to "
                         "solver options")
    pb.add_argument("--seeds", default="0,1,2,3",
                    help="comma list of permutation seeds")
    pb.add_argument("--out", required=True, help="CSV output path")
    pb.add_argument("--workers", type=int, default=1)
    pb.add_argument("--trace", action="store_true",
                    help="also write per-run timelines next to --out "
                         "as JSONL")
    pb.add_argument("--time-limit", type=float, default=None)
    pb.add_argument("--node-limit", type=int, default=None)
    pb.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
