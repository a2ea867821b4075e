"""Command-line harness: instance generation, solving, validation,
neighborhood diagnostics and benchmark campaigns with CSV gap tables.

Exit codes: 0 ok, 1 failed validation / infeasible, 2 usage error,
3 size guard refused the instance.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .baselines import BaselineConfig, initial_tsp_sequence, limop, rts_3nn, sa_rts_3opt
from .energy import ExtendedCostModel, ExtendedCosts, pract
from .exact import solve_exact
from .generator import SETTING_NAMES, SIZE_NAMES, all_settings, generate, get_setting
from .io import load_instance, load_solution, save_instance, save_solution
from .metagraph import count_bs_sequences, enumerate_valid_patterns, get_transition_lookup
from .model import BaseCostModel, InfeasibleError, SizeGuardError, validate_tour
from .oracle import enumerate_bs_neighbors
from .reports import SolveReport
from .search import SearchConfig, rts, vlsn, vlsn_ls, vlsn_vnd

ALGORITHMS = ("vlsn", "vlsn-ls", "vlsn-vnd", "rts", "exact", "limop",
              "rts3nn", "sa", "pract")
EXIT_VALIDATION = 1
EXIT_SIZE_GUARD = 3


def _default_workers() -> int:
    env = os.environ.get("DRPE_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def _cost_model(inst, args):
    if getattr(args, "model", "base") != "extended":
        return BaseCostModel(inst)
    costs = ExtendedCosts()
    if getattr(args, "extended", None):
        doc = json.loads(Path(args.extended).read_text(encoding="utf-8"))
        costs = ExtendedCosts(**doc)
    return ExtendedCostModel(inst, costs)


def _run_algorithm(inst, algo: str, args) -> SolveReport:
    model = _cost_model(inst, args)
    seed = getattr(args, "seed", 0) or 0
    time_limit = getattr(args, "time_limit", None)
    p = getattr(args, "p", 4)
    cfg = SearchConfig(p0=getattr(args, "p0", 2),
                       p_max=getattr(args, "p_max", 8),
                       time_limit=time_limit, seed=seed)
    if algo == "vlsn":
        return vlsn(inst, initial_tsp_sequence(inst), p, model=model, config=cfg)
    if algo == "vlsn-ls":
        return vlsn_ls(inst, p=p, model=model, config=cfg)
    if algo == "vlsn-vnd":
        return vlsn_vnd(inst, config=cfg, model=model)
    if algo == "rts":
        return rts(inst, model=model)
    if algo == "exact":
        return solve_exact(inst, model=model)
    if algo == "limop":
        return limop(inst, getattr(args, "klim", 2), model=model)
    if algo == "rts3nn":
        return rts_3nn(inst, BaselineConfig(iterations=getattr(args, "budget", 200),
                                            seed=seed, time_limit=time_limit), model=model)
    if algo == "sa":
        return sa_rts_3opt(inst, BaselineConfig(iterations=getattr(args, "budget", 200),
                                                seed=seed, time_limit=time_limit), model=model)
    if algo == "pract":
        if not isinstance(model, ExtendedCostModel):
            raise ValueError("pract requires --model extended")
        return pract(inst, model.costs)
    raise ValueError(f"unknown algorithm {algo!r}")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_generate(args) -> int:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    settings = (all_settings(args.size) if args.setting == "all"
                else [get_setting(args.setting, args.size)])
    manifest = {"version": __version__, "base_seed": args.seed, "instances": []}
    for setting in settings:
        for k in range(args.count):
            seed = args.seed + k
            inst = generate(setting, seed)
            fname = f"{inst.name}.json"
            save_instance(inst, out / fname)
            manifest["instances"].append({
                "file": fname, "setting": setting.name, "size": setting.size,
                "seed": seed, "n_d": setting.n_d, "n_r": setting.n_r,
                "side": setting.side, "delta": setting.delta,
                "e_max": setting.e_max, "density": setting.density,
            })
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True),
                                       encoding="utf-8")
    print(f"wrote {len(manifest['instances'])} instances to {out}")
    return 0


def cmd_solve(args) -> int:
    inst = load_instance(args.instance, metric_closure=args.metric_closure)
    try:
        report = _run_algorithm(inst, args.algo, args)
    except SizeGuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SIZE_GUARD
    except InfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    model = _cost_model(inst, args)
    energy_required = args.algo != "pract"
    check = validate_tour(report.tour, inst, model, energy_required=energy_required)
    if not check.passed:
        print("solution failed validation:", file=sys.stderr)
        print(str(check), file=sys.stderr)
        return EXIT_VALIDATION
    if args.out:
        save_solution(report.tour, args.out)
    print(report.summary())
    if args.stats:
        for key, val in sorted(report.extras.items()):
            print(f"  {key}: {val}")
    return 0


def cmd_validate(args) -> int:
    inst = load_instance(args.instance)
    tour = load_solution(args.solution)
    model = _cost_model(inst, args)
    report = validate_tour(tour, inst, model)
    print(str(report))
    return 0 if report.passed else EXIT_VALIDATION


def cmd_enumerate(args) -> int:
    n_d, p = args.n_d, args.p
    dp_count = count_bs_sequences(n_d, p)
    print(f"n_d={n_d} p={p}")
    print(f"neighbor orders (pattern-graph count): {dp_count}")
    if n_d <= args.oracle_limit:
        oracle = len(enumerate_bs_neighbors(tuple(range(n_d)), p))
        agree = "agree" if oracle == dp_count else "MISMATCH"
        print(f"neighbor orders (enumeration oracle): {oracle}  [{agree}]")
    bound = ((p - 1) / np.e) ** (n_d - 1)
    print(f"published lower bound ((p-1)/e)^(n_d-1): {bound:.4f}")
    return 0


def cmd_dump_lookup(args) -> int:
    p = args.p
    patterns = enumerate_valid_patterns(p)
    lookup = get_transition_lookup(p)
    writer = csv.writer(sys.stdout if not args.out else open(args.out, "w", newline=""))
    header = ["id", "s_minus", "s_plus"] + [f"h={h}" for h in range(1, p)]
    writer.writerow(header)
    for ai, pat in enumerate(patterns):
        row = [ai + 1,
               "{" + ",".join(f"k+{d}" for d in pat.minus) + "}",
               "{" + ",".join(f"k{d:+d}" if d else "k" for d in pat.plus) + "}"]
        for h in range(1, p):
            succ = [str(bi + 1) for bi, _ in lookup.successors(ai, h)]
            row.append(",".join(succ))
        writer.writerow(row)
    return 0


# ---------------------------------------------------------------------------
# Benchmark campaigns
# ---------------------------------------------------------------------------

@dataclass
class BenchmarkResult:
    """One campaign cell; gap is relative to the exact optimum where
    available, else to the best-known value."""

    setting: str
    instance: str
    algorithm: str
    value: float
    reference: Optional[float]
    gap_pct: Optional[float]
    runtime_s: float
    seed: int
    config_hash: str
    status: str = "ok"


def _config_hash(payload: dict) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:12]


def _bench_cell(payload):
    """Worker: one (instance, algorithm) cell."""
    ns = argparse.Namespace(**payload["args"])
    inst = load_instance(payload["path"])
    t0 = time.perf_counter()
    try:
        report = _run_algorithm(inst, payload["algo"], ns)
        value = report.makespan
        status = "ok"
    except (SizeGuardError, InfeasibleError) as exc:
        value, status = float("nan"), f"error: {exc}"
    elapsed = time.perf_counter() - t0
    return {"path": payload["path"], "algo": payload["algo"], "value": value,
            "time": elapsed, "status": status, "setting": payload["setting"],
            "seed": payload["args"].get("seed", 0)}


def _instance_files(directory: Path) -> list:
    files = []
    for f in sorted(directory.glob("*.json")):
        if f.name in ("manifest.json", "best_known.json"):
            continue
        try:
            doc = json.loads(f.read_text(encoding="utf-8"))
        except (json.JSONDecodeError, OSError):
            continue
        if isinstance(doc, dict) and "n_d" in doc:  # skip solutions etc.
            files.append(f)
    return files


def _setting_of(path: Path) -> str:
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
        return doc.get("extra", {}).get("setting", path.stem.split("_")[0])
    except Exception:
        return path.stem.split("_")[0]


def cmd_bench(args) -> int:
    directory = Path(args.instances)
    files = _instance_files(directory)
    if not files:
        print(f"no instance files in {directory}", file=sys.stderr)
        return 2
    algos = [a.strip() for a in args.algos.split(",") if a.strip()]
    for a in algos:
        if a not in ALGORITHMS:
            print(f"unknown algorithm {a!r}", file=sys.stderr)
            return 2

    shared = {"seed": args.seed or 0, "p": args.p, "p0": args.p0,
              "p_max": args.p_max, "klim": args.klim, "budget": args.budget,
              "time_limit": args.time_limit, "model": args.model,
              "extended": args.extended}
    cells = [{"path": str(f), "algo": a, "setting": _setting_of(f), "args": shared}
             for f in files for a in algos]

    workers = args.workers or _default_workers()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_bench_cell, cells))
    else:
        results = [_bench_cell(c) for c in cells]

    by_instance = {}
    for r in results:
        by_instance.setdefault(r["path"], {})[r["algo"]] = r

    # reference values: exact when available, else best-known registry
    registry_path = directory / "best_known.json"
    registry = {}
    if registry_path.exists():
        registry = json.loads(registry_path.read_text(encoding="utf-8"))
    references = {}
    for path, per_algo in by_instance.items():
        digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()
        ref = None
        if "exact" in per_algo and per_algo["exact"]["status"] == "ok":
            ref = per_algo["exact"]["value"]
        elif digest in registry:
            ref = registry[digest]["value"]
        finite = [r["value"] for r in per_algo.values()
                  if r["status"] == "ok" and np.isfinite(r["value"])]
        if ref is None and finite:
            ref = min(finite)
        if ref is not None:
            best_seen = min([ref] + finite)
            prev = registry.get(digest, {}).get("value")
            if prev is None or best_seen < prev - 1e-9:
                registry[digest] = {"value": best_seen, "file": Path(path).name}
            references[path] = ref
    registry_path.write_text(json.dumps(registry, indent=2, sort_keys=True),
                             encoding="utf-8")

    config_hash = _config_hash(shared | {"algos": algos})
    rows = []
    for r in results:
        ref = references.get(r["path"])
        gap = None
        if (ref is not None and r["status"] == "ok" and np.isfinite(r["value"])):
            gap = (r["value"] - ref) / ref * 100.0
            if gap < -1e-7:
                raise AssertionError(
                    f"{r['path']}:{r['algo']} beat the reference by {-gap}%")
        rows.append(BenchmarkResult(
            setting=r["setting"], instance=Path(r["path"]).name,
            algorithm=r["algo"], value=r["value"], reference=ref, gap_pct=gap,
            runtime_s=r["time"], seed=r["seed"], config_hash=config_hash,
            status=r["status"]))

    if args.per_instance:
        with open(args.per_instance, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["setting", "instance", "algorithm", "value",
                             "reference", "gap_pct", "runtime_s", "seed", "config"])
            for r in sorted(rows, key=lambda r: (r.setting, r.instance, r.algorithm)):
                writer.writerow([
                    r.setting, r.instance, r.algorithm,
                    "" if not np.isfinite(r.value) else f"{r.value:.9g}",
                    "" if r.reference is None else f"{r.reference:.9g}",
                    "" if r.gap_pct is None else f"{r.gap_pct:.6f}",
                    f"{r.runtime_s:.3f}", r.seed, r.config_hash])

    summary = {}
    for r in rows:
        if r.gap_pct is None:
            continue
        summary.setdefault((r.setting, r.algorithm), []).append(r)
    out_rows = []
    for (setting, algo), cells_ in sorted(summary.items()):
        gaps = [c.gap_pct for c in cells_]
        matches = sum(1 for c in cells_ if abs(c.value - c.reference) <= 1e-9)
        out_rows.append({
            "setting": setting, "algorithm": algo, "n": len(cells_),
            "avg_gap_pct": sum(gaps) / len(gaps), "worst_gap_pct": max(gaps),
            "matches": matches,
            "avg_runtime_s": sum(c.runtime_s for c in cells_) / len(cells_),
        })

    out_path = args.out or "bench.csv"
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["setting", "algorithm", "instances", "avg_gap_pct",
                         "worst_gap_pct", "matches", "avg_runtime_s"])
        for row in out_rows:
            writer.writerow([row["setting"], row["algorithm"], row["n"],
                             f"{row['avg_gap_pct']:.6f}", f"{row['worst_gap_pct']:.6f}",
                             row["matches"], f"{row['avg_runtime_s']:.3f}"])
    print(f"wrote {out_path} ({len(out_rows)} rows, {len(files)} instances)")

    if args.latex:
        _print_latex(out_rows)
    return 0


def _print_latex(out_rows) -> None:
    algos = sorted({r["algorithm"] for r in out_rows})
    settings = sorted({r["setting"] for r in out_rows})
    cells = {(r["setting"], r["algorithm"]): r for r in out_rows}
    print(r"\begin{tabular}{l|" + "r" * len(algos) * 2 + "}")
    head = ([f"avg {a}" for a in algos] + [f"worst {a}" for a in algos])
    print("Setting & " + " & ".join(head) + r" \\ \hline")
    for s in settings:
        vals = [f"{cells[(s, a)]['avg_gap_pct']:.2f}" if (s, a) in cells else "--"
                for a in algos]
        vals += [f"{cells[(s, a)]['worst_gap_pct']:.2f}" if (s, a) in cells else "--"
                 for a in algos]
        print(f"{s} & " + " & ".join(vals) + r" \\")
    print(r"\end{tabular}")


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drpe",
        description="Drone routing with energy replenishment: solvers and benchmarks")
    parser.add_argument("--version", action="version", version=f"drpe {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--time-limit", type=float, default=None,
                        help="cooperative per-run limit in seconds")
        sp.add_argument("--out", default=None)

    g = sub.add_parser("generate", help="write benchmark instances")
    g.add_argument("--setting", default="Basis", choices=SETTING_NAMES + ("all",))
    g.add_argument("--size", default="small", choices=SIZE_NAMES)
    g.add_argument("--count", type=int, default=10)
    common(g)
    g.set_defaults(func=cmd_generate)

    solve_parent = argparse.ArgumentParser(add_help=False)
    solve_parent.add_argument("-i", "--instance", required=True)
    solve_parent.add_argument("--p", type=int, default=4)
    solve_parent.add_argument("--p0", type=int, default=2)
    solve_parent.add_argument("--p-max", type=int, default=8, dest="p_max")
    solve_parent.add_argument("--klim", type=int, default=2)
    solve_parent.add_argument("--budget", type=int, default=200,
                              help="iterations for the randomized baselines")
    solve_parent.add_argument("--model", default="base", choices=("base", "extended"))
    solve_parent.add_argument("--extended", default=None,
                              help="JSON file overriding the extended cost constants")
    solve_parent.add_argument("--metric-closure", action="store_true",
                              help="apply shortest-path closure to loaded matrices")
    solve_parent.add_argument("--stats", action="store_true")

    s = sub.add_parser("solve", parents=[solve_parent], help="run one solver")
    s.add_argument("--algo", default="vlsn-ls", choices=ALGORITHMS)
    common(s)
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("exact", parents=[solve_parent],
                       help="shorthand for solve --algo exact")
    common(e)
    e.set_defaults(func=cmd_solve, algo="exact")

    v = sub.add_parser("validate", help="check a solution file")
    v.add_argument("-i", "--instance", required=True)
    v.add_argument("-s", "--solution", required=True)
    v.add_argument("--model", default="base", choices=("base", "extended"))
    v.add_argument("--extended", default=None)
    v.set_defaults(func=cmd_validate)

    n = sub.add_parser("enumerate", help="neighborhood size diagnostics")
    n.add_argument("--n-d", type=int, required=True, dest="n_d")
    n.add_argument("--p", type=int, required=True)
    n.add_argument("--oracle-limit", type=int, default=8)
    n.set_defaults(func=cmd_enumerate)

    d = sub.add_parser("dump-lookup", help="emit the pattern transition table as CSV")
    d.add_argument("--p", type=int, required=True)
    d.add_argument("--out", default=None)
    d.set_defaults(func=cmd_dump_lookup)

    b = sub.add_parser("bench", help="run a campaign and emit gap tables")
    b.add_argument("--instances", required=True, help="directory of instance files")
    b.add_argument("--algos", default="exact,vlsn-ls,vlsn-vnd,rts,limop")
    b.add_argument("--workers", type=int, default=None)
    b.add_argument("--p", type=int, default=4)
    b.add_argument("--p0", type=int, default=2)
    b.add_argument("--p-max", type=int, default=8, dest="p_max")
    b.add_argument("--klim", type=int, default=2)
    b.add_argument("--budget", type=int, default=200)
    b.add_argument("--model", default="base", choices=("base", "extended"))
    b.add_argument("--extended", default=None)
    b.add_argument("--per-instance", default=None,
                   help="also write one CSV row per (instance, algorithm)")
    b.add_argument("--latex", action="store_true")
    common(b)
    b.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SizeGuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SIZE_GUARD
    except (InfeasibleError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
