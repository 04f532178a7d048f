"""Command-line interface: generate corpora, partition graphs, compute or emit
lower bounds, and build corpus-level quality reports.

Exit codes: 0 success, 2 usage or input error, 3 size-guard refusal.
The environment variable MTPP_SEED supplies the default seed.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

from . import bounds as bnd
from . import datagen, reporting
from .graph import GraphFormatError, load_graph_json
from .search import (BrkgaParams, brkga_params_for_budget, brkga_run,
                     mla_search, random_search)

ALGOS = ("random", "brkga", "mla", "mla-weighted")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_GUARD = 3


class _UsageError(Exception):
    pass


def _default_seed() -> int:
    try:
        return int(os.environ.get("MTPP_SEED", "0"))
    except ValueError:
        return 0


def _load_graph(path):
    try:
        return load_graph_json(path)
    except (OSError, GraphFormatError, json.JSONDecodeError) as e:
        raise _UsageError(f"cannot read graph {path}: {e}") from e


def _map_jobs(fn, items, jobs: int):
    """Apply fn to items, optionally on a thread pool; order is preserved."""
    if jobs <= 1:
        return [fn(it) for it in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


def cmd_generate(args) -> int:
    params = datagen.GenParams(model=args.model, seed=args.seed,
                               n_range=(args.n_min, args.n_max))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def one(i: int):
        p = datagen.GenParams(**{**params.__dict__, "seed": params.seed + i})
        g, cfg = datagen.generate_regal_like(p)
        fname = f"{args.prefix}_{i:04d}.json"
        datagen.save_graph_json(g, cfg, out / fname)
        return {"file": fname, "n": g.n, "m": g.m, "seed": p.seed}

    manifest = _map_jobs(one, range(args.count), args.jobs)
    import csv
    with open(out / "manifest.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.DictWriter(f, fieldnames=["file", "n", "m", "seed"])
        w.writeheader()
        w.writerows(manifest)
    print(f"wrote {args.count} graphs to {out}")
    return EXIT_OK


def _run_algo(g, cfg, k: int, algo: str, budget: int, seed: int, config_path):
    if algo == "random":
        return random_search(g, cfg, k, T=budget, seed=seed)
    params = brkga_params_for_budget(budget, seed)
    if config_path:
        params = BrkgaParams.from_config_file(
            config_path, population_size=params.population_size,
            generations=params.generations, seed=seed)
    if algo == "brkga":
        return brkga_run(g, cfg, k, params)
    return mla_search(g, cfg, k, params, weighted=(algo == "mla-weighted"))


def cmd_partition(args) -> int:
    g, cfg = _load_graph(args.graph)
    if args.k < 1:
        raise _UsageError("--k must be >= 1")
    res = _run_algo(g, cfg, args.k, args.algo, args.budget, args.seed,
                    args.brkga_config)
    doc = {
        "graph": g.name,
        "k": args.k,
        "algo": args.algo,
        "value": res.best_value,
        "order": list(res.best_order.perm),
        "cut_points": list(res.best_cuts.cut_points),
        "evaluations": res.evaluations,
        "seed": args.seed,
    }
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    print(res.best_value)
    return EXIT_OK


def _oracle_certificate(g, cfg, method: str, k: int) -> bnd.BoundCertificate:
    if method == "simple":
        return bnd.BoundCertificate("simple", bnd.simple_lower_bound(g, k),
                                    k, g.name, source="oracle")
    if method == "bottleneck":
        return bnd.solve_bottleneck_oracle(g, cfg, k)
    if method == "bottleneck-guess":
        return bnd.solve_guess_oracle(g, cfg, k)
    value, _ = bnd.solve_small_exact(g, cfg, k)
    return bnd.BoundCertificate("exact", value, k, g.name, source="oracle")


def cmd_bound(args) -> int:
    g, cfg = _load_graph(args.graph)
    if args.k < 1:
        raise _UsageError("--k must be >= 1")
    if args.mode == "oracle":
        try:
            cert = _oracle_certificate(g, cfg, args.method, args.k)
        except bnd.InstanceTooLargeError as e:
            print(f"error: {e}\nhint: use --mode emit and an external MIP solver",
                  file=sys.stderr)
            return EXIT_GUARD
        print(json.dumps(asdict(cert), sort_keys=True, indent=2))
        return EXIT_OK
    # emit mode
    if args.method == "simple":
        raise _UsageError("the simple bound is closed-form; use --mode oracle")
    stem = Path(args.out) if args.out else Path(f"{g.name}_{args.method}_k{args.k}.lp")
    if args.method == "bottleneck-guess":
        for j in range(1, args.k + 1):
            model = bnd.build_guess_mip(g, cfg, args.k, j)
            path = stem.with_name(f"{stem.stem}_j{j}.lp")
            bnd.emit_lp(model, path)
            print(path)
    else:
        builder = (bnd.build_exact_mip if args.method == "exact"
                   else bnd.build_bottleneck_mip)
        bnd.emit_lp(builder(g, cfg, args.k), stem)
        print(stem)
    return EXIT_OK


def _read_solutions(paths) -> dict:
    """Best value per (graph, k) across files, plus per-(graph, k, algo) values."""
    best: dict[tuple[str, int], tuple[float, str]] = {}
    per_algo: dict[tuple[str, int, str], float] = {}
    for p in paths:
        doc = json.loads(Path(p).read_text(encoding="utf-8"))
        key = (doc["graph"], doc["k"])
        if key not in best or doc["value"] < best[key][0]:
            best[key] = (doc["value"], str(p))
        akey = (doc["graph"], doc["k"], doc["algo"])
        if akey not in per_algo or doc["value"] < per_algo[akey]:
            per_algo[akey] = doc["value"]
    return {"best": best, "per_algo": per_algo}


def cmd_report(args) -> int:
    sol_paths = sorted(Path(args.solutions).glob("*.json"))
    if not sol_paths:
        raise _UsageError(f"no solution JSON files in {args.solutions}")
    sols = _read_solutions(sol_paths)
    best_values = {key: v for key, (v, _) in sols["best"].items()}

    bound_map: dict[tuple[str, int, str], float] = {}
    methods_seen: list[str] = []
    for bpath in args.bounds or []:
        certs, rejected = bnd.import_external_bounds(bpath)
        for lineno, reason in rejected:
            print(f"note: {bpath}:{lineno}: {reason}", file=sys.stderr)
        for c in certs:
            key = (c.graph, c.k, c.method)
            bound_map[key] = max(bound_map.get(key, 0.0), c.value)
            if c.method not in methods_seen:
                methods_seen.append(c.method)
    methods = [m for m in bnd.METHODS if m in methods_seen]

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    all_notes: list[str] = []

    if methods:
        table, notes = reporting.scaled_bound_table(best_values, bound_map, methods)
        all_notes += notes
        table.to_csv(out / "scaled_bounds.csv")
        print("Scaled lower bounds (bound / best solution, geometric mean):")
        print(table.to_text())

    if args.graphs:
        graphs = {}
        for gp in sorted(Path(args.graphs).glob("*.json")):
            if gp.name == "manifest.csv":
                continue
            try:
                g, _ = load_graph_json(gp)
            except GraphFormatError:
                continue
            graphs[g.name] = g
        simple = {}
        for (gname, k) in best_values:
            if gname in graphs:
                simple[(gname, k)] = bnd.simple_lower_bound(graphs[gname], k)
            else:
                all_notes.append(f"{gname}: graph file not found, skipped")
        algos = sorted({a for (_, _, a) in sols["per_algo"]})
        table, notes = reporting.approximation_ratio_table(
            sols["per_algo"], simple, algos)
        all_notes += notes
        table.to_csv(out / "approx_ratios.csv")
        print("Approximation ratios (value / simple bound, geometric mean):")
        print(table.to_text())

    if all_notes:
        print(f"{len(all_notes)} instance(s) with missing data:", file=sys.stderr)
        for n in all_notes:
            print(f"  {n}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    seed = _default_seed()
    top = argparse.ArgumentParser(prog="mtpp", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic graph corpus")
    p.add_argument("--model", choices=datagen.MODELS, default="erdos-renyi")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--out-dir", default="corpus")
    p.add_argument("--prefix", default="graph")
    p.add_argument("--n-min", type=int, default=50)
    p.add_argument("--n-max", type=int, default=200)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("partition", help="search for a k-block partition")
    p.add_argument("graph")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--algo", choices=ALGOS, default="brkga")
    p.add_argument("--budget", type=int, default=10000,
                   help="evaluation budget (random: trials; brkga: ~pop*gens)")
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--out", help="solution JSON path (default: stdout)")
    p.add_argument("--brkga-config", help="key=value parameter file")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("bound", help="compute or emit a lower bound")
    p.add_argument("graph")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--method", choices=bnd.METHODS, required=True)
    p.add_argument("--mode", choices=("oracle", "emit"), default="oracle")
    p.add_argument("--out", help="LP output path (emit mode)")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("report", help="corpus-level quality tables")
    p.add_argument("--solutions", required=True,
                   help="directory of partition solution JSONs")
    p.add_argument("--bounds", nargs="*", default=[],
                   help="bound certificate CSV files")
    p.add_argument("--graphs", help="graph corpus directory (for ratio table)")
    p.add_argument("--out-dir", default="report")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_report)
    return top


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors already; normalize other codes
        return EXIT_USAGE if e.code not in (0,) else 0
    try:
        return args.func(args)
    except _UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
