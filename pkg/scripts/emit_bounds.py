#!/usr/bin/env python3
"""Write solver-ready LP relaxations for every graph in a corpus directory.

For each graph and each k, emits the exact model, the three-superblock
relaxation, and (optionally) the per-j bottleneck-guess family. Feed the
files to any LP/MIP solver that reads CPLEX LP format.
"""

import argparse
from pathlib import Path

from mtpp import (build_bottleneck_mip, build_exact_mip, build_guess_mip,
                  emit_lp, load_graph_json)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("corpus", help="directory of graph JSON files")
    ap.add_argument("--out-dir", default="lp")
    ap.add_argument("--ks", type=int, nargs="+", default=[2, 4])
    ap.add_argument("--guess", action="store_true",
                    help="also emit the per-j bottleneck-guess models")
    opts = ap.parse_args()

    out = Path(opts.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for gp in sorted(Path(opts.corpus).glob("*.json")):
        g, cfg = load_graph_json(gp)
        for k in opts.ks:
            emit_lp(build_exact_mip(g, cfg, k), out / f"{gp.stem}_k{k}_exact.lp")
            emit_lp(build_bottleneck_mip(g, cfg, k),
                    out / f"{gp.stem}_k{k}_bottleneck.lp")
            if opts.guess:
                for j in range(1, k + 1):
                    emit_lp(build_guess_mip(g, cfg, k, j),
                            out / f"{gp.stem}_k{k}_guess_j{j}.lp")
        print(f"{gp.stem}: emitted models for k in {opts.ks}")


if __name__ == "__main__":
    main()
