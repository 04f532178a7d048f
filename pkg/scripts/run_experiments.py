#!/usr/bin/env python3
"""End-to-end experiment: generate a corpus, partition it, bound it, report.

Small defaults so the script finishes in a couple of minutes; scale the
knobs up with the flags below. All output lands in --work-dir.
"""

import argparse
import subprocess
import sys
from pathlib import Path


def run(args):
    print("+", " ".join(args))
    subprocess.run([sys.executable, "-m", "mtpp.cli", *args], check=True)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--work-dir", default="experiments")
    ap.add_argument("--count", type=int, default=10, help="corpus size")
    ap.add_argument("--n-min", type=int, default=30)
    ap.add_argument("--n-max", type=int, default=60)
    ap.add_argument("--budget", type=int, default=2500, help="search evaluations")
    ap.add_argument("--ks", type=int, nargs="+", default=[2, 4, 8])
    ap.add_argument("--algos", nargs="+", default=["brkga", "random"])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    opts = ap.parse_args()

    work = Path(opts.work_dir)
    corpus = work / "corpus"
    sols = work / "solutions"
    sols.mkdir(parents=True, exist_ok=True)

    run(["generate", "--count", str(opts.count), "--seed", str(opts.seed),
         "--n-min", str(opts.n_min), "--n-max", str(opts.n_max),
         "--out-dir", str(corpus), "--jobs", str(opts.jobs)])

    graphs = sorted(corpus.glob("*.json"))
    graphs = [g for g in graphs if g.name != "manifest.csv"]
    for gp in graphs:
        for k in opts.ks:
            for algo in opts.algos:
                out = sols / f"{gp.stem}_k{k}_{algo}.json"
                run(["partition", str(gp), "--k", str(k), "--algo", algo,
                     "--budget", str(opts.budget), "--seed", str(opts.seed),
                     "--out", str(out)])

    run(["report", "--solutions", str(sols), "--graphs", str(corpus),
         "--out-dir", str(work / "report"), "--jobs", str(opts.jobs)])
    print(f"\ntables written to {work / 'report'}")


if __name__ == "__main__":
    main()
