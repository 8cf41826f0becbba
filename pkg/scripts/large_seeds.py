"""Seeded runs of the large-dimension min-max solver and a condition-number pair.

For each seed, solves a QuadSaddle instance at the base L_xx and at a
multiple of it, then reports how often the gap target is met and the ratio
of first-order calls between the two condition numbers.

    python scripts/large_seeds.py --seeds 20 --pairs 3 --out large.csv
"""

import argparse

import numpy as np

from mixedoracle.bench import Cell, run_cells, write_csv
from mixedoracle.problems import ProblemSpec


def cell(seed, L_xx, args):
    spec = ProblemSpec("QuadSaddle", args.n_x, args.n_y, mu_x=1, mu_y=1, L_xx=L_xx, L_yy=4,
                       L_xy=args.L_xy, box=args.box, seed=seed, name=f"saddle-Lxx{L_xx:g}")
    return Cell(spec, "minmax-large", args.eps, args.sigma, seed, timing=True)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--pairs", type=int, default=3, help="seeds also run at the scaled L_xx")
    ap.add_argument("--n-x", type=int, default=2)
    ap.add_argument("--n-y", type=int, default=1)
    ap.add_argument("--L-xx", type=float, default=4.0)
    ap.add_argument("--scale", type=float, default=2.0)
    ap.add_argument("--L-xy", type=float, default=1.0)
    ap.add_argument("--box", type=float, default=0.5)
    ap.add_argument("--eps", type=float, default=1e-2)
    ap.add_argument("--sigma", type=float, default=0.25)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="large_seeds.csv")
    args = ap.parse_args()

    base = [cell(s, args.L_xx, args) for s in range(args.seeds)]
    scaled = [cell(s, args.L_xx * args.scale, args) for s in range(args.pairs)]
    records = run_cells(base + scaled, args.jobs)
    write_csv(records, args.out)
    solved = sum(r.ok for r in records[:args.seeds])
    print(f"{solved}/{args.seeds} runs reach gap <= {args.eps:g}")
    ratios = [records[args.seeds + i].first_calls / records[i].first_calls
              for i in range(min(args.pairs, args.seeds))]
    if ratios:
        print("first-call ratios:", ", ".join(f"{r:.3f}" for r in ratios),
              f"(median {np.median(ratios):.3f}, square-root law {np.sqrt(args.scale):.3f})")


if __name__ == "__main__":
    main()
