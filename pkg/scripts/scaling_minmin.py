"""First-order call scaling of the small-dimension min-min solver in n_x.

Runs one QuadMinMin instance per n_x, writes the run records as CSV and
prints the log-log slope of first-order calls against n_x ln n_x.

    python scripts/scaling_minmin.py --sizes 2 4 8 16 --eps 1e-3 --out scaling.csv
"""

import argparse
import math

from mixedoracle.bench import Cell, loglog_slope, run_cells, write_csv
from mixedoracle.problems import ProblemSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[2, 4, 8, 16])
    ap.add_argument("--n-y", type=int, default=1)
    ap.add_argument("--eps", type=float, default=1e-3)
    ap.add_argument("--L-xy", type=float, default=0.25)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="scaling_minmin.csv")
    args = ap.parse_args()

    cells = [Cell(ProblemSpec("QuadMinMin", n, args.n_y, L_xy=args.L_xy, seed=n,
                              name=f"minmin-{n}x{args.n_y}"),
                  "minmin-small", args.eps, 0.25, n, timing=True)
             for n in args.sizes]
    records = run_cells(cells, args.jobs)
    write_csv(records, args.out)
    for n, r in zip(args.sizes, records):
        print(f"n_x={n:3d}  gap={r.gap:.2e}  first={r.first_calls:6d}  "
              f"zeroth={r.zeroth_calls:10d}  {r.wall_ms / 1000:.1f}s")
    if len(records) >= 2:
        first = [r.first_calls for r in records]
        print(f"slope vs n_x:        {loglog_slope(args.sizes, first):.3f}")
        print(f"slope vs n_x ln n_x: "
              f"{loglog_slope([n * math.log(n) for n in args.sizes], first):.3f}")


if __name__ == "__main__":
    main()
