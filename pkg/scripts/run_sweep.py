#!/usr/bin/env python
"""Rate-convergence sweep: deficit of the achieved distillation rate."""

from __future__ import annotations

import argparse

from athermal.cli import sweep_rows


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--p", type=float, default=0.75)
    parser.add_argument("--beta", type=float, default=1.0)
    parser.add_argument("--width", type=float, default=3.0)
    parser.add_argument("--n-grid", type=str, default="100,1000,10000,100000")
    parser.add_argument("--output", type=str, default=None)
    args = parser.parse_args()

    grid = [int(x) for x in args.n_grid.split(",")]
    rows = sweep_rows(args.p, args.beta, grid, args.width)
    payload = "\n".join(rows) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(payload)
        print(f"wrote {args.output}")
    else:
        print(payload, end="")


if __name__ == "__main__":
    main()
