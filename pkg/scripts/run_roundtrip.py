#!/usr/bin/env python
"""Reversibility check: formation cost rate times distillation rate.

The product equals recovered work over invested work for an n-copy
form-then-distill cycle and climbs toward 1 as n grows.
"""

from __future__ import annotations

import argparse

from athermal.distill import plan_distillation
from athermal.form import plan_formation


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--p", type=float, default=0.75)
    parser.add_argument("--beta", type=float, default=1.0)
    parser.add_argument("--width", type=float, default=1.5)
    parser.add_argument("--n-grid", type=str, default="100,1000,10000")
    args = parser.parse_args()

    print("n,m_form,m_distill,work_per_copy,achieved_rate,product")
    for n in (int(x) for x in args.n_grid.split(",")):
        pf = plan_formation(n, args.p, args.beta, args.width)
        pd = plan_distillation(n, args.p, args.beta, args.width)
        product = pd.m / pf.m if pf.m else float("nan")
        print(f"{n},{pf.m},{pd.m},{pf.work_per_copy!r},{pd.achieved_rate!r},{product!r}")


if __name__ == "__main__":
    main()
