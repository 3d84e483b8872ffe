"""Bounds on the builtin corpus: P_f, P_fbar, sandwich bracket and the exponential bound.

    python scripts/corpus_report.py --n 16 --samples 100000
"""

import argparse

from noncross.bounds import Status, theorem1_upper_bound
from noncross.cones import project_v2plus
from noncross.field_sim import estimate_plain
from noncross.grid import make_grid
from noncross.verify import corpus


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=16)
    ap.add_argument("--samples", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    g = make_grid(1.0, args.n)
    print("instance,P_f,P_fbar,sandwich_lo,sandwich_hi,status,bound_one,bound_mc")
    for label, f, u in corpus(g):
        fbar = project_v2plus(f).projection
        pf = estimate_plain(f, u, args.samples, args.seed)
        pb = estimate_plain(fbar, u, args.samples, args.seed)
        rep = theorem1_upper_bound(f, u, "MC", args.samples, args.seed + 2, p0_samples=args.samples)
        one = rep.theorem1_factor if rep.status is Status.OK else None
        mc = rep.theorem1_bound if rep.status is Status.OK else None
        print(f'"{label}",{pf.p_hat:.5f},{pb.p_hat:.5f},{rep.sandwich_lower_ci:.5f},{rep.sandwich_upper_ci:.5f},'
              f"{rep.status.value},{one},{mc}", flush=True)


if __name__ == "__main__":
    main()
