"""Integration-by-parts residual under nested refinement with shared noise.

    python scripts/ibp_convergence.py --levels 8 16 32 64 128 --samples 200
"""

import argparse

import numpy as np

from noncross.field_sim import FieldSample, _draw_increments, block_rng, restrict, verify_ibp
from noncross.grid import GridSpec


def integrand(grid):
    S, T = grid.mesh()
    return np.exp(-S - T) + (2.0 - S) * (2.0 - T)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--levels", type=int, nargs="+", default=[8, 16, 32, 64])
    ap.add_argument("--samples", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    fine = GridSpec(1.0, args.levels[-1])
    z1, z2, z3 = _draw_increments(fine, block_rng(args.seed, 0), args.samples)
    res = {"left": np.zeros((len(args.levels), args.samples)), "right": np.zeros((len(args.levels), args.samples))}
    for k in range(args.samples):
        s = FieldSample(z1[k], z2[k], z3[k], fine)
        for i, n in enumerate(args.levels):
            sub = restrict(s, args.levels[-1] // n)
            for rule in res:
                res[rule][i, k] = verify_ibp(integrand(sub.grid), sub, rule)
    print("n,median_left,factor,max_right")
    med = np.median(res["left"], axis=1)
    for i, n in enumerate(args.levels):
        factor = med[i - 1] / med[i] if i else float("nan")
        print(f"{n},{med[i]:.6g},{factor:.3f},{res['right'][i].max():.2e}")


if __name__ == "__main__":
    main()
