#!/usr/bin/env python3
"""Survey empirical slopes of random subspaces against the generic bound.

For a fixed signature, samples mod-p points plus random subspaces of the given
rank inside omega-tilde, tabulates the slope vectors that actually occur, and
compares them with the generic (expected-largest) slope.  A diagram of the rank
lattice with the generic trace overlaid can be written as SVG.

Usage::

    python scripts/slope_survey.py --N 3 --n 5 --m 4,2,3 --rank 2 --p 5 --samples 40
    python scripts/slope_survey.py --N 3 --n 5 --m 4,2,3 --rank 2 --svg survey.svg
"""

import argparse
import collections
import random

from ampnef.datum import Signature
from ampnef.slopes import generic_slope, render_diagram
from ampnef.zipmodp import empirical_slope, random_subspace, sample_point


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, required=True)
    ap.add_argument("--n", type=int, required=True)
    ap.add_argument("--m", required=True, help="comma-separated ranks, one per place")
    ap.add_argument("--rank", type=int, required=True, help="subspace rank to probe")
    ap.add_argument("--p", type=int, default=5)
    ap.add_argument("--samples", type=int, default=40)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--svg", help="write the rank diagram with the generic overlay here")
    args = ap.parse_args()

    sig = Signature(args.N, args.n, tuple(int(s) for s in args.m.split(",")))
    gen = generic_slope(sig, 1, args.rank)
    print(f"signature {sig}, probing rank {args.rank} at p={args.p}")
    print(f"generic slope r={gen.r} (trace {gen.r_tilde}, total {gen.total})")

    counts = collections.Counter()
    for k in range(args.samples):
        seed = args.seed + k
        pt = sample_point(sig, args.p, seed)
        rng = random.Random(seed)
        S = random_subspace(rng, args.p, pt.omega_tilde(1), args.rank)
        counts[empirical_slope(pt, 1, S).r] += 1

    print(f"{args.samples} samples:")
    for r, c in sorted(counts.items(), reverse=True):
        marker = "  <- generic" if r == gen.r else ""
        print(f"  r={r}  x{c}{marker}")
    if gen.r not in counts:
        print("  (generic slope not hit; raise --samples)")
    off_generic = sum(c for r, c in counts.items() if r != gen.r)
    print(f"off-generic fraction: {off_generic}/{args.samples}")

    if args.svg:
        dg = render_diagram(sig, [gen.r_tilde])
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(dg.to_svg())
        print(f"diagram written to {args.svg}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
