#!/usr/bin/env python3
"""Randomized validation sweep for the ball-covering construction.

Samples (dimension, radius ratio, norm) configurations, builds a net of
r2-balls covering the r1-ball for each, and checks both the combinatorial
size bound m * 2^m * (1 + r1/r2)^m and probe-based coverage.  Prints a
summary line per dimension and exits nonzero on any violation.
"""
import argparse
import sys
import time

import numpy as np

from fdedim import covering as cv

# per-dimension ratio caps keep the greedy net construction affordable;
# the size bound grows like (1 + ratio)^m
RATIO_HI = {1: 16.0, 2: 8.0, 3: 3.5, 4: 2.2, 5: 1.6, 6: 1.35}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--probes", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    per_dim = {m: [0, 0] for m in RATIO_HI}  # trials, violations
    t0 = time.time()
    for _ in range(args.trials):
        m = int(rng.integers(1, 7))
        ratio = float(rng.uniform(1.01, RATIO_HI[m]))
        kind = "sup" if rng.random() < 0.5 else "euclidean"
        norm = cv.NormSpec(m, kind)
        net = cv.build_net(norm, ratio, 1.0, random_probes=args.probes)
        ok = (len(net) <= cv.covering_bound(m, ratio, 1.0)
              and cv.verify_covering(net, norm, ratio, 1.0,
                                     probes=args.probes)["passed"])
        per_dim[m][0] += 1
        per_dim[m][1] += 0 if ok else 1
    bad = 0
    for m, (n, v) in sorted(per_dim.items()):
        print(f"dim {m}: {n} trials, {v} violations")
        bad += v
    print(f"total {args.trials} trials, {bad} violations, "
          f"{time.time() - t0:.1f}s")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
