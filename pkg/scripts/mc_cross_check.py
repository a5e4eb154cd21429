#!/usr/bin/env python3
"""Monte Carlo cross-check: run the three simulation engines and compare
them against the closed forms.

Checks, each reported as a z-score in standard errors:

  * continuous engine mean vs the exact subcritical mean 1/(1 - 2p)
    (skipped when p >= 1/2, where the mean diverges)
  * finite-cascade fraction vs exp(-decay gap) (continuous) and the
    martingale root raised to m (discrete/walk) in the supercritical regime
  * total-variation distance between the discrete and walk histograms,
    which sample the same law through different recursions

Example:
    python3 scripts/mc_cross_check.py --p 0.3 --m 10 --trials 200000 --seed 7
    python3 scripts/mc_cross_check.py --p 0.6 --m 10 --trials 200000 --seed 7 --workers 4
"""

import argparse
import math
import sys

from cascade_gamma import (
    CriticalityError,
    DiscretizationParams,
    ModelParams,
    SimConfig,
    SimSummary,
    extinction,
    martingale_alpha,
    moments,
    run_campaign,
)


def zline(label: str, got: float, want: float, se: float) -> bool:
    z = (got - want) / se if se > 0 else math.inf
    flag = "" if abs(z) <= 4.0 else "  <-- exceeds 4 SE"
    print(f"{label:<34} got {got:.6f}  want {want:.6f}  z = {z:+.2f}{flag}")
    return abs(z) > 4.0


def tv_distance(a: SimSummary, b: SimSummary) -> float:
    acc = abs(a.overflow / a.n_finite - b.overflow / b.n_finite)
    for ca, cb in zip(a.bin_counts, b.bin_counts):
        acc += abs(ca / a.n_finite - cb / b.n_finite)
    return 0.5 * acc


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--p", type=float, required=True)
    parser.add_argument("--m", type=int, default=10, help="atoms per unit mass")
    parser.add_argument("--trials", type=int, default=200_000)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--cap", type=float, default=1e4,
                        help="censoring threshold on the total mass")
    args = parser.parse_args()

    params = ModelParams(args.p)
    lattice = DiscretizationParams(args.p, args.m)
    summaries = {}
    for mode in ("continuous", "discrete", "walk"):
        config = SimConfig(mode=mode, p=args.p,
                           m=None if mode == "continuous" else args.m,
                           trials=args.trials, seed=args.seed, cap=args.cap,
                           workers=args.workers)
        s = summaries[mode] = run_campaign(config)
        mean = "n/a" if s.mean is None else f"{s.mean:.6f} +- {s.se_mean:.6f}"
        print(f"[{mode:<10}] finite mean = {mean}, "
              f"finite fraction = {s.finite_fraction:.6f}, "
              f"censored = {s.n_censored}")
    print()

    failures = 0

    try:
        closed = moments(params)
    except CriticalityError:
        closed = None
    if closed is not None:
        s = summaries["continuous"]
        failures += zline("continuous mean vs closed form",
                          s.mean, closed.mean, s.se_mean)

    if args.p > 0.5:
        prob = extinction(params).prob_finite
        alpha_pow_m = martingale_alpha(lattice) ** args.m
        for mode, want in (("continuous", prob), ("discrete", alpha_pow_m),
                           ("walk", alpha_pow_m)):
            got = summaries[mode].finite_fraction
            se = math.sqrt(want * (1.0 - want) / args.trials)
            failures += zline(f"{mode} finite fraction", got, want, se)

    tv = tv_distance(summaries["discrete"], summaries["walk"])
    n_eff = min(summaries["discrete"].n_finite, summaries["walk"].n_finite)
    n_cells = len(summaries["discrete"].bin_counts) + 1
    budget = 3.0 * math.sqrt(n_cells / (2.0 * n_eff))
    print(f"{'discrete vs walk TV':<34} got {tv:.6f}  budget {budget:.6f}")
    failures += tv > budget

    print()
    print("all checks passed" if failures == 0 else f"{failures} check(s) failed")
    return 0 if failures == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
