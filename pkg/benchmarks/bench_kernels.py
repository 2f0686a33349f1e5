"""Time the compiled and numpy store kernels on identical inputs.

    python3 benchmarks/bench_kernels.py --reps 1000000 --repeat 3
"""
import argparse
import time

import numpy as np

from allpaysearch import kernels
from allpaysearch.auction import AuctionScene, classify_region, solve_atom_mu

REGION_CODE = {"R1": 1, "R2": 2, "R3": 3}


def inputs(reps, lam, theta, b, seed):
    rng = np.random.default_rng(seed)
    n_high = rng.poisson(lam * (1 - theta), reps).astype(np.int64)
    n_low = rng.poisson(lam * theta, reps).astype(np.int64)
    max_n = max(2, int((n_high + n_low).max()))
    region = np.zeros(max_n + 1, dtype=np.int8)
    mu = np.zeros(max_n + 1)
    for n in range(2, max_n + 1):
        scene = AuctionScene(n, theta, b)
        tag = classify_region(scene).tag
        region[n] = REGION_CODE[tag]
        if tag == "R2":
            mu[n] = solve_atom_mu(scene)
    u_bid = rng.random(int((n_high + n_low).sum()))
    u_tie = rng.random(reps)
    return n_high, n_low, u_bid, u_tie, region, mu


def best_time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--lam", type=float, default=3.0)
    ap.add_argument("--theta", type=float, default=0.7)
    ap.add_argument("--b", type=float, default=0.3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    data = inputs(args.reps, args.lam, args.theta, args.b, args.seed)
    backends = {"python": kernels.get_backend("python")}
    try:
        backends["compiled"] = kernels.get_backend("compiled")
    except ImportError:
        print("compiled kernels not built; timing the numpy backend only")

    print(f"{args.reps} stores, Poisson({args.lam}) customers, theta={args.theta}, b={args.b}")
    print(f"{'format':<8}" + "".join(f"{name:>12}" for name in backends) + f"{'speedup':>10}")
    for fmt, code in (("allpay", 0), ("first", 1), ("second", 2)):
        times = {
            name: best_time(lambda k=k: k.play_stores(code, args.theta, args.b, 0.1, *data), args.repeat)
            for name, k in backends.items()
        }
        row = f"{fmt:<8}" + "".join(f"{t:>11.3f}s" for t in times.values())
        if "compiled" in times:
            row += f"{times['python'] / times['compiled']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
