"""Time the compiled and numpy coset-search backends on identical decoding problems.

    python3 benchmarks/bench_coset.py [--reps 5]
"""

import argparse
import time

import numpy as np

from subspacecomp import falg
from subspacecomp.kernels import BACKENDS

CASES = [
    # (q, n, k, s, n_ctx)
    (2, 20, 8, 1, 1),
    (2, 28, 10, 1, 1),
    (2, 16, 8, 2, 4),
    (3, 10, 5, 1, 3),
    (5, 8, 4, 1, 1),
]


def make_case(q, n, k, s, n_ctx, rng):
    a = rng.integers(0, q, size=(k, n))
    null = falg.nullspace(a, q)
    base = rng.integers(0, q, size=(s, n))
    ctx = rng.integers(0, n_ctx, size=n)
    cost = rng.exponential(size=(n_ctx, q**s))
    return base, null, ctx, cost


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    names = sorted(BACKENDS)
    print(f"{'case':<22}{'coset':>10}" + "".join(f"{n + ' ms':>14}" for n in names) + f"{'speedup':>10}")
    for q, n, k, s, n_ctx in CASES:
        base, null, ctx, cost = make_case(q, n, k, s, n_ctx, rng)
        times, outs = {}, {}
        for name in names:
            fn = BACKENDS[name]
            t0 = time.perf_counter()
            for _ in range(args.reps):
                outs[name] = fn(base, null, q, ctx, cost, 1e-9)
            times[name] = (time.perf_counter() - t0) / args.reps * 1e3
        ref = outs[names[0]]
        for name in names[1:]:
            o = outs[name]
            assert np.array_equal(o[0], ref[0]) and o[2] == ref[2] and abs(o[1] - ref[1]) < 1e-9, name
        label = f"q={q} n={n} k={k} s={s}"
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{label:<22}{q ** (len(null) * s):>10}" + "".join(f"{times[n]:>14.2f}" for n in names) + f"{speed:>9.1f}x")


if __name__ == "__main__":
    main()
