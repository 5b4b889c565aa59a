"""Time the ROCKET transform under the numba and numpy backends.

    python benchmarks/bench_rocket.py --samples 200 --channels 9 --kernels 2000

The numba timing excludes the first (compiling) call. Both backends are
checked to agree before timings are reported.
"""

import argparse
import os
import time

import numpy as np

from exercise_tsc._accel import ENV_FLAG
from exercise_tsc.rocket import generate_kernels, transform


def timed(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--channels", type=int, default=9)
    ap.add_argument("--length", type=int, default=161)
    ap.add_argument("--kernels", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    X = rng.standard_normal((args.samples, args.channels, args.length))
    ks = generate_kernels(args.kernels, args.channels, args.length, seed=0)

    transform(X[:1], ks, backend="numba")  # compile
    t_nb, f_nb = timed(lambda: transform(X, ks, backend="numba"), args.repeat)
    t_np, f_np = timed(lambda: transform(X, ks, backend="numpy"), args.repeat)
    err = float(np.max(np.abs(f_nb - f_np)))

    print(f"{args.samples} samples x {args.channels} channels x {args.length}, "
          f"{args.kernels} kernels ({ENV_FLAG}={os.environ.get(ENV_FLAG, 'unset')})")
    print(f"  numba  {t_nb:8.3f} s")
    print(f"  numpy  {t_np:8.3f} s")
    print(f"  speedup {t_np / t_nb:6.1f}x   max |diff| {err:.2e}")


if __name__ == "__main__":
    main()
