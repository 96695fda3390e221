"""Compare the numba and numpy discretization kernels.

    python benchmarks/bench_kernels.py [--intervals 30] [--substeps 10] [--repeat 200]

Also times one full quad-rotor solve with each kernel (``--solve``).  The solve
timing switches kernels by patching ``HAVE_NUMBA``; the env flag
``SCVXSTAR_NUMBA=0`` does the same for a whole process.
"""
import argparse
import time

import numpy as np

from scvxstar import kernels


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--intervals", type=int, default=30)
    ap.add_argument("--substeps", type=int, default=10)
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--solve", action="store_true", help="also time a full example2 solve")
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    X = rng.normal(size=(args.intervals, 6))
    U = np.hstack([rng.uniform(-3, 3, (args.intervals, 3)), np.full((args.intervals, 1), 3.0)])
    g = np.array([-9.81, 0.0, 0.0])
    call = lambda f: f(X, U, 0.3, 0.5, g, 1 / 6, args.substeps)

    t_np = best_of(lambda: call(kernels.discretize_batch_numpy), args.repeat)
    print(f"numpy : {t_np * 1e3:8.3f} ms  ({args.intervals} intervals x {args.substeps} substeps)")
    if not kernels.HAVE_NUMBA:
        print("numba : unavailable (not installed or SCVXSTAR_NUMBA=0)")
        return
    t0 = time.perf_counter()
    ref = call(kernels.discretize_batch_numba)
    print(f"numba : first call {time.perf_counter() - t0:.2f} s (compile or cache load)")
    t_nb = best_of(lambda: call(kernels.discretize_batch_numba), args.repeat)
    print(f"numba : {t_nb * 1e3:8.3f} ms  speedup x{t_np / t_nb:.1f}")
    alt = call(kernels.discretize_batch_numpy)
    print(f"max |dx| {np.max(np.abs(ref[0] - alt[0])):.1e}, max |dPhi| {np.max(np.abs(ref[1] - alt[1])):.1e}")

    if args.solve:
        from scvxstar.driver import AlgorithmConfig, solve
        from scvxstar.experiments import build_problem

        problem, z0 = build_problem("example2")
        cfg = AlgorithmConfig(w_init=1e3)
        for flag in (True, False):
            kernels.HAVE_NUMBA = flag
            t0 = time.perf_counter()
            res = solve(problem, cfg, z0)
            print(f"example2 solve ({'numba' if flag else 'numpy'}): "
                  f"{time.perf_counter() - t0:.2f} s, {res.iteration_count} iterations")
        kernels.HAVE_NUMBA = True


if __name__ == "__main__":
    main()
