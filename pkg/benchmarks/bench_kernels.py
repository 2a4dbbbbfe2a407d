"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from backupsched import _pykernels, kernels
from backupsched.density import periodic_kde, silverman_bandwidth
from backupsched.sampler import greedy_sample
from backupsched.schedule import IntentParams, JobWindow, PeriodConfig, Schedule

P = 168.0
N = 2016


def cases(rng):
    grid = np.arange(N) * P / N
    pts = rng.uniform(-42, 210, 400)
    starts = rng.uniform(0, P, 200)
    lengths = rng.uniform(0.5, 6, 200)
    vals = rng.uniform(0.1, 1, N)
    return {
        "gaussian_sum (2016 x 400)": lambda m: m.gaussian_sum(grid, pts, 6.0),
        "exclude (2016 cells)": lambda m: m.exclude(vals.copy(), grid, 80.0, P, 12.0, 6.0),
        "dilated_mask (2016 x 200)": lambda m: m.dilated_mask(grid, starts, lengths, 2.0, P),
        "count_active_many (2016 x 200)": lambda m: m.count_active_many(grid, starts, lengths, P),
    }


def pipeline(backend, schedule, intent):
    for name in ("gaussian_sum", "exclude", "dilated_mask", "count_active_many"):
        setattr(kernels, name, getattr(backend, name))
    d = periodic_kde(schedule, silverman_bandwidth(schedule.centers()))
    return greedy_sample(d, schedule, intent, seed=0)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if kernels.compiled_backend is None:
        raise SystemExit("compiled extension not available; build with pip install -e .")
    backends = {"numpy": _pykernels, "cython": kernels.compiled_backend}
    rng = np.random.default_rng(0)

    print(f"{'kernel':<34}{'numpy ms':>10}{'cython ms':>11}{'speedup':>9}")
    for label, fn in cases(rng).items():
        t = {}
        for name, mod in backends.items():
            number = 20
            t[name] = min(timeit.repeat(lambda: fn(mod), number=number, repeat=args.repeat)) / number
        print(f"{label:<34}{t['numpy'] * 1e3:>10.3f}{t['cython'] * 1e3:>11.3f}"
              f"{t['numpy'] / t['cython']:>8.1f}x")

    sched = Schedule(PeriodConfig(), tuple(
        JobWindow(f"c{i}", float(c), float(w))
        for i, (c, w) in enumerate(zip(rng.uniform(0, P, 300), rng.uniform(0.5, 8, 300)))
    ), server_concurrency=40)
    intent = IntentParams(k=10, epsilon=8.0, alpha=0.3, omega=0.5)
    t = {}
    for name, mod in backends.items():
        t[name] = min(timeit.repeat(lambda: pipeline(mod, sched, intent), number=3,
                                    repeat=args.repeat)) / 3
    print(f"{'end-to-end (n=300, k=10)':<34}{t['numpy'] * 1e3:>10.3f}{t['cython'] * 1e3:>11.3f}"
          f"{t['numpy'] / t['cython']:>8.1f}x")


if __name__ == "__main__":
    main()
