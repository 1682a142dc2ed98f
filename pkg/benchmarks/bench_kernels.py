"""Compiled vs pure-Python likelihood-ratio kernel.

    python benchmarks/bench_kernels.py [--runs 2000] [--horizon 300] [--repeat 3]

Prints one line per (delta, backend) with the best wall time over
``--repeat`` calls and the speed-up of the compiled kernel.
"""
import argparse
import time

import numpy as np

from randur import kernels
from randur.lrt import run_batch_trajectories
from randur.model import ModelParams


def best_time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - start)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=2000)
    ap.add_argument("--horizon", type=int, default=300)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--deltas", default="2,3,10,50")
    args = ap.parse_args(argv)

    backends = sorted(kernels.BACKENDS)
    print(f"backends available: {', '.join(backends)} (default {kernels.DEFAULT_BACKEND})")
    rng = np.random.default_rng(0)
    for delta in (int(d) for d in args.deltas.split(",")):
        params = ModelParams.uniform(delta, 2.0, 5.0, 10.0)
        x = 10.0 * rng.standard_normal((args.runs, args.horizon))
        timings = {}
        outputs = {}
        for name in backends:
            timings[name], outputs[name] = best_time(
                lambda: run_batch_trajectories(params, x, backend=name), args.repeat)
            rate = args.runs * args.horizon / timings[name] / 1e6
            print(f"delta={delta:3d} {name:9s} {timings[name]*1e3:9.1f} ms  {rate:7.2f} Msteps/s")
        if "compiled" in timings:
            diff = float(np.max(np.abs(outputs["compiled"] - outputs["python"])))
            print(f"delta={delta:3d} speed-up {timings['python'] / timings['compiled']:.1f}x"
                  f"  max |diff| {diff:.2e}")


if __name__ == "__main__":
    main()
