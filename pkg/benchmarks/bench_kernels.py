"""Compare the compiled and pure-Python kernels.

Usage: python benchmarks/bench_kernels.py [--repeat N] [--pulses N]
"""

import argparse
import time

import numpy as np

from pdcqkd import SourceParams, kernels, observables, source_stats
from pdcqkd.bounds import x_range
from pdcqkd.channel import ChannelParams
from pdcqkd.montecarlo import SimConfig, simulate
from pdcqkd.optimize import SweepSpec, run_sweep


def _best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def minimizer_case():
    src = source_stats(SourceParams(0.17, 0.5, 1e-6))
    obs = observables(src, ChannelParams(0.21, 110.0, 0.045, 8.5e-7, 0.033))
    r0, r1, r2 = src.r(0), src.r(1), src.r(2)
    args = (r0, r1, r0, r1, r2, obs.r, obs.E_t, obs.E_nt, x_range(obs, r0), 4097, 1e-12)
    return lambda: kernels.minimize_bracket(*args)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--pulses", type=int, default=2_000_000)
    args = parser.parse_args()

    if not kernels.compiled_available():
        print("compiled extension not built; only the python backend is available")
    backends = ["compiled", "python"] if kernels.compiled_available() else ["python"]
    sim = SimConfig(args.pulses, 1, SourceParams(0.19, 0.5, 1e-6), ChannelParams(0.21, 20.0, 0.045, 8.5e-7, 0.033))
    sweep = SweepSpec(distances_km=tuple(np.arange(0.0, 180.0, 20.0)))
    cases = {
        "x-minimization (1 call)": minimizer_case(),
        f"pulse tallies ({args.pulses:,} pulses)": lambda: simulate(sim),
        "sweep (9 distances, mu optimized)": lambda: run_sweep(sweep),
    }
    print(f"{'case':40s} " + " ".join(f"{b:>12s}" for b in backends) + "   speedup")
    for name, fn in cases.items():
        row = []
        for b in backends:
            kernels.set_backend(b)
            fn()  # warm up
            row.append(_best_of(fn, args.repeat if "sweep" not in name else 1))
        speed = f"{row[1] / row[0]:8.1f}x" if len(row) == 2 else ""
        print(f"{name:40s} " + " ".join(f"{t * 1e3:10.2f}ms" for t in row) + "  " + speed)
    kernels.set_backend("auto")


if __name__ == "__main__":
    main()
