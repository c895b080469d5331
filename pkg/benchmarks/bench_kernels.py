#!/usr/bin/env python3
"""Benchmark the compiled trajectory kernels against the NumPy fallback.

Both backends implement identical arithmetic (bit-identical outputs), so this
measures pure execution speed on a representative ensemble workload.

Usage: python benchmarks/bench_kernels.py [--traces N] [--steps N]
"""

import argparse
import math
import time

import numpy as np

from qubitcorr import _kernels_py
from qubitcorr.model import MeasurementSetup
from qubitcorr.trajectory import _block_noise, kernel_params

try:
    from qubitcorr import _kernels as _kernels_cy
except ImportError:
    _kernels_cy = None


def run(module, fn_name, setup, noise, dt, repeats=3):
    count, n_steps, _ = noise.shape
    best = math.inf
    params = kernel_params(setup, dt)
    for _ in range(repeats):
        states = np.tile([0.0, 0.0, 1.0], (count, 1))
        signals = np.empty((count, n_steps, 2))
        projections = np.zeros(count, dtype=np.int64)
        start = time.perf_counter()
        result = getattr(module, fn_name)(states, noise, dt, params, signals,
                                          projections)
        best = min(best, time.perf_counter() - start)
        assert result is None
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--traces", type=int, default=2000)
    parser.add_argument("--steps", type=int, default=1250)
    args = parser.parse_args()

    setup = MeasurementSetup.from_rates(
        gamma_z=1 / 1.3, gamma_phi=1 / 1.3, phi=math.pi / 2,
        eta_z=0.49, eta_phi=0.41, t1=60.0, t2=30.0,
    )
    dt = 0.004
    noise = _block_noise(0, 0, args.traces, args.steps)
    total_steps = args.traces * args.steps

    print(f"{args.traces} traces x {args.steps} steps "
          f"({total_steps / 1e6:.1f}M steps)\n")
    print(f"{'kernel':<28}{'numpy':>12}{'cython':>12}{'speedup':>10}")
    for scheme, fn in (("euler (ito)", "simulate_block_ito"),
                       ("heun (stratonovich)", "simulate_block_stratonovich")):
        t_py = run(_kernels_py, fn, setup, noise, dt)
        row = f"{scheme:<28}{t_py * 1e3:>10.1f}ms"
        if _kernels_cy is not None:
            t_cy = run(_kernels_cy, fn, setup, noise, dt)
            row += f"{t_cy * 1e3:>10.1f}ms{t_py / t_cy:>9.1f}x"
        else:
            row += f"{'n/a':>12}{'':>10}"
        print(row)
    if _kernels_cy is None:
        print("\ncompiled kernels not built; only the fallback was timed")


if __name__ == "__main__":
    main()
