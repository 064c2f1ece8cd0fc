"""Benchmark the compiled stepper against its pure-Python twin.

The adaptive integrator is the hot loop of every shooting solve, so this
is the comparison that decides whether the extension pays off.

    python3 benchmarks/bench_stepper.py [--repeats N]
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from plaplab import _kernels
from plaplab._kernels import _stepper_py

EMPTY = np.empty(0)

WORKLOADS = [
    ("p-harmonic 4 decades", (2.0, 3.0, _kernels.FAM_ZERO, 0, 0.0,
                              0.0, math.log(1e-4), 1.0, -0.5)),
    ("power potential p=4", (4.0, 2.0, _kernels.FAM_POWER, 1, 1.0,
                             0.0, math.log(1e-6), 1.0, 0.2962962962962963)),
    ("log-power p=d", (3.0, 3.0, _kernels.FAM_LOG_POWER, 0, 3.0,
                       0.0, math.log(1e-4), 2.0, -1.0)),
    ("oscillating sign", (2.5, 3.0, _kernels.FAM_POWER, 2, 0.5,
                          0.0, -10.0, 1.0, -0.4)),
]


def run_backend(impl, case, repeats):
    p, d, fam, sgn, c1, s0, s1, v0, w0 = case
    start = time.perf_counter()
    steps = 0
    for _ in range(repeats):
        status, s, v, w, e, ns, nr = impl.integrate_radial(
            p, d, fam, sgn, c1, EMPTY, EMPTY, s0, s1, v0, w0,
            1e-9, 1e-9, 0.05, 500000, EMPTY,
        )
        # positivity loss is a legitimate (and timed) event path
        assert status in (0, 1), f"unexpected status {status}"
        steps += ns + nr
    return time.perf_counter() - start, steps


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()

    backends = [("python", _stepper_py)]
    if _kernels.BACKEND == "compiled":
        backends.append(("compiled", _kernels._impl))
    else:
        print("note: compiled backend unavailable, timing pure Python only")

    print(f"{'workload':24s} " + " ".join(f"{name:>12s}" for name, _ in backends)
          + "      speedup")
    for label, case in WORKLOADS:
        times = []
        for _, impl in backends:
            elapsed, steps = run_backend(impl, case, args.repeats)
            times.append(elapsed)
        cols = " ".join(f"{t * 1e3 / args.repeats:9.3f} ms" for t in times)
        speedup = f"{times[0] / times[-1]:9.1f}x" if len(times) == 2 else "       --"
        print(f"{label:24s} {cols} {speedup}")


if __name__ == "__main__":
    main()
