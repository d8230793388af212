"""Time the compiled and pure-Python kernels on the same workloads.

Usage::

    python benchmarks/bench_kernels.py [--trials 1000000] [--repeat 3]

Both backends are loaded explicitly, so the ``PRPQKD_PURE_PYTHON`` switch does
not matter here. Results for each workload are also compared for equality.
"""

from __future__ import annotations

import argparse
import math
import time

from prpqkd._backend import available_backends, load_backend


def _best(fn, repeat: int) -> tuple[float, object]:
    best, out = math.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _workloads(trials: int):
    amp = 0.75 * math.sqrt(0.3)

    def theta_grid(k):
        # the 4 phases x 2 sides of one error-rate evaluation, repeated 250 times
        def run():
            total = 0.0
            for _ in range(250):
                for m in range(4):
                    for kind, x in ((1, 2.0), (2, -2.0)):
                        total += k.theta_average(kind, x, m * math.pi / 2, amp, 1.1, math.pi / 6, 1e-10, 2**14)[0]
            return round(total, 12)

        return run

    def mc(k):
        return lambda: k.mc_tally(20120101, 0, trials, amp, 1.1, math.pi / 6, 2.0, -1)

    return [("theta_average x2000", theta_grid), (f"mc_tally n={trials:,}", mc)]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    names = available_backends()
    backends = {n: load_backend(n) for n in names}
    print(f"backends: {', '.join(names)}")
    print(f"{'workload':<26}" + "".join(f"{n:>12}" for n in names) + ("     speedup" if len(names) > 1 else ""))
    for label, make in _workloads(args.trials):
        times, outs = {}, {}
        for n, k in backends.items():
            times[n], outs[n] = _best(make(k), args.repeat)
        row = f"{label:<26}" + "".join(f"{times[n]:>11.3f}s" for n in names)
        if len(names) > 1:
            row += f"{times['python'] / times['compiled']:>11.1f}x"
            if outs["python"] != outs["compiled"]:
                row += "  (results differ!)"
        print(row)


if __name__ == "__main__":
    main()
