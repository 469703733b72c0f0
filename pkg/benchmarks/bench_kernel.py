"""Time the compiled walk kernel against the pure-Python fallback.

    python benchmarks/bench_kernel.py [--trials N]

Both kernels consume the same counter-based stream, so besides timing each
case the script checks that they return identical arrays.
"""

import argparse
import time

import numpy as np

from parkwalk import _kernel_py
from parkwalk.engine import Boundary, WalkParameters

try:
    from parkwalk import _kernel
except ImportError:
    _kernel = None

CASES = [
    ((1, 1, 1, 1, 1, 1, 1, 1), 0.5, Boundary.OPEN),
    ((1, 1, 1, 1, 1, 1, 1, 1), 0.75, Boundary.UNBOUNDED),
    ((1, 2, 1, 4, 5, 4), 0.3, Boundary.OPEN),
    (tuple([1] * 32), 0.6, Boundary.OPEN),
]


def run(kernel, alpha, params, trials):
    t0 = time.perf_counter()
    out = kernel.simulate_block(np.asarray(alpha, dtype=np.int64), len(alpha), float(params.p), int(params.unbounded),
                                params.step_cap, params.escape_margin, 1, 0, trials)
    return time.perf_counter() - t0, out


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--trials", type=int, default=20_000)
    args = ap.parse_args()
    if _kernel is None:
        print("compiled kernel not built; nothing to compare")
        return
    print(f"{'case':<34}{'python s':>10}{'compiled s':>12}{'speedup':>10}  same")
    for alpha, p, boundary in CASES:
        params = WalkParameters(p, boundary)
        tp, a = run(_kernel_py, alpha, params, args.trials)
        tc, b = run(_kernel, alpha, params, args.trials)
        same = all(np.array_equal(x, y) for x, y in zip(a, b))
        label = f"n={len(alpha)} p={p} {boundary.value}"
        print(f"{label:<34}{tp:>10.3f}{tc:>12.4f}{tp / tc:>9.0f}x  {same}")


if __name__ == "__main__":
    main()
