"""Compare the compiled and pure-Python kernels.

Run with ``python benchmarks/bench_kernels.py``. Prints the median wall time
of each kernel for each backend and the speed-up.
"""

import argparse
import timeit

import numpy as np

from evtkit import _kernels_py

try:
    from evtkit import _kernels as _kernels_c
except ImportError:  # extension not built
    _kernels_c = None


def cases(n, rng):
    y = rng.exponential(size=n)
    eta = rng.normal(0.0, 0.1, size=n)
    u = rng.random(n)
    starts = rng.integers(0, n, size=n)
    return {
        "gpd_nll_derivs (xi=0.1)": lambda mod: mod.gpd_nll_derivs(y, eta, 0.1),
        "gpd_nll_derivs (xi~0)": lambda mod: mod.gpd_nll_derivs(y, eta, 1e-7),
        "stationary_indices (l=50)": lambda mod: mod.stationary_indices(n, 0.02, u, starts),
        "stationary_indices (l=1)": lambda mod: mod.stationary_indices(n, 1.0, u, starts),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("-n", type=int, default=21000)
    ap.add_argument("--repeat", type=int, default=30)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    backends = {"python": _kernels_py}
    if _kernels_c is not None:
        backends["cython"] = _kernels_c
    else:
        print("compiled extension not available; timing the Python fallback only")

    print(f"n = {args.n}, median of {args.repeat} runs")
    print(f"{'kernel':30s}" + "".join(f"{b:>12s}" for b in backends) + ("     speed-up" if len(backends) > 1 else ""))
    for name, fn in cases(args.n, rng).items():
        times = {}
        for b, mod in backends.items():
            fn(mod)
            runs = timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat)
            times[b] = float(np.median(runs))
        line = f"{name:30s}" + "".join(f"{t * 1e3:10.3f}ms" for t in times.values())
        if len(times) > 1:
            line += f"{times['python'] / times['cython']:12.1f}x"
        print(line)


if __name__ == "__main__":
    main()
