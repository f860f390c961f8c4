"""Compare the compiled kernels with the numpy/Python fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--n 4096] [--density 0.01]
"""

import argparse
import timeit

import numpy as np

from overbook import _kernels_py
from overbook.generate import GeneratorSpec, generate

try:
    from overbook import _kernels as compiled
except ImportError:
    compiled = None


def cases(n, density):
    m = generate(GeneratorSpec("uniform-random", n, n, density=density, seed=1))
    rng = np.random.default_rng(0)
    k = 1000
    r0 = rng.integers(0, n - 64, k)
    c0 = rng.integers(0, n - 64, k)
    wins = (r0, r0 + 64, c0, c0 + 64)
    return {
        "tile_counts": lambda impl: impl.tile_counts(m.row_starts, m.col_indices, n, n, 64, 64),
        "window_counts": lambda impl: impl.window_counts(m.row_starts, m.col_indices, *wins),
        "scan_replay tailor": lambda impl: impl.scan_replay(5000, 4096, 100, 20, True, False),
        "scan_replay buffet": lambda impl: impl.scan_replay(5000, 4096, 100, 20, False, False),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n", type=int, default=4096)
    ap.add_argument("--density", type=float, default=0.01)
    a = ap.parse_args(argv)
    impls = [("python", _kernels_py)]
    if compiled is not None:
        impls.append(("cython", compiled))
    else:
        print("compiled extension not built; timing the fallback only")
    print(f"{'kernel':22s}" + "".join(f"{name:>12s}" for name, _ in impls) + "     speedup")
    for label, fn in cases(a.n, a.density).items():
        times = [min(timeit.repeat(lambda: fn(impl), number=1, repeat=a.repeat)) for _, impl in impls]
        ratio = f"{times[0] / times[1]:10.1f}x" if len(times) == 2 else ""
        print(f"{label:22s}" + "".join(f"{t * 1e3:10.2f}ms" for t in times) + ratio)


if __name__ == "__main__":
    main()
