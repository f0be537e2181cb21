"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import math
import timeit

import numpy as np

from nctorus import _kernels_py

try:
    from nctorus import _kernels
except ImportError:
    _kernels = None


def cases(rng):
    theta3 = rng.normal(size=(3, 3))
    theta3 = theta3 - theta3.T
    ka = rng.integers(-6, 7, size=(300, 3))
    kb = rng.integers(-6, 7, size=(300, 3))
    ca = rng.normal(size=300) + 1j * rng.normal(size=300)
    cb = rng.normal(size=300) + 1j * rng.normal(size=300)
    golden = np.array([[0.0, (math.sqrt(5) - 1) / 2], [-(math.sqrt(5) - 1) / 2, 0.0]])
    yield "twisted_convolve n=3, 300x300", lambda m: m.twisted_convolve(ka, ca, kb, cb, theta3)
    yield "shell_minima n=2, radius 200", lambda m: m.shell_minima(golden, 200, 1e-12)
    yield "shell_minima n=3, radius 30", lambda m: m.shell_minima(theta3, 30, 1e-12)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':34s} {'numpy ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for name, fn in cases(rng):
        t_py = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=args.repeat)) * 1e3
        if _kernels is None:
            print(f"{name:34s} {t_py:10.2f} {'n/a':>10s} {'':>8s}")
            continue
        t_cy = min(timeit.repeat(lambda: fn(_kernels), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:34s} {t_py:10.2f} {t_cy:10.2f} {t_py / t_cy:7.1f}x")


if __name__ == "__main__":
    main()
