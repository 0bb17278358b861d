"""Compare the compiled kernels against the pure-Python fallback.

Run with ``python benchmarks/bench_kernels.py [--quick]``.
"""

import argparse
import sys
import timeit

import numpy as np

from lqgchip import kernels
from lqgchip.pipeline import theory_gate


def best_of(fn, repeat):
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat=repeat, number=number)) / number


def grid_inputs(resolution):
    theta = np.linspace(0, np.pi, resolution)
    phi = np.linspace(0, 2 * np.pi, resolution)
    t, p = np.meshgrid(theta, phi, indexing="ij")
    q = np.stack([np.cos(t / 2), np.exp(1j * p) * np.sin(t / 2)], axis=-1).reshape(-1, 2)
    kets = np.ascontiguousarray(np.repeat(q[:, None, :], 2, axis=1))
    bras = np.ascontiguousarray(np.repeat(q[:, None, :], 3, axis=1))
    return kets, bras


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="smaller sizes, fewer repeats")
    args = parser.parse_args(argv)
    if kernels.compiled is None:
        print("compiled extension not built; run `python setup.py build_ext --inplace`")
        return 1
    repeat = 2 if args.quick else 5
    sizes = range(10, 15, 2) if args.quick else range(10, 21, 2)
    rng = np.random.default_rng(0)

    print(f"{'kernel':<28}{'cython [s]':>14}{'python [s]':>14}{'speedup':>10}")
    for n in sizes:
        a = np.ascontiguousarray(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
        fast = best_of(lambda: kernels.compiled.permanent_ryser(a), repeat)
        slow = best_of(lambda: kernels.pure.permanent_ryser(a), repeat)
        print(f"{f'permanent n={n}':<28}{fast:>14.3e}{slow:>14.3e}{slow / fast:>10.1f}")

    gate = np.ascontiguousarray(theory_gate()[1], dtype=complex)
    resolution = 51 if args.quick else 101
    kets, bras = grid_inputs(resolution)
    fast = best_of(lambda: kernels.compiled.sandwich_amplitudes(gate, kets, bras), repeat)
    slow = best_of(lambda: kernels.pure.sandwich_amplitudes(gate, kets, bras), repeat)
    label = f"amplitudes {resolution}x{resolution}"
    print(f"{label:<28}{fast:>14.3e}{slow:>14.3e}{slow / fast:>10.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
