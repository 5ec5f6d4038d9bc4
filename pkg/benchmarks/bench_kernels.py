"""Time the compiled kernels against the numpy fallback.

Run with ``python benchmarks/bench_kernels.py``. Each case reports the best of
several repeats for both backends and checks that their outputs agree.
"""

import argparse
import timeit

import numpy as np

from iublotto import kernels


def dp_case(n, grid, rng):
    gain = np.cumsum(rng.uniform(0, 1, (n, grid)), axis=1) / grid
    return "maxplus_dp", (gain,), f"n={n} grid={grid}"


def expectation_case(kind, n, grid, m, rng):
    samples = rng.uniform(0, 1, (n, m))
    samples[:, : m // 10] = 0.0
    points = np.linspace(0, 1.5, grid)
    return "csf_expectation", (kind, 50.0, 0.5, points, samples), f"kind={kind} n={n} grid={grid} m={m}"


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if kernels.compiled is None:
        raise SystemExit("compiled extension not available; build with `pip install -e . --no-build-isolation`")
    rng = np.random.default_rng(0)
    cases = [
        dp_case(20, 201, rng),
        dp_case(80, 201, rng),
        dp_case(40, 801, rng),
        expectation_case(1, 10, 201, 20_000, rng),
        expectation_case(2, 10, 201, 20_000, rng),
    ]
    print(f"{'kernel':<16} {'case':<32} {'compiled s':>11} {'fallback s':>11} {'speedup':>8}")
    for name, call_args, label in cases:
        fast = getattr(kernels.compiled, name)
        slow = getattr(kernels.fallback, name)
        a, b = fast(*call_args), slow(*call_args)
        if name == "maxplus_dp":
            assert a[0] == b[0] and np.array_equal(a[1], b[1])
        else:
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-15)
        t_fast = min(timeit.repeat(lambda: fast(*call_args), number=1, repeat=args.repeat))
        t_slow = min(timeit.repeat(lambda: slow(*call_args), number=1, repeat=args.repeat))
        print(f"{name:<16} {label:<32} {t_fast:>11.4f} {t_slow:>11.4f} {t_slow / t_fast:>7.1f}x")


if __name__ == "__main__":
    main()
