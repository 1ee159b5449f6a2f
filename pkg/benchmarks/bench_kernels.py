"""Time the numba kernels against their plain-Python bodies.

    python benchmarks/bench_kernels.py [--repeat 5]

The Python path is the same function source run through ``.py_func``, so both
columns compute identical results.  Setting VGVAE_DISABLE_JIT=1 makes both
columns the Python path.
"""
import argparse
import time

import numpy as np

from vgvae import kernels
from vgvae._jit import JIT_DISABLED, python_impl
from vgvae.metrics.trees import parse_bracketed, postorder_arrays
from vgvae.synthetic import SyntheticGrammar


def _time(fn, args, repeat):
    fn(*args)  # compile / warm up
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t)
    return best


def cases(rng):
    a = rng.integers(0, 30, size=400).astype(np.int64)
    b = rng.integers(0, 30, size=400).astype(np.int64)
    g = SyntheticGrammar()
    r1, r2 = g.sentences(2, rng)
    table = {}
    t1 = postorder_arrays(parse_bracketed(r1.parse), table)
    t2 = postorder_arrays(parse_bracketed(r2.parse), table)
    xs = np.linspace(0.01, 200.0, 2000)
    return [
        ("levenshtein 400x400", kernels.levenshtein, (a, b)),
        ("lcs_length 400x400", kernels.lcs_length, (a, b)),
        ("zhang_shasha parse pair", kernels.zhang_shasha, (*t1, *t2)),
        ("log_iv_array v=49 n=2000", kernels.log_iv_array, (49.0, xs, kernels.DEBYE_COEFFS)),
    ]


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    print(f"jit disabled: {JIT_DISABLED}")
    print(f"{'kernel':<28} {'jit (ms)':>10} {'python (ms)':>12} {'speedup':>8}")
    for name, fn, fargs in cases(np.random.default_rng(args.seed)):
        fast = _time(fn, fargs, args.repeat)
        slow = _time(python_impl(fn), fargs, args.repeat)
        assert np.allclose(fn(*fargs), python_impl(fn)(*fargs))
        print(f"{name:<28} {fast * 1e3:10.3f} {slow * 1e3:12.3f} {slow / fast:8.1f}x")


if __name__ == "__main__":
    main()
