import itertools
import os
import subprocess
import sys
from collections import deque

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vgvae import kernels
from vgvae._jit import python_impl


def bfs_edit_distance(a, b, alphabet):
    """Shortest single-edit path from a to b, explored breadth first."""
    a, b = tuple(a), tuple(b)
    limit = len(a) + len(b)
    seen = {a: 0}
    queue = deque([a])
    while queue:
        s = queue.popleft()
        d = seen[s]
        if s == b:
            return d
        if len(s) > limit:
            continue
        nbrs = [s[:i] + s[i + 1:] for i in range(len(s))]
        nbrs += [s[:i] + (c,) + s[i:] for i in range(len(s) + 1) for c in alphabet]
        nbrs += [s[:i] + (c,) + s[i + 1:] for i in range(len(s)) for c in alphabet if c != s[i]]
        for n in nbrs:
            if n not in seen:
                seen[n] = d + 1
                queue.append(n)
    raise AssertionError("unreachable")


def brute_lcs(a, b):
    best = 0
    for r in range(len(a) + 1):
        for idx in itertools.combinations(range(len(a)), r):
            sub = [a[i] for i in idx]
            it = iter(b)
            if all(any(x == y for y in it) for x in sub):
                best = max(best, r)
    return best


seqs = st.lists(st.integers(0, 2), max_size=4)


@settings(max_examples=60, deadline=None)
@given(seqs, seqs)
def test_levenshtein_matches_bfs(a, b):
    got = kernels.levenshtein(np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64))
    assert got == bfs_edit_distance(a, b, (0, 1, 2))


@settings(max_examples=80, deadline=None)
@given(st.lists(st.integers(0, 3), max_size=7), st.lists(st.integers(0, 3), max_size=7))
def test_lcs_matches_subsequence_enumeration(a, b):
    assert kernels.lcs_length(np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)) == brute_lcs(a, b)


def test_python_bodies_agree_with_compiled(rng):
    a = rng.integers(0, 5, 40).astype(np.int64)
    b = rng.integers(0, 5, 33).astype(np.int64)
    assert kernels.levenshtein(a, b) == python_impl(kernels.levenshtein)(a, b)
    assert kernels.lcs_length(a, b) == python_impl(kernels.lcs_length)(a, b)
    xs = np.array([0.3, 5.0, 19.9, 20.1, 150.0])
    np.testing.assert_allclose(kernels.log_iv_array(3.5, xs, kernels.DEBYE_COEFFS),
                               python_impl(kernels.log_iv_array)(3.5, xs, kernels.DEBYE_COEFFS),
                               rtol=1e-13)


def test_disable_flag_gives_plain_functions():
    code = ("import vgvae.kernels as k; import numpy as np; "
            "print(hasattr(k.levenshtein, 'py_func'), k.levenshtein(np.array([1,2]), np.array([2])))")
    env = dict(os.environ, VGVAE_DISABLE_JIT="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["False", "1"]


def test_debye_coefficients_match_known_polynomials():
    c = kernels.DEBYE_COEFFS
    # u1 = (3t - 5t^3)/24, u2 = (81t^2 - 462t^4 + 385t^6)/1152
    np.testing.assert_allclose(c[1, :4], [0, 3 / 24, 0, -5 / 24])
    np.testing.assert_allclose(c[2, :7], [0, 0, 81 / 1152, 0, -462 / 1152, 0, 385 / 1152])


@pytest.mark.parametrize("order", [0.0, 0.5, 1.0, 4.0, 49.0, 50.0, 99.0])
def test_log_iv_against_high_precision(order):
    cross = max(20.0, 2 * order)
    xs = np.array([1e-3, 0.5, 3.0, cross * 0.999, cross * 1.001, cross + 7, 400.0, 5000.0])
    got = kernels.log_iv_array(order, xs, kernels.DEBYE_COEFFS)
    mpmath.mp.dps = 40
    for x, g in zip(xs, got):
        want = float(mpmath.log(mpmath.besseli(order, x)))
        assert abs(g - want) <= 1e-10 * max(1.0, abs(want)), (order, x, g, want)
