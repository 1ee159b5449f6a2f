"""Hot numeric kernels: string/tree edit distances, LCS, and log-Bessel sums.

Every function here compiles with numba unless ``VGVAE_DISABLE_JIT`` is set,
in which case the identical code runs as plain Python.  Inputs are integer
or float numpy arrays only; symbol interning happens in the callers.
"""
import math
from fractions import Fraction

import numpy as np

from ._jit import njit


@njit
def levenshtein(a, b):
    n, m = a.shape[0], b.shape[0]
    prev = np.arange(m + 1)
    cur = np.zeros(m + 1, dtype=prev.dtype)
    for i in range(1, n + 1):
        cur[0] = i
        for j in range(1, m + 1):
            sub = prev[j - 1] + (0 if a[i - 1] == b[j - 1] else 1)
            ins = cur[j - 1] + 1
            dele = prev[j] + 1
            best = sub
            if ins < best:
                best = ins
            if dele < best:
                best = dele
            cur[j] = best
        for j in range(m + 1):
            prev[j] = cur[j]
    return prev[m]


@njit
def lcs_length(a, b):
    n, m = a.shape[0], b.shape[0]
    prev = np.zeros(m + 1, dtype=np.int64)
    cur = np.zeros(m + 1, dtype=np.int64)
    for i in range(1, n + 1):
        cur[0] = 0
        for j in range(1, m + 1):
            if a[i - 1] == b[j - 1]:
                cur[j] = prev[j - 1] + 1
            elif prev[j] >= cur[j - 1]:
                cur[j] = prev[j]
            else:
                cur[j] = cur[j - 1]
        for j in range(m + 1):
            prev[j] = cur[j]
    return prev[m]


@njit
def zhang_shasha(labels1, lml1, keyroots1, labels2, lml2, keyroots2):
    """Unit-cost ordered tree edit distance.

    Trees arrive in postorder: ``labels`` are interned label ids, ``lml[i]`` is
    the postorder index of the leftmost leaf under node ``i``, and ``keyroots``
    is sorted ascending.
    """
    n1, n2 = labels1.shape[0], labels2.shape[0]
    td = np.zeros((n1, n2), dtype=np.int64)
    fd = np.zeros((n1 + 1, n2 + 1), dtype=np.int64)
    for ii in range(keyroots1.shape[0]):
        i = keyroots1[ii]
        for jj in range(keyroots2.shape[0]):
            j = keyroots2[jj]
            l1 = lml1[i]
            l2 = lml2[j]
            rows = i - l1 + 2
            cols = j - l2 + 2
            ioff = l1 - 1
            joff = l2 - 1
            fd[0, 0] = 0
            for x in range(1, rows):
                fd[x, 0] = fd[x - 1, 0] + 1
            for y in range(1, cols):
                fd[0, y] = fd[0, y - 1] + 1
            for x in range(1, rows):
                xi = x + ioff
                for y in range(1, cols):
                    yj = y + joff
                    dele = fd[x - 1, y] + 1
                    ins = fd[x, y - 1] + 1
                    if lml1[xi] == l1 and lml2[yj] == l2:
                        ren = fd[x - 1, y - 1] + (0 if labels1[xi] == labels2[yj] else 1)
                        best = min(dele, ins, ren)
                        fd[x, y] = best
                        td[xi, yj] = best
                    else:
                        p = lml1[xi] - 1 - ioff
                        q = lml2[yj] - 1 - joff
                        fd[x, y] = min(dele, ins, fd[p, q] + td[xi, yj])
    return td[n1 - 1, n2 - 1]


def _debye_coefficients(n_terms):
    # u_{k+1}(t) = t^2 (1 - t^2) u_k'(t) / 2 + (1/8) * int_0^t (1 - 5 s^2) u_k(s) ds
    polys = [[Fraction(1)]]
    for _ in range(n_terms - 1):
        u = polys[-1]
        nxt = [Fraction(0)] * (len(u) + 3)
        for j, c in enumerate(u):
            if j > 0:
                nxt[j + 1] += Fraction(j, 2) * c
                nxt[j + 3] -= Fraction(j, 2) * c
            nxt[j + 1] += c / 8 / (j + 1)
            nxt[j + 3] -= 5 * c / 8 / (j + 3)
        polys.append(nxt)
    width = max(len(p) for p in polys)
    out = np.zeros((n_terms, width))
    for k, p in enumerate(polys):
        for j, c in enumerate(p):
            out[k, j] = float(c)
    return out


DEBYE_COEFFS = _debye_coefficients(9)


@njit
def log_iv_series(order, x):
    """log I_order(x) by direct power series, summed in log space."""
    step = 2.0 * math.log(0.5 * x)
    t = order * math.log(0.5 * x) - math.lgamma(order + 1.0)
    peak = t
    k = 0
    # terms are unimodal in k; walk past the peak until negligible
    while True:
        t = t + step - math.log(k + 1.0) - math.log(k + order + 1.0)
        k += 1
        if t > peak:
            peak = t
        elif t < peak - 45.0:
            break
    n_terms = k
    t = order * math.log(0.5 * x) - math.lgamma(order + 1.0)
    total = math.exp(t - peak)
    for k in range(n_terms):
        t = t + step - math.log(k + 1.0) - math.log(k + order + 1.0)
        total += math.exp(t - peak)
    return peak + math.log(total)


@njit
def log_iv_uniform(order, x, coeffs):
    """log I_order(x) by the uniform (Debye) large-argument expansion.

    Written in terms of r = sqrt(order^2 + x^2) so that order = 0 is regular.
    """
    r = math.sqrt(order * order + x * x)
    t = order / r
    total = 0.0
    inv_r_k = 1.0
    for k in range(coeffs.shape[0]):
        # u_k(t) / order^k == sum_j c_kj t^(j-k) / r^k   (c_kj = 0 for j < k)
        acc = 0.0
        tp = 1.0
        for j in range(k, coeffs.shape[1]):
            acc += coeffs[k, j] * tp
            tp *= t
        total += acc * inv_r_k
        inv_r_k /= r
    return r + order * math.log(x / (order + r)) - 0.5 * math.log(2.0 * math.pi * r) + math.log(total)


@njit
def log_iv_array(order, xs, coeffs):
    out = np.empty(xs.shape[0])
    cross = max(20.0, 2.0 * order)
    for i in range(xs.shape[0]):
        if xs[i] < cross:
            out[i] = log_iv_series(order, xs[i])
        else:
            out[i] = log_iv_uniform(order, xs[i], coeffs)
    return out
