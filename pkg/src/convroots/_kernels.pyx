# cython: language_level=3
"""Compiled hot loops: truncated direct convolution, Poisson Panjer recursion,
and the lattice window integral. Signatures mirror ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()


def convolve_truncated(const double[::1] a, const double[::1] b, Py_ssize_t n_out):
    """Direct convolution of ``a`` and ``b`` clipped to ``n_out`` entries.

    Returns ``(out, spilled)`` where ``spilled`` is the mass of all products
    landing at index >= n_out.
    """
    cdef Py_ssize_t la = a.shape[0], lb = b.shape[0]
    cdef Py_ssize_t k, i, lo, hi
    cdef double acc, spilled = 0.0
    out_arr = np.zeros(n_out, dtype=np.float64)
    cdef double[::1] out = out_arr
    suffix_arr = np.zeros(lb + 1, dtype=np.float64)
    cdef double[::1] suffix = suffix_arr
    with nogil:
        for k in range(n_out):
            lo = k - lb + 1
            if lo < 0:
                lo = 0
            hi = k
            if hi > la - 1:
                hi = la - 1
            acc = 0.0
            for i in range(lo, hi + 1):
                acc = acc + a[i] * b[k - i]
            out[k] = acc
        for k in range(lb - 1, -1, -1):
            suffix[k] = suffix[k + 1] + b[k]
        for i in range(la):
            k = n_out - i
            if k <= 0:
                spilled = spilled + a[i] * suffix[0]
            elif k < lb:
                spilled = spilled + a[i] * suffix[k]
    return out_arr, spilled


def panjer_poisson(const double[::1] f, double mu, Py_ssize_t n_out):
    """Compound Poisson masses g[0..n_out-1] for severity masses ``f``.

    ``f`` may be defective (mass beyond the grid); the recursion is exact for
    every in-grid index regardless.
    """
    cdef Py_ssize_t lf = f.shape[0]
    cdef Py_ssize_t n, j, hi
    cdef double acc, f0
    g_arr = np.zeros(n_out, dtype=np.float64)
    cdef double[::1] g = g_arr
    f0 = f[0] if lf > 0 else 0.0
    # the pgf argument is F(z) - 1 with F's full mass 1, so only f0 - 1 enters g0
    g[0] = exp(mu * (f0 - 1.0))
    with nogil:
        for n in range(1, n_out):
            hi = n
            if hi > lf - 1:
                hi = lf - 1
            acc = 0.0
            for j in range(1, hi + 1):
                acc = acc + j * f[j] * g[n - j]
            g[n] = mu * acc / n
    return g_arr


def window_integral(const double[::1] tail, const double[::1] weights, Py_ssize_t n_points):
    """out[i] = sum_j weights[j] * (tail[i + j] - tail[i + J]), J = len(weights).

    ``tail`` must have at least ``n_points + J`` entries.
    """
    cdef Py_ssize_t J = weights.shape[0]
    cdef Py_ssize_t i, j
    cdef double acc, end
    out_arr = np.zeros(n_points, dtype=np.float64)
    cdef double[::1] out = out_arr
    with nogil:
        for i in range(n_points):
            end = tail[i + J]
            acc = 0.0
            for j in range(J):
                acc = acc + weights[j] * (tail[i + j] - end)
            out[i] = acc
    return out_arr
