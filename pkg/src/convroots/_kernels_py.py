"""Numpy implementations of the compiled kernels (same signatures and semantics)."""
import numpy as np


def convolve_truncated(a, b, n_out):
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if n_out <= 0:
        out = np.zeros(0)
    else:
        # inputs beyond n_out never reach the first n_out outputs
        out = np.convolve(a[:n_out], b[:n_out])[:n_out]
        if out.size < n_out:
            out = np.concatenate([out, np.zeros(n_out - out.size)])
    suffix = np.concatenate([np.cumsum(b[::-1])[::-1], [0.0]])
    idx = np.clip(n_out - np.arange(a.size), 0, b.size)
    spilled = float(np.dot(a, suffix[idx]))
    return out, spilled


def panjer_poisson(f, mu, n_out):
    f = np.ascontiguousarray(f, dtype=np.float64)
    g = np.zeros(n_out)
    if n_out == 0:
        return g
    f0 = f[0] if f.size else 0.0
    g[0] = np.exp(mu * (f0 - 1.0))
    jf = np.arange(f.size) * f
    for n in range(1, n_out):
        hi = min(n, f.size - 1)
        if hi < 1:
            continue
        # sum_{j=1..hi} j f_j g_{n-j}
        g[n] = mu * np.dot(jf[1:hi + 1], g[n - 1::-1][:hi]) / n
    return g


def window_integral(tail, weights, n_points):
    tail = np.asarray(tail, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    J = weights.size
    end = tail[J:J + n_points]
    out = np.zeros(n_points)
    for j in range(J):
        out += weights[j] * (tail[j:j + n_points] - end)
    return out
