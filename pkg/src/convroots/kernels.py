"""Kernel backend selection.

The compiled Cython module is used when it imports; otherwise (or when
``CONVROOTS_PURE_PYTHON`` is set) the numpy versions are used. ``BACKEND``
names the active one. Long convolutions always take the numpy path (see
``CONVOLVE_CROSSOVER``). Both backends stay importable for cross-checks.
"""
import os

from . import _kernels_py as numpy_backend

try:
    from . import _kernels as compiled_backend
except ImportError:  # extension not built
    compiled_backend = None

if compiled_backend is not None and not os.environ.get("CONVROOTS_PURE_PYTHON"):
    _active = compiled_backend
    BACKEND = "cython"
else:
    _active = numpy_backend
    BACKEND = "numpy"

# The compiled direct loop wins on short inputs; past this length numpy's
# vectorized convolve is faster, so large products are routed there.
CONVOLVE_CROSSOVER = 320


def convolve_truncated(a, b, n_out):
    """Truncated convolution ``(out, spilled)`` on the faster backend for the size."""
    if _active is numpy_backend or min(len(a), len(b), n_out) >= CONVOLVE_CROSSOVER:
        return numpy_backend.convolve_truncated(a, b, n_out)
    return _active.convolve_truncated(a, b, n_out)


panjer_poisson = _active.panjer_poisson
window_integral = _active.window_integral


def available_backends():
    """Mapping of backend name to module for every importable backend."""
    out = {"numpy": numpy_backend}
    if compiled_backend is not None:
        out["cython"] = compiled_backend
    return out
