"""Lattice toolkit for convolution-root questions about heavy-tailed laws.

Distributions live on ``{0, h, ..., Nh}`` as :class:`TailGrid` values with an
explicit beyond-grid residual. On top of that sit exact convolutions,
truncated compound sums, Esscher tilts, and class diagnostics that turn
tail ratios into three-valued verdicts.
"""
from .lattice import (EsscherError, GammaMoment, LatticeError, TailGrid, build_lattice, esscher,
                      gamma_moment, point_mass, tail_at, window_mass)
from .convolution import (CompoundResult, CountingPmf, LevySpectrum, compound,
                          compound_poisson_panjer, convolve, degenerate_pmf, explicit_pmf,
                          geometric_pmf, id_compose, levy_to_spectral, nfold, poisson_pmf)
from .families import (Example61Params, example61_grid, example61_shift_ratio, example61_tail,
                       standard_families, tilt_tail)

__version__ = "0.1.0"

__all__ = [
    "TailGrid", "GammaMoment", "LatticeError", "EsscherError", "build_lattice", "tail_at",
    "window_mass", "gamma_moment", "esscher", "point_mass",
    "CountingPmf", "CompoundResult", "LevySpectrum", "convolve", "nfold", "compound",
    "compound_poisson_panjer", "poisson_pmf", "geometric_pmf", "explicit_pmf", "degenerate_pmf",
    "levy_to_spectral", "id_compose",
    "Example61Params", "example61_tail", "example61_grid", "example61_shift_ratio",
    "tilt_tail", "standard_families",
]
