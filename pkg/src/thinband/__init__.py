"""Counting point pairs whose distance falls in a thin band.

Submodules: ``geometry`` (norm bodies), ``pointsets`` (generators),
``paircount`` (band counts), ``lattice`` (lattice points in balls),
``fourier`` (annulus transforms and energies), ``analysis`` (scans and
fits) and ``cli``.
"""

from .errors import InputError, NumericError, ResourceError, ThinbandError
from .geometry import NormBody, equivalence_constants, gauge
from .paircount import (BandCount, BandQuery, count_band_bruteforce, count_band_grid,
                        count_near_integer, theorem_band_width, theorem_bound, trivial_bound)
from .pointsets import PointSet, generate

__version__ = "0.1.0"

__all__ = [
    "BandCount", "BandQuery", "InputError", "NormBody", "NumericError", "PointSet",
    "ResourceError", "ThinbandError", "count_band_bruteforce", "count_band_grid",
    "count_near_integer", "equivalence_constants", "gauge", "generate",
    "theorem_band_width", "theorem_bound", "trivial_bound",
]
