"""Exact counts of integer points in Euclidean balls.

``N_d(R)`` counts ``p`` in Z^d with ``|p|^2 <= R^2``.  Because ``|p|^2`` is
an integer, the test is done against ``floor(R^2)``, which is computed
exactly from the double ``R``; no floating-point boundary cases arise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import InputError, ResourceError
from .pointsets import max_points


@dataclass(frozen=True)
class LatticeShell:
    d: int
    R: float
    N: int
    main_term: float
    discrepancy: float

    def row(self) -> tuple:
        return (self.d, self.R, self.N, self.main_term, self.discrepancy)


def unit_ball_volume(d: int) -> float:
    """Volume of the Euclidean unit ball in R^d."""
    if int(d) != d or d < 1:
        raise InputError(f"dimension must be a positive integer, got {d!r}")
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def _isqrt_array(v: np.ndarray) -> np.ndarray:
    r = np.floor(np.sqrt(v.astype(np.float64))).astype(np.int64)
    # float sqrt can be off by one for large v
    r -= (r * r > v)
    r += ((r + 1) * (r + 1) <= v)
    return r


def _count_2d(M: int) -> int:
    r = math.isqrt(M)
    x = np.arange(-r, r + 1, dtype=np.int64)
    return int(np.sum(2 * _isqrt_array(M - x * x) + 1))


@lru_cache(maxsize=200_000)
def _count(d: int, M: int) -> int:
    """Number of points of Z^d with squared norm <= M."""
    if M < 0:
        return 0
    if d == 1:
        return 2 * math.isqrt(M) + 1
    if d == 2:
        return _count_2d(M)
    r = math.isqrt(M)
    total = _count(d - 1, M)
    for x in range(1, r + 1):
        total += 2 * _count(d - 1, M - x * x)
    return total


def squared_radius_floor(R: float) -> int:
    return math.floor(Fraction(R) ** 2)


def count_ball_lattice(d: int, R: float) -> LatticeShell:
    """Exact ``N_d(R)`` with its main term ``omega_d R^d`` and the discrepancy."""
    if int(d) != d or d < 1:
        raise InputError(f"dimension must be a positive integer, got {d!r}")
    d = int(d)
    R = float(R)
    if not (math.isfinite(R) and R >= 0):
        raise InputError(f"radius must be finite and >= 0, got {R!r}")
    work = (2 * R + 1) ** max(d - 1, 1)
    if work > max_points():
        raise ResourceError(f"counting N_{d}({R}) needs ~{work:.3g} steps, above the cap")
    N = _count(d, squared_radius_floor(R))
    main = unit_ball_volume(d) * R**d
    return LatticeShell(d, R, N, main, N - main)


def shell_count(d: int, R1: float, R2: float) -> int:
    """Lattice points with ``R1 < |p| <= R2``."""
    if not (0 <= R1 <= R2):
        raise InputError(f"need 0 <= R1 <= R2, got R1={R1!r}, R2={R2!r}")
    return count_ball_lattice(d, R2).N - count_ball_lattice(d, R1).N


def discrepancy_exponent(d: int) -> float:
    """Best known exponent for ``|D_d(R)|`` (without the epsilon loss)."""
    if int(d) != d or d < 2:
        raise InputError(f"dimension must be an integer >= 2, got {d!r}")
    if d == 2:
        return 131 / 208
    if d == 3:
        return 21 / 16
    return float(d - 2)
