"""Ordered pair counts in thin distance bands.

Two routes count the same thing: an all-pairs loop (the oracle) and a
cell grid that only visits cell pairs whose displacement box can meet the
band.  Both evaluate membership with :func:`thinband.geometry.gauge_between`,
so their counts agree exactly, not just approximately.
"""

from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import InputError
from .geometry import NormBody, equivalence_constants
from .pointsets import PointSet

log = logging.getLogger(__name__)

THREADS_ENV = "THINBAND_THREADS"
# Dense cell tables are capped at max(GRID_CELLS_PER_POINT * n, GRID_MIN_CELLS).
GRID_CELLS_PER_POINT = 8
GRID_MIN_CELLS = 1 << 22
# The layered dense sweep is used when layers * cells <= DENSE_FILL * n.
DENSE_FILL = 4
_SLACK = 1e-9

_threads = None


def set_threads(count: int | None) -> None:
    """Cap worker threads for counting (``None`` reads ``THINBAND_THREADS``, default 1)."""
    global _threads
    if count is not None and count < 1:
        raise InputError("thread count must be positive")
    _threads = count


def get_threads() -> int:
    if _threads is not None:
        return _threads
    return max(1, int(os.environ.get(THREADS_ENV, "1")))


def _map_chunks(fn, bounds) -> list:
    """``fn(lo, hi)`` over consecutive bounds, on up to :func:`get_threads` threads, in order."""
    threads = get_threads()
    pieces = list(zip(bounds[:-1], bounds[1:]))
    if threads == 1 or len(pieces) == 1:
        return [fn(a, b) for a, b in pieces]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda ab: fn(*ab), pieces))


def _sum_chunks(fn, bounds) -> int:
    return sum(int(v) for v in _map_chunks(fn, bounds))


def _even_bounds(count: int) -> list[int]:
    parts = max(1, min(count, 4 * get_threads()))
    return [round(count * t / parts) for t in range(parts + 1)]


def _triangle_bounds(n: int) -> list[int]:
    """Row bounds giving each chunk about the same number of ``i < j`` pairs."""
    parts = max(1, min(n, 4 * get_threads()))
    return [n - round(n * math.sqrt(1 - t / parts)) for t in range(parts + 1)]


@dataclass(frozen=True)
class BandQuery:
    body: NormBody
    k: float
    delta: float

    def __post_init__(self):
        if not (math.isfinite(self.k) and self.k > 0):
            raise InputError(f"band radius k must be positive, got {self.k!r}")
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise InputError(f"band width delta must be positive, got {self.delta!r}")

    @property
    def upper(self) -> float:
        return self.k + self.delta


@dataclass(frozen=True)
class BandCount:
    count: int
    query: BandQuery
    n: int
    method: str
    elapsed: float

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "unordered": self.count // 2,
            "n": self.n,
            "method": self.method,
            "elapsed": self.elapsed,
            "body": self.query.body.spec(),
            "d": self.query.body.d,
            "k": self.query.k,
            "delta": self.query.delta,
        }


class CellGrid:
    """Points bucketed into a dense array of cubic cells of side ``h``.

    Cell boundaries sit on multiples of ``h``, so unit cells line up with
    the integer lattice.  If the bounding box would need too many cells,
    ``h`` is doubled until it fits; this only costs speed.
    """

    def __init__(self, points: np.ndarray, h: float = 1.0):
        n, d = points.shape
        cap = max(GRID_CELLS_PER_POINT * n, GRID_MIN_CELLS)
        lo, hi = points.min(axis=0), points.max(axis=0)
        while True:
            origin = np.floor(lo / h) * h
            if np.prod(np.floor((hi - origin) / h) + 1) <= cap:
                break
            h *= 2.0
        cells = np.floor((points - origin) / h).astype(np.int64)
        np.maximum(cells, 0, out=cells)
        dims = cells.max(axis=0) + 1
        strides = np.ones(d, dtype=np.int64)
        for c in range(d - 2, -1, -1):
            strides[c] = strides[c + 1] * dims[c + 1]
        lin = cells @ strides
        order = np.argsort(lin, kind="stable")
        lin = lin[order]

        self.h = h
        self.d = d
        self.n = n
        self.dims = dims
        self.strides = strides
        self.total = int(np.prod(dims))
        self.order = order
        self.lin = lin
        self.points = np.ascontiguousarray(points[order])
        self.head = np.searchsorted(lin, np.arange(self.total + 1, dtype=np.int64)).astype(np.int64)
        self.occ_lin, occ_start, counts = np.unique(lin, return_index=True, return_counts=True)
        self.occ_start = occ_start.astype(np.int64)
        self.occ_end = self.occ_start + counts
        self.occ_cells = np.ascontiguousarray(cells[order][self.occ_start])
        self.max_occupancy = int(counts.max())

    @property
    def dense_ok(self) -> bool:
        return self.max_occupancy * self.total <= DENSE_FILL * max(self.n, 1)

    def layers(self) -> np.ndarray:
        """``(K * total, d)`` array: layer ``u`` of cell ``c`` at row ``u * total + c``, NaN if empty."""
        K = self.max_occupancy
        D = np.full((K * self.total, self.d), np.nan)
        rank = np.arange(self.n) - self.head[self.lin]
        D[rank * self.total + self.lin] = self.points
        return D

    def offsets(self, inner: float, outer: float) -> tuple[np.ndarray, np.ndarray]:
        """Nonzero cell offsets, one per +-pair, whose displacement box meets the shell.

        A point in cell ``a`` and one in ``a + o`` differ by a vector whose
        coordinates lie within ``(|o_c| - 1) h`` and ``(|o_c| + 1) h`` in
        absolute value; the Euclidean shell ``inner <= |x| <= outer`` is
        tested against that box, with slack for rounding in cell assignment.
        """
        h = self.h
        r = np.minimum(int(math.ceil(outer / h)) + 1, self.dims - 1)
        axes = [np.arange(-rc, rc + 1, dtype=np.int64) for rc in r]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.d)
        first = np.argmax(grid != 0, axis=1)
        lead = grid[np.arange(len(grid)), first]
        grid = grid[lead > 0]
        a = np.abs(grid).astype(np.float64)
        near = np.sqrt(np.sum((np.maximum(a - 1.0, 0.0) * h) ** 2, axis=1))
        far = np.sqrt(np.sum(((a + 1.0) * h) ** 2, axis=1))
        pad = _SLACK * (1.0 + outer + h)
        keep = (near <= outer + pad) & (far >= inner - pad)
        grid = np.ascontiguousarray(grid[keep])
        return grid, grid @ self.strides

    def runs(self, inner: float, outer: float):
        """Group :meth:`offsets` into runs of consecutive last coordinates.

        Returns ``(prefixes, prefix_lin, zlo, zhi)``: run ``r`` stands for
        the offsets ``(prefixes[r], z)`` with ``zlo[r] <= z <= zhi[r]``.
        """
        offsets, _ = self.offsets(inner, outer)
        d = self.d
        if len(offsets) == 0:
            z = np.empty(0, dtype=np.int64)
            return np.empty((0, d - 1), dtype=np.int64), z, z, z
        offsets = offsets[np.lexsort(offsets.T[::-1])]
        prefix = offsets[:, :-1]
        z = offsets[:, -1]
        new_prefix = np.r_[True, np.any(prefix[1:] != prefix[:-1], axis=1)]
        starts = np.flatnonzero(new_prefix | np.r_[True, np.diff(z) != 1])
        ends = np.r_[starts[1:], len(z)] - 1
        prefixes = np.ascontiguousarray(prefix[starts])
        return prefixes, prefixes @ self.strides[:-1], z[starts].copy(), z[ends].copy()

    def sparse_args(self):
        return (self.points, self.occ_cells, self.occ_lin, self.occ_start,
                self.occ_end, self.head, self.dims)


def _check(P: PointSet, body: NormBody) -> None:
    if P.d != body.d:
        raise InputError(f"point set has d={P.d} but body has d={body.d}")


def _grid_pairs(P: PointSet, body: NormBody, lo: float, hi: float, upper_open: bool) -> int:
    kind, params = body.kernel_args()
    c1, c2 = equivalence_constants(body)
    inner, outer = lo / c2, hi / c1
    grid = CellGrid(P.points, max(1.0, P.separation or 0.0))
    if grid.dense_ok:
        offsets, off_lin = grid.offsets(inner, outer)
        zero = np.zeros((1, P.d), dtype=np.int64)
        offsets = np.vstack([zero, offsets])
        off_lin = np.r_[0, off_lin].astype(np.int64)
        D = grid.layers()
        K = grid.max_occupancy

        def work(a, b):
            return _kernels.band_pairs_dense(D, grid.total, K, grid.dims, grid.strides,
                                             offsets, off_lin, a, b, kind, params, lo, hi,
                                             upper_open)

        return _sum_chunks(work, _even_bounds(len(offsets)))
    runs = grid.runs(inner, outer)
    args = grid.sparse_args()
    same = _kernels.band_pairs_same_cell(grid.points, grid.occ_start, grid.occ_end,
                                         kind, params, lo, hi, upper_open)

    def work(a, b):
        return _kernels.band_pairs_runs(*args, *runs, a, b, kind, params, lo, hi, upper_open)

    return int(same) + _sum_chunks(work, _even_bounds(len(runs[0])))


def band_pairs(P: PointSet, body: NormBody, lo: float, hi: float, *,
               upper_open: bool = False, method: str = "grid") -> int:
    """Ordered pairs with ``lo <= gauge(p - p') <= hi`` (``< hi`` if ``upper_open``).

    Requires ``lo > 0`` so the diagonal never qualifies.
    """
    _check(P, body)
    if not lo > 0:
        raise InputError("band must exclude zero")
    if method not in ("grid", "bruteforce"):
        raise InputError(f"unknown method {method!r}")
    if P.n < 2 or hi < lo:
        return 0
    if method == "grid":
        return 2 * _grid_pairs(P, body, lo, hi, upper_open)
    kind, params = body.kernel_args()
    pts = P.points

    def work(a, b):
        return _kernels.band_pairs_allpairs(pts, a, b, kind, params, lo, hi, upper_open)

    return 2 * _sum_chunks(work, _triangle_bounds(P.n))


def _timed(P: PointSet, q: BandQuery, method: str) -> BandCount:
    t0 = time.perf_counter()
    count = band_pairs(P, q.body, q.k, q.upper, method=method)
    return BandCount(count, q, P.n, method, time.perf_counter() - t0)


def count_band_bruteforce(P: PointSet, q: BandQuery) -> BandCount:
    """Exact ordered count over all pairs; the correctness oracle."""
    return _timed(P, q, "bruteforce")


def count_band_grid(P: PointSet, q: BandQuery) -> BandCount:
    """Ordered count via the cell grid; equal to :func:`count_band_bruteforce`."""
    return _timed(P, q, "grid")


def count_near_integer(P: PointSet, delta: float) -> int:
    """Ordered pairs ``p != p'`` with ``dist(|p - p'|, Z) < delta``."""
    if not (0 < delta < 0.5):
        raise InputError(f"delta must lie in (0, 0.5), got {delta!r}")
    pts, delta = P.points, float(delta)
    return 2 * _sum_chunks(lambda a, b: _kernels.near_integer_pairs(pts, a, b, delta),
                           _triangle_bounds(P.n))


def count_integer_bands(P: PointSet, delta: float, kmin: int = 1) -> int:
    """Ordered pairs in the disjoint bands ``[k - delta, k + delta)``, ``k >= kmin``."""
    if not (0 < delta < 0.5):
        raise InputError(f"delta must lie in (0, 0.5), got {delta!r}")
    if not kmin - delta > 0:
        raise InputError("bands must exclude zero distance")
    pts, delta = P.points, float(delta)
    return 2 * _sum_chunks(lambda a, b: _kernels.integer_band_pairs(pts, a, b, delta, int(kmin)),
                           _triangle_bounds(P.n))


def close_pairs(P: PointSet, radius: float) -> np.ndarray:
    """Rows ``(i, j, distance)``, ``i < j``, for pairs closer than ``radius`` (Euclidean)."""
    if P.n < 2:
        return np.empty((0, 3))
    grid = CellGrid(P.points, radius)
    runs = grid.runs(0.0, radius)
    i, j, r = _kernels.close_pairs_runs(*grid.sparse_args(), *runs, float(radius))
    i, j = grid.order[i], grid.order[j]
    out = np.column_stack([np.minimum(i, j), np.maximum(i, j), r])
    if len(out):
        out = out[np.lexsort((out[:, 1], out[:, 0]))]
    return out


def _check_nd(n, d):
    if n < 1:
        raise InputError(f"n must be positive, got {n!r}")
    if int(d) != d or d < 2:
        raise InputError(f"dimension must be an integer >= 2, got {d!r}")


def theorem_band_width(n: int, d: int) -> float:
    """Band width ``n^(-(d-1)/(d(d+1)))`` of the thin-annulus bound."""
    _check_nd(n, d)
    return n ** (-(d - 1) / (d * (d + 1)))


def theorem_bound(n: int, d: int, k: float) -> float:
    """``n^(2 - 2/(d+1)) * (k / n^(1/d))^((d-1)/2)``, the bound without its constant."""
    _check_nd(n, d)
    if not (1 < k < n ** (1.0 / d)):
        log.info("k=%g outside (1, n^(1/d)=%g); the bound is only claimed inside", k, n ** (1.0 / d))
    return n ** (2 - 2 / (d + 1)) * (k / n ** (1.0 / d)) ** ((d - 1) / 2)


def trivial_bound(n: int, d: int, k: float) -> float:
    """``n * k^(d-1)``: the count any separated set obeys up to a constant."""
    _check_nd(n, d)
    return n * k ** (d - 1)


def interest_threshold_exponent(d: int) -> float:
    if int(d) != d or d < 2:
        raise InputError(f"dimension must be an integer >= 2, got {d!r}")
    return 1 / (d - 1) - 4 / ((d - 1) * (d + 1)) + 1 / (d * (d - 1))


def interest_threshold(n: int, d: int) -> float:
    """The k above which the thin-annulus bound beats :func:`trivial_bound`."""
    return n ** interest_threshold_exponent(d)


