"""Compiled pair loops.

Every distance test goes through ``gauge_between``.  Kernels release the
GIL and take a slice of their outer loop so callers can split work across
threads; the integer results are summed, so the split never changes them.
"""

import math

import numba
import numpy as np

from .geometry import EUCLIDEAN, gauge_between


@numba.njit(cache=True, nogil=True, inline="always")
def _in_band(g, lo, hi, upper_open):
    if upper_open:
        return (g >= lo) & (g < hi)
    return (g >= lo) & (g <= hi)


@numba.njit(cache=True, nogil=True)
def band_pairs_allpairs(pts, i0, i1, kind, params, lo, hi, upper_open):
    """Unordered pairs ``i < j`` with ``i0 <= i < i1`` whose gauge lies in the band."""
    n = pts.shape[0]
    total = 0
    for i in range(i0, i1):
        for j in range(i + 1, n):
            total += _in_band(gauge_between(kind, params, pts, i, pts, j), lo, hi, upper_open)
    return total


@numba.njit(cache=True, nogil=True)
def band_pairs_dense(D, total, K, dims, strides, offsets, off_lin, k0, k1,
                     kind, params, lo, hi, upper_open):
    """In-band pairs between cells ``a`` and ``a + offsets[kk]`` for ``k0 <= kk < k1``.

    ``D`` holds ``K`` layers of ``total`` cells each; layer ``u`` of cell
    ``c`` is row ``u * total + c`` and empty slots are NaN, which never
    passes a band test.  The zero offset may appear; it then counts only
    layer pairs ``u < v``.
    """
    d = dims.shape[0]
    last = d - 1
    acc = 0
    lo_c = np.empty(d, np.int64)
    hi_c = np.empty(d, np.int64)
    idx = np.empty(d, np.int64)
    for kk in range(k0, k1):
        zero = True
        empty = False
        for c in range(d):
            o = offsets[kk, c]
            if o != 0:
                zero = False
            lo_c[c] = max(0, -o)
            hi_c[c] = min(dims[c], dims[c] - o)
            if lo_c[c] >= hi_c[c]:
                empty = True
        if empty:
            continue
        for c in range(last):
            idx[c] = lo_c[c]
        shift = off_lin[kk]
        while True:
            base = 0
            for c in range(last):
                base += idx[c] * strides[c]
            for u in range(K):
                for v in range(K):
                    if zero and v <= u:
                        continue
                    sa = u * total + base
                    sb = v * total + base + shift
                    for x in range(lo_c[last], hi_c[last]):
                        g = gauge_between(kind, params, D, sa + x, D, sb + x)
                        acc += _in_band(g, lo, hi, upper_open)
            c = last - 1
            while c >= 0:
                idx[c] += 1
                if idx[c] < hi_c[c]:
                    break
                idx[c] = lo_c[c]
                c -= 1
            if c < 0:
                break
    return acc


@numba.njit(cache=True, nogil=True)
def band_pairs_same_cell(pts, occ_start, occ_end, kind, params, lo, hi, upper_open):
    """In-band pairs of points sharing a cell."""
    acc = 0
    for a in range(occ_start.shape[0]):
        e = occ_end[a]
        for i in range(occ_start[a], e):
            for j in range(i + 1, e):
                acc += _in_band(gauge_between(kind, params, pts, i, pts, j), lo, hi, upper_open)
    return acc


@numba.njit(cache=True, nogil=True)
def band_pairs_runs(pts, occ_cells, occ_lin, occ_start, occ_end, head, dims,
                    prefixes, prefix_lin, zlo, zhi, r0, r1, kind, params, lo, hi, upper_open):
    """In-band pairs between occupied cells and runs ``r0 <= r < r1`` of target cells.

    ``pts`` is sorted by cell in row-major order, so cells that differ only
    in the last coordinate hold contiguous points; ``head[c]:head[c+1]``
    indexes the points of dense cell ``c``.  Run ``r`` pairs cell ``a`` with
    cells ``a + (prefixes[r], z)`` for ``zlo[r] <= z <= zhi[r]``.
    """
    m = occ_lin.shape[0]
    last = pts.shape[1] - 1
    zdim = dims[last]
    acc = 0
    for r in range(r0, r1):
        for a in range(m):
            ok = True
            for c in range(last):
                t = occ_cells[a, c] + prefixes[r, c]
                if t < 0 or t >= dims[c]:
                    ok = False
                    break
            if not ok:
                continue
            za = occ_cells[a, last]
            z0 = max(za + zlo[r], 0)
            z1 = min(za + zhi[r], zdim - 1)
            if z0 > z1:
                continue
            row = occ_lin[a] + prefix_lin[r] - za
            js = head[row + z0]
            je = head[row + z1 + 1]
            for i in range(occ_start[a], occ_end[a]):
                for j in range(js, je):
                    acc += _in_band(gauge_between(kind, params, pts, i, pts, j), lo, hi, upper_open)
    return acc


@numba.njit(cache=True, nogil=True)
def near_integer_pairs(pts, i0, i1, delta):
    """Unordered pairs (rows ``i0 <= i < i1``) with ``dist(|p - p'|, Z) < delta``."""
    n = pts.shape[0]
    unused = np.zeros(1)
    acc = 0
    for i in range(i0, i1):
        for j in range(i + 1, n):
            r = gauge_between(EUCLIDEAN, unused, pts, i, pts, j)
            acc += abs(r - math.floor(r + 0.5)) < delta
    return acc


@numba.njit(cache=True, nogil=True)
def integer_band_pairs(pts, i0, i1, delta, kmin):
    """Unordered pairs with ``k - delta <= |p - p'| < k + delta`` for an integer ``k >= kmin``.

    Band ends are the doubles ``float(k) - delta`` and ``float(k) + delta``,
    exactly what a per-band count with those ends would compare against.
    """
    n = pts.shape[0]
    unused = np.zeros(1)
    acc = 0
    for i in range(i0, i1):
        for j in range(i + 1, n):
            r = gauge_between(EUCLIDEAN, unused, pts, i, pts, j)
            k0 = math.floor(r + 0.5)
            for k in range(k0 - 1, k0 + 2):
                if k < kmin:
                    continue
                kf = float(k)
                if kf - delta <= r and r < kf + delta:
                    acc += 1
                    break
    return acc


@numba.njit(cache=True, nogil=True)
def close_pairs_runs(pts, occ_cells, occ_lin, occ_start, occ_end, head, dims,
                     prefixes, prefix_lin, zlo, zhi, radius):
    """Unordered pairs (sorted-order indices) at Euclidean distance below ``radius``."""
    m = occ_lin.shape[0]
    last = pts.shape[1] - 1
    unused = np.zeros(1)
    out_i = [0]
    out_j = [0]
    out_r = [0.0]
    for a in range(m):
        e = occ_end[a]
        for i in range(occ_start[a], e):
            for j in range(i + 1, e):
                r = gauge_between(EUCLIDEAN, unused, pts, i, pts, j)
                if r < radius:
                    out_i.append(i)
                    out_j.append(j)
                    out_r.append(r)
    for run in range(prefixes.shape[0]):
        for a in range(m):
            ok = True
            for c in range(last):
                t = occ_cells[a, c] + prefixes[run, c]
                if t < 0 or t >= dims[c]:
                    ok = False
                    break
            if not ok:
                continue
            za = occ_cells[a, last]
            z0 = max(za + zlo[run], 0)
            z1 = min(za + zhi[run], dims[last] - 1)
            if z0 > z1:
                continue
            row = occ_lin[a] + prefix_lin[run] - za
            for i in range(occ_start[a], occ_end[a]):
                for j in range(head[row + z0], head[row + z1 + 1]):
                    r = gauge_between(EUCLIDEAN, unused, pts, i, pts, j)
                    if r < radius:
                        out_i.append(i)
                        out_j.append(j)
                        out_r.append(r)
    return (np.array(out_i[1:], dtype=np.int64), np.array(out_j[1:], dtype=np.int64),
            np.array(out_r[1:]))
