"""Fourier transforms of Euclidean annuli and of the smoothed point measure.

Transforms use the convention ``f^(xi) = int exp(-2 pi i x.xi) f(x) dx``.
Radial functions are handled through their Hankel form; for d = 2 and
d = 3 the annulus transform has a closed form, and an adaptive
Gauss-Kronrod quadrature of the radial integral serves as an independent
check of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numba
import numpy as np
from scipy import special
from scipy.interpolate import CubicSpline

from .errors import InputError, NumericError
from .paircount import _map_chunks, _triangle_bounds
from .pointsets import PointSet

# --------------------------------------------------------------------------
# cut-off


def _smooth_step(u):
    """C-infinity step: 0 for u <= 0, 1 for u >= 1, ``f(u)/(f(u)+f(1-u))`` with f = exp(-1/u)."""
    u = np.asarray(u, dtype=np.float64)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
        b = np.where(u < 1, np.exp(-1.0 / np.where(u < 1, 1.0 - u, 1.0)), 0.0)
    return a / (a + b)


def cutoff_radial(r):
    """Radial profile of the cut-off: 1 on [0, 1], 0 on [2, inf), smooth and decreasing between."""
    return _smooth_step(2.0 - np.asarray(r, dtype=np.float64))


def cutoff(x) -> float | np.ndarray:
    """Cut-off at a point (or at each row of an ``(m, d)`` array)."""
    x = np.asarray(x, dtype=np.float64)
    r = np.sqrt(np.sum(x * x, axis=-1))
    out = cutoff_radial(r)
    return float(out) if out.ndim == 0 else out


@numba.njit(cache=True, nogil=True)
def _cutoff_radial_scalar(r):
    if r <= 1.0:
        return 1.0
    if r >= 2.0:
        return 0.0
    u = 2.0 - r
    a = math.exp(-1.0 / u)
    b = math.exp(-1.0 / (1.0 - u))
    return a / (a + b)


# --------------------------------------------------------------------------
# annulus transforms


@dataclass(frozen=True)
class AnnulusSpec:
    d: int
    t: float
    width: float

    def __post_init__(self):
        if self.d not in (2, 3):
            raise InputError(f"annulus transforms are available for d = 2, 3; got d={self.d!r}")
        if not self.t > 0:
            raise InputError(f"inner radius must be positive, got {self.t!r}")
        if not self.width > 0:
            raise InputError(f"width must be positive, got {self.width!r}")

    @property
    def outer(self) -> float:
        return self.t + self.width

    def volume(self) -> float:
        if self.d == 2:
            return math.pi * (self.outer**2 - self.t**2)
        return 4.0 * math.pi / 3.0 * (self.outer**3 - self.t**3)


def ball_ft(d: int, R: float, xi_mag: float) -> float:
    """Transform of the indicator of the radius-``R`` ball at ``|xi| = xi_mag``."""
    a = 2.0 * math.pi * R * xi_mag
    if d == 2:
        shape = 1.0 if a == 0 else 2.0 * special.j1(a) / a
        return math.pi * R * R * shape
    if d == 3:
        if a < 1e-2:
            a2 = a * a
            shape = 1.0 - a2 / 10.0 + a2 * a2 / 280.0 - a2 * a2 * a2 / 15120.0
        else:
            shape = 3.0 * (math.sin(a) - a * math.cos(a)) / a**3
        return 4.0 * math.pi / 3.0 * R**3 * shape
    raise InputError(f"closed-form ball transform needs d = 2 or 3, got {d!r}")


def annulus_ft(spec: AnnulusSpec, xi_mag: float) -> float:
    """Transform of the annulus indicator as a difference of two ball transforms."""
    if xi_mag < 0:
        raise InputError("frequency magnitude must be nonnegative")
    if xi_mag == 0:
        return spec.volume()
    return ball_ft(spec.d, spec.outer, xi_mag) - ball_ft(spec.d, spec.t, xi_mag)


def _radial_integrand(d: int, xi_mag: float):
    if d == 2:
        if xi_mag == 0:
            return lambda r: 2.0 * np.pi * r
        w = 2.0 * np.pi * xi_mag
        return lambda r: 2.0 * np.pi * r * special.j0(w * r)
    if xi_mag == 0:
        return lambda r: 4.0 * np.pi * r * r
    w = 2.0 * np.pi * xi_mag
    return lambda r: (2.0 / xi_mag) * r * np.sin(w * r)


# Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
_XK = np.array([
    -0.991455371120812639206854697526329, -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926, -0.741531185599394439863864773280788,
    -0.586087235467691130294144845693013, -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245, 0.0,
    0.207784955007898467600689403773245, 0.405845151377397166906606412076961,
    0.586087235467691130294144845693013, 0.741531185599394439863864773280788,
    0.864864423359769072789712788640926, 0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
])
_WK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
    0.204432940075298892414161999234649, 0.190350578064785409913256402421014,
    0.169004726639267902826583426598550, 0.140653259715525918745189590510238,
    0.104790010322250183839876322541518, 0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
    0.381830050505118944950369775488975, 0.279705391489276667901467771423780,
    0.129484966168869693270611432679082,
])


def gauss_kronrod(f, a: float, b: float, *, rtol: float = 1e-10, pieces: int = 1,
                  max_intervals: int = 200_000) -> tuple[float, float]:
    """Adaptive G7/K15 quadrature of a vectorized ``f`` over ``[a, b]``.

    The interval is first cut into ``pieces`` equal parts; any part whose
    Kronrod-Gauss difference exceeds its share of ``rtol * int |f|`` is
    bisected.  Parts whose difference is already at the roundoff level of
    their own integrand are accepted.  Returns ``(value, error_estimate)``.
    """
    edges = np.linspace(a, b, max(1, int(pieces)) + 1)
    lo, hi = edges[:-1], edges[1:]
    done_val = 0.0
    done_err = 0.0
    scale = None
    total_len = b - a
    while len(lo):
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        fx = f(mid[:, None] + half[:, None] * _XK[None, :])
        kron = half * (fx @ _WK)
        gauss = half * (fx[:, 1::2] @ _WG)
        err = np.abs(kron - gauss)
        if scale is None:
            scale = float(np.sum(half * (np.abs(fx) @ _WK)))
            scale = scale if scale > 0 else 1.0
        allowed = rtol * scale * (2.0 * half) / total_len
        roundoff = 50.0 * np.finfo(float).eps * half * (np.abs(fx) @ _WK)
        ok = (err <= np.maximum(allowed, roundoff)) | (half <= 1e-15 * max(abs(a), abs(b), 1.0))
        done_val += float(np.sum(kron[ok]))
        done_err += float(np.sum(err[ok]))
        lo, hi, mid = lo[~ok], hi[~ok], mid[~ok]
        if len(lo) == 0:
            break
        if 2 * len(lo) > max_intervals:
            raise NumericError(
                f"quadrature did not converge on [{a}, {b}]: {len(lo)} intervals still "
                f"above tolerance, accumulated error {done_err:.3g}, scale {scale:.3g}"
            )
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
    return done_val, done_err


def annulus_ft_quadrature(spec: AnnulusSpec, xi_mag: float, rtol: float = 1e-10) -> float:
    """Annulus transform by adaptive quadrature of its radial Hankel integral.

    The radial interval starts split into quarter periods of the
    oscillating kernel; ``rtol`` is relative to ``int |integrand|``.
    """
    if xi_mag < 0:
        raise InputError("frequency magnitude must be nonnegative")
    f = _radial_integrand(spec.d, xi_mag)
    pieces = max(1, math.ceil(4.0 * xi_mag * spec.width))
    value, _ = gauss_kronrod(f, spec.t, spec.outer, rtol=rtol, pieces=pieces)
    return value


def decay_bound(spec: AnnulusSpec, xi_mag: float) -> float:
    """``t^((d-1)/2) |xi|^(-(d-1)/2) min(width, 1/|xi|)``."""
    if not xi_mag > 0:
        raise InputError("decay bound needs a positive frequency")
    e = (spec.d - 1) / 2
    return spec.t**e * xi_mag**-e * min(spec.width, 1.0 / xi_mag)


DECAY_TS = (1.0, 2.0, 4.0, 8.0)
DECAY_WIDTHS = (0.2, 0.1, 0.05)
DECAY_XIS = tuple(2.0**j for j in range(13))


def decay_grid(ds=(2, 3), ts=DECAY_TS, widths=DECAY_WIDTHS, xis=DECAY_XIS) -> list[dict]:
    """Closed form, quadrature and bound on every grid point, sorted by (d, t, width, xi)."""
    rows = []
    for d in ds:
        for t in ts:
            for w in widths:
                spec = AnnulusSpec(d, t, w)
                for xi in xis:
                    ft = annulus_ft(spec, xi)
                    quad = annulus_ft_quadrature(spec, xi)
                    bound = decay_bound(spec, xi)
                    rows.append({
                        "d": d, "t": t, "width": w, "xi_mag": xi, "ft": ft,
                        "quadrature": quad, "bound": bound, "ratio": abs(ft) / bound,
                        "rel_err": abs(ft - quad) / abs(quad) if quad else abs(ft),
                    })
    return rows


def empirical_constant(rows) -> float:
    return max(r["ratio"] for r in rows)


def half_grid_constants(rows, seed: int = 0, random_halves: int = 16) -> dict:
    """Empirical constants on halves of the grid, keyed by a label for the half.

    Halves split each parameter at its middle (and d=2 against d=3), plus
    ``random_halves`` random balanced splits.
    """
    def split(key, pred):
        a = [r for r in rows if pred(r)]
        b = [r for r in rows if not pred(r)]
        out = {}
        if a and b:
            out[f"{key}:low"] = empirical_constant(a)
            out[f"{key}:high"] = empirical_constant(b)
        return out

    halves = {}
    for key in ("t", "width", "xi_mag"):
        values = sorted({r[key] for r in rows})
        cut = values[len(values) // 2]
        halves.update(split(key, lambda r, k=key, c=cut: r[k] < c))
    halves.update(split("d", lambda r: r["d"] == 2))
    rng = np.random.default_rng(seed)
    for i in range(random_halves):
        pick = set(rng.permutation(len(rows))[: len(rows) // 2].tolist())
        halves[f"random{i}:a"] = empirical_constant([r for j, r in enumerate(rows) if j in pick])
        halves[f"random{i}:b"] = empirical_constant([r for j, r in enumerate(rows) if j not in pick])
    return halves


# --------------------------------------------------------------------------
# smoothed point measure


@dataclass(frozen=True)
class MeasureParams:
    q: int
    s: float
    cutoff: str = "exp-step"

    def check(self, d: int, s_min: float | None = None) -> None:
        """Validate for dimension ``d``; ``s`` must lie in ``(s_min, d)``, ``s_min`` defaulting to d/2."""
        if int(self.q) != self.q or self.q < 1:
            raise InputError(f"q must be a positive integer, got {self.q!r}")
        lo = d / 2 if s_min is None else s_min
        if not (lo < self.s < d):
            raise InputError(f"s must lie in ({lo}, {d}), got {self.s!r}")
        if self.cutoff != "exp-step":
            raise InputError(f"unknown cut-off profile {self.cutoff!r}")


def default_exponent(d: int) -> float:
    """The critical energy exponent (d + 1) / 2."""
    return (d + 1) / 2


@numba.njit(cache=True, nogil=True, inline="always")
def _inverse_power(r2, s, whole, half):
    # r^-s from r^2; when 2s is an integer this avoids pow so the loop vectorizes
    if whole < 0:
        return r2 ** (-0.5 * s)
    inv = 1.0 / math.sqrt(r2)
    out = 1.0
    for _ in range(whole):
        out *= inv
    if half:
        out *= math.sqrt(inv)
    return out


# reassociation lets the row sums vectorize; results can move in the last bits only
@numba.njit(cache=True, nogil=True, fastmath={"reassoc", "nsz", "contract"})
def _weighted_riesz(pts, w, s, whole, half, i0, i1):
    n = pts.shape[0]
    d = pts.shape[1]
    total = 0.0
    for i in range(i0, i1):
        row = 0.0
        if d == 2:
            x0 = pts[i, 0]
            x1 = pts[i, 1]
            for j in range(i + 1, n):
                t0 = x0 - pts[j, 0]
                t1 = x1 - pts[j, 1]
                row += w[j] * _inverse_power(t0 * t0 + t1 * t1, s, whole, half)
        else:
            for j in range(i + 1, n):
                r2 = 0.0
                for c in range(d):
                    t = pts[i, c] - pts[j, c]
                    r2 += t * t
                row += w[j] * _inverse_power(r2, s, whole, half)
        total += w[i] * row
    return total


def discrete_energy(P: PointSet, params: MeasureParams) -> float:
    """``q^(s - 2d) * sum over ordered p != p' of phi(p/q) phi(p'/q) |p - p'|^(-s)``.

    The finite sum is defined for any ``0 < s < d``, so the lower end of the
    measure's exponent range is not enforced here.
    """
    d = P.d
    params.check(d, s_min=0.0)
    if P.separation is not None and P.separation <= 0:
        raise InputError("energy needs a positively separated set")
    q = float(params.q)
    w = cutoff_radial(np.sqrt(np.sum((P.points / q) ** 2, axis=1)))
    keep = w > 0
    pts = np.ascontiguousarray(P.points[keep])
    if len(pts) < 2:
        return 0.0
    w = np.ascontiguousarray(w[keep])
    whole, half = -1, False
    if float(2 * params.s).is_integer():
        whole, half = int(params.s), bool(int(2 * params.s) % 2)
    s_ = float(params.s)
    bounds = _triangle_bounds(len(pts))
    try:
        chunks = _map_chunks(lambda a, b: _weighted_riesz(pts, w, s_, whole, half, a, b), bounds)
    except ZeroDivisionError:
        raise NumericError("energy is not finite; the set has coincident points") from None
    out = q ** (params.s - 2 * d) * 2.0 * math.fsum(chunks)
    if not math.isfinite(out):
        raise NumericError("energy is not finite; the set has coincident points")
    return out


_GL_NODES = 384
_CACHE_RHO_MAX = 16.0
_CACHE_STEP = 1.0 / 1024


def _cutoff_ft_direct(d: int, rho: np.ndarray, nodes: int = _GL_NODES) -> np.ndarray:
    """Radial transform of the cut-off by Gauss-Legendre on [0, 1] and [1, 2]."""
    x, wts = np.polynomial.legendre.leggauss(nodes)
    r = np.concatenate([0.5 * (x + 1.0), 1.5 + 0.5 * x])
    wr = np.concatenate([0.5 * wts, 0.5 * wts]) * cutoff_radial(r)
    rho = np.atleast_1d(np.asarray(rho, dtype=np.float64))
    out = np.empty_like(rho)
    zero = rho == 0
    sphere = 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)
    out[zero] = sphere * np.sum(wr * r ** (d - 1))
    rz = rho[~zero]
    if len(rz):
        nu = d / 2 - 1
        kern = special.jv(nu, 2.0 * np.pi * rz[:, None] * r[None, :]) * r[None, :] ** (d / 2)
        out[~zero] = 2.0 * np.pi * rz ** (1 - d / 2) * (kern @ wr)
    return out


@lru_cache(maxsize=8)
def _cutoff_ft_spline(d: int) -> CubicSpline:
    grid = np.arange(0.0, _CACHE_RHO_MAX + _CACHE_STEP / 2, _CACHE_STEP)
    vals = np.concatenate([_cutoff_ft_direct(d, chunk) for chunk in np.array_split(grid, 64)])
    return CubicSpline(grid, vals)


def cutoff_ft(d: int, rho) -> np.ndarray:
    """Transform of the cut-off at frequency magnitudes ``rho`` (cached spline below 16)."""
    rho = np.abs(np.atleast_1d(np.asarray(rho, dtype=np.float64)))
    out = np.empty_like(rho)
    inside = rho <= _CACHE_RHO_MAX
    if inside.any():
        out[inside] = _cutoff_ft_spline(d)(rho[inside])
    if (~inside).any():
        nodes = int(max(_GL_NODES, 8 * rho[~inside].max()))
        out[~inside] = _cutoff_ft_direct(d, rho[~inside], nodes)
    return out


def measure_ft(P: PointSet, params: MeasureParams, xi) -> complex | np.ndarray:
    """Transform of the smoothed measure at ``xi`` (a d-vector or an ``(m, d)`` array).

    ``q^-d * phi^(q^(-d/s) xi) * sum_p phi(p/q) exp(-2 pi i (p/q).xi)``.
    """
    d = P.d
    params.check(d)
    xi = np.asarray(xi, dtype=np.float64)
    single = xi.ndim == 1
    xi = np.atleast_2d(xi)
    if xi.shape[1] != d:
        raise InputError(f"frequency must have {d} coordinates")
    q = float(params.q)
    scaled = P.points / q
    w = cutoff_radial(np.sqrt(np.sum(scaled**2, axis=1)))
    keep = w > 0
    scaled, w = scaled[keep], w[keep]
    out = np.empty(len(xi), dtype=np.complex128)
    for start in range(0, len(xi), 256):
        block = xi[start:start + 256]
        phase = np.exp(-2j * np.pi * (block @ scaled.T))
        out[start:start + 256] = phase @ w
    mags = np.sqrt(np.sum(xi * xi, axis=1)) * q ** (-d / params.s)
    out *= q ** (-d) * cutoff_ft(d, mags)
    return complex(out[0]) if single else out


def chained_estimate_report(P: PointSet, params: MeasureParams, t: float,
                            xi_max: float = 32.0, step: float = 0.25) -> dict:
    """Truncated frequency integral of ``|mu^|^2 * annulus^`` against ``t^((d-1)/2) * width``.

    ``width`` is ``q^(-d/s)``.  Only d = 2 is supported; the integral is a
    Riemann sum over the square ``[-xi_max, xi_max]^2``.  The result is a
    report, not a check: truncation error is not controlled.
    """
    if P.d != 2:
        raise InputError("chained estimate report is implemented for d = 2")
    params.check(2)
    width = params.q ** (-2 / params.s)
    spec = AnnulusSpec(2, t, width)
    axis = np.arange(-xi_max, xi_max + step / 2, step)
    gx, gy = np.meshgrid(axis, axis, indexing="ij")
    xi = np.column_stack([gx.ravel(), gy.ravel()])
    mu = measure_ft(P, params, xi)
    mags = np.sqrt(np.sum(xi * xi, axis=1))
    ann = np.array([annulus_ft(spec, m) for m in mags])
    integral = float(np.sum(np.abs(mu) ** 2 * ann) * step * step)
    reference = t ** 0.5 * width
    return {
        "d": 2, "q": params.q, "s": params.s, "t": t, "width": width,
        "xi_max": xi_max, "step": step, "integral": integral,
        "reference": reference, "ratio": integral / reference,
    }
