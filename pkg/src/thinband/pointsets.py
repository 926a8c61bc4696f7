"""Point-set families: lattice cubes, lattice balls, jittered sets, Lens.

A :class:`PointSet` stores its coordinates as a read-only ``(n, d)``
float64 array together with where it came from.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InputError, ResourceError

DEFAULT_MAX_POINTS = 10**8
MAX_POINTS_ENV = "THINBAND_MAX_POINTS"
DEFAULT_MARGIN = 0.1


def max_points() -> int:
    """Size cap for generated sets, overridable via ``THINBAND_MAX_POINTS``."""
    raw = os.environ.get(MAX_POINTS_ENV)
    if raw is None:
        return DEFAULT_MAX_POINTS
    try:
        cap = int(float(raw))
    except ValueError:
        raise InputError(f"{MAX_POINTS_ENV} must be a number, got {raw!r}") from None
    if cap < 1:
        raise InputError(f"{MAX_POINTS_ENV} must be positive")
    return cap


def _check_budget(count: int, what: str) -> None:
    cap = max_points()
    if count > cap:
        raise ResourceError(f"{what} needs {count} points, above the cap of {cap}")


def _check_dim(d) -> int:
    if int(d) != d or d < 2:
        raise InputError(f"dimension must be an integer >= 2, got {d!r}")
    return int(d)


@dataclass(frozen=True, eq=False)
class PointSet:
    points: np.ndarray
    generator: str = "user"
    params: dict = field(default_factory=dict)
    seed: int | None = None
    separation: float | None = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64, copy=True)
        if pts.ndim != 2 or pts.shape[1] < 2:
            raise InputError(f"points must have shape (n, d) with d >= 2, got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InputError("points contain non-finite coordinates")
        pts = np.ascontiguousarray(pts)
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def provenance(self) -> dict:
        return {"generator": self.generator, "params": dict(self.params), "seed": self.seed}

    def shifted(self, offset) -> "PointSet":
        offset = np.asarray(offset, dtype=np.float64)
        return PointSet(
            self.points + offset,
            generator=self.generator,
            params={**self.params, "shift": offset.tolist()},
            seed=self.seed,
            separation=self.separation,
        )

    def subsample(self, size: int, seed: int) -> "PointSet":
        """Random subset of ``size`` distinct points, order preserved."""
        if size >= self.n:
            return self
        rng = np.random.default_rng(seed)
        idx = np.sort(rng.choice(self.n, size=size, replace=False))
        return PointSet(
            self.points[idx],
            generator=self.generator,
            params={**self.params, "subsample": size},
            seed=seed,
            separation=self.separation,
        )

    def __len__(self):
        return self.n


def gen_lattice_cube(d: int, m: int) -> PointSet:
    """All integer points of ``[0, m)^d``."""
    d = _check_dim(d)
    if int(m) != m or m < 1:
        raise InputError(f"side m must be a positive integer, got {m!r}")
    m = int(m)
    _check_budget(m**d, "lattice cube")
    axes = np.meshgrid(*([np.arange(m, dtype=np.float64)] * d), indexing="ij")
    pts = np.stack([a.ravel() for a in axes], axis=1)
    return PointSet(pts, "lattice-cube", {"d": d, "m": m}, separation=1.0)


def _exact_square_floor(R: float) -> int:
    """floor(R**2) computed exactly for a double ``R``."""
    return math.floor(Fraction(R) ** 2)


def gen_lattice_ball(d: int, R: float) -> PointSet:
    """All integer points ``p`` with ``|p| <= R``, ordered lexicographically."""
    from .lattice import count_ball_lattice

    d = _check_dim(d)
    R = float(R)
    if not (math.isfinite(R) and R > 0):
        raise InputError(f"radius must be positive and finite, got {R!r}")
    n = count_ball_lattice(d, R).N
    _check_budget(n, "lattice ball")
    M = _exact_square_floor(R)
    pts = _ball_points(d, M)
    return PointSet(pts, "lattice-ball", {"d": d, "R": R}, separation=1.0)


def _ball_points(d: int, M: int) -> np.ndarray:
    # integer points with squared norm <= M, built one leading coordinate at a time
    if d == 1:
        r = math.isqrt(M)
        return np.arange(-r, r + 1, dtype=np.float64)[:, None]
    r = math.isqrt(M)
    blocks = []
    for x in range(-r, r + 1):
        rest = _ball_points(d - 1, M - x * x)
        lead = np.full((rest.shape[0], 1), float(x))
        blocks.append(np.hstack([lead, rest]))
    return np.vstack(blocks)


def gen_jittered(d: int, m: int, seed: int, margin: float = DEFAULT_MARGIN) -> PointSet:
    """One uniform point per unit cell of ``[0, m)^d``, kept ``margin`` from the cell walls.

    Points in different cells are at least ``2*margin`` apart.
    """
    d = _check_dim(d)
    if int(m) != m or m < 1:
        raise InputError(f"side m must be a positive integer, got {m!r}")
    if not (0 < margin < 0.5):
        raise InputError(f"margin must lie in (0, 0.5), got {margin!r}")
    m = int(m)
    _check_budget(m**d, "jittered set")
    base = gen_lattice_cube(d, m).points
    rng = np.random.default_rng(seed)
    jitter = rng.uniform(margin, 1.0 - margin, size=base.shape)
    return PointSet(
        base + jitter,
        "jittered",
        {"d": d, "m": m, "margin": margin},
        seed=seed,
        separation=2.0 * margin,
    )


def gen_lens(n: int) -> PointSet:
    """The Lens configuration in R^4.

    ``n/2`` equally spaced points on each of two orthogonal circles of
    radius ``1/sqrt(2)``; every point of one circle is at distance 1 from
    every point of the other.
    """
    if int(n) != n or n < 2 or n % 2:
        raise InputError(f"Lens size must be an even integer >= 2, got {n!r}")
    n = int(n)
    _check_budget(n, "lens")
    h = n // 2
    theta = 2.0 * np.pi * np.arange(h) / h
    r = 1.0 / math.sqrt(2.0)
    pts = np.zeros((n, 4))
    pts[:h, 0] = r * np.cos(theta)
    pts[:h, 1] = r * np.sin(theta)
    pts[h:, 2] = r * np.cos(theta)
    pts[h:, 3] = r * np.sin(theta)
    sep = math.sqrt(2.0) * math.sin(math.pi / h) if h > 1 else 1.0
    return PointSet(pts, "lens", {"n": n}, separation=min(sep, 1.0))


@dataclass
class ValidationReport:
    ok: bool
    violations: list

    def to_dict(self) -> dict:
        return {"ok": self.ok, "violations": self.violations}


def validate_well_distributed(P: PointSet, c: float, max_listed: int = 100) -> ValidationReport:
    """Check separation ``>= c`` and one point per unit cell of ``[0, ceil(n^(1/d)))^d``.

    The check is literal: sets are not recentred.  At most ``max_listed``
    violations of each kind are listed; ``ok`` reflects all of them.
    """
    from .paircount import close_pairs

    if P.n == 0:
        raise InputError("empty point set")
    if c <= 0:
        raise InputError("separation constant must be positive")
    violations = []
    ok = True

    close = close_pairs(P, c)
    if len(close):
        ok = False
        for i, j, dist in close[:max_listed]:
            violations.append({"kind": "separation", "pair": [int(i), int(j)], "distance": float(dist)})

    m = _int_root_ceil(P.n, P.d)
    cells = np.floor(P.points).astype(np.int64)
    inside = np.all((cells >= 0) & (cells < m), axis=1)
    for i in np.flatnonzero(~inside)[:max_listed]:
        violations.append({"kind": "outside", "point": int(i), "coords": P.points[i].tolist()})
    lin = np.ravel_multi_index(cells[inside].T, (m,) * P.d) if inside.any() else np.array([], dtype=np.int64)
    occupancy = np.bincount(lin, minlength=m**P.d)
    bad = np.flatnonzero(occupancy != 1)
    if len(bad):
        ok = False
        for cell in bad[:max_listed]:
            idx = np.unravel_index(cell, (m,) * P.d)
            violations.append(
                {"kind": "cell", "cell": [int(v) for v in idx], "occupancy": int(occupancy[cell])}
            )
    return ValidationReport(ok, violations)


def _int_root_ceil(n: int, d: int) -> int:
    """Smallest integer m with m**d >= n."""
    m = max(1, int(round(n ** (1.0 / d))))
    while m**d < n:
        m += 1
    while m > 1 and (m - 1) ** d >= n:
        m -= 1
    return m


FAMILIES = ("lattice-cube", "lattice-ball", "jittered", "lens")


def generate(family: str, d: int = 2, *, m: int | None = None, R: float | None = None,
             n: int | None = None, seed: int = 0, margin: float = DEFAULT_MARGIN) -> PointSet:
    """Dispatch to a generator by family name.

    Sizes may be given either natively (``m`` for cubes and jittered sets,
    ``R`` for lattice balls) or as a target point count ``n``; ``n`` must
    then be a perfect d-th power for cubes and jittered sets.
    """
    if family == "lens":
        if n is None:
            raise InputError("lens family needs n")
        return gen_lens(n)
    if family in ("lattice-cube", "jittered"):
        if m is None:
            if n is None:
                raise InputError(f"{family} family needs m or n")
            m = _int_root_ceil(n, d)
            if m**d != n:
                raise InputError(f"n={n} is not a perfect {d}-th power")
        if family == "lattice-cube":
            return gen_lattice_cube(d, m)
        return gen_jittered(d, m, seed, margin)
    if family == "lattice-ball":
        if R is None:
            if n is None:
                raise InputError("lattice-ball family needs R or n")
            from .lattice import unit_ball_volume
            R = (n / unit_ball_volume(d)) ** (1.0 / d)
        return gen_lattice_ball(d, R)
    raise InputError(f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}")


def to_csv(P: PointSet) -> str:
    """First line ``d,n`` (the values), then one point per line at 17 significant digits."""
    lines = [f"{P.d},{P.n}"]
    lines.extend(",".join("%.17g" % v for v in row) for row in P.points)
    return "\n".join(lines) + "\n"


def read_csv(text: str) -> PointSet:
    """Inverse of :func:`to_csv`; the header counts are checked against the body."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InputError("empty point file")
    try:
        d, n = (int(v) for v in lines[0].split(","))
    except ValueError:
        raise InputError(f"bad point file header {lines[0]!r}; expected 'd,n'") from None
    if len(lines) - 1 != n:
        raise InputError(f"header says {n} points, file has {len(lines) - 1}")
    if n == 0:
        raise InputError("point file has no points")
    try:
        pts = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    except ValueError as exc:
        raise InputError(f"bad coordinate in point file: {exc}") from None
    if pts.ndim != 2 or pts.shape[1] != d:
        raise InputError(f"rows must have {d} coordinates")
    return PointSet(pts, generator="file")
