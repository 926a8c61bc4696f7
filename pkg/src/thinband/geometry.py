"""Symmetric convex bodies and the norms (Minkowski gauges) they induce.

Only bodies with closed-form gauges are supported: the Euclidean ball,
axis-aligned ellipsoids and l^p balls.  Every gauge evaluation in the
package, including the pair-counting kernels, goes through
:func:`gauge_between` so that all counting routes share one floating-point
expression.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import InputError

EUCLIDEAN = 0
ELLIPSOID = 1
PNORM = 2

_KIND_NAMES = {EUCLIDEAN: "euclidean", ELLIPSOID: "ellipsoid", PNORM: "pnorm"}


@numba.njit(cache=True, nogil=True, inline="always")
def gauge_between(kind, params, A, i, B, j):
    """Gauge of ``A[i] - B[j]``.

    Squares (or p-th powers) are accumulated in coordinate order; the
    unrolled d=2 and d=3 branches produce the same doubles as the loop and
    exist only so the compiler can vectorize callers.
    """
    d = A.shape[1]
    if kind == EUCLIDEAN:
        if d == 2:
            t0 = A[i, 0] - B[j, 0]
            t1 = A[i, 1] - B[j, 1]
            return math.sqrt(t0 * t0 + t1 * t1)
        if d == 3:
            t0 = A[i, 0] - B[j, 0]
            t1 = A[i, 1] - B[j, 1]
            t2 = A[i, 2] - B[j, 2]
            return math.sqrt(t0 * t0 + t1 * t1 + t2 * t2)
        s = 0.0
        for c in range(d):
            t = A[i, c] - B[j, c]
            s += t * t
        return math.sqrt(s)
    elif kind == ELLIPSOID:
        if d == 2:
            t0 = (A[i, 0] - B[j, 0]) / params[0]
            t1 = (A[i, 1] - B[j, 1]) / params[1]
            return math.sqrt(t0 * t0 + t1 * t1)
        s = 0.0
        for c in range(d):
            t = (A[i, c] - B[j, c]) / params[c]
            s += t * t
        return math.sqrt(s)
    else:
        p = params[0]
        s = 0.0
        for c in range(d):
            t = abs(A[i, c] - B[j, c])
            s += t**p
        return s ** (1.0 / p)


@dataclass(frozen=True)
class NormBody:
    """A symmetric convex body in R^d, identified by its gauge formula.

    Use the constructors :meth:`euclidean`, :meth:`ellipsoid`, :meth:`pnorm`
    or :meth:`parse` rather than building instances by hand.
    """

    kind: int
    d: int
    params: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if self.kind not in _KIND_NAMES:
            raise InputError(f"unknown body kind {self.kind!r}")
        if int(self.d) != self.d or self.d < 2:
            raise InputError(f"body dimension must be an integer >= 2, got {self.d!r}")
        if self.kind == ELLIPSOID:
            if len(self.params) != self.d:
                raise InputError(
                    f"ellipsoid needs {self.d} axes, got {len(self.params)}"
                )
            if not all(math.isfinite(a) and a > 0 for a in self.params):
                raise InputError("ellipsoid axes must be positive and finite")
        elif self.kind == PNORM:
            if len(self.params) != 1:
                raise InputError("p-norm body takes exactly one parameter p")
            p = self.params[0]
            if not (math.isfinite(p) and p > 1):
                raise InputError(f"p must lie in (1, inf), got {p!r}")

    @classmethod
    def euclidean(cls, d: int) -> "NormBody":
        return cls(EUCLIDEAN, d)

    @classmethod
    def ellipsoid(cls, axes) -> "NormBody":
        axes = tuple(float(a) for a in axes)
        return cls(ELLIPSOID, len(axes), axes)

    @classmethod
    def pnorm(cls, p: float, d: int) -> "NormBody":
        return cls(PNORM, d, (float(p),))

    @classmethod
    def parse(cls, text: str, d: int | None = None) -> "NormBody":
        """Parse ``"euclidean"``, ``"ellipsoid:a1,a2,..."`` or ``"pnorm:p"``.

        ``d`` is required for the Euclidean and p-norm forms and, when
        given, must match the number of ellipsoid axes.
        """
        name, _, rest = text.strip().partition(":")
        name = name.lower()
        try:
            if name == "euclidean" and not rest:
                if d is None:
                    raise InputError("dimension required for a euclidean body")
                return cls.euclidean(d)
            if name == "ellipsoid":
                body = cls.ellipsoid(float(a) for a in rest.split(","))
                if d is not None and body.d != d:
                    raise InputError(
                        f"ellipsoid has {body.d} axes but dimension is {d}"
                    )
                return body
            if name == "pnorm":
                if d is None:
                    raise InputError("dimension required for a p-norm body")
                return cls.pnorm(float(rest), d)
        except ValueError as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"malformed body string {text!r}: {exc}") from None
        raise InputError(f"malformed body string {text!r}")

    @property
    def name(self) -> str:
        return _KIND_NAMES[self.kind]

    def spec(self) -> str:
        """Inverse of :meth:`parse`."""
        if self.kind == EUCLIDEAN:
            return "euclidean"
        if self.kind == ELLIPSOID:
            return "ellipsoid:" + ",".join(repr(a) for a in self.params)
        return f"pnorm:{self.params[0]!r}"

    @property
    def curved(self) -> bool:
        """False for l^p bodies with p != 2, whose boundary curvature degenerates."""
        return self.kind != PNORM or self.params[0] == 2.0

    def kernel_args(self) -> tuple[int, np.ndarray]:
        params = np.asarray(self.params if self.params else (0.0,), dtype=np.float64)
        return self.kind, params


def gauge(body: NormBody, x) -> float:
    """Return ``||x||_B`` for the body ``B``."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != body.d:
        raise InputError(f"expected a vector of length {body.d}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InputError("vector has non-finite coordinates")
    kind, params = body.kernel_args()
    return float(gauge_between(kind, params, x[None, :], 0, np.zeros((1, x.shape[0])), 0))


def equivalence_constants(body: NormBody) -> tuple[float, float]:
    """Constants ``(c1, c2)`` with ``c1*|x| <= gauge(x) <= c2*|x|``."""
    if body.kind == EUCLIDEAN:
        return 1.0, 1.0
    if body.kind == ELLIPSOID:
        return 1.0 / max(body.params), 1.0 / min(body.params)
    p = body.params[0]
    scale = body.d ** (1.0 / p - 0.5)
    if p >= 2:
        return scale, 1.0
    return 1.0, scale
