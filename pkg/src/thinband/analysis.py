"""Experiment drivers: scans over sizes and radii, exponent fits, report files.

Every scan returns a :class:`Report` whose rows are plain dicts sorted by
their key columns, so that writing the same report twice produces the same
bytes.  Fits skip rows below ``min_fit_n`` points (and rows with a zero
count, which have no logarithm).
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import fourier, lattice, paircount
from .errors import InputError, NumericError
from .geometry import NormBody
from .pointsets import PointSet, gen_jittered, gen_lattice_ball, generate

MIN_FIT_N = 256
DEFAULT_SEED = 20240607
DEFAULT_WINDOWS = {
    "sharpness_exponent": 0.1,
    "sharpness_ratio_spread": 4.0,
    "band_ratio_spread": 4.0,
    "integer_exponent": 0.15,
    "energy_slope": 0.1,
    "decay_half_grid": 2.0,
}


@dataclass(frozen=True)
class ScalingFit:
    exponent: float
    intercept: float
    r_squared: float
    samples: tuple
    empirical_C: float = 0.0

    def to_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "samples": [list(s) for s in self.samples],
            "empirical_C": self.empirical_C,
        }


def fit_exponent(samples: Sequence[tuple[float, float]], bound=None) -> ScalingFit:
    """Least squares line through ``(log x, log y)``.

    ``bound``, when given, maps ``x`` to a reference value and sets
    ``empirical_C`` to the largest ``y / bound(x)``.
    """
    pts = [(float(x), float(y)) for x, y in samples]
    if len(pts) < 2:
        raise InputError("an exponent fit needs at least 2 samples")
    if any(not (x > 0 and y > 0) or not (math.isfinite(x) and math.isfinite(y)) for x, y in pts):
        raise InputError("fit samples must be positive and finite")
    lx = np.log([x for x, _ in pts])
    ly = np.log([y for _, y in pts])
    if np.ptp(lx) == 0:
        raise InputError("fit samples need at least two distinct x values")
    mx, my = lx.mean(), ly.mean()
    sxx = float(np.sum((lx - mx) ** 2))
    sxy = float(np.sum((lx - mx) * (ly - my)))
    syy = float(np.sum((ly - my) ** 2))
    slope = sxy / sxx
    intercept = float(my - slope * mx)
    if syy == 0:
        r2 = 1.0
    else:
        r2 = min(1.0, max(0.0, sxy * sxy / (sxx * syy)))
    C = max((y / bound(x) for x, y in pts), default=0.0) if bound is not None else 0.0
    return ScalingFit(slope, intercept, r2, tuple(pts), float(C))


@dataclass
class Report:
    """Rows plus a summary; ``columns`` fixes the CSV column order."""

    name: str
    columns: list[str]
    rows: list[dict]
    summary: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        return format_csv(self.columns, self.rows)

    def write(self, path: str | Path, plot: bool = False) -> list[Path]:
        """Write ``path`` (CSV) and ``<stem>.json`` (summary); optionally ``<stem>.svg``."""
        path = Path(path)
        out = [path, path.with_suffix(".json")]
        path.write_text(self.to_csv())
        out[1].write_text(dump_json(self.summary) + "\n")
        if plot:
            svg = path.with_suffix(".svg")
            write_svg(self, svg)
            out.append(svg)
        return out


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def format_csv(columns: Sequence[str], rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(format_value(row[c]) for c in columns) + "\n")
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


def dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2)


def write_svg(report: Report, path: Path) -> None:
    """Log-log plot of the report's ``x``/``y`` columns (taken from the summary)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    xcol, ycol = report.summary.get("plot", ("n", "count"))
    xs = [r[xcol] for r in report.rows if r[xcol] > 0 and r[ycol] > 0]
    ys = [r[ycol] for r in report.rows if r[xcol] > 0 and r[ycol] > 0]
    with matplotlib.rc_context({"svg.hashsalt": "thinband", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.loglog(xs, ys, "o")
        ax.set_xlabel(xcol)
        ax.set_ylabel(ycol)
        ax.set_title(report.name)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def _check_row(count: int, n: int) -> None:
    if count < 0 or count > n * (n - 1) or count % 2:
        raise NumericError(f"ordered pair count {count} invalid for n={n}")


def _spread(values) -> float:
    vals = [v for v in values if v > 0]
    if not vals:
        return math.inf
    return max(vals) / min(vals)


def _safe_fit(samples, bound=None):
    samples = [(x, y) for x, y in samples if x > 0 and y > 0]
    if len(samples) < 2 or len({x for x, _ in samples}) < 2:
        return None
    return fit_exponent(samples, bound)


# sharpness

def sharpness_scan(d: int, q_list: Sequence[int], *, radius_factor: float = 10.0,
                   min_fit_n: int = MIN_FIT_N, min_fit_q: int = 2, windows: dict | None = None,
                   small_k: Sequence[float] | None = None) -> Report:
    """Band ``[q, q + q^(-(d-1)/(d+1))]`` on the lattice ball of radius ``radius_factor * q``."""
    windows = {**DEFAULT_WINDOWS, **(windows or {})}
    if not q_list:
        raise InputError("q_list is empty")
    body = NormBody.euclidean(d)
    expo = 2 - 2 / (d + 1)
    rows = []
    for q in sorted(set(int(v) for v in q_list)):
        if q < 1:
            raise InputError(f"q must be a positive integer, got {q}")
        width = q ** (-(d - 1) / (d + 1))
        P = gen_lattice_ball(d, radius_factor * q)
        count = paircount.band_pairs(P, body, float(q), q + width) if P.n > 1 else 0
        _check_row(count, P.n)
        ref = P.n ** expo
        rows.append({"d": d, "q": q, "n": P.n, "lo": float(q), "hi": q + width,
                     "count": count, "reference": ref, "ratio": count / ref})
    # q = 1 gives a band of width 1, not a thin one
    fit_rows = [r for r in rows if r["n"] >= min_fit_n and r["q"] >= min_fit_q and r["count"] > 0]
    fit = _safe_fit([(r["n"], r["count"]) for r in fit_rows], lambda n: n ** expo)
    spread = _spread(r["ratio"] for r in fit_rows)
    shells = small_k_shells(d, [r["q"] for r in rows], small_k)
    summary = {
        "kind": "sharpness", "d": d, "target_exponent": expo,
        "fit": fit.to_dict() if fit else None,
        "ratio_spread": spread,
        "excluded_from_fit": [r["q"] for r in rows if r not in fit_rows],
        "small_k_shells": shells,
        "windows": {"exponent": windows["sharpness_exponent"],
                    "ratio_spread": windows["sharpness_ratio_spread"]},
        "pass": {
            "exponent": bool(fit and abs(fit.exponent - expo) <= windows["sharpness_exponent"]),
            "ratio_spread": bool(spread <= windows["sharpness_ratio_spread"]),
        },
        "plot": ("n", "count"),
    }
    return Report("sharpness", ["d", "q", "n", "lo", "hi", "count", "reference", "ratio"],
                  rows, summary)


def small_k_shells(d: int, q_list: Sequence[int], k_list: Sequence[float] | None = None) -> list[dict]:
    """Lattice shell counts ``N(k + w) - N(k)`` against ``k^(d-1) * w``, ``w = q^(-(d-1)/(d+1))``.

    Only a report: the range of ``k`` where the shell count tracks the
    prediction is left for the reader to see.
    """
    out = []
    for q in q_list:
        w = q ** (-(d - 1) / (d + 1))
        ks = k_list if k_list is not None else [2.0**j for j in range(0, max(1, int(math.log2(q))) + 1)]
        for k in ks:
            shell = lattice.shell_count(d, float(k), float(k) + w)
            pred = float(k) ** (d - 1) * w
            out.append({"q": int(q), "k": float(k), "width": w, "shell": shell,
                        "prediction": pred, "ratio": shell / pred})
    return out


# band scan

def k_values(rule, n: int, d: int) -> list[float]:
    """Radii for one ``n`` under a rule: ``"dyadic"``, ``"fraction:f"``, a list, or ``+``-joined rules."""
    if isinstance(rule, (list, tuple)):
        ks = [float(k) for k in rule]
    elif isinstance(rule, str):
        ks = []
        top = n ** (1.0 / d)
        for part in rule.split("+"):
            part = part.strip()
            if part == "dyadic":
                k = 2.0
                while k < top:
                    ks.append(k)
                    k *= 2
            elif part.startswith("fraction:"):
                try:
                    f = float(part.split(":", 1)[1])
                except ValueError:
                    raise InputError(f"bad k rule {part!r}") from None
                ks.append(f * top)
            else:
                raise InputError(f"unknown k rule {part!r}; use dyadic, fraction:f or a list")
    else:
        raise InputError(f"bad k rule {rule!r}")
    if any(not (k > 0 and math.isfinite(k)) for k in ks):
        raise InputError("radii must be positive")
    return sorted(set(ks))


def _point_set(family: str, d: int, n: int, seed: int) -> PointSet:
    return generate(family, d, n=n, seed=seed)


def band_width(rule, n: int, d: int) -> float:
    """``"theorem"`` gives :func:`paircount.theorem_band_width`; a number is used as is."""
    if rule == "theorem":
        return paircount.theorem_band_width(n, d)
    try:
        delta = float(rule)
    except (TypeError, ValueError):
        raise InputError(f"delta_rule must be 'theorem' or a number, got {rule!r}") from None
    if not (delta > 0 and math.isfinite(delta)):
        raise InputError("delta must be positive")
    return delta


def band_scan(family: str, d: int, n_list: Sequence[int], k_rule="dyadic", body: NormBody | None = None,
              seed: int = DEFAULT_SEED, *, delta_rule="theorem", fixed_fraction: float = 0.25, min_fit_n: int = MIN_FIT_N,
              windows: dict | None = None) -> Report:
    """Grid counts at ``delta = theorem_band_width(n, d)`` for each ``(n, k)``.

    ``k = fixed_fraction * n^(1/d)`` is always added so the constant can be
    compared across ``n`` at a fixed relative radius.
    """
    windows = {**DEFAULT_WINDOWS, **(windows or {})}
    body = body or NormBody.euclidean(d)
    if body.d != d:
        raise InputError(f"body dimension {body.d} does not match d={d}")
    if not n_list:
        raise InputError("n_list is empty")
    rows = []
    for n in sorted(set(int(v) for v in n_list)):
        P = _point_set(family, d, n, seed)
        delta = band_width(delta_rule, P.n, d)
        fixed = fixed_fraction * P.n ** (1.0 / d)
        for k in k_values(k_rule, P.n, d) + ([fixed] if fixed_fraction else []):
            if any(r["n"] == P.n and r["k"] == k for r in rows):
                continue
            count = paircount.band_pairs(P, body, k, k + delta) if P.n > 1 else 0
            _check_row(count, P.n)
            tb = paircount.theorem_bound(P.n, d, k)
            rows.append({"family": family, "d": d, "body": body.spec(), "n": P.n, "k": k,
                         "delta": delta, "count": count, "theorem_bound": tb,
                         "trivial_bound": paircount.trivial_bound(P.n, d, k),
                         "ratio": count / tb, "fixed_rule": bool(k == fixed)})
    rows.sort(key=lambda r: (r["n"], r["k"]))
    C = max(r["ratio"] for r in rows)
    fixed_rows = [r for r in rows if r["fixed_rule"] and r["n"] >= min_fit_n]
    fit_n = _safe_fit([(r["n"], r["count"]) for r in fixed_rows])
    fits_k = {}
    for n in sorted({r["n"] for r in rows}):
        f = _safe_fit([(r["k"], r["count"]) for r in rows if r["n"] == n and not r["fixed_rule"]])
        if f:
            fits_k[str(n)] = f.to_dict()
    spread = _spread(r["ratio"] for r in fixed_rows)
    summary = {
        "kind": "band", "family": family, "d": d, "body": body.spec(), "seed": seed,
        "delta_rule": delta_rule,
        "k_rule": k_rule if isinstance(k_rule, str) else list(k_rule),
        "empirical_C": C,
        "fixed_fraction": fixed_fraction,
        "fixed_rule_ratios": {str(r["n"]): r["ratio"] for r in fixed_rows},
        "fixed_rule_spread": spread,
        "fit_vs_n_fixed_rule": fit_n.to_dict() if fit_n else None,
        "fit_vs_k": fits_k,
        "windows": {"ratio_spread": windows["band_ratio_spread"]},
        "pass": {"ratio_spread": bool(spread <= windows["band_ratio_spread"])},
        "plot": ("k", "count"),
    }
    cols = ["family", "d", "body", "n", "k", "delta", "count", "theorem_bound",
            "trivial_bound", "ratio", "fixed_rule"]
    return Report("band", cols, rows, summary)


# integer distances

def per_k_band_sum(P: PointSet, delta: float) -> int:
    """Sum over ``k = 1 .. ceil(diameter)`` of grid counts in ``[k - delta, k + delta)``."""
    if P.n < 2:
        return 0
    lo, hi = P.points.min(axis=0), P.points.max(axis=0)
    kmax = math.ceil(float(np.sqrt(np.sum((hi - lo) ** 2)))) + 1
    body = NormBody.euclidean(P.d)
    return sum(paircount.band_pairs(P, body, float(k) - delta, float(k) + delta, upper_open=True)
               for k in range(1, kmax + 1))


def integer_distance_scan(family: str, d: int, n_list: Sequence[int], seed: int = DEFAULT_SEED, *,
                          delta_rule="theorem", consistency_max_n: int = 4096, min_fit_n: int = MIN_FIT_N,
                          windows: dict | None = None, target_exponent: float | None = None) -> Report:
    """Near-integer pair counts with ``delta`` from ``delta_rule`` (see :func:`band_width`).

    Three counts per row: ``count`` uses the strict test ``dist(r, Z) < delta``;
    ``banded`` counts ``r`` in some ``[k - delta, k + delta)`` with ``k >= 1``;
    for ``n <= consistency_max_n`` the report also sums per-``k`` grid band
    counts, which must equal ``banded`` exactly (the bands are disjoint
    because ``delta < 0.5``).
    """
    windows = {**DEFAULT_WINDOWS, **(windows or {})}
    if not n_list:
        raise InputError("n_list is empty")
    expo_base = 2 - 1 / d
    expo_thm = expo_base + 2 / (d * (d + 1))
    target = expo_base if target_exponent is None else target_exponent
    rows = []
    for n in sorted(set(int(v) for v in n_list)):
        P = _point_set(family, d, n, seed)
        if P.n < 2:
            count = banded = 0
            delta = paircount.theorem_band_width(max(P.n, 1), d)
            summed = 0
        else:
            delta = band_width(delta_rule, P.n, d)
            if not delta < 0.5:
                raise InputError(f"band width {delta} must be below 0.5 for disjoint bands")
            count = paircount.count_near_integer(P, delta)
            banded = paircount.count_integer_bands(P, delta)
            summed = per_k_band_sum(P, delta) if P.n <= consistency_max_n else -1
        _check_row(count, P.n)
        base, thm = P.n ** expo_base, P.n ** expo_thm
        rows.append({"family": family, "d": d, "n": P.n, "delta": delta, "count": count,
                     "banded": banded, "per_k_sum": summed,
                     "consistent": summed == -1 or summed == banded,
                     "baseline": base, "theorem": thm,
                     "ratio_baseline": count / base, "ratio_theorem": count / thm})
    rows.sort(key=lambda r: r["n"])
    fit_rows = [r for r in rows if r["n"] >= min_fit_n and r["count"] > 0]
    fit = _safe_fit([(r["n"], r["count"]) for r in fit_rows], lambda n: n**expo_thm)
    C_thm = max((r["ratio_theorem"] for r in rows), default=0.0)
    summary = {
        "kind": "integer", "family": family, "d": d, "seed": seed, "delta_rule": delta_rule,
        "target_exponent": target, "theorem_exponent": expo_thm,
        "fit": fit.to_dict() if fit else None,
        "empirical_C_theorem": C_thm,
        "conventions": {
            "count": "dist(r, Z) < delta, all pairs",
            "banded": "k - delta <= r < k + delta for an integer k >= 1",
            "per_k_sum": "sum of grid counts on [k - delta, k + delta), k = 1..ceil(diameter)+1; -1 when skipped",
        },
        "windows": {"exponent": windows["integer_exponent"]},
        "pass": {
            "exponent": bool(fit and abs(fit.exponent - target) <= windows["integer_exponent"]),
            "consistency": all(r["consistent"] for r in rows),
            "below_theorem_times_C": all(r["count"] <= C_thm * r["theorem"] * (1 + 1e-12) for r in rows),
        },
        "plot": ("n", "count"),
    }
    cols = ["family", "d", "n", "delta", "count", "banded", "per_k_sum", "consistent",
            "baseline", "theorem", "ratio_baseline", "ratio_theorem"]
    return Report("integer", cols, rows, summary)


# fourier side

def centered_jittered(d: int, q: int, seed: int, margin: float = 0.1) -> PointSet:
    """Jittered set covering ``[-2q, 2q)^d``, the support of the rescaled cut-off."""
    return gen_jittered(d, 4 * q, seed, margin).shifted(np.full(d, -2.0 * q))


def energy_scan(d: int, q_list: Sequence[int], s: float | None = None, seed: int = DEFAULT_SEED,
                placement: str = "centered", windows: dict | None = None) -> Report:
    """Discrete energy of a jittered set for each ``q``; fit of log energy against log q.

    ``placement`` is ``"centered"`` (cells covering the cut-off support) or
    ``"corner"`` (the ``q^d`` cells of ``[0, q)^d``).
    """
    windows = {**DEFAULT_WINDOWS, **(windows or {})}
    s = fourier.default_exponent(d) if s is None else float(s)
    if placement not in ("centered", "corner"):
        raise InputError(f"unknown placement {placement!r}")
    if not q_list:
        raise InputError("q_list is empty")
    rows = []
    for q in sorted(set(int(v) for v in q_list)):
        params = fourier.MeasureParams(q, s)
        params.check(d)
        P = centered_jittered(d, q, seed) if placement == "centered" else gen_jittered(d, q, seed)
        rows.append({"d": d, "s": s, "q": q, "n": P.n, "energy": fourier.discrete_energy(P, params)})
    fit = _safe_fit([(r["q"], r["energy"]) for r in rows])
    summary = {
        "kind": "energy", "d": d, "s": s, "seed": seed, "placement": placement,
        "fit": fit.to_dict() if fit else None,
        "max_energy": max(r["energy"] for r in rows),
        "windows": {"slope": windows["energy_slope"]},
        "pass": {"slope": bool(fit and abs(fit.exponent) <= windows["energy_slope"])},
        "plot": ("q", "energy"),
    }
    return Report("energy", ["d", "s", "q", "n", "energy"], rows, summary)


def decay_report(ds=(2, 3), *, seed: int = DEFAULT_SEED, windows: dict | None = None,
                 rtol: float = 1e-6) -> Report:
    """Closed-form annulus transforms against the decay bound, with the quadrature check."""
    windows = {**DEFAULT_WINDOWS, **(windows or {})}
    rows = fourier.decay_grid(ds=tuple(ds))
    C = fourier.empirical_constant(rows)
    halves = fourier.half_grid_constants(rows, seed=seed)
    factor = windows["decay_half_grid"]

    def off(v):
        return v == 0 or max(C / v, v / C) >= factor

    asserted = {k: v for k, v in halves.items() if not k.startswith("xi_mag")}
    max_err = max(r["rel_err"] for r in rows)
    summary = {
        "kind": "decay", "empirical_C": C, "half_grid": halves,
        "half_grid_asserted": sorted(asserted),
        "max_rel_err": max_err,
        "windows": {"half_grid_factor": factor, "rel_err": rtol},
        "pass": {"half_grid": not any(off(v) for v in asserted.values()),
                 "quadrature": bool(max_err <= rtol)},
        "plot": ("xi_mag", "ratio"),
    }
    rows = sorted(rows, key=lambda r: (r["d"], r["t"], r["width"], r["xi_mag"]))
    cols = ["d", "t", "width", "xi_mag", "ft", "bound", "ratio", "quadrature", "rel_err"]
    return Report("decay", cols, rows, summary)


LATTICE_COLUMNS = ("d", "R", "N", "main_term", "discrepancy")


def lattice_report(d: int, radii: Sequence[float]) -> Report:
    rows = []
    for R in sorted(set(float(r) for r in radii)):
        rows.append(dict(zip(LATTICE_COLUMNS, lattice.count_ball_lattice(d, R).row())))
    return Report("lattice", list(LATTICE_COLUMNS), rows,
                  {"kind": "lattice", "d": d, "plot": ("R", "N")})

