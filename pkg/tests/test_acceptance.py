"""Acceptance criteria 1 to 9.

Each test records a PASS/FAIL line that is printed in the terminal summary.
Criterion 9 is a soft target: a miss is reported as a warning.
"""

import math
import time
import warnings

import numpy as np
import pytest

from thinband import analysis, paircount
from thinband.geometry import NormBody
from thinband.lattice import count_ball_lattice, unit_ball_volume
from thinband.paircount import BandQuery, count_band_bruteforce, count_band_grid, count_near_integer
from thinband.pointsets import gen_jittered, gen_lattice_ball, gen_lattice_cube, gen_lens

SEED = 20240607


def _random_body(rng, d):
    kind = rng.integers(3)
    if kind == 0:
        return NormBody.euclidean(d)
    if kind == 1:
        return NormBody.ellipsoid(rng.uniform(0.5, 2.0, size=d))
    return NormBody.pnorm(float(rng.uniform(1.2, 5.0)), d)


def _random_set(rng, family):
    if family == "lattice-cube":
        d = int(rng.choice([2, 3]))
        m = int(rng.integers(2, 45 if d == 2 else 13))
        return gen_lattice_cube(d, m)
    if family == "lattice-ball":
        d = int(rng.choice([2, 3]))
        return gen_lattice_ball(d, float(rng.uniform(1, 25 if d == 2 else 7.5)))
    if family == "jittered":
        d = int(rng.choice([2, 3]))
        m = int(rng.integers(2, 45 if d == 2 else 13))
        return gen_jittered(d, m, int(rng.integers(2**31)), float(rng.uniform(0.01, 0.45)))
    return gen_lens(2 * int(rng.integers(1, 1001)))


def test_1_oracle_equivalence(record):
    rng = np.random.default_rng(SEED)
    families = ["lattice-cube", "lattice-ball", "jittered", "lens"]
    kinds = set()
    mismatches = []
    start = time.perf_counter()
    for trial in range(200):
        family = families[trial % 4]
        P = _random_set(rng, family)
        assert P.n <= 2000
        body = _random_body(rng, P.d)
        kinds.add(body.name)
        if rng.random() < 0.3:
            # land exactly on an attained distance to exercise ties
            i, j = rng.choice(P.n, size=2, replace=False) if P.n > 1 else (0, 0)
            from thinband.geometry import gauge
            k = max(gauge(body, P.points[i] - P.points[j]), 1e-3)
        else:
            span = float(np.linalg.norm(np.ptp(P.points, axis=0)))
            k = float(rng.uniform(0.05, max(span, 0.1)))
        delta = float(10 ** rng.uniform(-4, 0.3))
        q = BandQuery(body, k, delta)
        g, b = count_band_grid(P, q).count, count_band_bruteforce(P, q).count
        if g != b:
            mismatches.append((trial, family, body.spec(), k, delta, g, b))
    elapsed = time.perf_counter() - start
    ok = not mismatches and elapsed < 120 and kinds == {"euclidean", "ellipsoid", "pnorm"}
    record(1, ok, f"200 configs, {len(mismatches)} mismatches, {elapsed:.1f} s")
    assert not mismatches, mismatches[:5]
    assert elapsed < 120


def test_2_sharpness(record):
    start = time.perf_counter()
    r = analysis.sharpness_scan(2, [16, 32, 64, 128])
    elapsed = time.perf_counter() - start
    fit = r.summary["fit"]
    ratios = [row["ratio"] for row in r.rows]
    spread = max(ratios) / min(ratios)
    ok = abs(fit["exponent"] - 4 / 3) <= 0.1 and spread <= 4
    record(2, ok, f"exponent {fit['exponent']:.4f} (target 4/3 +- 0.1), ratio spread {spread:.3f}, "
                  f"{elapsed:.0f} s")
    assert abs(fit["exponent"] - 4 / 3) <= 0.1
    assert spread <= 4


def test_3_theorem_bound(record):
    ns = [2**10, 2**12, 2**14, 2**16]
    r = analysis.band_scan("jittered", 2, ns, "dyadic", seed=SEED, fixed_fraction=0.25)
    for row in r.rows:
        assert 1 < row["k"] < row["n"] ** 0.5
        assert row["delta"] == pytest.approx(row["n"] ** (-1 / 6), rel=1e-15)
    C = r.summary["empirical_C"]
    fixed = [r.summary["fixed_rule_ratios"][str(n)] for n in ns]
    spread = max(fixed) / min(fixed)
    ok = math.isfinite(C) and C > 0 and spread <= 4
    record(3, ok, f"empirical C {C:.4f}; ratio at k = n^(1/2)/4: "
                  + ", ".join(f"{v:.4f}" for v in fixed) + f"; spread {spread:.3f}")
    assert math.isfinite(C) and C > 0
    assert spread <= 4


def test_4_integer_distance_lattice(record):
    ns = [2**10, 2**12, 2**14, 2**16]
    r = analysis.integer_distance_scan("lattice-cube", 2, ns, consistency_max_n=2**12)
    fit = r.summary["fit"]
    C = r.summary["empirical_C_theorem"]
    below = all(row["count"] <= C * row["theorem"] * (1 + 1e-12) for row in r.rows)
    in_window = abs(fit["exponent"] - 1.5) <= 0.15
    # diagnostic only: the same scan restricted to (numerically) exact integer distances
    exact = analysis.integer_distance_scan("lattice-cube", 2, ns, delta_rule=1e-9, consistency_max_n=0)
    record(4, in_window and below and r.summary["pass"]["consistency"],
           f"exponent {fit['exponent']:.4f} (target 1.5 +- 0.15); theorem-expression constant {C:.4f}; "
           f"direct vs per-k sum consistent: {r.summary['pass']['consistency']}; "
           f"exponent with delta = 1e-9 instead: {exact.summary['fit']['exponent']:.4f}")
    assert below
    assert r.summary["pass"]["consistency"]
    assert in_window, f"fitted exponent {fit['exponent']:.4f} outside 1.5 +- 0.15"


def test_5_lens(record):
    counts = {n: count_near_integer(gen_lens(n), 1e-6) for n in (100, 1000)}
    ok = all(c >= 2 * (n // 2) ** 2 for n, c in counts.items())
    record(5, ok, ", ".join(f"n={n}: {c} >= {2 * (n // 2) ** 2}" for n, c in counts.items()))
    assert ok


def test_6_fourier_decay(record):
    start = time.perf_counter()
    r = analysis.decay_report()
    elapsed = time.perf_counter() - start
    C = r.summary["empirical_C"]
    asserted = {k: v for k, v in r.summary["half_grid"].items() if k in r.summary["half_grid_asserted"]}
    worst = max(max(C / v, v / C) for v in asserted.values())
    err = r.summary["max_rel_err"]
    xi_halves = {k: round(float(v), 4) for k, v in r.summary["half_grid"].items() if k.startswith("xi_mag")}
    ok = worst < 2 and err <= 1e-6 and elapsed < 120
    record(6, ok, f"C_emp {C:.4f}; worst half/full factor {worst:.3f} over {len(asserted)} halves; "
                  f"frequency halves (reported) {xi_halves}; max rel err {err:.2e}; {elapsed:.1f} s")
    assert worst < 2
    assert err <= 1e-6
    assert elapsed < 120


@pytest.mark.slow
def test_7_energy(record):
    start = time.perf_counter()
    r = analysis.energy_scan(2, [8, 16, 32, 64, 128], s=1.5, seed=SEED, placement="centered")
    slope = r.summary["fit"]["exponent"]
    energies = ", ".join(f"{row['energy']:.3f}" for row in r.rows)
    record(7, abs(slope) <= 0.1, f"slope {slope:.4f} (|slope| <= 0.1); energies {energies}; "
                                 f"{time.perf_counter() - start:.0f} s")
    assert abs(slope) <= 0.1


def test_8_exact_lattice(record):
    values = {R: count_ball_lattice(2, R).N for R in (1, 2, 5)}
    w2, w3 = unit_ball_volume(2), unit_ball_volume(3)
    ok = (values == {1: 5, 2: 13, 5: 81} and abs(w2 - math.pi) <= 1e-12 * math.pi
          and abs(w3 - 4 * math.pi / 3) <= 1e-12 * 4 * math.pi / 3)
    record(8, ok, f"N_2(1,2,5) = {values[1]}, {values[2]}, {values[5]}; omega_2, omega_3 within 1e-12")
    assert ok


def test_9_performance(record):
    paircount.set_threads(1)
    try:
        P = gen_jittered(2, 1000, SEED)
        q = BandQuery(NormBody.euclidean(2), 250.0, P.n ** (-1 / 6))
        count_band_grid(gen_jittered(2, 50, SEED), q)  # compile outside the timed run
        res = count_band_grid(P, q)
    finally:
        paircount.set_threads(None)
    ok = res.elapsed < 10
    record(9, "PASS" if ok else "WARN", f"n = 10^6, k = 250: {res.elapsed:.2f} s single-threaded, "
                                        f"count {res.count}")
    if not ok:
        warnings.warn(f"performance target missed: {res.elapsed:.2f} s", stacklevel=1)
