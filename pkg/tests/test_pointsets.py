import numpy as np
import pytest

from thinband.errors import InputError, ResourceError
from thinband.pointsets import (PointSet, gen_jittered, gen_lattice_ball, gen_lattice_cube, gen_lens,
                                generate, read_csv, to_csv, validate_well_distributed)


def test_lattice_cube():
    P = gen_lattice_cube(2, 4)
    assert P.n == 16 and P.d == 2 and P.separation == 1
    rows = {tuple(p) for p in P.points}
    assert (0.0, 0.0) in rows and (3.0, 3.0) in rows
    assert gen_lattice_cube(3, 2).n == 8
    assert gen_lattice_cube(2, 1).points.tolist() == [[0.0, 0.0]]


def test_lattice_ball():
    assert gen_lattice_ball(2, 1).n == 5
    assert gen_lattice_ball(2, 0.5).points.tolist() == [[0.0, 0.0]]
    P = gen_lattice_ball(2, 5)
    assert P.n == 81
    assert np.all(np.sum(P.points**2, axis=1) <= 25)
    assert len({tuple(p) for p in P.points}) == 81


def test_jittered():
    P = gen_jittered(2, 8, 5, 0.1)
    assert P.n == 64
    assert validate_well_distributed(P, 0.2).ok
    one = gen_jittered(2, 1, 5, 0.25)
    assert one.n == 1 and np.all((one.points >= 0.25) & (one.points <= 0.75))
    again = gen_jittered(2, 8, 5, 0.1)
    assert np.array_equal(P.points, again.points)
    assert not np.array_equal(P.points, gen_jittered(2, 8, 6, 0.1).points)


@pytest.mark.parametrize("d,m,eps", [(2, 20, 0.1), (3, 6, 0.05), (2, 30, 0.3)])
def test_jittered_always_valid(d, m, eps):
    for seed in range(3):
        assert validate_well_distributed(gen_jittered(d, m, seed, eps), 2 * eps).ok


def test_lens_distances():
    for n, cross in [(6, 18), (4, 8), (2, 2)]:
        P = gen_lens(n)
        assert P.d == 4 and P.n == n
        D = np.linalg.norm(P.points[:, None] - P.points[None], axis=-1)
        np.fill_diagonal(D, np.nan)
        assert int(np.sum(np.abs(D - 1) < 1e-9)) == cross
    D = np.linalg.norm(gen_lens(6).points[0] - gen_lens(6).points[1])
    assert D == pytest.approx(np.sqrt(2) * np.sin(np.pi / 3), rel=1e-12)
    with pytest.raises(InputError):
        gen_lens(5)


def test_validator():
    assert validate_well_distributed(gen_lattice_cube(2, 4), 1).ok
    dup = PointSet(np.array([[0.5, 0.5], [0.5, 0.5]]))
    rep = validate_well_distributed(dup, 0.5)
    assert not rep.ok and any(v["kind"] == "separation" for v in rep.violations)
    rep = validate_well_distributed(gen_lattice_ball(2, 5), 1)
    assert not rep.ok and any(v["kind"] == "cell" and v["occupancy"] == 0 for v in rep.violations)


def test_pointset_immutable_and_validated():
    P = gen_lattice_cube(2, 3)
    with pytest.raises(ValueError):
        P.points[0, 0] = 7
    with pytest.raises(InputError):
        PointSet(np.array([[0.0, np.nan]]))
    with pytest.raises(InputError):
        PointSet(np.zeros(3))


def test_size_cap(monkeypatch):
    monkeypatch.setenv("THINBAND_MAX_POINTS", "1000")
    with pytest.raises(ResourceError):
        gen_lattice_cube(2, 40)
    with pytest.raises(ResourceError):
        gen_jittered(3, 11, 0)


def test_generate_dispatch():
    assert generate("lattice-cube", 2, n=16).n == 16
    assert generate("jittered", 2, m=3, seed=1).n == 9
    assert generate("lens", n=10).n == 10
    assert generate("lattice-ball", 2, R=2).n == 13
    with pytest.raises(InputError):
        generate("jittered", 2, n=10)
    with pytest.raises(InputError):
        generate("simplex", 2, n=4)


def test_csv_roundtrip():
    P = gen_jittered(3, 4, 9)
    text = to_csv(P)
    assert text.splitlines()[0] == "3,64"
    Q = read_csv(text)
    assert np.array_equal(P.points, Q.points)
    with pytest.raises(InputError):
        read_csv("2,3\n0,0\n1,1\n")
    with pytest.raises(InputError):
        read_csv("2,1\n0,zero\n")
