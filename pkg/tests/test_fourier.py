import math

import numpy as np
import pytest

from thinband.errors import InputError, NumericError
from thinband.fourier import (AnnulusSpec, MeasureParams, annulus_ft, annulus_ft_quadrature, cutoff,
                              cutoff_ft, cutoff_radial, decay_bound, discrete_energy, gauss_kronrod,
                              measure_ft)
from thinband.pointsets import PointSet, gen_jittered


def test_cutoff_values():
    assert cutoff([0.5, 0.0]) == 1.0
    assert cutoff([3.0, 0.0, 0.0]) == 0.0
    # the smooth step is symmetric about its midpoint
    assert cutoff([1.5, 0.0]) == 0.5
    assert cutoff_radial(1.25) == pytest.approx(1 / (1 + math.exp(4 / 3 - 4)), rel=1e-14)


def test_cutoff_sandwich_and_monotone():
    r = np.linspace(0, 3, 3001)
    v = cutoff_radial(r)
    assert np.all((r <= 1) <= v) and np.all(v <= (r <= 2))
    assert np.all(np.diff(v) <= 0)


def test_annulus_volume_at_zero():
    assert annulus_ft(AnnulusSpec(2, 1, 1), 0) == pytest.approx(3 * math.pi, rel=1e-15)
    assert annulus_ft(AnnulusSpec(3, 1, 1), 0) == pytest.approx(4 * math.pi / 3 * 7, rel=1e-15)
    for spec in (AnnulusSpec(2, 1, 1), AnnulusSpec(3, 2, 0.1)):
        assert annulus_ft_quadrature(spec, 0) == pytest.approx(spec.volume(), rel=1e-9)


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("t,width", [(1, 0.2), (4, 0.05), (8, 0.1)])
def test_closed_form_vs_quadrature(d, t, width):
    spec = AnnulusSpec(d, t, width)
    for xi in (0.001, 0.3, 1, 7.5, 64, 1000):
        q = annulus_ft_quadrature(spec, xi)
        assert abs(annulus_ft(spec, xi) - q) <= 1e-6 * abs(q)


@pytest.mark.parametrize("d", [2, 3])
def test_thin_shell_limit(d):
    # value/width converges as the annulus shrinks to the unit sphere
    xi = 1.3
    a = annulus_ft_quadrature(AnnulusSpec(d, 1, 1e-4), xi) / 1e-4
    b = annulus_ft_quadrature(AnnulusSpec(d, 1, 1e-5), xi) / 1e-5
    assert a == pytest.approx(b, rel=1e-3)


def test_decay_bound():
    assert decay_bound(AnnulusSpec(2, 1, 0.1), 1) == pytest.approx(0.1, rel=1e-15)
    assert decay_bound(AnnulusSpec(2, 4, 0.1), 100) == pytest.approx(0.002, rel=1e-14)
    spec = AnnulusSpec(3, 2, 0.05)
    vals = [decay_bound(spec, x) for x in np.geomspace(0.1, 1e4, 200)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_annulus_errors():
    with pytest.raises(InputError):
        AnnulusSpec(4, 1, 1)
    with pytest.raises(InputError):
        AnnulusSpec(2, 0, 1)


def test_quadrature_oracle():
    assert gauss_kronrod(np.sin, 0, math.pi)[0] == pytest.approx(2.0, rel=1e-13)
    assert gauss_kronrod(lambda x: np.exp(-x), 0, 30, pieces=4)[0] == pytest.approx(1 - math.exp(-30), rel=1e-13)
    with pytest.raises(NumericError):
        gauss_kronrod(lambda x: 1 / np.sqrt(np.abs(x - 0.3)), 0, 1, rtol=1e-14, max_intervals=20)


def test_energy_examples():
    two = PointSet(np.array([[0.0, 0.0], [1.0, 0.0]]))
    assert discrete_energy(two, MeasureParams(1, 1.0)) == pytest.approx(2.0, rel=1e-15)
    assert discrete_energy(PointSet(np.zeros((1, 2))), MeasureParams(3, 1.5)) == 0.0
    with pytest.raises(InputError):
        discrete_energy(two, MeasureParams(1, 2.0))
    with pytest.raises(InputError):
        discrete_energy(two, MeasureParams(1, 0.0))
    with pytest.raises(NumericError):
        discrete_energy(PointSet(np.zeros((2, 2))), MeasureParams(1, 1.5))


def test_energy_against_direct_sum():
    P = gen_jittered(2, 20, 3).shifted([-10.0, -10.0])
    params = MeasureParams(6, 1.3)
    x = P.points / 6
    w = cutoff(x)
    D = np.linalg.norm(P.points[:, None] - P.points[None], axis=-1)
    np.fill_diagonal(D, np.inf)
    direct = 6 ** (1.3 - 4) * np.sum(np.outer(w, w) * D**-1.3)
    assert discrete_energy(P, params) == pytest.approx(direct, rel=1e-12)


def test_energy_flat_between_q_and_2q():
    P8 = gen_jittered(2, 32, 1).shifted([-16.0, -16.0])
    P16 = gen_jittered(2, 64, 1).shifted([-32.0, -32.0])
    e8 = discrete_energy(P8, MeasureParams(8, 1.5))
    e16 = discrete_energy(P16, MeasureParams(16, 1.5))
    assert 0.5 < e16 / e8 < 2


def test_cutoff_ft_mass():
    # the transform at zero is the integral of the cut-off
    r = np.linspace(0, 2, 200001)
    mass2 = np.trapezoid(2 * np.pi * r * cutoff_radial(r), r)
    assert cutoff_ft(2, 0.0)[0] == pytest.approx(mass2, rel=1e-8)
    mass3 = np.trapezoid(4 * np.pi * r**2 * cutoff_radial(r), r)
    assert cutoff_ft(3, 0.0)[0] == pytest.approx(mass3, rel=1e-8)


def test_measure_ft():
    P = gen_jittered(2, 12, 2).shifted([-6.0, -6.0])
    params = MeasureParams(3, 1.5)
    w = cutoff(P.points / 3)
    mass = 3**-2 * cutoff_ft(2, 0.0)[0] * w.sum()
    assert measure_ft(P, params, [0.0, 0.0]) == pytest.approx(mass, rel=1e-12)
    rng = np.random.default_rng(1)
    xi = rng.normal(scale=2.0, size=(50, 2))
    plus, minus = measure_ft(P, params, xi), measure_ft(P, params, -xi)
    assert np.allclose(minus, np.conj(plus), rtol=1e-12, atol=1e-15)
    assert np.all(np.abs(plus) <= mass * (1 + 1e-12))
