"""Cutoff moments against independent quadrature and closed-form oracles."""

import math

import mpmath
import numpy as np
import pytest

from intervalgas import (CapitalLambda, ModelParams, RadialCutoff,
                         capital_lambda, moment, sphere_area)
from intervalgas.errors import DivergentIntegralError
from intervalgas.kernel import KernelKind


def mp_moment(cutoff, p, d):
    """Independent high-precision radial moment via mpmath."""
    upper = cutoff.radius if cutoff.family == "sharp" else mpmath.inf

    def f(r):
        return mpmath.mpf(r) ** (d - 1 + p) * float(cutoff.profile_sq(float(r)))

    area = 2 * mpmath.pi ** (mpmath.mpf(d) / 2) / mpmath.gamma(mpmath.mpf(d) / 2)
    return float(area * mpmath.quad(f, [0, upper]))


def test_sphere_area_known_values():
    assert sphere_area(3) == pytest.approx(4 * math.pi, rel=1e-15)
    assert sphere_area(4) == pytest.approx(2 * math.pi ** 2, rel=1e-15)
    # Gamma(3) = 2, so S_5 = 2 pi^3 / 2
    assert sphere_area(6) == pytest.approx(math.pi ** 3, rel=1e-15)


def test_sharp_moments_vs_antiderivative():
    c = RadialCutoff.sharp(1.0)
    # unit-ball volume
    assert moment(c, 0.0, 3) == pytest.approx(4 * math.pi / 3, rel=1e-12)
    # r^0 antiderivative on [0, 1]
    assert moment(c, -2.0, 3) == pytest.approx(4 * math.pi, rel=1e-12)
    for p in (-1.0, 1.5, 3.0):
        exact = sphere_area(3) / (3.0 + p)
        assert moment(c, p, 3) == pytest.approx(exact, rel=1e-10)


def test_gaussian_moment_vs_mpmath():
    g = RadialCutoff.gaussian(1.0)
    assert moment(g, -2.0, 3) == pytest.approx(2 * math.pi ** 1.5, rel=1e-10)
    for p in (-2.0, 0.0, 2.0, 7.0):
        assert moment(g, p, 3) == pytest.approx(mp_moment(g, p, 3), rel=1e-9)


def test_powerlaw_moment_vs_mpmath_and_divergence():
    pl = RadialCutoff.powerlaw(scale=1.0, exponent=3.0)
    for p in (-2.0, 0.0, 1.5):
        assert moment(pl, p, 3) == pytest.approx(mp_moment(pl, p, 3), rel=1e-8)
    # needs p < 2*exponent - d = 3
    with pytest.raises(DivergentIntegralError):
        moment(pl, 3.0, 3)
    with pytest.raises(DivergentIntegralError):
        moment(pl, 5.0, 3)


def test_moment_origin_divergence():
    with pytest.raises(DivergentIntegralError):
        moment(RadialCutoff.sharp(1.0), -3.0, 3)


def test_moment_monotone_in_sharp_radius():
    vals = [moment(RadialCutoff.sharp(K), -1.0, 3) for K in (0.5, 1.0, 2.0)]
    assert vals[0] < vals[1] < vals[2]


def test_moment_amplitude_scaling():
    c1 = RadialCutoff.sharp(1.0)
    c2 = RadialCutoff.sharp(1.0, amplitude=3.0)
    for p in (-2.0, 0.0, 1.0):
        assert moment(c2, p, 3) == pytest.approx(9.0 * moment(c1, p, 3),
                                                 rel=1e-12)


@pytest.mark.parametrize("cutoff", [RadialCutoff.sharp(1.3),
                                    RadialCutoff.gaussian(0.8)])
def test_cauchy_schwarz_between_moments(cutoff):
    for p1 in (-1.0, -0.5, 0.0, 0.5):
        for p2 in (-0.5, 0.0, 1.0):
            lhs = moment(cutoff, p1 + p2, 3) ** 2
            rhs = moment(cutoff, 2 * p1, 3) * moment(cutoff, 2 * p2, 3)
            assert lhs <= rhs * (1 + 1e-8)


def test_capital_lambda_sharp():
    res = capital_lambda(RadialCutoff.sharp(1.0), 3, n_cap=50)
    assert isinstance(res, CapitalLambda)
    assert res.value == pytest.approx(2 * math.pi, rel=1e-10)
    assert res.attained_at == 1
    # the n=2 term alone is sqrt(4 pi / 3)
    assert moment(RadialCutoff.sharp(1.0), 0.0, 3) ** 0.5 == pytest.approx(
        (4 * math.pi / 3) ** 0.5, rel=1e-12)


def test_capital_lambda_dominates_first_moment():
    for cutoff in (RadialCutoff.sharp(0.7), RadialCutoff.gaussian(1.2)):
        res = capital_lambda(cutoff, 3, n_cap=40)
        assert res.value >= moment(cutoff, -1.0, 3) - 1e-12


def test_capital_lambda_amplitude_scaling():
    # amplitude c scales every moment by c^2; with the sup at n=1 the
    # whole constant scales by c^2 as well
    base = capital_lambda(RadialCutoff.sharp(1.0), 3, n_cap=30)
    scaled = capital_lambda(RadialCutoff.sharp(1.0, amplitude=2.0), 3,
                            n_cap=30)
    assert scaled.attained_at == 1
    assert scaled.value == pytest.approx(4.0 * base.value, rel=1e-10)


def test_capital_lambda_powerlaw_divergence_reported():
    with pytest.raises(DivergentIntegralError):
        capital_lambda(RadialCutoff.powerlaw(1.0, 2.0), 3, n_cap=30)


def test_cutoff_validation():
    with pytest.raises(ValueError):
        RadialCutoff.sharp(-1.0)
    with pytest.raises(ValueError):
        RadialCutoff("mystery", radius=1.0)
    with pytest.raises(ValueError):
        RadialCutoff.gaussian(1.0, amplitude=0.0)


def test_model_params_validation():
    c = RadialCutoff.sharp(1.0)
    p = ModelParams(3, 0.1, 0.25, KernelKind.BROWNIAN, c)
    assert p.momentum.shape == (3,)
    assert p.p_abs == pytest.approx(0.25)
    assert p.g == pytest.approx(0.0025)
    with pytest.raises(ValueError):
        ModelParams(2, 0.1, 0.0, KernelKind.BROWNIAN, c)
    with pytest.raises(ValueError):
        ModelParams(3, math.nan, 0.0, KernelKind.BROWNIAN, c)
    with pytest.raises(ValueError):
        ModelParams(3, 0.1, np.ones(4), KernelKind.BROWNIAN, c)
