import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from besselmorrey.common import ball_volume, dual_exponent, sphere_area
from besselmorrey.errors import DivergenceError, SingularityError
from besselmorrey.kernel import (ExponentPair, KernelParams, eval_kernel, kernel_lebesgue_norm,
                                 kernel_radial, riesz_centered_ball_value, riesz_morrey_closed_form)


def test_geometry_constants():
    assert sphere_area(1) == pytest.approx(2.0)
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)
    assert ball_volume(3) == pytest.approx(4 * math.pi / 3)
    for n in range(1, 7):
        assert sphere_area(n) == pytest.approx(n * ball_volume(n))


def test_dual_exponent():
    assert dual_exponent(2.0) == 2.0
    assert dual_exponent(4.0 / 3.0) == pytest.approx(4.0)
    assert math.isinf(dual_exponent(1.0))
    assert dual_exponent(math.inf) == 1.0


def test_params_validation():
    with pytest.raises(ValueError):
        KernelParams(0.0, 0.0, 1)
    with pytest.raises(ValueError):
        KernelParams(1.0, 0.0, 1)
    with pytest.raises(ValueError):
        KernelParams(0.5, -1.0, 1)
    k = KernelParams(0.5, 1.0, 1)
    assert k.critical_t == 2.0 and k.lower_t == pytest.approx(2 / 3)
    assert k.riesz == KernelParams(0.5, 0.0, 1)
    with pytest.raises(ValueError):
        ExponentPair(0.5, 2.0)


def test_eval_kernel_examples():
    k = KernelParams(0.5, 1.0, 1)
    assert eval_kernel([1.0], k) == pytest.approx(0.5)
    assert eval_kernel([4.0], KernelParams(0.5, 0.0, 1)) == pytest.approx(0.5)
    assert eval_kernel([3.0, 4.0], KernelParams(1.0, 0.0, 2)) == pytest.approx(0.2)
    with pytest.raises(SingularityError):
        eval_kernel([0.0, 0.0], KernelParams(1.0, 0.0, 2))


@given(st.floats(0.05, 0.95), st.floats(0.0, 3.0), st.floats(1e-3, 1e3))
def test_bessel_below_riesz(a, g, r):
    k = KernelParams(a, g, 1)
    assert kernel_radial(r, k) <= kernel_radial(r, k.riesz) * (1 + 1e-12)


mp.mp.dps = 30
# tanh-sinh handles algebraic endpoint singularities best on geometrically split ranges
_SPLIT = [mp.mpf(10) ** -j for j in range(12, 0, -1)]


def _mp_lebesgue(k, t):
    n = k.dim
    f = lambda r: r ** ((k.alpha - n) * t + n - 1) * (1 + r) ** (-k.gamma * t)
    return (sphere_area(n) * mp.quad(f, [0] + _SPLIT + [1, mp.inf])) ** (1 / t)


@pytest.mark.parametrize("a,g,n,t", [(0.5, 1.0, 1, 1.0), (0.5, 1.0, 1, 1.5), (1.0, 2.0, 2, 1.5), (2.0, 2.0, 3, 1.2)])
def test_lebesgue_norm_matches_mpmath(a, g, n, t):
    k = KernelParams(a, g, n)
    est = kernel_lebesgue_norm(k, t)
    assert est.value == pytest.approx(float(_mp_lebesgue(k, t)), rel=1e-8)
    assert est.method == "quadrature" and est.error_indicator < 1e-6


def test_lebesgue_divergence_endpoints():
    with pytest.raises(DivergenceError) as e:
        kernel_lebesgue_norm(KernelParams(0.5, 0.0, 1), 1.5)
    assert e.value.endpoint == "both"
    k = KernelParams(0.5, 1.0, 1)
    with pytest.raises(DivergenceError) as e:
        kernel_lebesgue_norm(k, 2.5)
    assert e.value.endpoint == "0"
    with pytest.raises(DivergenceError) as e:
        kernel_lebesgue_norm(k, 0.6)
    assert e.value.endpoint == "infinity"


def test_closed_form_examples():
    assert riesz_morrey_closed_form(0.5, 1.0, 1) == pytest.approx(2 * math.sqrt(2), rel=1e-14)
    for a in (0.5, 0.25, 0.125):
        assert riesz_morrey_closed_form(a, 1.0, 1) == pytest.approx(2 ** (1 - a) / a, rel=1e-14)
    with pytest.raises(DivergenceError):
        riesz_morrey_closed_form(0.5, 2.0, 1)


@pytest.mark.parametrize("a,s,n", [(0.5, 1.0, 1), (0.5, 1.25, 2), (1.5, 1.1, 3)])
def test_closed_form_matches_mpmath_ball_integral(a, s, n):
    # independent oracle: |B|^(1/t - 1/s) (int_B |x|^((a-n)s))^(1/s) on B(0, 1.7)
    t = n / (n - a)
    R = mp.mpf("1.7")
    mass = sphere_area(n) * mp.quad(lambda u: mp.exp(-u * ((a - n) * s + n)), [-mp.log(R), mp.inf])  # r = e^-u
    vol = ball_volume(n) * R**n
    want = vol ** (1 / t - 1 / s) * mass ** (1 / s)
    assert riesz_morrey_closed_form(a, s, n) == pytest.approx(float(want), rel=1e-10)


def test_p_closed_form_column():
    # ||K_a||_{L^{p1,t}}^{p1} = C / ((a - n) p1 + n)
    for a in (0.5, 0.4, 0.3):
        v = riesz_morrey_closed_form(a, 1.2, 1) ** 1.2
        assert v * ((a - 1) * 1.2 + 1) == pytest.approx(2 * ball_volume(1) ** (1.2 * (1 - a) - 1), rel=1e-12)


@settings(max_examples=30)
@given(st.floats(0.1, 0.9), st.floats(-6, 6))
def test_centered_ball_value_radius_free(a, logr):
    v0 = riesz_centered_ball_value(a, 1.0, 1, 1.0)
    assert riesz_centered_ball_value(a, 1.0, 1, 10.0**logr) == pytest.approx(v0, rel=1e-9)
