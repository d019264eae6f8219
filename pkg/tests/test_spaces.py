import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from besselmorrey.errors import ConfigError, DivergenceError, InfeasibleExponentError, InvalidShapeError
from besselmorrey.fields import BallIndicator, Gaussian, GridSpec, PhiProfile, RadialSpec, build_field, lebesgue_norm
from besselmorrey.kernel import KernelParams, riesz_morrey_closed_form, sampled_kernel
from besselmorrey.spaces import (BallLattice, ShapeFunction, check_class_gp, check_integral_condition,
                                 classical_morrey_norm, derive_shapes, morrey_norm, solve_exponents)


def test_solve_exponents_examples():
    assert solve_exponents(1.0, 2.0, None, 2.0).p2 == pytest.approx(2.0)
    assert solve_exponents(1.0, 2.0, 2.0, 4.0 / 3.0).q2 == pytest.approx(4.0)
    sol = solve_exponents(3.0, 1.2, None, 2.0)
    assert sol.p2 == pytest.approx(6.0) and sol.s_dual == pytest.approx(6.0)


def test_solve_exponents_errors_name_relation():
    with pytest.raises(InfeasibleExponentError, match=r"1/p2 = 1/p1 - 1/s'"):
        solve_exponents(3.0, 1.5, None, 2.0)
    with pytest.raises(InfeasibleExponentError, match=r"1/q2 = 1/q1 - 1/t'"):
        solve_exponents(1.0, 1.5, 3.0, 2.0)


def test_q2_endpoint_is_infinite():
    assert math.isinf(solve_exponents(1.0, 1.5, 2.0, 2.0).q2)


def test_shape_validation_and_dict():
    with pytest.raises(InvalidShapeError):
        ShapeFunction.table([1, 2], [1, 1], 1)  # under four decades
    with pytest.raises(InvalidShapeError):
        ShapeFunction.table([1e-3, 1, 1e2], [1, -1, 1], 1)
    with pytest.raises(ConfigError):
        ShapeFunction.from_dict({"kind": "power", "q": 2, "qq": 1}, 1)
    phi = ShapeFunction.from_dict({"kind": "power", "q": "inf"}, 1)
    assert phi.exponent == 0.0
    p = ShapeFunction.power(2.0, 1, c=3.0)
    assert ShapeFunction.from_dict(p.to_dict(), 1) == p


def test_derive_shapes_examples():
    psi, rho = derive_shapes(ShapeFunction.power(2.0, 1), 4.0)
    assert psi.exponent == pytest.approx(-0.25)
    assert rho.exponent == pytest.approx(0.5)
    assert psi(16.0) == pytest.approx(0.5)


def test_class_gp_power_law():
    rep = check_class_gp(ShapeFunction.power(2.0, 1), 1.0)
    assert rep.passed and rep.almost_decreasing == 1.0 and rep.almost_increasing == 1.0
    assert rep.doubling == pytest.approx(2**0.5)
    # phi^p r^n decreasing for q < p: not almost increasing
    assert not check_class_gp(ShapeFunction.power(1.0, 1), 2.0).passed
    lat = check_class_gp(ShapeFunction.power(2.0, 1), 1.0, method="lattice")
    assert lat.passed and lat.doubling == pytest.approx(2**0.5, rel=1e-2)


def test_class_gp_table_bumpy():
    r = np.geomspace(1e-4, 1e4, 400)
    phi = ShapeFunction.table(r, r**-0.5 * (1 + 0.6 * np.sin(np.log(r))), 1)
    rep = check_class_gp(phi, 1.0)
    assert rep.method == "lattice" and rep.passed
    assert 1.0 < rep.almost_decreasing < 5.0 and rep.almost_increasing > 1.0


@pytest.mark.parametrize("which,kw,want", [("i", dict(t_dual=4.0), 4.0), ("ii", dict(p1=1.0), 2.0),
                                           ("iii", dict(s_dual=1.5), 4.0)])
def test_integral_condition_examples(which, kw, want):
    phi = ShapeFunction.power(2.0, 1)
    assert check_integral_condition(which, phi, **kw).constant == pytest.approx(want, rel=1e-12)
    q = check_integral_condition(which, phi, method="quadrature", **kw)
    assert q.constant == pytest.approx(want, rel=1e-6)


def test_integral_condition_divergence():
    phi = ShapeFunction.power(2.0, 1)
    with pytest.raises(DivergenceError) as e:
        check_integral_condition("i", phi, t_dual=2.0)
    assert e.value.endpoint == "infinity"
    with pytest.raises(DivergenceError) as e:
        check_integral_condition("iii", phi, s_dual=4.0)
    assert e.value.endpoint == "0"


def test_integral_condition_table_matches_power():
    r = np.geomspace(1e-4, 1e4, 300)
    tab = ShapeFunction.table(r, r**-0.5, 1)
    got = check_integral_condition("ii", tab, p1=1.0).constant
    assert got == pytest.approx(2.0, rel=5e-3)


def test_morrey_reduces_to_lebesgue():
    # q = p: |B|^0 ||f||_{L^p(B)}, sup over balls -> ||f||_p
    for p in (1.0, 2.0):
        f = build_field(Gaussian(1.0), RadialSpec(1))
        est = classical_morrey_norm(f, p, p)
        assert est.value == pytest.approx(lebesgue_norm(f, p), rel=1e-6)


def test_morrey_grid_indicator():
    # ||chi_[-1,1]||_{L^{1,2}} = sup |B|^{-1/2} |B cap [-1,1]| = sqrt(2)
    f = build_field(BallIndicator((0.0,), 1.0), GridSpec(1, 4.0, 257))
    est = classical_morrey_norm(f, 1.0, 2.0)
    assert est.value == pytest.approx(math.sqrt(2), rel=0.01)
    assert est.method == "ball-search" and est.argmax_ball is not None
    g = build_field(BallIndicator((0.0,), 1.0), RadialSpec(1))
    assert classical_morrey_norm(g, 1.0, 2.0).value == pytest.approx(math.sqrt(2), rel=1e-6)


def test_morrey_kernel_closed_form_2d():
    k = KernelParams(0.5, 0.0, 2)
    est = classical_morrey_norm(sampled_kernel(k), 1.0, k.critical_t)
    assert est.value == pytest.approx(riesz_morrey_closed_form(0.5, 1.0, 2), rel=1e-8)


def test_morrey_weight_vanishing_at_zero_is_infinite():
    f = build_field(Gaussian(1.0), RadialSpec(1))
    est = morrey_norm(f, 1.0, ShapeFunction.power(-2.0, 1))  # phi = r^{1/2}
    assert math.isinf(est.value) and est.method == "closed-form"


def test_zero_field():
    f = build_field(Gaussian(1.0), RadialSpec(1)).scaled(0.0)
    assert morrey_norm(f, 1.0, ShapeFunction.power(2.0, 1)).value == 0.0


def test_refinement_never_drops_beyond_indicator():
    f = build_field(Gaussian(1.0), GridSpec(2, 4.0, 65))
    phi = ShapeFunction.classical(3.0, 2)
    base = morrey_norm(f, 1.0, phi)
    fine = morrey_norm(f, 1.0, phi, lattice=BallLattice().finer())
    assert fine.value >= base.value * (1 - base.error_indicator) - 1e-12


@settings(max_examples=15, deadline=None)
@given(st.floats(0.1, 10.0))
def test_morrey_homogeneous(c):
    f = build_field(Gaussian(1.0), RadialSpec(1, per_decade=64))
    phi = ShapeFunction.classical(2.0, 1)
    a = morrey_norm(f, 1.5, phi, indicator=False).value
    b = morrey_norm(f.scaled(c), 1.5, phi, indicator=False).value
    assert b == pytest.approx(c * a, rel=1e-10)


def test_classical_dilation_law():
    # ||f(lam .)||_{L^{p,q}} = lam^{-n/q} ||f||_{L^{p,q}}
    f = build_field(Gaussian(1.0), RadialSpec(2))
    a = classical_morrey_norm(f, 1.0, 1.5).value
    b = classical_morrey_norm(f.dilate(4.0), 1.0, 1.5).value
    assert b == pytest.approx(4.0 ** (-2 / 1.5) * a, rel=1e-3)
