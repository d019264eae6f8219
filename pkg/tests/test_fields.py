import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from besselmorrey.errors import DivergenceError, EmptyIntersectionError
from besselmorrey.fields import (Ball, BallIndicator, CustomTable, Gaussian, GridField, GridSpec, PhiProfile,
                                 PowerBump, RadialSpec, ball_integral, build_field, cap_fraction,
                                 lebesgue_norm, load_field, save_field, truncated_fraction)
from besselmorrey.spaces import ShapeFunction


def test_spec_invariants():
    with pytest.raises(ValueError):
        GridSpec(1, 4.0, 256)  # even
    with pytest.raises(ValueError):
        GridSpec(1, 4.0, 15)
    with pytest.raises(ValueError):
        GridSpec(4, 4.0, 17)
    g = GridSpec(1, 4.0, 257)
    assert g.axis()[g.center_index] == 0.0
    assert g.spacing == pytest.approx(8.0 / 257)
    with pytest.raises(ValueError):
        RadialSpec(1, r_min=0.0)
    with pytest.raises(ValueError):
        Ball((0.0,), 0.0)


def test_ball_indicator_mass():
    spec = GridSpec(1, 4.0, 257)
    f = build_field(BallIndicator((0.0,), 1.0), spec)
    assert abs(f.total_integral() - 2.0) <= spec.spacing


def test_phi_profile_exact():
    spec = RadialSpec(1)
    f = build_field(PhiProfile(ShapeFunction.power(2.0, 1)), spec)
    np.testing.assert_array_equal(f.values, f.radii ** -0.5)


def test_gaussian_mass_2d():
    f = build_field(Gaussian(1.0), GridSpec(2, 8.0, 129))
    assert f.total_integral() == pytest.approx(2 * math.pi, rel=5e-3)


def test_gaussian_ball_integral_second_order():
    # exact: int_{B(0,1)} e^{-r^2/2} dx in 2-D = 2 pi (1 - e^{-1/2})
    exact = 2 * math.pi * (1 - math.exp(-0.5))
    errs = []
    for N in (65, 129, 257):
        f = build_field(Gaussian(1.0), GridSpec(2, 4.0, N))
        errs.append(abs(ball_integral(f, Ball((0.0, 0.0), 1.0)) - exact))
    # boundary cells are subsampled, so require a clear (not exact 4x) decrease
    assert errs[2] < errs[0] / 2


def test_radial_gaussian_integrals():
    f = build_field(Gaussian(1.0), RadialSpec(3))
    assert f.total_integral() == pytest.approx((2 * math.pi) ** 1.5, rel=1e-10)
    exact = 2 * math.pi * (1 - math.exp(-0.5))
    g = build_field(Gaussian(1.0), RadialSpec(2))
    assert ball_integral(g, Ball((0.0, 0.0), 1.0)) == pytest.approx(exact, rel=1e-10)


def test_power_bump_divergence():
    with pytest.raises(DivergenceError):
        build_field(PowerBump(1.0, 1.0), RadialSpec(1))
    f = build_field(PowerBump(0.5, 1.0), RadialSpec(1))
    assert f.total_integral() == pytest.approx(4.0, rel=1e-10)  # 2 * int_0^1 r^-1/2


@pytest.mark.parametrize("make_spec", [lambda: GridSpec(1, 4.0, 257), lambda: RadialSpec(1)])
def test_ball_integral_examples(make_spec):
    spec = make_spec()
    f = build_field(BallIndicator((0.0,), 1.0), spec)
    tol = spec.spacing if isinstance(spec, GridSpec) else 1e-9
    assert ball_integral(f, Ball((0.0,), 1.0), 1) == pytest.approx(2.0, abs=tol)
    assert ball_integral(f, Ball((1.0,), 1.0), 1) == pytest.approx(1.0, abs=tol)
    assert ball_integral(f.scaled(2.0), Ball((0.0,), 1.0), 3) == pytest.approx(16.0, abs=8 * tol)


def test_empty_intersection():
    f = build_field(BallIndicator((0.0,), 1.0), GridSpec(1, 4.0, 65))
    with pytest.raises(EmptyIntersectionError):
        ball_integral(f, Ball((10.0,), 1.0))
    assert truncated_fraction(f.spec, Ball((4.0,), 1.0)) == pytest.approx(0.5, abs=0.05)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 3.0), st.floats(0.05, 3.0), st.floats(0.0, 1.5))
def test_ball_integral_monotone_in_radius(r1, r2, a):
    f = build_field(Gaussian(1.0), RadialSpec(2, per_decade=64))
    lo, hi = sorted((r1, r2))
    b1, b2 = Ball((a, 0.0), lo), Ball((a, 0.0), hi)
    assert ball_integral(f, b1) <= ball_integral(f, b2) * (1 + 1e-9) + 1e-12


def test_annulus_additivity_grid():
    spec = GridSpec(2, 4.0, 129)
    f = build_field(Gaussian(1.0), spec)
    outer = ball_integral(f, Ball((0.0, 0.0), 2.0))
    inner = ball_integral(f, Ball((0.0, 0.0), 1.0))
    r = spec.radius_array()
    ann = (f.values * ((r > 1.0) & (r <= 2.0))).sum() * spec.spacing**2
    cell = spec.spacing**2
    ring_cells = 2 * math.pi * 3.0 / spec.spacing  # boundary cells on both circles
    assert abs((outer - inner) - ann) <= ring_cells * cell


def test_cap_fraction_limits():
    # sphere |x| = rho inside B(a, r): 0 below |a - r|, 1 when the sphere is enclosed
    assert cap_fraction(np.array([0.5]), np.array([3.0]), np.array([1.0]), 3)[0] == 0.0
    assert cap_fraction(np.array([0.5]), np.array([0.2]), np.array([1.0]), 3)[0] == 1.0
    # n = 3: area fraction of the cap is (r^2 - (rho - a)^2) / (4 a rho)
    rho, a, r = 1.0, 1.0, 1.0
    assert cap_fraction(np.array([rho]), np.array([a]), np.array([r]), 3)[0] == pytest.approx(0.25, rel=1e-12)


def test_dilation():
    f = build_field(BallIndicator((0.0,), 1.0), RadialSpec(2))
    g = f.dilate(4.0)
    assert g.support == 0.25
    assert g.total_integral() == pytest.approx(f.total_integral() / 16, rel=1e-10)
    grid = build_field(Gaussian(1.0), GridSpec(1, 8.0, 65))
    assert grid.dilate(2.0).spec.half_width == 4.0


def test_lebesgue_norm_radial_power_tail():
    phi = ShapeFunction.power(1.5, 1)
    f = build_field(PhiProfile(phi), RadialSpec(1))
    assert math.isinf(lebesgue_norm(f, 1.0))
    assert math.isinf(lebesgue_norm(f, 1.5))


def test_custom_table():
    r = np.geomspace(1e-3, 1e3, 200)
    f = build_field(CustomTable(tuple(r), tuple(np.exp(-r))), RadialSpec(1))
    assert f.total_integral() == pytest.approx(2.0, rel=1e-3)


@pytest.mark.parametrize("fmt", ["binary", "csv"])
def test_save_load_roundtrip(tmp_path, fmt):
    g = build_field(Gaussian(1.0), GridSpec(2, 4.0, 33))
    h = save_field(g, tmp_path / "g", fmt)
    back = load_field(h)
    np.testing.assert_array_equal(back.values, g.values)
    assert back.spec == g.spec
    r = build_field(Gaussian(1.0), RadialSpec(1, per_decade=16))
    back = load_field(save_field(r, tmp_path / "r", fmt))
    np.testing.assert_array_equal(back.radii, r.radii)
    np.testing.assert_array_equal(back.values, r.values)


def test_binary_layout(tmp_path):
    g = GridField(GridSpec(1, 1.0, 17), np.arange(17.0))
    save_field(g, tmp_path / "x", "binary")
    raw = (tmp_path / "x.bin").read_bytes()
    assert raw[:16] == np.array([0.0, 1.0], dtype="<f8").tobytes()
