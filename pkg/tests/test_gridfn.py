"""Modular, Luxemburg and Sobolev norms against closed-form discrete oracles."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orliczkit import gridfn, young
from orliczkit.errors import StencilError
from orliczkit.gridfn import Ball, Grid, GridFunction


@pytest.fixture(scope="module")
def phi2():
    return young.make_power(2.0)


@pytest.fixture(scope="module")
def phi3():
    return young.make_power(3.0)


def unit_square(n=16, topology="torus"):
    return Grid(dim=2, n=n, topology=topology)


# -- modular -----------------------------------------------------------------


def test_modular_constant(phi2):
    g = unit_square()
    f = gridfn.gen_constant(g, 2.0)
    assert gridfn.modular(f, phi2) == pytest.approx(4.0, rel=1e-12)


def test_modular_zero(phi2):
    g = unit_square()
    f = gridfn.gen_constant(g, 0.0)
    assert gridfn.modular(f, phi2) == 0.0


def test_modular_quarter_indicator(phi3):
    # direct sum over the indicator's cells: count * h^2 * Phi(1)
    g = unit_square(16)
    f = gridfn.gen_indicator(g, (0.0, 0.0), (0.5, 0.5))
    count = int(f.values.sum())
    assert count == 64
    assert gridfn.modular(f, phi3) == pytest.approx(count * g.cell_measure, rel=1e-14)
    assert gridfn.modular(f, phi3) == pytest.approx(0.25, rel=1e-14)


def test_modular_overflow_reported():
    g = unit_square()
    f = gridfn.gen_constant(g, 1000.0)
    phi = young.make_exp_minus_one()
    with pytest.raises(gridfn.ModularOverflowError):
        gridfn.modular(f, phi)


# -- Luxemburg norm -------------------------------------------------------------


def test_luxemburg_constant_one(phi2):
    g = unit_square()
    f = gridfn.gen_constant(g, 1.0)
    assert gridfn.luxemburg_norm(f, phi2) == pytest.approx(1.0, rel=1e-11)


def test_luxemburg_indicator_closed_form(phi2):
    # lam = c / Phi^{-1}(1/|E|): for Phi = t^2, c=1, |E| = 1/4 -> 0.5
    g = unit_square(16)
    f = gridfn.gen_indicator(g, (0.0, 0.0), (0.5, 0.5))
    assert gridfn.luxemburg_norm(f, phi2) == pytest.approx(0.5, rel=1e-10)


def test_luxemburg_zero(phi2):
    g = unit_square()
    assert gridfn.luxemburg_norm(gridfn.gen_constant(g, 0.0), phi2) == 0.0


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_luxemburg_matches_lp_on_random_fields(p):
    """50 seeded random fields: the norm equals the discrete L^p norm."""
    phi = young.make_power(p)
    g = unit_square(12)
    rng = np.random.default_rng(1234)
    for _ in range(50):
        vals = rng.normal(size=g.shape) * rng.uniform(0.1, 10.0)
        f = GridFunction(g, vals)
        exact = (np.sum(np.abs(vals) ** p) * g.cell_measure) ** (1.0 / p)
        assert gridfn.luxemburg_norm(f, phi) == pytest.approx(exact, rel=1e-10)


def test_luxemburg_unit_ball_characterization(phi2):
    g = unit_square(12)
    rng = np.random.default_rng(7)
    for _ in range(5):
        f = GridFunction(g, rng.normal(size=g.shape))
        lam = gridfn.luxemburg_norm(f, phi2)
        assert gridfn.modular(GridFunction(g, f.values / lam), phi2) <= 1.0 + 1e-12
        assert gridfn.modular(GridFunction(g, f.values / (lam * (1 - 1e-10))), phi2) >= 1.0 - 1e-9


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([0.1, 3.0, -2.0]), st.integers(0, 2**31 - 1))
def test_luxemburg_scaling(c, seed):
    phi = young.make_t_log()
    g = Grid(dim=1, n=32)
    f = gridfn.gen_random_smooth(g, seed=seed, kmax=4)
    base = gridfn.luxemburg_norm(f, phi)
    scaled = gridfn.luxemburg_norm(f.scale(c), phi)
    assert scaled == pytest.approx(abs(c) * base, rel=1e-9, abs=1e-300)


def test_luxemburg_triangle_inequality():
    phi = young.make_power_log(2.0)
    g = unit_square(10)
    rng = np.random.default_rng(99)
    for _ in range(8):
        f = GridFunction(g, rng.normal(size=g.shape))
        h = GridFunction(g, rng.normal(size=g.shape))
        nf, nh = gridfn.luxemburg_norm(f, phi), gridfn.luxemburg_norm(h, phi)
        nfh = gridfn.luxemburg_norm(f + h, phi)
        assert nfh <= nf + nh + 1e-9 * (nf + nh)


# -- finite differences ------------------------------------------------------------


def test_fd_linear_exact_on_rectangle():
    g = unit_square(16, topology="rect")
    u = gridfn.gen_ramp(g, axis=0)
    du = gridfn.finite_difference(u, (1, 0))
    inner = gridfn.interior_mask(g, du.margins)
    assert np.allclose(du.values[inner], 1.0, atol=1e-12)


def test_fd_constant_zero():
    g = unit_square(16)
    u = gridfn.gen_constant(g, 3.0)
    for alpha in [(1, 0), (0, 2), (2, 2)]:
        assert np.max(np.abs(gridfn.finite_difference(u, alpha).values)) <= 1e-12


def test_fd_second_order_convergence():
    """D^(2,0) sin(2 pi x): error ratio between N and 2N in [3.6, 4.4]."""
    errs = []
    for n in (32, 64):
        g = Grid(dim=2, n=n)
        u = gridfn.gen_sin(g, freq=(1, 0))
        d2 = gridfn.finite_difference(u, (2, 0))
        exact = -(2 * np.pi) ** 2 * u.values
        errs.append(np.sqrt(np.mean((d2.values - exact) ** 2)))
    ratio = errs[0] / errs[1]
    assert 3.6 <= ratio <= 4.4


def test_fd_quartic_stencil():
    # order-4 axis stencil is exact on x^4
    g = Grid(dim=1, n=32, topology="rect")
    x = g.axis_coords(0)
    u = GridFunction(g, x**4)
    d4 = gridfn.finite_difference(u, (4,))
    inner = gridfn.interior_mask(g, d4.margins)
    assert np.allclose(d4.values[inner], 24.0, rtol=1e-9)


def test_fd_stencil_margin_tracking():
    g = unit_square(16, topology="rect")
    u = gridfn.gen_ramp(g, axis=0)
    d = gridfn.finite_difference(u, (3, 1))
    assert d.margins == (2, 1)


# -- Sobolev-Orlicz norm --------------------------------------------------------------


def test_sobolev_constant(phi2):
    g = unit_square(16)
    u = gridfn.gen_constant(g, 1.0)
    assert gridfn.sobolev_orlicz_norm(u, phi2, order=2) == pytest.approx(1.0, rel=1e-10)


def test_sobolev_quadratic_closed_form(phi2):
    """u = x^2 on a rectangle: every term has a closed-form discrete L^2 norm."""
    g = unit_square(32, topology="rect")
    x = g.mesh()[0]
    u = GridFunction(g, x**2)
    margins = gridfn.fd_margins(2, 2)
    region = gridfn.interior_mask(g, margins)
    meas = g.cell_measure

    def l2(vals):
        return math.sqrt(float(np.sum(vals[region] ** 2)) * meas)

    # oracle: |alpha|=0 term x^2; (1,0) -> 2x; (2,0) -> 2; all others vanish
    expected = l2(x**2) + l2(2 * x) + l2(np.full(g.shape, 2.0))
    assert gridfn.sobolev_orlicz_norm(u, phi2, 2) == pytest.approx(expected, rel=1e-9)
    assert gridfn.sobolev_orlicz_norm(u, phi2, 2, region=region) == \
        pytest.approx(expected, rel=1e-9)


def test_sobolev_monotone_in_region(phi2):
    g = unit_square(32)
    u = gridfn.gen_gaussian_bump(g, width=0.15)
    big = Ball((0.5, 0.5), 0.3)
    small = Ball((0.5, 0.5), 0.15)
    assert gridfn.sobolev_orlicz_norm(u, phi2, 2, region=small) <= \
        gridfn.sobolev_orlicz_norm(u, phi2, 2, region=big) + 1e-12


def test_region_margin_conflict_raises(phi2):
    g = unit_square(16, topology="rect")
    u = gridfn.gen_ramp(g, axis=0)
    d = gridfn.finite_difference(u, (1, 0))
    hugging = Ball((0.03125, 0.53125), 0.01)  # one cell center inside the margin strip
    with pytest.raises(StencilError):
        gridfn.luxemburg_norm(d, phi2, region=hugging)


# -- Jensen ---------------------------------------------------------------------------


def test_jensen_constant_equality(phi2):
    g = unit_square()
    lhs, rhs = gridfn.jensen_check(gridfn.gen_constant(g, 1.7), phi2)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_jensen_alternating(phi2):
    g = Grid(dim=1, n=16)
    vals = np.where(np.arange(16) % 2 == 0, 1.0, -1.0)
    lhs, rhs = gridfn.jensen_check(GridFunction(g, vals), phi2)
    assert lhs == pytest.approx(1.0) and rhs == pytest.approx(1.0)


def test_jensen_two_level(phi2):
    g = Grid(dim=1, n=16)
    vals = np.where(np.arange(16) < 8, 0.0, 2.0)
    lhs, rhs = gridfn.jensen_check(GridFunction(g, vals), phi2)
    assert lhs == pytest.approx(1.0) and rhs == pytest.approx(2.0)
    assert lhs <= rhs


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_jensen_random(seed):
    phi = young.make_t_log()
    g = Grid(dim=1, n=32)
    f = gridfn.gen_random_smooth(g, seed=seed, kmax=5)
    lhs, rhs = gridfn.jensen_check(f, phi)
    assert lhs <= rhs * (1 + 1e-12) + 1e-300


# -- serialization ------------------------------------------------------------------------


def test_binary_round_trip(tmp_path):
    g = Grid(dim=2, n=8, topology="rect", side=2.0, origin=(0.5, -1.0))
    f = gridfn.gen_gaussian_bump(g, center=(1.5, 0.0), width=0.3)
    p = tmp_path / "f.ogf"
    gridfn.save_binary(f, p)
    f2 = gridfn.load_binary(p)
    assert f2.grid == g
    assert np.array_equal(f2.values, f.values)


def test_binary_round_trip_vector(tmp_path):
    g = Grid(dim=1, n=8)
    f = GridFunction(g, np.stack([np.arange(8.0), np.arange(8.0) ** 2]))
    p = tmp_path / "v.ogf"
    gridfn.save_binary(f, p)
    f2 = gridfn.load_binary(p)
    assert f2.components == 2
    assert np.array_equal(f2.values, f.values)


def test_csv_export(tmp_path):
    g = Grid(dim=1, n=8)
    f = gridfn.gen_ramp(g)
    p = tmp_path / "f.csv"
    gridfn.to_csv(f, p)
    lines = p.read_text().strip().splitlines()
    assert lines[0] == "i0,c0"
    assert len(lines) == 9


# -- misc -----------------------------------------------------------------------------


def test_vector_magnitude_reduction(phi2):
    g = Grid(dim=1, n=8)
    f = GridFunction(g, np.stack([np.full(8, 3.0), np.full(8, 4.0)]))
    assert gridfn.modular(f, phi2) == pytest.approx(25.0, rel=1e-12)


def test_grid_invariants():
    with pytest.raises(ValueError):
        Grid(dim=2, n=4)
    with pytest.raises(ValueError):
        Grid(dim=4, n=16)
    g = Grid(dim=3, n=8)
    assert g.cell_measure == pytest.approx(g.h**3)


def test_ball_needs_a_point():
    g = unit_square(16)
    with pytest.raises(ValueError):
        gridfn.ball_mask(g, Ball((0.0, 0.0), 1e-9))  # cell corner, no center within 1e-9
