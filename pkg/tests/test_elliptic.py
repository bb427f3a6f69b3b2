"""Elliptic systems: symbols, fundamental solutions, cutoffs, interior estimates."""

import math

import numpy as np
import pytest
import sympy as sp

from orliczkit import elliptic, gridfn, young
from orliczkit.errors import (
    AnnulusResolutionError,
    NotEllipticError,
    UnsupportedFamilyError,
)
from orliczkit.gridfn import Ball, Grid, GridFunction


def bump_field(grid, center, radius, power=6):
    rho = grid.distance(center)
    return GridFunction(grid, np.where(rho < radius, (1 - (rho / radius) ** 2) ** power, 0.0))


# -- ellipticity -----------------------------------------------------------------


def test_ellipticity_laplacian():
    g = Grid(dim=2, n=16)
    assert elliptic.ellipticity_constant(elliptic.laplacian_system(g)) == pytest.approx(1.0, abs=1e-12)


def test_ellipticity_biharmonic():
    g = Grid(dim=2, n=16)
    assert elliptic.ellipticity_constant(elliptic.biharmonic_system(g)) == pytest.approx(1.0, abs=1e-12)


def test_ellipticity_anisotropic_closed_form():
    # min over the circle of z1^2 + 4 z2^2 is 1
    g = Grid(dim=2, n=16)
    sys = elliptic.anisotropic_second_order(g, (1.0, 4.0))
    assert elliptic.ellipticity_constant(sys) == pytest.approx(1.0, abs=1e-9)


def test_ellipticity_sampling_stability():
    g = Grid(dim=2, n=16)
    sys = elliptic.anisotropic_second_order(g, (2.0, 3.0))
    d1 = elliptic.ellipticity_constant(sys, n_dirs=720)
    d2 = elliptic.ellipticity_constant(sys, n_dirs=1440)
    assert abs(d1 - d2) <= 0.01 * d1


def test_not_elliptic_detected():
    g = Grid(dim=2, n=16)
    coeffs = {(2, 0): np.array([[1.0]]), (0, 2): np.array([[-1.0]])}
    sys = elliptic.EllipticSystem(g, 1, 1, coeffs, label="hyperbolic")
    with pytest.raises(NotEllipticError):
        elliptic.ellipticity_constant(sys)


# -- freezing and cofactors -------------------------------------------------------


def test_freeze_scalar_cofactor_trivial():
    g = Grid(dim=2, n=16)
    fr = elliptic.freeze(elliptic.laplacian_system(g), (0.5, 0.5))
    assert fr.verify_cofactor_identity() <= 1e-10
    z = np.array([0.3, -0.7])
    assert fr.cofactor_matrix(z)[0, 0] == pytest.approx(1.0)


def test_freeze_decoupled_cofactors_swap():
    g = Grid(dim=2, n=16)
    fr = elliptic.freeze(elliptic.decoupled_system(g), (0.25, 0.75))
    z = np.array([0.6, 0.8])
    cof = fr.cofactor_matrix(z)
    l = fr.symbol_matrix(z)
    assert cof[0, 0] == pytest.approx(l[1, 1])
    assert cof[1, 1] == pytest.approx(l[0, 0])
    assert cof[0, 1] == pytest.approx(0.0) and cof[1, 0] == pytest.approx(0.0)


def test_freeze_coupled_cofactor_identity():
    g = Grid(dim=2, n=16)
    fr = elliptic.freeze(elliptic.coupled_second_order(g, c=0.7), (0.5, 0.5))
    assert fr.verify_cofactor_identity(samples=100) <= 1e-10


def test_freeze_variable_coefficients_sampled():
    g = Grid(dim=2, n=32)
    sys = elliptic.isotropic_perturbed_system(g, eps=0.3, freq=1)
    x0 = (g.axis_coords(0)[8], g.axis_coords(1)[3])
    fr = elliptic.freeze(sys, x0)
    expected = 1.0 + 0.3 * math.sin(2 * math.pi * x0[0])
    assert fr.matrices[(2, 0)][0, 0] == pytest.approx(expected, rel=1e-12)


# -- fundamental solutions ----------------------------------------------------------


@pytest.fixture(scope="module")
def laplace_fk():
    g = Grid(dim=3, n=16)
    fr = elliptic.freeze(elliptic.laplacian_system(g), (0.5, 0.5, 0.5))
    return elliptic.fundamental_kernel(fr)


def test_laplace_gamma_closed_form(laplace_fk):
    # -1/(4 pi |x|), homogeneity degree 2bm - n = -1
    xs = laplace_fk._symbols
    val = float(laplace_fk.gamma_tilde.subs({xs[0]: 0.3, xs[1]: 0.0, xs[2]: 0.4}))
    assert val == pytest.approx(-1.0 / (4.0 * math.pi * 0.5), rel=1e-12)


def test_laplace_d2_kernels_cancel(laplace_fk):
    # validate_kernel already ran in the fixture; spot-check the sphere form
    kern = laplace_fk.derivative_kernels[(0, 0, (2, 0, 0))]
    w = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    vals = kern.sphere_part(None, w)
    # (3 w1^2 - 1) / (4 pi) ... with the sign of the solution
    assert vals[0] == pytest.approx(-2.0 / (4.0 * math.pi), rel=1e-9)
    assert vals[1] == pytest.approx(1.0 / (4.0 * math.pi), rel=1e-9)


def test_laplace_convolution_identity(laplace_fk):
    res = elliptic.convolution_identity_residual(laplace_fk, n=48)
    assert res <= 0.01


def test_anisotropic_convolution_identity():
    g = Grid(dim=3, n=16)
    fr = elliptic.freeze(elliptic.anisotropic_second_order(g, (1.0, 1.0, 4.0)), (0.5, 0.5, 0.5))
    fk = elliptic.fundamental_kernel(fr)
    res = elliptic.convolution_identity_residual(fk, n=48)
    assert res <= 0.01


def test_biharmonic_kernels_validate():
    g = Grid(dim=3, n=16)
    fr = elliptic.freeze(elliptic.biharmonic_system(g), (0.5, 0.5, 0.5))
    fk = elliptic.fundamental_kernel(fr)  # validation runs in the constructor
    # gamma_tilde = -|x|/(8 pi)
    xs = fk._symbols
    val = float(fk.gamma_tilde.subs({xs[0]: 0.3, xs[1]: 0.0, xs[2]: 0.4}))
    assert val == pytest.approx(-0.5 / (8.0 * math.pi), rel=1e-12)
    assert len(fk.derivative_kernels) == len(gridfn.multi_indices(3, 4, exact=True))


def test_decoupled_fundamental_matrix():
    """det = |z|^4, cofactors are the swapped Laplacians: entries -1/(4 pi |x|).

    Constructor validation covers the derivative kernels of every entry.
    """
    g = Grid(dim=3, n=16)
    fr = elliptic.freeze(elliptic.decoupled_system(g), (0.5, 0.5, 0.5))
    fk = elliptic.fundamental_kernel(fr)
    ev = fk.gamma_eval(0, 0)
    pts = np.array([[0.5, 0.0, 0.0]])
    assert ev(pts)[0] == pytest.approx(-1.0 / (4.0 * math.pi * 0.5), rel=1e-9)
    off = fk.gamma_eval(0, 1)
    assert abs(off(pts)[0]) <= 1e-14


def test_scaled_block_still_supported():
    # det = 2 |z|^4 = (z . sqrt(2) z)^2: a scalar multiple stays in the family
    g = Grid(dim=3, n=16)
    coeffs = {}
    for ax in range(3):
        alpha = tuple(2 if j == ax else 0 for j in range(3))
        coeffs[alpha] = np.array([[1.0, 0.0], [0.0, 2.0]])
    sys = elliptic.EllipticSystem(g, 2, 1, coeffs, label="scaled-block")
    fk = elliptic.fundamental_kernel(elliptic.freeze(sys, (0.5, 0.5, 0.5)), validate=False)
    assert np.allclose(fk.quadratic_form, math.sqrt(2.0) * np.eye(3), rtol=1e-9)


def test_unsupported_family_rejected():
    # det = |z|^2 (z1^2 + 4 z2^2 + z3^2): product of distinct forms
    g = Grid(dim=3, n=16)
    coeffs = {}
    for ax, d in enumerate((1.0, 4.0, 1.0)):
        alpha = tuple(2 if j == ax else 0 for j in range(3))
        coeffs[alpha] = np.array([[1.0, 0.0], [0.0, d]])
    sys = elliptic.EllipticSystem(g, 2, 1, coeffs, label="mismatched-block")
    fr = elliptic.freeze(sys, (0.5, 0.5, 0.5))
    with pytest.raises(UnsupportedFamilyError):
        elliptic.fundamental_kernel(fr)


def test_even_dimension_rejected():
    g = Grid(dim=2, n=16)
    fr = elliptic.freeze(elliptic.laplacian_system(g), (0.5, 0.5))
    with pytest.raises(UnsupportedFamilyError):
        elliptic.fundamental_kernel(fr)


# -- representation formula ------------------------------------------------------------


def test_representation_zero_field():
    g = Grid(dim=2, n=32)
    sys = elliptic.laplacian_system(g)
    rep = elliptic.representation_residual(sys, gridfn.gen_constant(g, 0.0), (2, 0))
    assert rep.residual_l2 == pytest.approx(0.0, abs=1e-14)


def test_representation_constant_coefficients_2d():
    g = Grid(dim=2, n=128)
    sys = elliptic.laplacian_system(g)
    v = bump_field(g, (0.5, 0.5), 0.2)
    rep = elliptic.representation_residual(sys, v, (1, 1))
    assert rep.residual_l2 / rep.lhs_l2 <= 0.02


def test_representation_perturbed_convergence_order():
    res = {}
    for n in (64, 128):
        g = Grid(dim=2, n=n)
        sys = elliptic.isotropic_perturbed_system(g, eps=0.1, freq=1)
        v = bump_field(g, (0.5, 0.5), 0.2)
        rep = elliptic.representation_residual(sys, v, (2, 0))
        res[n] = rep.residual_l2 / rep.lhs_l2
    assert res[128] <= res[64] / 2**0.9


def test_representation_3d_quadrature():
    g = Grid(dim=3, n=32, topology="rect")
    sys = elliptic.laplacian_system(g)
    v = bump_field(g, (0.5, 0.5, 0.5), 0.2)
    rep = elliptic.representation_residual(sys, v, (2, 0, 0))
    assert rep.method == "quadrature"
    assert rep.residual_l2 / rep.lhs_l2 <= 0.10


def test_representation_decoupled_componentwise():
    g = Grid(dim=2, n=64)
    sys = elliptic.decoupled_system(g)
    b1 = bump_field(g, (0.5, 0.5), 0.2)
    b2 = bump_field(g, (0.45, 0.55), 0.18)
    v = GridFunction(g, np.stack([b1.values, b2.values]))
    rep = elliptic.representation_residual(sys, v, (2, 0))
    assert rep.method.endswith("componentwise")
    assert rep.residual_l2 / rep.lhs_l2 <= 0.02
    with pytest.raises(UnsupportedFamilyError):
        elliptic.representation_residual(elliptic.coupled_second_order(g, 0.5), v, (2, 0))


def test_interior_estimate_vector_field(phi2):
    """Decoupled system with a two-component manufactured field."""
    g = Grid(dim=2, n=64, topology="rect")
    sys = elliptic.decoupled_system(g)
    u1 = gridfn.gen_sin(g, freq=(1, 1))
    u2 = gridfn.gen_gaussian_bump(g, center=(0.5, 0.5), width=0.2)
    u = GridFunction(g, np.stack([u1.values, u2.values]))
    rep = elliptic.interior_estimate(sys, u, phi2, r=0.2, centers=[(0.5, 0.5)])[0]
    assert np.isfinite(rep.c_emp) and rep.c_emp > 0


# -- cutoff ------------------------------------------------------------------------------


def test_cutoff_plateau_and_support():
    g = Grid(dim=2, n=64)
    cut = elliptic.cutoff(g, (0.5, 0.5), r=0.4, theta=0.5)
    rho = g.distance((0.5, 0.5))
    assert np.all(cut.values[rho < 0.5 * 0.4] == 1.0)
    theta_p = 0.5 * (3 - 0.5) / 2
    assert np.all(cut.values[rho > theta_p * 0.4] == 0.0)
    assert np.all((0.0 <= cut.values) & (cut.values <= 1.0))


def test_cutoff_theta_prime_value():
    # theta = 1/2 -> theta' = 5/8
    assert 0.5 * (3 - 0.5) / 2 == pytest.approx(5.0 / 8.0)


def test_cutoff_derivative_constants_stable():
    vals = []
    for n in (128, 256):
        g = Grid(dim=2, n=n)
        cut = elliptic.cutoff(g, (0.5, 0.5), r=0.45, theta=0.5)
        vals.append(elliptic.cutoff_derivative_constants(cut, 0.45, 0.5)[1])
    assert abs(vals[0] - vals[1]) <= 0.10 * max(vals)


def test_cutoff_thin_annulus_rejected():
    g = Grid(dim=2, n=16)
    with pytest.raises(AnnulusResolutionError):
        elliptic.cutoff(g, (0.5, 0.5), r=0.1, theta=0.5)


def test_smoothstep_quintic():
    s = np.array([0.0, 0.5, 1.0])
    out = elliptic.smoothstep(2, s)
    assert out[0] == 0.0 and out[2] == 1.0
    assert out[1] == pytest.approx(6 * 0.5**5 - 15 * 0.5**4 + 10 * 0.5**3)


# -- interpolation inequality ----------------------------------------------------------


def test_interpolation_constant_field_vacuous():
    g = Grid(dim=2, n=32)
    phi = young.make_power(2.0)
    rows = elliptic.interpolation_check(gridfn.gen_constant(g, 3.0), phi, b=2,
                                        center=(0.5, 0.5), r=0.3, theta=0.75,
                                        mu_list=[0.5, 1.0])
    assert all(row["required_c"] == 0.0 for row in rows)


def test_interpolation_large_mu_dominated():
    g = Grid(dim=2, n=64)
    phi = young.make_power(2.0)
    u = gridfn.gen_sin(g, freq=(1, 1))
    rows = elliptic.interpolation_check(u, phi, b=2, center=(0.5, 0.5), r=0.3,
                                        theta=0.75, mu_list=[100.0])
    assert all(row["required_c"] == 0.0 for row in rows)


def test_interpolation_constant_stable_under_refinement():
    vals = []
    for n in (64, 128):
        g = Grid(dim=2, n=n)
        phi = young.make_power(2.0)
        u = gridfn.gen_sin(g, freq=(1, 0))
        # small mu keeps the first term from absorbing everything
        rows = elliptic.interpolation_check(u, phi, b=2, center=(0.5, 0.5), r=0.3,
                                            theta=0.75, mu_list=[1e-3])
        vals.append(max(row["required_c"] for row in rows if row["s"] == 2))
    assert vals[0] > 0
    assert abs(vals[0] - vals[1]) <= 0.25 * max(vals)


# -- interior estimate -------------------------------------------------------------------


@pytest.fixture(scope="module")
def phi2():
    return young.make_power(2.0)


def test_interior_estimate_harmonic_polynomial(phi2):
    """u = x1^2 - x2^2 is annihilated by the Laplacian: rhs_f vanishes.

    With vanishing data the constant is lhs r^2 / ||u||, and every norm has a
    direct discrete closed form (D^20 u = 2, D^02 u = -2, D^11 u = 0).
    """
    g = Grid(dim=2, n=64, topology="rect")
    sys = elliptic.laplacian_system(g)
    mesh = g.mesh()
    u = GridFunction(g, mesh[0] ** 2 - mesh[1] ** 2)
    r = 0.2
    reports = elliptic.interior_estimate(sys, u, phi2, r=r, centers=[(0.5, 0.5)])
    rep = reports[0]
    assert rep.rhs_f <= 1e-9
    assert np.isfinite(rep.c_emp) and rep.c_emp > 0
    half = gridfn.ball_mask(g, Ball((0.5, 0.5), 0.5 * r))
    lhs_exact = 2.0 * 2.0 * math.sqrt(int(half.sum()) * g.cell_measure)
    assert rep.lhs == pytest.approx(lhs_exact, rel=1e-9)
    full = gridfn.ball_mask(g, Ball((0.5, 0.5), r))
    u_norm = math.sqrt(float(np.sum(u.values[full] ** 2)) * g.cell_measure)
    assert rep.c_emp == pytest.approx(lhs_exact * r**2 / u_norm, rel=1e-9)


def test_interior_estimate_refinement_spread(phi2):
    cs = []
    for n in (64, 128):
        g = Grid(dim=2, n=n, topology="rect")
        sys = elliptic.laplacian_system(g)
        u = gridfn.gen_sin(g, freq=(1, 1))
        rep = elliptic.interior_estimate(sys, u, phi2, r=0.2, centers=[(0.5, 0.5)])[0]
        cs.append(rep.c_emp)
    assert max(cs) <= 2.0 * min(cs)


def test_interior_estimate_outer_ball_monotonicity(phi2):
    """Fixed inner ball and scale: enlarging the outer ball never raises the constant."""
    g = Grid(dim=2, n=64, topology="rect")
    sys = elliptic.laplacian_system(g)
    u = gridfn.gen_sin(g, freq=(1, 1))
    f = sys.apply(u)
    from orliczkit.gridfn import finite_difference, luxemburg_norm, multi_indices

    center = (0.5, 0.5)
    r0 = 0.2
    half = Ball(center, 0.5 * r0)
    lhs = sum(luxemburg_norm(finite_difference(u, a), phi2, region=half)
              for a in multi_indices(2, 2, exact=True))
    cs = []
    for R in (r0, 0.25, 0.3):
        rhs = luxemburg_norm(f, phi2, region=Ball(center, R)) \
            + r0**-2 * luxemburg_norm(u, phi2, region=Ball(center, R))
        cs.append(lhs / rhs)
    assert cs[2] <= cs[1] * (1 + 1e-12) <= cs[0] * (1 + 1e-12)


def test_interior_estimate_scaling_audit(phi2):
    g = Grid(dim=2, n=64, topology="rect")
    sys = elliptic.laplacian_system(g)
    u = gridfn.gen_sin(g, freq=(1, 1))
    r1 = elliptic.interior_estimate(sys, u, phi2, r=0.2, centers=[(0.5, 0.5)])[0]
    r2 = elliptic.interior_estimate(sys, u.scale(5.0), phi2, r=0.2, centers=[(0.5, 0.5)])[0]
    assert r2.c_emp == pytest.approx(r1.c_emp, rel=1e-9)


def test_interior_estimate_biharmonic(phi2):
    g = Grid(dim=2, n=64, topology="rect")
    sys = elliptic.biharmonic_system(g)
    u = gridfn.gen_sin(g, freq=(1, 1))
    rep = elliptic.interior_estimate(sys, u, phi2, r=0.2, centers=[(0.5, 0.5)])[0]
    assert np.isfinite(rep.c_emp) and rep.c_emp > 0
    assert set(rep.theta_seminorms) == {0, 1, 2, 3, 4}


def test_covering_estimate(phi2):
    g = Grid(dim=2, n=64, topology="rect")
    sys = elliptic.laplacian_system(g)
    u = gridfn.gen_sin(g, freq=(1, 1))
    out = elliptic.covering_estimate(sys, u, phi2, ((0.35, 0.35), (0.65, 0.65)), r=0.15)
    assert np.isfinite(out["c_emp"]) and out["c_emp"] > 0
    assert out["n_balls"] >= 4


def test_vmo_perturbation_gamma_reported(phi2):
    g = Grid(dim=2, n=64, topology="rect")
    sys = elliptic.isotropic_perturbed_system(g, eps=0.2, freq=2)
    u = gridfn.gen_sin(g, freq=(1, 1))
    rep = elliptic.interior_estimate(sys, u, phi2, r=0.2, centers=[(0.5, 0.5)],
                                     with_gamma=True)[0]
    assert rep.gamma_coeff is not None and rep.gamma_coeff > 0


# -- product rule -------------------------------------------------------------------------


def test_leibniz_expansion_matches_at_h2():
    errs = []
    for n in (64, 128):
        g = Grid(dim=2, n=n, topology="rect")
        sys = elliptic.laplacian_system(g)
        cut = elliptic.cutoff(g, (0.5, 0.5), r=0.45, theta=0.5)
        u = gridfn.gen_random_smooth(g, seed=4, kmax=3)
        errs.append(elliptic.leibniz_residual(sys, cut, u))
    assert errs[1] <= errs[0]
    assert errs[1] <= 0.05


def test_interior_estimate_clipped_ball_rejected(phi2):
    g = Grid(dim=2, n=64, topology="rect")
    sys = elliptic.laplacian_system(g)
    u = gridfn.gen_sin(g, freq=(1, 1))
    from orliczkit.errors import StencilError

    with pytest.raises(StencilError):
        elliptic.interior_estimate(sys, u, phi2, r=0.2, centers=[(0.1, 0.5)])


def test_interior_estimate_zero_field_vacuous(phi2):
    g = Grid(dim=2, n=64, topology="rect")
    sys = elliptic.laplacian_system(g)
    u = gridfn.gen_constant(g, 0.0)
    rep = elliptic.interior_estimate(sys, u, phi2, r=0.2, centers=[(0.5, 0.5)])[0]
    assert rep.c_emp == 0.0 and rep.lhs == 0.0
