"""Higher-order elliptic systems with rough coefficients: symbols, fundamental
solutions, representation checks and the interior estimate verifier.

Fundamental solutions are restricted to families whose determinant symbol is
a power of a single positive quadratic form (zeta^T M zeta)^k: after the
affine change of variables this is the poly-harmonic operator, whose odd-
dimension solution is an explicit half-integer power of the quadratic form.
Everything downstream (cofactor application, derivative kernels, sphere
terms) is symbolic differentiation of that closed form.

Data for the estimate verifier is always manufactured: f := L_h u by the same
finite differences that measure the left-hand side, so the strong-solution
hypothesis holds exactly up to discretization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import sympy as sp

from .czop import VCZKernel, apply_multiplier, sphere_nodes, validate_kernel
from .errors import (
    AnnulusResolutionError,
    NotEllipticError,
    StencilError,
    UnsupportedFamilyError,
)
from .gridfn import (
    RECT,
    TORUS,
    Ball,
    Grid,
    GridFunction,
    finite_difference,
    interior_mask,
    luxemburg_norm,
    multi_indices,
)
from .young import YoungFunction

# -- systems ------------------------------------------------------------------


class EllipticSystem:
    """Order-2b system sum_{|alpha|=2b} A_alpha(x) D^alpha u = f on a grid.

    coefficients maps each multi-index of order 2b to an (m, m, *shape) array.
    iso_field, when present, is the scalar factor a(x) of an isotropic-scaled
    family A_alpha(x) = a(x) * A0_alpha and unlocks the separable
    representation route; base_patterns then holds the constant A0_alpha.
    """

    def __init__(self, grid: Grid, m: int, b: int, coefficients: dict, label: str,
                 iso_field: Optional[np.ndarray] = None,
                 base_patterns: Optional[dict] = None):
        self.grid = grid
        self.m = int(m)
        self.b = int(b)
        self.label = label
        self.iso_field = iso_field
        self.base_patterns = base_patterns
        self.coefficients = {}
        for alpha, arr in coefficients.items():
            alpha = tuple(int(a) for a in alpha)
            if sum(alpha) != 2 * self.b:
                raise ValueError("coefficient multi-index order must equal 2b")
            arr = np.asarray(arr, dtype=float)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"coefficient {alpha} has non-finite entries")
            if arr.shape == (self.m, self.m):
                arr = np.broadcast_to(arr[(...,) + (None,) * grid.dim], (self.m, self.m) + grid.shape).copy()
            if arr.shape != (self.m, self.m) + grid.shape:
                raise ValueError(f"coefficient shape {arr.shape} invalid")
            arr.setflags(write=False)
            self.coefficients[alpha] = arr

    @property
    def order(self) -> int:
        return 2 * self.b

    def coeff_sup(self) -> float:
        return max(float(np.max(np.abs(arr))) for arr in self.coefficients.values())

    def symbol_matrix(self, zeta: np.ndarray) -> np.ndarray:
        """l_jk(x, zeta) over the whole grid for one direction, (m, m, *shape)."""
        acc = np.zeros((self.m, self.m) + self.grid.shape)
        for alpha, arr in self.coefficients.items():
            mono = 1.0
            for ax, a in enumerate(alpha):
                if a:
                    mono = mono * zeta[ax] ** a
            acc += mono * arr
        return acc

    def det_symbol(self, zeta: np.ndarray) -> np.ndarray:
        l = self.symbol_matrix(zeta)
        if self.m == 1:
            return l[0, 0]
        if self.m == 2:
            return l[0, 0] * l[1, 1] - l[0, 1] * l[1, 0]
        return np.linalg.det(np.moveaxis(l, (0, 1), (-2, -1)))

    def apply(self, u: GridFunction) -> GridFunction:
        """Manufactured data f = L_h u by centered differences."""
        if u.components != self.m:
            raise ValueError("component count mismatch")
        outs = []
        margins = (0,) * self.grid.dim
        derivs = {}
        for alpha in self.coefficients:
            derivs[alpha] = finite_difference(u, alpha)
            margins = tuple(max(a, b) for a, b in zip(margins, derivs[alpha].margins))
        for j in range(self.m):
            acc = np.zeros(self.grid.shape)
            for alpha, arr in self.coefficients.items():
                d = derivs[alpha]
                for k in range(self.m):
                    acc += arr[j, k] * d.component(k)
            outs.append(acc)
        vals = outs[0] if self.m == 1 else np.stack(outs)
        return GridFunction(self.grid, vals, margins)

    def coefficient_vmo(self, R: float, radii_cells: Optional[Sequence[int]] = None) -> float:
        """Sum over entries of the oscillation modulus at scale R (constants are zero)."""
        from .oscillation import geometric_radii_cells, vmo_modulus

        if radii_cells is None:
            radii_cells = [k for k in geometric_radii_cells(self.grid)
                           if k * self.grid.h <= R + 1e-12]
        total = 0.0
        for alpha, arr in self.coefficients.items():
            for j in range(self.m):
                for k in range(self.m):
                    entry = arr[j, k]
                    if float(entry.max() - entry.min()) == 0.0:
                        continue
                    gamma = vmo_modulus(GridFunction(self.grid, entry), [R], radii_cells)
                    total += gamma[0][1]
        return total


def laplacian_system(grid: Grid, m: int = 1) -> EllipticSystem:
    eye = np.eye(m)
    coeffs = {}
    for ax in range(grid.dim):
        alpha = tuple(2 if a == ax else 0 for a in range(grid.dim))
        coeffs[alpha] = eye
    return EllipticSystem(grid, m, 1, coeffs, label=f"laplacian(m={m})",
                          iso_field=np.ones(grid.shape),
                          base_patterns={a: 1.0 for a in coeffs})


def anisotropic_second_order(grid: Grid, diag: Sequence[float]) -> EllipticSystem:
    if len(diag) != grid.dim or any(d <= 0 for d in diag):
        raise ValueError("need one positive coefficient per axis")
    coeffs = {}
    for ax, d in enumerate(diag):
        alpha = tuple(2 if a == ax else 0 for a in range(grid.dim))
        coeffs[alpha] = np.array([[float(d)]])
    return EllipticSystem(grid, 1, 1, coeffs, label=f"aniso{tuple(diag)}")


def biharmonic_system(grid: Grid) -> EllipticSystem:
    if grid.dim == 2:
        coeffs = {(4, 0): np.array([[1.0]]), (2, 2): np.array([[2.0]]),
                  (0, 4): np.array([[1.0]])}
    elif grid.dim == 3:
        coeffs = {}
        for i in range(3):
            for j in range(3):
                alpha = [0, 0, 0]
                alpha[i] += 2
                alpha[j] += 2
                alpha = tuple(alpha)
                coeffs[alpha] = coeffs.get(alpha, 0.0) + 1.0
        coeffs = {a: np.array([[c]]) for a, c in coeffs.items()}
    else:
        raise ValueError("biharmonic needs dim 2 or 3")
    return EllipticSystem(grid, 1, 2, coeffs, label="biharmonic")


def isotropic_perturbed_system(grid: Grid, eps: float, freq: int = 1) -> EllipticSystem:
    """Laplacian scaled by a(x) = 1 + eps sin(2 pi freq x1): rough-coefficient model."""
    if abs(eps) >= 1.0:
        raise ValueError("|eps| < 1 keeps the operator elliptic")
    a = 1.0 + eps * np.sin(2.0 * math.pi * freq * grid.mesh()[0])
    coeffs = {}
    patterns = {}
    for ax in range(grid.dim):
        alpha = tuple(2 if j == ax else 0 for j in range(grid.dim))
        coeffs[alpha] = a[None, None]
        patterns[alpha] = 1.0
    return EllipticSystem(grid, 1, 1, coeffs, label=f"iso_perturbed(eps={eps:g},freq={freq})",
                          iso_field=a, base_patterns=patterns)


def decoupled_system(grid: Grid) -> EllipticSystem:
    """Two independent Laplace equations as a 2x2 block-diagonal system."""
    return laplacian_system(grid, m=2)


def coupled_second_order(grid: Grid, c: float = 0.5) -> EllipticSystem:
    """Triangular coupling with determinant |zeta|^4 (stays elliptic for any c)."""
    coeffs = {}
    for ax in range(grid.dim):
        alpha = tuple(2 if j == ax else 0 for j in range(grid.dim))
        coeffs[alpha] = np.array([[1.0, 0.0], [0.0, 1.0]])
    mixed = tuple(1 if j < 2 else 0 for j in range(grid.dim))
    coeffs[mixed] = np.array([[0.0, float(c)], [0.0, 0.0]])
    return EllipticSystem(grid, 2, 1, coeffs, label=f"coupled(c={c:g})")


SYSTEM_FAMILIES = {
    "laplacian": lambda grid, **kw: laplacian_system(grid, **kw),
    "biharmonic": lambda grid, **kw: biharmonic_system(grid),
    "isotropic_perturbed": lambda grid, **kw: isotropic_perturbed_system(grid, **kw),
    "anisotropic": lambda grid, **kw: anisotropic_second_order(grid, **kw),
    "decoupled": lambda grid, **kw: decoupled_system(grid),
    "coupled": lambda grid, **kw: coupled_second_order(grid, **kw),
}


def ellipticity_constant(sys: EllipticSystem, n_dirs: int = 720) -> float:
    """min over grid points and sphere sample of det l(x, zeta); must be positive."""
    if sys.grid.dim == 2:
        th = 2.0 * math.pi * np.arange(max(n_dirs, 720)) / max(n_dirs, 720)
        dirs = np.stack([np.cos(th), np.sin(th)], axis=-1)
    else:
        dirs, _ = sphere_nodes(sys.grid.dim, max(n_dirs, 256))
    best = math.inf
    for zeta in dirs:
        det = sys.det_symbol(zeta)
        best = min(best, float(det.min()))
    if best <= 0.0:
        raise NotEllipticError(f"{sys.label}: determinant symbol reaches {best:.3e}")
    return best


# -- freezing and fundamental solutions ---------------------------------------------


@dataclass
class FrozenOperator:
    n: int
    m: int
    b: int
    base_point: tuple
    matrices: dict  # alpha -> (m, m)

    def symbol_matrix(self, zeta) -> np.ndarray:
        zeta = np.asarray(zeta, dtype=float)
        acc = np.zeros(zeta.shape[:-1] + (self.m, self.m))
        for alpha, mat in self.matrices.items():
            mono = np.ones(zeta.shape[:-1])
            for ax, a in enumerate(alpha):
                if a:
                    mono = mono * zeta[..., ax] ** a
            acc += mono[..., None, None] * mat
        return acc

    def det_symbol(self, zeta) -> np.ndarray:
        l = self.symbol_matrix(zeta)
        return np.linalg.det(l)

    def cofactor_matrix(self, zeta) -> np.ndarray:
        l = self.symbol_matrix(zeta)
        if self.m == 1:
            return np.ones_like(l)
        if self.m == 2:
            out = np.empty_like(l)
            out[..., 0, 0] = l[..., 1, 1]
            out[..., 0, 1] = -l[..., 1, 0]
            out[..., 1, 0] = -l[..., 0, 1]
            out[..., 1, 1] = l[..., 0, 0]
            return out
        raise UnsupportedFamilyError("cofactor matrices implemented for m <= 2")

    def verify_cofactor_identity(self, seed: int = 0, samples: int = 100, rtol: float = 1e-10):
        rng = np.random.default_rng(seed)
        zeta = rng.normal(size=(samples, self.n))
        l = self.symbol_matrix(zeta)
        cof = self.cofactor_matrix(zeta)
        det = self.det_symbol(zeta)
        prod = np.einsum("...ik,...jk->...ij", l, cof)
        target = det[..., None, None] * np.eye(self.m)
        scale = np.abs(det)[..., None, None] + np.abs(prod) + 1e-300
        err = np.abs(prod - target) / scale
        if float(err.max()) > rtol:
            raise NotEllipticError(f"cofactor identity violated: {float(err.max()):.3e}")
        return float(err.max())


def freeze(sys: EllipticSystem, x0) -> FrozenOperator:
    """Constant-coefficient comparison operator with coefficients sampled at x0."""
    idx = tuple(
        int(np.clip(round((c - o) / sys.grid.h - 0.5), 0, sys.grid.n - 1))
        for c, o in zip(x0, sys.grid.origin)
    )
    mats = {alpha: np.ascontiguousarray(arr[(slice(None), slice(None)) + idx])
            for alpha, arr in sys.coefficients.items()}
    frozen = FrozenOperator(n=sys.grid.dim, m=sys.m, b=sys.b,
                            base_point=tuple(float(c) for c in x0), matrices=mats)
    frozen.verify_cofactor_identity()
    return frozen


def _detect_power_of_quadratic(frozen: FrozenOperator):
    """Match det l(zeta) = (zeta^T M zeta)^k by polarization; None when it fails."""
    k = frozen.b * frozen.m
    n = frozen.n

    def G(z):
        val = float(frozen.det_symbol(np.asarray(z, dtype=float)))
        if val <= 0:
            return None
        return val ** (1.0 / k)

    M = np.zeros((n, n))
    basis = np.eye(n)
    for i in range(n):
        gi = G(basis[i])
        if gi is None:
            return None
        M[i, i] = gi
    for i in range(n):
        for j in range(i + 1, n):
            gij = G(basis[i] + basis[j])
            if gij is None:
                return None
            M[i, j] = M[j, i] = 0.5 * (gij - M[i, i] - M[j, j])
    rng = np.random.default_rng(2024)
    for _ in range(50):
        z = rng.normal(size=n)
        lhs = float(frozen.det_symbol(z))
        rhs = float(z @ M @ z) ** k
        if abs(lhs - rhs) > 1e-8 * (abs(lhs) + abs(rhs) + 1e-300):
            return None
    return M


def _polyharmonic_constant(k: int) -> float:
    """c_k with Delta^k (c_k rho^{2k-3}) = delta in three dimensions."""
    prod = 1.0
    for j in range(2, k + 1):
        prod *= (2 * j - 3) * (2 * j - 2)
    return -1.0 / (4.0 * math.pi * prod)


@dataclass
class FundamentalKernel:
    family: str
    frozen: FrozenOperator
    quadratic_form: np.ndarray
    gamma_tilde: sp.Expr
    gamma: list                      # m x m nested list of sympy expressions (or 0)
    derivative_kernels: dict         # (j, k, alpha) -> VCZKernel
    _symbols: tuple = field(default=(), repr=False)

    def gamma_eval(self, j: int, k: int) -> Callable:
        expr = self.gamma[j][k]
        if expr == 0:
            return lambda pts: np.zeros(np.asarray(pts).shape[:-1])
        f = sp.lambdify(self._symbols, expr, modules="numpy")
        return lambda pts: f(*[np.asarray(pts)[..., i] for i in range(len(self._symbols))])


def fundamental_kernel(frozen: FrozenOperator, validate: bool = True) -> FundamentalKernel:
    """Closed-form fundamental solution in odd dimension 3 and its CZ kernels.

    Supported: determinant symbol equal to a power of a positive quadratic
    form (scalar second order, polyharmonic, decoupled combinations thereof).
    The scalar solution of the determinant operator is
    c_k (det M)^{-1/2} (x^T M^{-1} x)^{(2k-3)/2}; matrix entries apply the
    cofactor polynomials as differential operators, and the order-2b
    derivative kernels are checked against the kernel validity conditions.
    """
    if frozen.n != 3:
        raise UnsupportedFamilyError("closed-form fundamental solutions need dimension 3")
    M = _detect_power_of_quadratic(frozen)
    if M is None:
        raise UnsupportedFamilyError(
            "determinant symbol is not a power of a single quadratic form"
        )
    k = frozen.b * frozen.m
    xs = sp.symbols("x1 x2 x3")
    Minv = sp.Matrix(np.linalg.inv(M))
    vec = sp.Matrix(xs)
    rho2 = sp.expand((vec.T * Minv * vec)[0, 0])
    det_m = float(np.linalg.det(M))
    c = _polyharmonic_constant(k) / math.sqrt(det_m)
    gamma_tilde = c * rho2 ** sp.Rational(2 * k - 3, 2)

    zs = sp.symbols("z1 z2 z3")
    gamma = [[0 for _ in range(frozen.m)] for _ in range(frozen.m)]
    for j in range(frozen.m):
        for kk in range(frozen.m):
            cof = _cofactor_poly(frozen, j, kk, zs)
            if cof == 0:
                gamma[j][kk] = 0
                continue
            gamma[j][kk] = _apply_symbol_as_operator(cof, zs, gamma_tilde, xs)

    kernels = {}
    for j in range(frozen.m):
        for kk in range(frozen.m):
            if gamma[j][kk] == 0:
                continue
            for alpha in multi_indices(3, 2 * frozen.b, exact=True):
                expr = gamma[j][kk]
                for ax, a in enumerate(alpha):
                    if a:
                        expr = sp.diff(expr, xs[ax], a)
                kern = _expr_to_kernel(expr, xs, label=f"d{alpha}gamma[{j}{kk}]")
                kernels[(j, kk, alpha)] = kern
    fk = FundamentalKernel(
        family=f"quadratic-power(k={k})",
        frozen=frozen,
        quadratic_form=M,
        gamma_tilde=gamma_tilde,
        gamma=gamma,
        derivative_kernels=kernels,
        _symbols=xs,
    )
    if validate:
        for kern in kernels.values():
            validate_kernel(kern, quadrature_order=256)
    return fk


def _cofactor_poly(frozen: FrozenOperator, j: int, k: int, zs):
    if frozen.m == 1:
        return sp.Integer(1)
    l = [[sp.Integer(0) for _ in range(frozen.m)] for _ in range(frozen.m)]
    for alpha, mat in frozen.matrices.items():
        mono = sp.Integer(1)
        for ax, a in enumerate(alpha):
            if a:
                mono *= zs[ax] ** a
        for r in range(frozen.m):
            for c in range(frozen.m):
                l[r][c] += sp.Float(mat[r, c]) * mono
    if frozen.m == 2:
        cof = [[l[1][1], -l[1][0]], [-l[0][1], l[0][0]]]
        return sp.expand(cof[j][k])
    raise UnsupportedFamilyError("cofactor polynomials implemented for m <= 2")


def _apply_symbol_as_operator(poly: sp.Expr, zs, target: sp.Expr, xs) -> sp.Expr:
    """Substitute zeta^beta -> D^beta and apply to the target expression."""
    p = sp.Poly(poly, *zs)
    out = sp.Integer(0)
    for monom, coeff in zip(p.monoms(), p.coeffs()):
        term = target
        for ax, a in enumerate(monom):
            if a:
                term = sp.diff(term, xs[ax], a)
        out += coeff * term
    return sp.expand(out)


def _expr_to_kernel(expr: sp.Expr, xs, label: str) -> VCZKernel:
    f = sp.lambdify(xs, expr, modules="numpy")

    def sphere_part(x, omega, f=f):
        omega = np.asarray(omega, dtype=float)
        return np.asarray(f(omega[..., 0], omega[..., 1], omega[..., 2]), dtype=float)

    # homogeneity sanity: degree must be -3
    probe = np.array([0.48, -0.6, 0.64])
    probe /= np.linalg.norm(probe)
    v1 = float(f(*probe))
    v2 = float(f(*(2.0 * probe)))
    if abs(v2 - v1 / 8.0) > 1e-8 * (abs(v1) + 1e-300):
        raise UnsupportedFamilyError(f"{label}: kernel not homogeneous of degree -3")
    return VCZKernel(dim=3, sphere_part=sphere_part, label=label)


# -- free-space convolution identity --------------------------------------------------


def _bump_expr(xs, center, radius: float, power: int = 6):
    rho2 = sum((xi - ci) ** 2 for xi, ci in zip(xs, center)) / radius**2
    return (1 - rho2) ** power


def convolution_identity_residual(fk: FundamentalKernel, n: int = 48,
                                  radius: float = 0.22) -> float:
    """Relative L2 error of Gamma_tilde * (L phi) - phi for a compact bump.

    L is the determinant operator; L phi is computed symbolically so the only
    errors are the free-space quadrature of the singular kernel (center cell
    replaced by its sub-cell average) and the support truncation.
    """
    grid = Grid(dim=3, n=n, topology=RECT, side=1.0, origin=(-0.5, -0.5, -0.5))
    xs = fk._symbols
    center = (0.0, 0.0, 0.0)
    bump = _bump_expr(xs, center, radius)
    zs = sp.symbols("z1 z2 z3")
    k = fk.frozen.b * fk.frozen.m
    Mmat = fk.quadratic_form
    quad = sum(sp.Float(Mmat[i, j]) * zs[i] * zs[j] for i in range(3) for j in range(3))
    lphi = _apply_symbol_as_operator(sp.expand(quad**k), zs, bump, xs)

    mesh = grid.mesh()
    r = np.sqrt(sum((mesh[i] - center[i]) ** 2 for i in range(3)))
    inside = r < radius
    f_phi = sp.lambdify(xs, bump, modules="numpy")
    f_lphi = sp.lambdify(xs, lphi, modules="numpy")
    phi_vals = np.where(inside, f_phi(*mesh), 0.0)
    lphi_vals = np.where(inside, f_lphi(*mesh), 0.0)

    gt = sp.lambdify(xs, fk.gamma_tilde, modules="numpy")
    conv = _free_space_convolve(gt, grid, lphi_vals)
    num = np.sqrt(float(np.sum((conv - phi_vals) ** 2)))
    den = np.sqrt(float(np.sum(phi_vals**2)))
    return num / den


def _free_space_convolve(kernel_fn, grid: Grid, source: np.ndarray) -> np.ndarray:
    """Zero-padded FFT convolution with the center cell replaced by a sub-cell average."""
    n = grid.n
    h = grid.h
    idx = np.arange(2 * n)
    signed = np.where(idx < n, idx, idx - 2 * n).astype(float) * h
    D = np.meshgrid(*([signed] * 3), indexing="ij")
    with np.errstate(divide="ignore", invalid="ignore"):
        table = np.asarray(kernel_fn(*D), dtype=float)
    # center cell: 8^3 midpoint sub-cell average of the integrable singularity
    sub = (np.arange(8) + 0.5) / 8.0 - 0.5
    SX, SY, SZ = np.meshgrid(sub * h, sub * h, sub * h, indexing="ij")
    table[0, 0, 0] = float(np.mean(kernel_fn(SX, SY, SZ)))
    pad = np.zeros_like(table)
    pad[:n, :n, :n] = source
    axes = (0, 1, 2)
    out = np.fft.irfftn(np.fft.rfftn(table, axes=axes) * np.fft.rfftn(pad, axes=axes),
                        s=table.shape, axes=axes)
    return out[:n, :n, :n] * grid.cell_measure


# -- sphere terms ---------------------------------------------------------------------


def _first_positive(alpha) -> int:
    for s, a in enumerate(alpha):
        if a > 0:
            return s
    raise ValueError("zero multi-index")


def sphere_term_constant_2d(base_matrix: np.ndarray, alpha) -> float:
    """int_{S^1} D^{gamma_s} Gamma_A(w) w_s dsigma for the 2-D quadratic-form solution.

    Gamma_A = log(A^{-1} x . x) / (4 pi sqrt(det A)), so the first derivative
    restricted to the circle is explicit and one trapezoid quadrature suffices.
    """
    s = _first_positive(alpha)
    gamma = list(alpha)
    gamma[s] -= 1
    if sum(gamma) != 1:
        raise UnsupportedFamilyError("surface constants implemented for second-order operators")
    i = gamma.index(1)  # the single remaining derivative axis
    Ainv = np.linalg.inv(base_matrix)
    det = float(np.linalg.det(base_matrix))
    nodes, weights = sphere_nodes(2, 1024)
    q = np.einsum("ij,nj->ni", Ainv, nodes)
    denom = np.einsum("ni,ni->n", q, nodes)
    dgamma = q[:, i] / (2.0 * math.pi * math.sqrt(det) * denom)
    return float(np.sum(weights * dgamma * nodes[:, s]))


def sphere_term_constant_3d(fk: FundamentalKernel, j: int, k: int, alpha) -> float:
    """Same surface constant from the symbolic derivative of a matrix entry."""
    s = _first_positive(alpha)
    gamma = list(alpha)
    gamma[s] -= 1
    expr = fk.gamma[j][k]
    if expr == 0:
        return 0.0
    xs = fk._symbols
    for ax, a in enumerate(gamma):
        if a:
            expr = sp.diff(expr, xs[ax], a)
    f = sp.lambdify(xs, expr, modules="numpy")
    nodes, weights = sphere_nodes(3, 512)
    vals = np.asarray(f(nodes[:, 0], nodes[:, 1], nodes[:, 2]), dtype=float)
    return float(np.sum(weights * vals * nodes[:, s]))


# -- representation formula -------------------------------------------------------------


@dataclass
class RepresentationReport:
    alpha: tuple
    residual_l2: float
    residual_orlicz: Optional[float]
    lhs_l2: float
    method: str


def representation_residual(sys: EllipticSystem, v: GridFunction, alpha,
                            phi: Optional[YoungFunction] = None) -> RepresentationReport:
    """Residual of the unfrozen derivative identity on a compactly supported field.

    Dimension 2 (torus): the frozen-solution derivative operators act through
    their exact symbols (principal value = full symbol minus the quadrature
    surface constant); supported for constant-coefficient second-order
    operators and isotropic-scaled fields a(x) A0.  Dimension 3 (box):
    free-space quadrature with the closed-form kernels; constant coefficients.
    """
    alpha = tuple(int(a) for a in alpha)
    if sum(alpha) != sys.order:
        raise ValueError("alpha must have order 2b")
    if sys.b != 1:
        raise UnsupportedFamilyError("representation residual covers second-order families")
    if sys.m != 1:
        return _representation_decoupled(sys, v, alpha, phi)
    if sys.grid.dim == 2:
        return _representation_2d(sys, v, alpha, phi)
    if sys.grid.dim == 3:
        return _representation_3d(sys, v, alpha, phi)
    raise UnsupportedFamilyError("representation residual needs dim 2 or 3")


def _representation_decoupled(sys: EllipticSystem, v: GridFunction, alpha, phi):
    """Componentwise assembly for block-diagonal systems with equal diagonal blocks."""
    for arr in sys.coefficients.values():
        scale = max(float(np.abs(arr).max()), 1e-300)
        for j in range(sys.m):
            for k in range(sys.m):
                if j != k and np.any(np.abs(arr[j, k]) > 1e-14 * scale):
                    raise UnsupportedFamilyError("componentwise route needs a block-diagonal system")
            if np.any(np.abs(arr[j, j] - arr[0, 0]) > 1e-14 * scale):
                raise UnsupportedFamilyError("componentwise route needs identical diagonal blocks")
    scalar = EllipticSystem(
        sys.grid, 1, sys.b,
        {a: arr[0:1, 0:1] if arr.ndim == 2 else arr[0, 0][None, None]
         for a, arr in sys.coefficients.items()},
        label=f"{sys.label}[component]",
        iso_field=sys.iso_field, base_patterns=sys.base_patterns,
    )
    if v.components != sys.m:
        raise ValueError("field component count must match the system")
    reports = [representation_residual(scalar, GridFunction(v.grid, v.component(j)), alpha, phi)
               for j in range(sys.m)]
    return RepresentationReport(
        alpha=alpha,
        residual_l2=math.sqrt(sum(r.residual_l2**2 for r in reports)),
        residual_orlicz=None if phi is None else max(r.residual_orlicz for r in reports),
        lhs_l2=math.sqrt(sum(r.lhs_l2**2 for r in reports)),
        method=reports[0].method + "/componentwise",
    )


def _iso_data(sys: EllipticSystem):
    if sys.iso_field is not None and sys.base_patterns is not None:
        a = sys.iso_field
        A0 = np.zeros((sys.grid.dim, sys.grid.dim))
        for alpha, c in sys.base_patterns.items():
            nz = [i for i, v in enumerate(alpha) if v]
            if len(nz) == 1:
                A0[nz[0], nz[0]] = c
            else:
                A0[nz[0], nz[1]] = A0[nz[1], nz[0]] = 0.5 * c
        return a, A0
    # constant coefficients: factor the (single) value out
    consts = {}
    for alpha, arr in sys.coefficients.items():
        vals = arr[0, 0]
        if float(vals.max() - vals.min()) != 0.0:
            raise UnsupportedFamilyError("variable coefficients need the isotropic-scaled form")
        consts[alpha] = float(vals.flat[0])
    A0 = np.zeros((sys.grid.dim, sys.grid.dim))
    for alpha, c in consts.items():
        nz = [i for i, v in enumerate(alpha) if v]
        if len(nz) == 1:
            A0[nz[0], nz[0]] = c
        else:
            A0[nz[0], nz[1]] = A0[nz[1], nz[0]] = 0.5 * c
    return np.ones(sys.grid.shape), A0


def _representation_2d(sys, v, alpha, phi):
    grid = sys.grid
    if grid.topology != TORUS:
        raise UnsupportedFamilyError("2-D representation check runs on the torus")
    a, A0 = _iso_data(sys)

    def pv_symbol(m):
        m1 = np.asarray(m[0], float)
        m2 = np.asarray(m[1], float)
        quad = A0[0, 0] * m1 * m1 + 2 * A0[0, 1] * m1 * m2 + A0[1, 1] * m2 * m2
        mono = m1 ** alpha[0] * m2 ** alpha[1]
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(quad == 0.0, 0.0, mono / np.where(quad == 0.0, 1.0, quad))
        return out.astype(complex)

    sigma = sphere_term_constant_2d(A0, alpha)

    def pv(fld: np.ndarray) -> np.ndarray:
        full = apply_multiplier(pv_symbol, GridFunction(grid, fld)).values
        return full - sigma * fld

    derivs = {ap: finite_difference(v, ap).values for ap in sys.coefficients}
    g = sys.apply(v).values

    commutator_sum = np.zeros(grid.shape)
    for ap, pattern in (sys.base_patterns or {ap: float(sys.coefficients[ap][0, 0].flat[0])
                                              for ap in sys.coefficients}).items():
        w = derivs[ap]
        commutator_sum += pattern * (a * pv(w) - pv(a * w))
    rhs = (commutator_sum + pv(g) + sigma * g) / a
    lhs = finite_difference(v, alpha).values
    return _residual_report(lhs, rhs, alpha, phi, grid, "symbol")


def _representation_3d(sys, v, alpha, phi):
    grid = sys.grid
    a, A0 = _iso_data(sys)
    if float(a.max() - a.min()) != 0.0:
        raise UnsupportedFamilyError("3-D quadrature route covers constant coefficients")
    frozen = freeze(sys, tuple(o + 0.5 * grid.side for o in grid.origin))
    fk = fundamental_kernel(frozen, validate=False)
    kern = fk.derivative_kernels[(0, 0, alpha)]
    sigma = sphere_term_constant_3d(fk, 0, 0, alpha)

    g = sys.apply(v).values
    pts = np.stack(grid.mesh(), axis=-1).reshape(-1, 3)
    support = np.abs(g).ravel() > 0
    src_pts = pts[support]
    src_vals = g.ravel()[support]
    out = np.zeros(len(pts))
    block = 2048
    for start in range(0, len(pts), block):
        sl = slice(start, min(start + block, len(pts)))
        d = pts[sl][:, None, :] - src_pts[None, :, :]
        vals = kern.eval(None, d)
        same = np.all(np.abs(d) < 0.5 * grid.h, axis=-1)
        vals[same] = 0.0
        out[sl] = vals @ src_vals * grid.cell_measure
    rhs = out.reshape(grid.shape) + sigma * g
    lhs = finite_difference(v, alpha).values
    return _residual_report(lhs, rhs, alpha, phi, grid, "quadrature")


def _residual_report(lhs, rhs, alpha, phi, grid, method):
    diff = lhs - rhs
    l2 = math.sqrt(float(np.sum(diff**2)) * grid.cell_measure)
    lhs_l2 = math.sqrt(float(np.sum(lhs**2)) * grid.cell_measure)
    rphi = None
    if phi is not None:
        rphi = luxemburg_norm(GridFunction(grid, diff), phi)
    return RepresentationReport(alpha=alpha, residual_l2=l2, residual_orlicz=rphi,
                                lhs_l2=lhs_l2, method=method)


# -- cutoff functions ---------------------------------------------------------------


def smoothstep(k: int, s: np.ndarray) -> np.ndarray:
    """Polynomial smoothstep with k vanishing derivatives at both ends."""
    s = np.clip(s, 0.0, 1.0)
    out = np.zeros_like(s)
    for j in range(k + 1):
        out += math.comb(k + j, j) * math.comb(2 * k + 1, k - j) * (-s) ** j
    return out * s ** (k + 1)


def cutoff(grid: Grid, center, r: float, theta: float, smooth_order: int = 2) -> GridFunction:
    """Radial cutoff: 1 inside the theta*r ball, 0 outside the theta'*r ball.

    theta' = theta (3 - theta) / 2; the transition is a C^{smooth_order}
    smoothstep in the radius and must span at least three cells.
    """
    if not 0.0 < theta < 1.0:
        raise ValueError("theta in (0, 1)")
    inner = theta * r
    outer = 0.5 * theta * (3.0 - theta) * r
    if outer - inner < 3.0 * grid.h:
        raise AnnulusResolutionError(
            f"transition annulus {outer - inner:.4g} thinner than 3h = {3 * grid.h:.4g}"
        )
    rho = grid.distance(center)
    s = (outer - rho) / (outer - inner)
    return GridFunction(grid, smoothstep(smooth_order, s))


def cutoff_derivative_constants(phi_cut: GridFunction, r: float, theta: float,
                                max_order: Optional[int] = None) -> dict:
    """Measured sup|D^s phi| [theta(1-theta) r]^s for s = 1..max_order."""
    dim = phi_cut.grid.dim
    max_order = max_order or 2
    scale = theta * (1.0 - theta) * r
    out = {}
    for s in range(1, max_order + 1):
        sup = 0.0
        for alpha in multi_indices(dim, s, exact=True):
            d = finite_difference(phi_cut, alpha)
            sup = max(sup, float(np.max(np.abs(d.values))))
        out[s] = sup * scale**s
    return out


# -- interpolation inequality -----------------------------------------------------------


def interpolation_check(u: GridFunction, phi: YoungFunction, b: int, center, r: float,
                        theta: float, mu_list: Sequence[float]) -> list:
    """Required constants in the two-term interpolation bound on the theta*r ball.

    For each 1 <= s <= 2b-1 and mu: the smallest C(s) with
    ||D^s u|| <= mu ||D^{2b} u|| + C(s) mu^{-s/(2b-s)} ||u||.
    """
    region = Ball(tuple(center), theta * r)
    order = 2 * b
    u_norm = luxemburg_norm(u, phi, region=region)
    top = sum(luxemburg_norm(finite_difference(u, a), phi, region=region)
              for a in multi_indices(u.grid.dim, order, exact=True))
    rows = []
    for s in range(1, order):
        mid = sum(luxemburg_norm(finite_difference(u, a), phi, region=region)
                  for a in multi_indices(u.grid.dim, s, exact=True))
        for mu in mu_list:
            excess = max(0.0, mid - mu * top)
            c_needed = excess * mu ** (s / (order - s)) / u_norm if u_norm > 0 else 0.0
            rows.append({"s": s, "mu": mu, "mid_norm": mid, "top_norm": top,
                         "u_norm": u_norm, "required_c": c_needed})
    return rows


# -- interior estimate ------------------------------------------------------------------


def _require_ball_inside(grid: Grid, center, r: float):
    """Interior estimates need the full ball inside the box, not a clipped one."""
    if grid.topology == TORUS:
        return
    for c, o in zip(center, grid.origin):
        if c - r < o - 1e-12 or c + r > o + grid.side + 1e-12:
            raise StencilError(
                f"ball at {center} with radius {r:g} sticks out of the domain"
            )


@dataclass
class EstimateReport:
    scenario: str
    n: int
    r: float
    center: tuple
    lhs: float
    rhs_f: float
    rhs_u: float
    c_emp: float
    theta_seminorms: dict
    interpolation: list
    gamma_coeff: Optional[float] = None

    CSV_HEADER = ("scenario", "N", "r", "lhs", "rhs_f", "rhs_u", "C_emp")

    def csv_row(self, order: int):
        base = [self.scenario, self.n, f"{self.r:.6g}", f"{self.lhs:.12g}",
                f"{self.rhs_f:.12g}", f"{self.rhs_u:.12g}", f"{self.c_emp:.12g}"]
        for s in range(order + 1):
            base.append(f"{self.theta_seminorms.get(s, 0.0):.12g}")
        base.append("" if self.gamma_coeff is None else f"{self.gamma_coeff:.12g}")
        return base


def interior_estimate(sys: EllipticSystem, u: GridFunction, phi: YoungFunction,
                      r: float, centers: Sequence, thetas=(0.25, 0.5, 0.75),
                      mu_list=(0.5, 1.0, 2.0), with_gamma: bool = False) -> list:
    """Per-ball empirical constants of the interior top-derivative bound.

    lhs is the order-2b layer gauge norm on the half ball, the right side the
    data norm plus r^{-2b} times the solution norm on the full ball; data is
    manufactured as f = L_h u.  theta-sampled seminorms
    [theta(1-theta) r]^s ||D^s u|| on the theta-balls and the interpolation
    table come along for the scaling diagnostics.
    """
    f = sys.apply(u)
    order = sys.order
    derivs = {a: finite_difference(u, a) for a in multi_indices(u.grid.dim, order)}
    gamma = sys.coefficient_vmo(r) if with_gamma else None
    reports = []
    for center in centers:
        center = tuple(float(c) for c in center)
        _require_ball_inside(u.grid, center, r)
        ball_r = Ball(center, r)
        ball_half = Ball(center, 0.5 * r)
        lhs = sum(luxemburg_norm(derivs[a], phi, region=ball_half)
                  for a in multi_indices(u.grid.dim, order, exact=True))
        rhs_f = luxemburg_norm(f, phi, region=ball_r)
        rhs_u = r ** (-order) * luxemburg_norm(u, phi, region=ball_r)
        denom = rhs_f + rhs_u
        c_emp = lhs / denom if denom > 0 else 0.0
        seminorms = {}
        for s in range(0, order + 1):
            best = 0.0
            for theta in thetas:
                ball_t = Ball(center, theta * r)
                layer = sum(luxemburg_norm(derivs[a], phi, region=ball_t)
                            for a in multi_indices(u.grid.dim, s, exact=True))
                best = max(best, (theta * (1 - theta) * r) ** s * layer)
            seminorms[s] = best
        interp = interpolation_check(u, phi, sys.b, center, r, thetas[-1], mu_list)
        reports.append(EstimateReport(
            scenario=sys.label, n=u.grid.n, r=r, center=center,
            lhs=lhs, rhs_f=rhs_f, rhs_u=rhs_u, c_emp=c_emp,
            theta_seminorms=seminorms, interpolation=interp, gamma_coeff=gamma,
        ))
    return reports


def covering_estimate(sys: EllipticSystem, u: GridFunction, phi: YoungFunction,
                      inner_box, r: float) -> dict:
    """Aggregate the per-ball bound over a finite cover of an inner box.

    inner_box = (lo, hi) per axis; half-radius balls on a lattice of spacing
    r/(2 sqrt(2)) * 2 cover the box, the enlarged balls stay in the inflated
    box, and the constant compares the full Sobolev-gauge norm on the box
    against data-plus-solution norms on the inflated box.
    """
    grid = u.grid
    lo, hi = np.asarray(inner_box[0], float), np.asarray(inner_box[1], float)
    spacing = r / math.sqrt(2.0)
    axes = [np.arange(lo[i] + 1e-12, hi[i] + spacing * 0.999, spacing) for i in range(grid.dim)]
    centers = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, grid.dim)
    mesh = np.stack(grid.mesh(), axis=-1)
    inner_mask = np.ones(grid.shape, dtype=bool)
    for i in range(grid.dim):
        inner_mask &= (mesh[..., i] >= lo[i]) & (mesh[..., i] <= hi[i])
    outer_mask = np.zeros(grid.shape, dtype=bool)
    for c in centers:
        _require_ball_inside(grid, tuple(c), r)
        outer_mask |= grid.distance(tuple(c)) < r
    order = sys.order
    f = sys.apply(u)
    margins = tuple(max(f.margins[i], max(finite_difference(u, a).margins[i]
                                          for a in multi_indices(grid.dim, order)))
                    for i in range(grid.dim))
    valid = interior_mask(grid, margins)
    if np.any(outer_mask & ~valid):
        raise StencilError("covering reaches into the stencil margin; shrink the box or r")
    lhs = sum(luxemburg_norm(finite_difference(u, a), phi, region=inner_mask)
              for a in multi_indices(grid.dim, order))
    rhs = luxemburg_norm(f, phi, region=outer_mask) + luxemburg_norm(u, phi, region=outer_mask)
    return {
        "c_emp": lhs / rhs if rhs > 0 else 0.0,
        "n_balls": len(centers),
        "lhs": lhs,
        "rhs": rhs,
    }


# -- product-rule consistency -------------------------------------------------------------


def leibniz_residual(sys: EllipticSystem, cut: GridFunction, u: GridFunction) -> float:
    """Relative sup distance between L_h(cut*u) and its term-by-term expansion.

    The expansion uses multinomial coefficients prod binom(alpha_i, beta_i);
    discrete centered differences obey the product rule only up to O(h^2), so
    the residual measures exactly that defect.
    """
    if sys.m != 1:
        raise ValueError("product-rule check is scalar")
    grid = sys.grid
    prod = GridFunction(grid, cut.values * u.values)
    direct = sys.apply(prod)
    acc = np.zeros(grid.shape)
    for alpha, arr in sys.coefficients.items():
        coeff = arr[0, 0]
        for beta in _sub_indices(alpha):
            c = 1.0
            for ai, bi in zip(alpha, beta):
                c *= math.comb(ai, bi)
            rest = tuple(a - b for a, b in zip(alpha, beta))
            if sum(beta) == 0:
                term = u.values * finite_difference(cut, rest).values
            elif sum(rest) == 0:
                term = cut.values * finite_difference(u, beta).values
            else:
                term = finite_difference(u, beta).values * finite_difference(cut, rest).values
            acc += coeff * c * term
    scale = float(np.max(np.abs(direct.values))) + 1e-300
    return float(np.max(np.abs(direct.values - acc))) / scale


def _sub_indices(alpha):
    from itertools import product as iproduct

    ranges = [range(a + 1) for a in alpha]
    return list(iproduct(*ranges))
