"""Maximal operator and BMO/VMO oscillation diagnostics on grid functions.

Discrete balls are the cells whose centers lie strictly within Euclidean
distance r of a grid center; averages are unweighted means over the included
cells.  The radius-h ball is therefore the singleton {x}, which is what makes
the maximal function an exact pointwise majorant of |f|.  All suprema run
over grid-centered balls and a declared radii family; reports carry that
family, and every verified inequality evaluates both of its sides on the same
family.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import NotCertifiedError
from .gridfn import TORUS, Grid, GridFunction, interior_mask, luxemburg_norm, modular
from .young import YoungFunction, certify_nabla2

_EXACTNESS_SLACK = 1e-12  # float guard on mathematically exact inequalities


def default_radii_cells(grid: Grid) -> list:
    """Every integer multiple of h up to N/2 cells."""
    return list(range(1, grid.n // 2 + 1))


def geometric_radii_cells(grid: Grid, ratio: float = 1.4) -> list:
    """Sparse geometric radii family for the more expensive oscillation scans."""
    out = [1]
    k = 1.0
    while True:
        k *= ratio
        cell = int(round(k))
        if cell > grid.n // 2:
            break
        if cell != out[-1]:
            out.append(cell)
    return out


def ball_offsets(dim: int, k: int) -> np.ndarray:
    """Integer offsets d with |d| < k (the radius-k*h discrete ball), shape (K, dim)."""
    rng = np.arange(-k + 1, k)
    grids = np.meshgrid(*([rng] * dim), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    keep = (pts**2).sum(axis=1) < k * k
    return pts[keep]


def _ball_kernel(grid: Grid, k: int) -> np.ndarray:
    """Indicator of the discrete ball as a circulant kernel array."""
    kernel = np.zeros(grid.shape)
    for d in ball_offsets(grid.dim, k):
        kernel[tuple(d % grid.n)] = 1.0
    return kernel


def ball_means(vals: np.ndarray, grid: Grid, k: int) -> np.ndarray:
    """Mean over the radius-k*h ball around every center (singleton handled exactly).

    Torus: circular FFT convolution with the ball indicator.  Rectangle: the
    same convolution is only meaningful where the ball fits; use
    valid_centers to mask.
    """
    if k == 1:
        return vals.copy()
    kernel = _ball_kernel(grid, k)
    count = kernel.sum()
    axes = tuple(range(grid.dim))
    fk = np.fft.rfftn(kernel, axes=axes)
    fv = np.fft.rfftn(vals, axes=axes)
    # kernel is symmetric, so convolution equals correlation
    out = np.fft.irfftn(fk * fv, s=grid.shape, axes=axes)
    return out / count


def valid_centers(grid: Grid, k: int) -> np.ndarray:
    """Centers whose radius-k*h ball lies inside the domain (all on the torus)."""
    if grid.topology == TORUS:
        return np.ones(grid.shape, dtype=bool)
    return interior_mask(grid, (k - 1,) * grid.dim)


@dataclass
class MaximalReport:
    mf: GridFunction
    radii_used: list           # in length units
    weak11_constant: float
    strong_ratio: Optional[float]
    strong_norm: str


def maximal_values(f: GridFunction, radii_cells: Sequence[int]) -> np.ndarray:
    """max over the radii family of ball means of |f| (torus)."""
    if f.grid.topology != TORUS:
        raise ValueError("maximal operator runs on the torus")
    a = f.magnitude()
    cells = sorted(set(int(k) for k in radii_cells) | {1})
    out = np.abs(a).copy()
    for k in cells:
        if k == 1:
            continue
        out = np.maximum(out, ball_means(a, f.grid, k))
    return out


def weak11_constant(mf_vals: np.ndarray, f: GridFunction, levels: int = 50) -> float:
    """sup over a level grid of t |{Mf > t}| / ||f||_1."""
    meas = f.grid.cell_measure
    l1 = float(np.sum(f.magnitude()) * meas)
    if l1 == 0.0:
        return 0.0
    pos = mf_vals[mf_vals > 0]
    if pos.size == 0:
        return 0.0
    ts = np.geomspace(pos.min() * 0.999, pos.max() * 0.999, levels)
    best = 0.0
    for t in ts:
        best = max(best, t * float(np.count_nonzero(mf_vals > t)) * meas / l1)
    return best


def maximal(f: GridFunction, radii_cells: Optional[Sequence[int]] = None,
            phi: Optional[YoungFunction] = None, p: Optional[float] = None) -> MaximalReport:
    """Brute-force discrete maximal function with empirical constants.

    strong_ratio is ||Mf||/||f|| in the discrete L^p norm when p is given,
    in the Luxemburg norm when phi is given, else omitted.
    """
    if radii_cells is None:
        radii_cells = default_radii_cells(f.grid)
    mf_vals = maximal_values(f, radii_cells)
    mf = GridFunction(f.grid, mf_vals)
    ratio = None
    norm_name = "none"
    if p is not None:
        meas = f.grid.cell_measure
        down = float(np.sum(f.magnitude() ** p) * meas) ** (1.0 / p)
        up = float(np.sum(mf_vals**p) * meas) ** (1.0 / p)
        ratio = up / down if down > 0 else 0.0
        norm_name = f"L{p:g}"
    elif phi is not None:
        down = luxemburg_norm(f, phi)
        ratio = luxemburg_norm(mf, phi) / down if down > 0 else 0.0
        norm_name = phi.label
    cells = sorted(set(int(k) for k in radii_cells) | {1})
    return MaximalReport(
        mf=mf,
        radii_used=[k * f.grid.h for k in cells],
        weak11_constant=weak11_constant(mf_vals, f),
        strong_ratio=ratio,
        strong_norm=norm_name,
    )


@dataclass
class BoundsReport:
    weak11: float
    strong_p: float
    weak_orlicz: float
    strong_orlicz: Optional[float]  # None when the superlinearity certificate is absent


def weak_orlicz_constant(mf_vals: np.ndarray, f: GridFunction, phi: YoungFunction,
                         levels: int = 50) -> float:
    """sup over alpha of Phi(alpha) |{Mf > alpha}| / modular(f)."""
    rho = modular(f, phi)
    if rho == 0.0:
        return 0.0
    meas = f.grid.cell_measure
    pos = mf_vals[mf_vals > 0]
    if pos.size == 0:
        return 0.0
    alphas = np.geomspace(pos.min() * 0.999, pos.max() * 0.999, levels)
    best = 0.0
    for a in alphas:
        best = max(best, float(phi(a)) * float(np.count_nonzero(mf_vals > a)) * meas / rho)
    return best


def maximal_bounds_check(f: GridFunction, phi: YoungFunction, p: float = 2.0,
                         radii_cells: Optional[Sequence[int]] = None,
                         require_strong_orlicz: bool = False) -> BoundsReport:
    """Empirical weak/strong constants for the maximal operator.

    The weak Orlicz constant needs no growth assumption; the strong Orlicz
    ratio requires a superlinearity certificate and is refused (None, or
    NotCertifiedError when explicitly required) without one.
    """
    if radii_cells is None:
        radii_cells = default_radii_cells(f.grid)
    mf_vals = maximal_values(f, radii_cells)
    mf = GridFunction(f.grid, mf_vals)
    meas = f.grid.cell_measure
    lp_f = float(np.sum(f.magnitude() ** p) * meas) ** (1.0 / p)
    strong_p = (float(np.sum(mf_vals**p) * meas) ** (1.0 / p) / lp_f) if lp_f > 0 else 0.0
    strong_orlicz = None
    if certify_nabla2(phi) is not None:
        nf = luxemburg_norm(f, phi)
        strong_orlicz = luxemburg_norm(mf, phi) / nf if nf > 0 else 0.0
    elif require_strong_orlicz:
        raise NotCertifiedError(f"{phi.label}: superlinearity absent, strong Orlicz check refused")
    return BoundsReport(
        weak11=weak11_constant(mf_vals, f),
        strong_p=strong_p,
        weak_orlicz=weak_orlicz_constant(mf_vals, f, phi),
        strong_orlicz=strong_orlicz,
    )


@dataclass
class JensenMaximalReport:
    violations: int
    min_slack: float
    slack: np.ndarray


def jensen_maximal_check(f: GridFunction, phi: YoungFunction,
                         radii_cells: Optional[Sequence[int]] = None) -> JensenMaximalReport:
    """Pointwise Phi(Mf) <= M(Phi(|f|)) with both sides on the same radii family.

    Exact in the discrete model (monotone Phi, per-ball Jensen, max over the
    same family); violations are counted beyond a 1e-12 relative float guard.
    """
    if radii_cells is None:
        radii_cells = default_radii_cells(f.grid)
    mf = maximal_values(f, radii_cells)
    phif = GridFunction(f.grid, np.asarray(phi(f.magnitude())))
    mphif = maximal_values(phif, radii_cells)
    lhs = np.asarray(phi(mf))
    slack = mphif - lhs
    tol = _EXACTNESS_SLACK * np.maximum(np.abs(mphif), np.abs(lhs))
    violations = int(np.count_nonzero(slack < -tol))
    return JensenMaximalReport(violations=violations, min_slack=float(slack.min()), slack=slack)


# -- oscillation ----------------------------------------------------------------------


def mean_oscillation_table(a: GridFunction, radii_cells: Sequence[int], power: float = 1.0):
    """Per-radius supremum over centers of the p-mean oscillation.

    For each ball: (mean over the ball of |a - ball average|^p)^(1/p).  On
    rectangles only balls contained in the domain count.
    """
    vals = a.component(0) if a.components > 1 else a.values
    grid = a.grid
    axes = tuple(range(grid.dim))
    rows = []
    tmp = np.empty(grid.shape)
    for k in sorted(set(int(k) for k in radii_cells)):
        offsets = ball_offsets(grid.dim, k)
        avg = ball_means(vals, grid, k)
        acc = np.zeros(grid.shape)
        for d in offsets:
            shifted = np.roll(vals, tuple(-d), axis=axes)
            np.subtract(shifted, avg, out=tmp)
            np.abs(tmp, out=tmp)
            if power != 1.0:
                np.power(tmp, power, out=tmp)
            acc += tmp
        osc = (acc / len(offsets)) ** (1.0 / power)
        mask = valid_centers(grid, k)
        rows.append((k * grid.h, float(osc[mask].max()) if mask.any() else 0.0))
    return rows


def bmo_seminorm(a: GridFunction, radii_cells: Optional[Sequence[int]] = None) -> float:
    """sup over centers and the radii family of the mean oscillation."""
    if radii_cells is None:
        radii_cells = default_radii_cells(a.grid)
    table = mean_oscillation_table(a, radii_cells)
    return max(v for _, v in table)


def vmo_modulus(a: GridFunction, R_grid: Sequence[float],
                radii_cells: Optional[Sequence[int]] = None):
    """Sampled map R -> sup over balls of radius <= R; non-decreasing by construction."""
    if radii_cells is None:
        radii_cells = default_radii_cells(a.grid)
    table = mean_oscillation_table(a, radii_cells)
    radii = np.array([r for r, _ in table])
    sups = np.maximum.accumulate(np.array([v for _, v in table]))
    out = []
    for R in R_grid:
        sel = radii <= R + 1e-12
        out.append((float(R), float(sups[sel][-1]) if sel.any() else 0.0))
    return out


def john_nirenberg_check(a: GridFunction, p_list: Sequence[float],
                         radii_cells: Optional[Sequence[int]] = None) -> dict:
    """Empirical constants C(p): p-mean oscillation sup over the seminorm.

    The denominator is the p = 1 supremum over the same ball family, so the
    p = 1 entry is exactly 1; constant symbols report zeros.
    """
    if radii_cells is None:
        radii_cells = default_radii_cells(a.grid)
    base_table = mean_oscillation_table(a, radii_cells, power=1.0)
    base = max(v for _, v in base_table)
    out = {}
    for p in p_list:
        if p == 1.0:
            sup_p = base
        else:
            table = mean_oscillation_table(a, radii_cells, power=p)
            sup_p = max(v for _, v in table)
        out[p] = sup_p / base if base > 0 else 0.0
    return out


@dataclass
class OscillationReport:
    bmo_seminorm: float
    vmo_modulus: list   # (R, gamma) pairs
    jn_ratios: dict
    radii_cells: list = field(default_factory=list)


def oscillation_report(a: GridFunction, radii_cells: Optional[Sequence[int]] = None,
                       R_grid: Optional[Sequence[float]] = None,
                       p_list: Sequence[float] = (1.0, 2.0)) -> OscillationReport:
    if radii_cells is None:
        radii_cells = geometric_radii_cells(a.grid)
    if R_grid is None:
        R_grid = [k * a.grid.h for k in sorted(set(radii_cells))]
    return OscillationReport(
        bmo_seminorm=bmo_seminorm(a, radii_cells),
        vmo_modulus=vmo_modulus(a, R_grid, radii_cells),
        jn_ratios=john_nirenberg_check(a, p_list, radii_cells),
        radii_cells=sorted(set(int(k) for k in radii_cells)),
    )
