"""Sampled fields on uniform grids; Orlicz modular, Luxemburg and Sobolev norms.

Grids are square boxes with cell-centered sample points x_i = origin +
(i + 1/2) h and the cell measure h^n as the discrete measure, so that sums of
Phi(|f|) h^n are the exact modulars of the piecewise-constant interpretation.
Vector fields reduce to scalars through the pointwise Euclidean magnitude
before any modular is taken.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from itertools import product as _iproduct
from typing import Optional

import numpy as np

from .errors import ModularOverflowError, StencilError
from .young import YoungFunction

TORUS = "torus"
RECT = "rect"


@dataclass(frozen=True)
class Grid:
    dim: int
    n: int
    topology: str = TORUS
    side: float = 1.0
    origin: tuple = None  # filled to zeros

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError("dim must be 1, 2 or 3")
        if self.n < 8:
            raise ValueError("need at least 8 points per axis")
        if self.topology not in (TORUS, RECT):
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.side <= 0:
            raise ValueError("side must be positive")
        origin = self.origin if self.origin is not None else (0.0,) * self.dim
        object.__setattr__(self, "origin", tuple(float(c) for c in origin))
        if len(self.origin) != self.dim:
            raise ValueError("origin length must match dim")

    @property
    def h(self) -> float:
        return self.side / self.n

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def cell_measure(self) -> float:
        return self.h**self.dim

    def axis_coords(self, axis: int) -> np.ndarray:
        return self.origin[axis] + (np.arange(self.n) + 0.5) * self.h

    def mesh(self):
        axes = [self.axis_coords(a) for a in range(self.dim)]
        return np.meshgrid(*axes, indexing="ij")

    def displacement(self, points: np.ndarray, center) -> np.ndarray:
        """Displacement point - center, minimum-image on the torus."""
        d = points - np.asarray(center, dtype=float)
        if self.topology == TORUS:
            d = (d + 0.5 * self.side) % self.side - 0.5 * self.side
        return d

    def distance(self, center) -> np.ndarray:
        pts = np.stack(self.mesh(), axis=-1)
        d = self.displacement(pts, center)
        return np.sqrt((d**2).sum(axis=-1))


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))


def ball_mask(grid: Grid, ball: Ball) -> np.ndarray:
    """Cells whose centers lie strictly inside the ball."""
    mask = grid.distance(ball.center) < ball.radius
    if not mask.any():
        raise ValueError("discrete ball contains no grid point")
    return mask


class GridFunction:
    """Immutable sampled field; values shaped (*grid.shape) or (m, *grid.shape)."""

    def __init__(self, grid: Grid, values: np.ndarray, margins: tuple = None):
        values = np.asarray(values, dtype=float)
        if values.shape == grid.shape:
            pass
        elif values.ndim == grid.dim + 1 and values.shape[1:] == grid.shape:
            pass
        else:
            raise ValueError(f"values shape {values.shape} incompatible with grid {grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("grid function values must be finite")
        values = values.copy()
        values.setflags(write=False)
        self.grid = grid
        self.values = values
        self.margins = tuple(margins) if margins is not None else (0,) * grid.dim

    @property
    def components(self) -> int:
        return 1 if self.values.ndim == self.grid.dim else self.values.shape[0]

    def component(self, j: int) -> np.ndarray:
        return self.values if self.values.ndim == self.grid.dim else self.values[j]

    def magnitude(self) -> np.ndarray:
        """Pointwise Euclidean magnitude across components."""
        if self.values.ndim == self.grid.dim:
            return np.abs(self.values)
        return np.sqrt((self.values**2).sum(axis=0))

    def scale(self, c: float) -> "GridFunction":
        return GridFunction(self.grid, c * self.values, self.margins)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        if other.grid != self.grid:
            raise ValueError("grid mismatch")
        m = tuple(max(a, b) for a, b in zip(self.margins, other.margins))
        return GridFunction(self.grid, self.values + other.values, m)

    def max_abs(self) -> float:
        return float(np.max(self.magnitude()))


def interior_mask(grid: Grid, margins) -> np.ndarray:
    """Cells at least margins[axis] cells from each rectangle face (all-true on the torus)."""
    mask = np.ones(grid.shape, dtype=bool)
    if grid.topology == TORUS:
        return mask
    for ax, m in enumerate(margins):
        if m == 0:
            continue
        if 2 * m >= grid.n:
            raise StencilError("margin swallows the whole axis")
        sl = [slice(None)] * grid.dim
        sl[ax] = slice(0, m)
        mask[tuple(sl)] = False
        sl[ax] = slice(grid.n - m, grid.n)
        mask[tuple(sl)] = False
    return mask


def _region_mask(f: GridFunction, region) -> Optional[np.ndarray]:
    if region is None:
        if any(m > 0 for m in f.margins):
            return interior_mask(f.grid, f.margins)
        return None
    mask = ball_mask(f.grid, region) if isinstance(region, Ball) else np.asarray(region, bool)
    if any(m > 0 for m in f.margins):
        valid = interior_mask(f.grid, f.margins)
        if np.any(mask & ~valid):
            raise StencilError("region extends into the stencil margin")
    return mask


# -- modular and norms ---------------------------------------------------------


def _modular_values(f: GridFunction, phi: YoungFunction, lam: float, mask) -> float:
    a = f.magnitude()
    if mask is not None:
        a = a[mask]
    with np.errstate(over="ignore", invalid="ignore"):
        vals = phi(a / lam)
    if np.any(np.isnan(vals)):
        raise ModularOverflowError(f"modular integrand NaN for {phi.label}")
    return float(np.sum(vals) * f.grid.cell_measure)


def modular(f: GridFunction, phi: YoungFunction, region=None) -> float:
    """Sum of Phi(|f|) over the region times the cell measure."""
    out = _modular_values(f, phi, 1.0, _region_mask(f, region))
    if not np.isfinite(out):
        raise ModularOverflowError(f"modular overflow for {phi.label}")
    return out


_LUX_REL_WIDTH = 1e-12


def luxemburg_norm(f: GridFunction, phi: YoungFunction, region=None) -> float:
    """inf{lam > 0 : modular(f/lam) <= 1} by bracketing and bisection.

    Brackets from lam0 = max|f| h^n 1e-6 by doubling (or halving when lam0 is
    already feasible), then bisects to relative width 1e-12 and returns the
    feasible endpoint, so modular(f/lam) <= 1 <= modular(f/(lam(1-1e-10)))
    for nonzero f.
    """
    mask = _region_mask(f, region)
    a = f.magnitude()
    if mask is not None:
        a = a[mask]
    amax = float(a.max()) if a.size else 0.0
    if amax == 0.0:
        return 0.0

    meas = f.grid.cell_measure

    def rho(lam: float) -> float:
        with np.errstate(over="ignore", invalid="ignore"):
            vals = phi(a / lam)
        if np.any(np.isnan(vals)):
            raise ModularOverflowError(f"modular integrand NaN for {phi.label}")
        return float(np.sum(vals) * meas)

    lam = max(amax * meas * 1e-6, 1e-280)
    if rho(lam) > 1.0:
        lo = lam
        hi = lam
        for _ in range(2000):
            hi *= 2.0
            if rho(hi) <= 1.0:
                break
            lo = hi
        else:
            raise ModularOverflowError("bracketing failed upward")
    else:
        hi = lam
        lo = lam
        for _ in range(2000):
            lo /= 2.0
            if rho(lo) > 1.0:
                break
            hi = lo
        else:
            return 0.0  # modular stays <= 1 for arbitrarily small lam: degenerate
    while hi - lo > _LUX_REL_WIDTH * hi:
        mid = 0.5 * (lo + hi)
        if rho(mid) <= 1.0:
            hi = mid
        else:
            lo = mid
    return hi


def jensen_check(f: GridFunction, phi: YoungFunction, region=None):
    """Both sides of Phi(mean |f|) <= mean Phi(|f|) over the region."""
    mask = _region_mask(f, region)
    a = f.magnitude()
    if mask is not None:
        a = a[mask]
    if a.size == 0:
        raise ValueError("empty region")
    lhs = float(phi(float(np.mean(a))))
    rhs = float(np.mean(phi(a)))
    return lhs, rhs


# -- finite differences ----------------------------------------------------------

# centered second-order stencils: order -> (coefficients, half-width)
_STENCILS = {
    1: (np.array([-0.5, 0.0, 0.5]), 1),
    2: (np.array([1.0, -2.0, 1.0]), 1),
    3: (np.array([-0.5, 1.0, 0.0, -1.0, 0.5]), 2),
    4: (np.array([1.0, -4.0, 6.0, -4.0, 1.0]), 2),
}


def _apply_axis_stencil(vals: np.ndarray, axis: int, order: int, h: float, torus: bool):
    coeffs, hw = _STENCILS[order]
    out = np.zeros_like(vals)
    n = vals.shape[axis]
    if 2 * hw + 1 > n:
        raise StencilError("stencil wider than the axis")
    for k, c in enumerate(coeffs):
        if c == 0.0:
            continue
        shift = k - hw
        if torus:
            out += c * np.roll(vals, -shift, axis=axis)
        else:
            src = [slice(None)] * vals.ndim
            dst = [slice(None)] * vals.ndim
            if shift >= 0:
                src[axis] = slice(shift, n)
                dst[axis] = slice(0, n - shift)
            else:
                src[axis] = slice(0, n + shift)
                dst[axis] = slice(-shift, n)
            out[tuple(dst)] += c * vals[tuple(src)]
    return out / h**order, hw


def finite_difference(u: GridFunction, alpha) -> GridFunction:
    """Centered composition D^alpha by per-axis stencils of the component orders.

    On rectangles the rim of cells the stencils cannot reach is zeroed and
    recorded in the margins; regions handed to norms must stay inside it.
    """
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != u.grid.dim:
        raise ValueError("multi-index length must match dim")
    if any(a < 0 or a > 4 for a in alpha):
        raise ValueError("component orders up to 4 supported")
    vals = u.values.astype(float)
    torus = u.grid.topology == TORUS
    margins = list(u.margins)
    offset = 1 if vals.ndim == u.grid.dim + 1 else 0
    for ax, a in enumerate(alpha):
        if a == 0:
            continue
        vals, hw = _apply_axis_stencil(vals, ax + offset, a, u.grid.h, torus)
        if not torus:
            margins[ax] += hw
    if not torus and any(m > 0 for m in margins):
        # zero the rim so margins are the single source of validity
        valid = interior_mask(u.grid, tuple(margins))
        vals = vals.copy()
        if offset:
            vals[:, ~valid] = 0.0
        else:
            vals[~valid] = 0.0
    return GridFunction(u.grid, vals, tuple(margins))


def multi_indices(dim: int, max_order: int, exact: bool = False):
    """Multi-indices with |alpha| <= max_order (or == when exact), deterministic order."""
    out = []
    for total in range(0, max_order + 1):
        if exact and total != max_order:
            continue
        for alpha in _iproduct(range(total + 1), repeat=dim):
            if sum(alpha) == total:
                out.append(alpha)
    return out


def fd_margins(dim: int, order: int) -> tuple:
    """Worst-case per-axis margins over all |alpha| <= order."""
    worst = 0
    for a in range(1, min(order, 4) + 1):
        worst = max(worst, _STENCILS[a][1])
    return (worst,) * dim


def sobolev_orlicz_norm(u: GridFunction, phi: YoungFunction, order: int, region=None) -> float:
    """Sum over |alpha| <= order of the Luxemburg norms of D^alpha u on the region.

    All terms integrate over the same cells: on rectangles without an explicit
    region, that is the common interior reachable by every stencil.
    """
    if order not in (2, 4):
        raise ValueError("order must be 2 or 4")
    if region is None and u.grid.topology == RECT:
        worst = tuple(max(m, fm) for m, fm in zip(u.margins, fd_margins(u.grid.dim, order)))
        region = interior_mask(u.grid, worst)
    total = 0.0
    for alpha in multi_indices(u.grid.dim, order):
        total += luxemburg_norm(finite_difference(u, alpha), phi, region=region)
    return total


# -- serialization ----------------------------------------------------------------

_MAGIC = b"OGF1"


def save_binary(f: GridFunction, path):
    """Flat binary layout: header (dim, N per axis, topology flag, m, origin, side),
    then float64 payload in row-major order."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<i", f.grid.dim))
        for _ in range(f.grid.dim):
            fh.write(struct.pack("<i", f.grid.n))
        fh.write(struct.pack("<B", 0 if f.grid.topology == TORUS else 1))
        fh.write(struct.pack("<i", f.components))
        for c in f.grid.origin:
            fh.write(struct.pack("<d", c))
        fh.write(struct.pack("<d", f.grid.side))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def load_binary(path) -> GridFunction:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError("not a grid-function file")
        (dim,) = struct.unpack("<i", fh.read(4))
        ns = [struct.unpack("<i", fh.read(4))[0] for _ in range(dim)]
        if len(set(ns)) != 1:
            raise ValueError("only square grids supported")
        (topo,) = struct.unpack("<B", fh.read(1))
        (m,) = struct.unpack("<i", fh.read(4))
        origin = tuple(struct.unpack("<d", fh.read(8))[0] for _ in range(dim))
        (side,) = struct.unpack("<d", fh.read(8))
        grid = Grid(dim=dim, n=ns[0], topology=TORUS if topo == 0 else RECT,
                    side=side, origin=origin)
        count = m * grid.n**dim
        payload = np.frombuffer(fh.read(8 * count), dtype="<f8").astype(float)
    shape = grid.shape if m == 1 else (m,) + grid.shape
    return GridFunction(grid, payload.reshape(shape))


def to_csv(f: GridFunction, path):
    """Index columns then one column per component; small grids only."""
    import csv as _csv

    idx = list(np.ndindex(*f.grid.shape))
    with open(path, "w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow([f"i{a}" for a in range(f.grid.dim)] + [f"c{j}" for j in range(f.components)])
        for ind in idx:
            row = list(ind) + [repr(float(f.component(j)[ind])) for j in range(f.components)]
            w.writerow(row)


# -- named generators ---------------------------------------------------------------


def gen_constant(grid: Grid, value: float = 1.0) -> GridFunction:
    return GridFunction(grid, np.full(grid.shape, float(value)))


def gen_sin(grid: Grid, freq=None, amplitude: float = 1.0) -> GridFunction:
    """Product of sin(2 pi k_a x_a) over axes with nonzero k_a."""
    freq = tuple(freq) if freq is not None else (1,) + (0,) * (grid.dim - 1)
    vals = np.full(grid.shape, float(amplitude))
    mesh = grid.mesh()
    for ax, k in enumerate(freq):
        if k:
            vals = vals * np.sin(2.0 * np.pi * k * mesh[ax])
    return GridFunction(grid, vals)


def gen_mode(grid: Grid, freq, phase: float = 0.0, amplitude: float = 1.0) -> GridFunction:
    """Single Fourier mode cos(2 pi k.x + phase)."""
    mesh = grid.mesh()
    arg = np.zeros(grid.shape)
    for ax, k in enumerate(freq):
        arg = arg + 2.0 * np.pi * k * mesh[ax]
    return GridFunction(grid, amplitude * np.cos(arg + phase))


def gen_indicator(grid: Grid, lo, hi, amplitude: float = 1.0) -> GridFunction:
    """Indicator of the axis-aligned box [lo, hi) by cell-center membership."""
    mesh = grid.mesh()
    mask = np.ones(grid.shape, dtype=bool)
    for ax in range(grid.dim):
        mask &= (mesh[ax] >= lo[ax]) & (mesh[ax] < hi[ax])
    return GridFunction(grid, amplitude * mask.astype(float))


def gen_disc(grid: Grid, center, radius, amplitude: float = 1.0) -> GridFunction:
    mask = grid.distance(center) < radius
    return GridFunction(grid, amplitude * mask.astype(float))


def gen_gaussian_bump(grid: Grid, center=None, width: float = 0.1, amplitude: float = 1.0) -> GridFunction:
    center = center if center is not None else tuple(o + 0.5 * grid.side for o in grid.origin)
    r = grid.distance(center)
    return GridFunction(grid, amplitude * np.exp(-0.5 * (r / width) ** 2))


def gen_random_smooth(grid: Grid, seed: int, kmax: int = 8, amplitude: float = 1.0) -> GridFunction:
    """Band-limited noise: seeded random amplitudes/phases on modes |k|_inf <= kmax."""
    rng = np.random.default_rng(seed)
    mesh = grid.mesh()
    vals = np.zeros(grid.shape)
    modes = [k for k in _iproduct(range(-kmax, kmax + 1), repeat=grid.dim)
             if any(k) and k[0] >= 0]  # one per +-
    for k in modes:
        amp = rng.normal() / (1.0 + sum(abs(c) for c in k))
        ph = rng.uniform(0.0, 2.0 * np.pi)
        arg = np.zeros(grid.shape)
        for ax, kc in enumerate(k):
            arg = arg + 2.0 * np.pi * kc * mesh[ax]
        vals += amp * np.cos(arg + ph)
    scale = np.max(np.abs(vals))
    if scale > 0:
        vals *= amplitude / scale
    return GridFunction(grid, vals)


def gen_log_singularity(grid: Grid, center=None) -> GridFunction:
    """log of the (minimum-image) distance to a cell corner: finite at cell centers."""
    center = center if center is not None else tuple(o + 0.5 * grid.side for o in grid.origin)
    r = grid.distance(center)
    if np.any(r == 0.0):
        raise ValueError("singularity center must be a cell corner, not a cell center")
    return GridFunction(grid, np.log(r))


def gen_ramp(grid: Grid, axis: int = 0) -> GridFunction:
    return GridFunction(grid, grid.mesh()[axis].copy())


GENERATORS = {
    "constant": gen_constant,
    "sin": gen_sin,
    "mode": gen_mode,
    "indicator": gen_indicator,
    "disc": gen_disc,
    "gaussian_bump": gen_gaussian_bump,
    "random_smooth": gen_random_smooth,
    "log_singularity": gen_log_singularity,
    "ramp": gen_ramp,
}


def make_field(grid: Grid, generator: str, **params) -> GridFunction:
    if generator not in GENERATORS:
        raise ValueError(f"unknown generator {generator!r}; known: {sorted(GENERATORS)}")
    return GENERATORS[generator](grid, **params)
