"""Young functions: growth certification, conjugates, Hardy-type integral checks.

Growth conditions are certified on a finite logarithmic scan window, never
globally; every certificate records the window it was computed on.  The
doubling constant is the grid supremum of Phi(2t)/Phi(t), and superlinear
growth is certified by the smallest l on a geometric candidate grid with
Phi(l*t) >= 2*l*Phi(t) at every scan node.  Both searches refuse to return a
constant when the relevant quantity is still drifting across the top decades
of the window: that is how window-limited behaviour (the doubling ratio of
e^t - 1, or the superlinearity threshold of t*log(1+t), which grows linearly
with the window top) is kept out of the certified classes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import (
    HardyVerificationError,
    InvalidYoungError,
    MaximizerAtBoundaryError,
    NotCertifiedError,
)

DEFAULT_SCAN = (1e-6, 1e6)
POINTS_PER_DECADE = 200

# Relative tolerances of the constructor checks.
_CONVEXITY_RTOL = 1e-10
_DENSITY_RTOL = 1e-8
_RATIO_SLACK = 1e-12


def log_grid(t_min: float, t_max: float, per_decade: int = POINTS_PER_DECADE) -> np.ndarray:
    """Log-spaced grid with a fixed node density per decade."""
    if not (0.0 < t_min < t_max):
        raise ValueError("need 0 < t_min < t_max")
    decades = math.log10(t_max / t_min)
    n = max(int(round(per_decade * decades)) + 1, 8)
    return np.logspace(math.log10(t_min), math.log10(t_max), n)


class YoungFunction:
    """An evaluable convex growth function with optional density.

    The constructor checks, on the scan grid: Phi(0) = 0, strict monotonicity,
    discrete convexity (midpoints below chords to relative 1e-10), Phi(t)/t
    non-decreasing, and, when a density is supplied, that it integrates back
    to Phi increments to relative 1e-8.
    """

    def __init__(
        self,
        evaluator: Callable[[np.ndarray], np.ndarray],
        density: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        label: str = "phi",
        scan_range: tuple[float, float] = DEFAULT_SCAN,
        check_grid: Optional[np.ndarray] = None,
    ):
        self.evaluator = evaluator
        self.density = density
        self.label = label
        self.scan_range = (float(scan_range[0]), float(scan_range[1]))
        if check_grid is not None:
            self._grid = np.asarray(check_grid, dtype=float)
        else:
            self._grid = log_grid(*self.scan_range)
        self._validate()

    # -- evaluation ---------------------------------------------------------

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            out = np.asarray(self.evaluator(t_arr), dtype=float)
        if out.shape != t_arr.shape:
            out = np.broadcast_to(out, t_arr.shape).copy()
        return out if t_arr.ndim else float(out)

    def d(self, t):
        """Density phi = Phi' (right derivative); centered log-grid differences as fallback."""
        t_arr = np.asarray(t, dtype=float)
        if self.density is not None:
            with np.errstate(over="ignore", invalid="ignore"):
                out = np.asarray(self.density(t_arr), dtype=float)
            if out.shape != t_arr.shape:
                out = np.broadcast_to(out, t_arr.shape).copy()
            return out if t_arr.ndim else float(out)
        lo = t_arr * (1.0 - 1e-6)
        hi = t_arr * (1.0 + 1e-6)
        out = (self(hi) - self(lo)) / (hi - lo)
        return out if t_arr.ndim else float(out)

    def grid(self) -> np.ndarray:
        return self._grid

    def __repr__(self):
        return f"YoungFunction({self.label!r}, scan={self.scan_range})"

    # -- construction checks --------------------------------------------------

    def _validate(self):
        t = self._grid
        v = self(t)
        if not np.all(np.isfinite(v)):
            raise InvalidYoungError(f"{self.label}: non-finite values on the scan grid")
        if np.any(v <= 0.0):
            raise InvalidYoungError(f"{self.label}: non-positive values on the scan grid")
        v0 = self(0.0)
        if not (abs(v0) <= 1e-12 * v[0] + 1e-300):
            raise InvalidYoungError(f"{self.label}: Phi(0) = {v0!r} != 0")
        if not np.all(np.diff(v) > 0.0):
            raise InvalidYoungError(f"{self.label}: not strictly increasing on the scan grid")
        # chord test on consecutive triples
        t1, t2, t3 = t[:-2], t[1:-1], t[2:]
        v1, v3 = v[:-2], v[2:]
        chord = v1 + (v3 - v1) * ((t2 - t1) / (t3 - t1))
        if not np.all(v[1:-1] <= chord * (1.0 + _CONVEXITY_RTOL)):
            raise InvalidYoungError(f"{self.label}: convexity violated on the scan grid")
        ratio = v / t
        if not np.all(np.diff(ratio) >= -_RATIO_SLACK * ratio[1:]):
            raise InvalidYoungError(f"{self.label}: Phi(t)/t not non-decreasing")
        if self.density is not None:
            self._check_density(t, v)

    def _check_density(self, t, v):
        # 12-node Gauss-Legendre per subsampled grid interval; exponential-type
        # integrands over the wide top-of-window intervals need the high order
        nodes, weights = np.polynomial.legendre.leggauss(12)
        idx = np.arange(0, len(t) - 1, 10)
        a, b = t[idx], t[idx + 1]
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        s = mid[:, None] + half[:, None] * nodes[None, :]
        integral = (half[:, None] * weights[None, :] * self.d(s)).sum(axis=1)
        err = np.abs(v[idx + 1] - v[idx] - integral)
        if not np.all(err <= _DENSITY_RTOL * v[idx + 1]):
            raise InvalidYoungError(f"{self.label}: density inconsistent with evaluator")


# -- built-in families --------------------------------------------------------


def make_power(p: float, scan=DEFAULT_SCAN) -> YoungFunction:
    if p <= 1.0:
        raise ValueError("power family needs p > 1")
    return YoungFunction(
        lambda t: t**p,
        density=lambda t: p * t ** (p - 1.0),
        label=f"power({p:g})",
        scan_range=scan,
    )


def make_exp_minus_one(scan=(1e-6, 500.0)) -> YoungFunction:
    """e^t - 1.  Default window top 500 keeps values inside float64 range."""
    return YoungFunction(
        np.expm1,
        density=np.exp,
        label="exp_minus_one",
        scan_range=scan,
    )


def make_t_log(scan=DEFAULT_SCAN) -> YoungFunction:
    return YoungFunction(
        lambda t: t * np.log1p(t),
        density=lambda t: np.log1p(t) + t / (1.0 + t),
        label="t_log",
        scan_range=scan,
    )


def make_power_log(p: float, scan=DEFAULT_SCAN) -> YoungFunction:
    if p <= 1.0:
        raise ValueError("power_log family needs p > 1")
    return YoungFunction(
        lambda t: t**p * np.log1p(t),
        density=lambda t: p * t ** (p - 1.0) * np.log1p(t) + t**p / (1.0 + t),
        label=f"power_log({p:g})",
        scan_range=scan,
    )


YOUNG_KINDS = {
    "power": make_power,
    "exp_minus_one": make_exp_minus_one,
    "t_log": make_t_log,
    "power_log": make_power_log,
}


def make_young(kind: str, p: Optional[float] = None, scan=None) -> YoungFunction:
    """Instantiate a built-in family by config name."""
    if kind not in YOUNG_KINDS:
        raise ValueError(f"unknown Young family {kind!r}; known: {sorted(YOUNG_KINDS)}")
    factory = YOUNG_KINDS[kind]
    kwargs = {}
    if scan is not None:
        kwargs["scan"] = (float(scan[0]), float(scan[1]))
    if kind in ("power", "power_log"):
        if p is None:
            raise ValueError(f"family {kind!r} needs parameter p")
        return factory(float(p), **kwargs)
    return factory(**kwargs)


# -- certification ------------------------------------------------------------


def _decade_blocks(t: np.ndarray, values: np.ndarray):
    """Split values into per-decade blocks of t (ascending).

    Blocks of fewer than 10 points (the bare window endpoints) are merged
    into their neighbour so trend tests compare genuine decades.
    """
    d = np.floor(np.log10(t) - math.log10(t[0]) + 1e-9).astype(int)
    blocks = [values[d == dec] for dec in np.unique(d)]
    merged = []
    for b in blocks:
        if merged and (len(b) < 10 or len(merged[-1]) < 10):
            merged[-1] = np.concatenate([merged[-1], b])
        else:
            merged.append(b)
    return merged


def certify_delta2(phi: YoungFunction) -> Optional[float]:
    """Grid supremum of Phi(2t)/Phi(t), or None when the ratio still grows.

    The supremum is withheld whenever the per-decade sups of the doubling
    ratio rise by more than 10% across each of the top two decade boundaries
    of the window (or reach overflow): the constant is then window-limited
    and reporting it would certify a function that doubles ever faster.
    """
    t = phi.grid()
    ratio = phi(2.0 * t) / phi(t)
    sups = np.array([b.max() for b in _decade_blocks(t, ratio)])
    if len(sups) >= 3:
        growing = sups[-1] > 1.1 * sups[-2] and sups[-2] > 1.1 * sups[-3]
    else:
        growing = False
    if growing or not np.isfinite(ratio).all():
        return None
    return float(ratio.max())


_NABLA2_LMAX = 2**24
_NABLA2_RATIO = 1.01
_NABLA2_WINDOW_FACTOR = 10.0


def certify_nabla2(
    phi: YoungFunction,
    l_max: float = _NABLA2_LMAX,
    candidate_ratio: float = _NABLA2_RATIO,
) -> Optional[float]:
    """Smallest candidate l with Phi(l*t) >= 2*l*Phi(t) on the whole window.

    Feasibility is monotone in l (superlinearity gives Phi(l't) >= (l'/l)
    Phi(lt)), so a bisection over the geometric candidate grid l = ratio^k
    suffices.  The result is withheld when it is driven by the top two
    decades of the window: the search is repeated on the window with those
    decades removed, and a blow-up of the required l by more than 10x marks
    the condition as window-limited (t*log(1+t) needs l ~ t_max and is
    rejected this way).
    """
    t_full = phi.grid()

    def smallest_feasible(t: np.ndarray) -> Optional[float]:
        ph = phi(t)

        def feasible(l: float) -> bool:
            return bool(np.all(phi(l * t) >= 2.0 * l * ph))

        k_max = int(math.floor(math.log(l_max) / math.log(candidate_ratio)))
        lo_k, hi_k = 1, k_max
        if not feasible(candidate_ratio**hi_k):
            return None
        if feasible(candidate_ratio**lo_k):
            return candidate_ratio**lo_k
        while hi_k - lo_k > 1:
            mid = (lo_k + hi_k) // 2
            if feasible(candidate_ratio**mid):
                hi_k = mid
            else:
                lo_k = mid
        return candidate_ratio**hi_k

    l_full = smallest_feasible(t_full)
    if l_full is None:
        return None
    t_hi = t_full[-1]
    trunc = t_full[t_full <= t_hi / 100.0]
    if len(trunc) >= 8:
        l_trunc = smallest_feasible(trunc)
        if l_trunc is not None and l_full > _NABLA2_WINDOW_FACTOR * l_trunc:
            return None
    return float(l_full)


@dataclass(frozen=True)
class IndexReport:
    lower: float          # certified lower index (endpoint-extrapolated when unresolved)
    upper: float          # math.inf when divergent
    lower_resolved: bool  # False when the window inf was still falling and a limit was fitted
    window_lower: float   # raw grid infimum: a valid quasi-monotonicity bound on the window


def _extrapolated_lower_limit(points):
    """Endpoint limit of per-decade minima still falling at the window top.

    Slowly-varying families approach their lower index like L + c/log t; the
    model is fitted through the last two decade minima and validated on the
    third.  A fit indistinguishable from (or below) the universal bound 1,
    or one the third decade contradicts, is reported as 1.
    """
    (t3, m3), (t2, m2), (t1, m1) = points[-3], points[-2], points[-1]
    x1, x2, x3 = math.log(t1), math.log(t2), math.log(t3)
    c = (m2 - m1) / (1.0 / x2 - 1.0 / x1)
    limit = m1 - c / x1
    residual = abs(limit + c / x3 - m3)
    if limit <= 1.0 + 10.0 * residual + 1e-9:
        return 1.0
    return limit


def simonenko_indices(phi: YoungFunction) -> IndexReport:
    """Grid inf/sup of t*phi'(t)/Phi(t) with endpoint trend analysis.

    The sup is reported as +inf when the per-decade maxima keep rising across
    the top two decade boundaries (doubling constant divergent).  When the
    per-decade minima are still falling at the window top by more than 1% of
    their excess over 1, the grid infimum has not converged and the lower
    index is taken from the endpoint limit fit instead (see
    _extrapolated_lower_limit); the raw window infimum stays available as
    window_lower.
    """
    t = phi.grid()
    ratio = t * phi.d(t) / phi(t)
    if not np.isfinite(ratio).all():
        raise InvalidYoungError(f"{phi.label}: index ratio non-finite on the grid")
    blocks_t = _decade_blocks(t, t)
    blocks_v = _decade_blocks(t, ratio)
    maxs = np.array([b.max() for b in blocks_v])
    min_points = [(bt[int(np.argmin(bv))], float(bv.min()))
                  for bt, bv in zip(blocks_t, blocks_v)]
    mins = np.array([m for _, m in min_points])

    upper = float(ratio.max())
    if len(maxs) >= 3 and maxs[-1] > 1.01 * maxs[-2] and maxs[-2] > 1.01 * maxs[-3]:
        upper = math.inf

    window_lower = float(ratio.min())
    lower = window_lower
    lower_resolved = True
    if len(mins) >= 3:
        fall1 = mins[-2] - mins[-1]
        fall2 = mins[-3] - mins[-2]
        if fall1 > 0.01 * max(mins[-1] - 1.0, 0.0) and fall2 > 0.0:
            lower = _extrapolated_lower_limit(min_points)
            lower_resolved = False
    return IndexReport(lower=lower, upper=upper, lower_resolved=lower_resolved,
                       window_lower=window_lower)


_INDEX_MARGIN = 1e-3


@dataclass(frozen=True)
class GrowthCertificate:
    """Constants extracted from a window scan of one Young function.

    quasi_decr_exp is the exponent P with Phi(t)/t^P non-increasing on the
    window (companion constant 1 by the margin construction); quasi_incr_exp
    is the exponent R with Phi(t)/t^R non-decreasing.  alpha = 1/R and
    root_const = quasi_incr_const^(1/R) are the power/quasi-convexity
    companions.  Hardy data is present only when both growth conditions hold.
    """

    label: str
    scan_range: tuple[float, float]
    mu: Optional[float]
    ell: Optional[float]
    index_lower: float
    index_upper: float
    index_lower_resolved: bool
    index_window_lower: float
    quasi_decr_exp: Optional[float]       # P
    quasi_decr_const: Optional[float]     # companion of P (1 by construction)
    quasi_incr_exp: Optional[float]       # R
    quasi_incr_const: Optional[float]     # companion of R (1 by construction)
    hardy_r: Optional[float] = None
    hardy_cr: Optional[float] = None
    hardy_p: Optional[float] = None
    hardy_cp: Optional[float] = None
    phi: Optional[YoungFunction] = field(default=None, repr=False, compare=False)

    @property
    def alpha(self) -> Optional[float]:
        return None if self.quasi_incr_exp is None else 1.0 / self.quasi_incr_exp

    @property
    def root_const(self) -> Optional[float]:
        if self.quasi_incr_exp is None or self.quasi_incr_const is None:
            return None
        return self.quasi_incr_const ** (1.0 / self.quasi_incr_exp)

    @property
    def doubly_certified(self) -> bool:
        return self.mu is not None and self.ell is not None

    def dilation(self, lam: float) -> float:
        if self.phi is None:
            raise NotCertifiedError("certificate lost its function reference")
        return dilation_constant(self.phi, lam, cert=self)

    CSV_HEADER = ("label", "mu", "ell", "i", "I", "P", "R", "r", "C_r", "p", "C_p",
                  "scan_min", "scan_max")

    def csv_row(self):
        def fmt(x):
            if x is None:
                return ""
            if x == math.inf:
                return "inf"
            return f"{x:.12g}"

        return (
            self.label, fmt(self.mu), fmt(self.ell), fmt(self.index_lower),
            fmt(self.index_upper), fmt(self.quasi_decr_exp), fmt(self.quasi_incr_exp),
            fmt(self.hardy_r), fmt(self.hardy_cr), fmt(self.hardy_p), fmt(self.hardy_cp),
            fmt(self.scan_range[0]), fmt(self.scan_range[1]),
        )


def dilation_constant(phi: YoungFunction, lam: float, cert: Optional[GrowthCertificate] = None) -> float:
    """Grid supremum of Phi(lam*t)/Phi(t) for lam > 1; needs a doubling constant."""
    if lam <= 1.0:
        raise ValueError("dilation factor must exceed 1")
    mu = cert.mu if cert is not None else certify_delta2(phi)
    if mu is None:
        raise NotCertifiedError(f"{phi.label}: doubling condition absent, dilation constant undefined")
    t = phi.grid()
    out = float((phi(lam * t) / phi(t)).max())
    # sanity: iterated doubling bound
    bound = mu ** math.ceil(math.log2(lam))
    if out > bound * (1.0 + 1e-9):
        raise NotCertifiedError(
            f"{phi.label}: dilation constant {out} exceeds iterated doubling bound {bound}"
        )
    return out


def certify(phi: YoungFunction) -> GrowthCertificate:
    """Scan one function and assemble its growth certificate.

    When both growth conditions hold the Hardy exponents r = (1+R)/2 and
    p = 2P are fixed, their closed-form constants computed, and the two
    integral inequalities verified by quadrature at 20 window points
    (HardyVerificationError when a verification misses).
    """
    mu = certify_delta2(phi)
    ell = certify_nabla2(phi)
    idx = simonenko_indices(phi)

    P = b = R = a = None
    if math.isfinite(idx.upper):
        P = idx.upper * (1.0 + _INDEX_MARGIN)
        b = 1.0
    if idx.window_lower > 1.0:
        # quasi-monotonicity is a window statement, so the raw window infimum
        # is the right exponent source even when the limit index is smaller
        R = idx.window_lower * (1.0 - _INDEX_MARGIN)
        a = 1.0

    cert = GrowthCertificate(
        label=phi.label,
        scan_range=phi.scan_range,
        mu=mu,
        ell=ell,
        index_lower=idx.lower,
        index_upper=idx.upper,
        index_lower_resolved=idx.lower_resolved,
        index_window_lower=idx.window_lower,
        quasi_decr_exp=P,
        quasi_decr_const=b,
        quasi_incr_exp=R,
        quasi_incr_const=a,
        phi=phi,
    )
    if mu is not None and ell is not None:
        if R is None or P is None or R <= 1.0:
            raise NotCertifiedError(
                f"{phi.label}: growth certified but quasi-power exponents unusable (P={P}, R={R})"
            )
        hardy = hardy_constants(phi, cert)
        cert = GrowthCertificate(
            **{**cert.__dict__, "hardy_r": hardy.r, "hardy_cr": hardy.c_r,
               "hardy_p": hardy.p, "hardy_cp": hardy.c_p}
        )
    return cert


# -- Hardy-type integral inequalities ------------------------------------------


@dataclass(frozen=True)
class HardyReport:
    r: float
    c_r: float
    p: float
    c_p: float
    lower_ratios: np.ndarray  # measured integral / (Phi(t)/t^r) at the test points
    upper_ratios: np.ndarray


def _simpson(y: np.ndarray, x: np.ndarray) -> float:
    from scipy.integrate import simpson

    return float(simpson(y, x=x))


_QUAD_PER_DECADE = 400
_LOWER_DECADES = 80.0
_UPPER_DECADES = 40.0


def stieltjes_lower_integral(phi: YoungFunction, t: float, r: float) -> float:
    """int_0^t dPhi(s)/s^r as int phi(s) s^{-r} ds on a log grid.

    The substitution s = e^u turns the integrand into phi(e^u) e^{u(1-r)},
    which decays like s^(i(Phi)-r) towards 0; eighty decades below t is far
    past the 1e-16 relative truncation level for every certified function.
    """
    u_hi = math.log(t)
    u = np.linspace(u_hi - _LOWER_DECADES * math.log(10.0), u_hi,
                    int(_LOWER_DECADES * _QUAD_PER_DECADE) + 1)
    s = np.exp(u)
    if phi.density is not None:
        g = phi.d(s) * s ** (1.0 - r)
    else:
        # midpoint Riemann-Stieltjes fallback on the same grid
        sm = np.sqrt(s[:-1] * s[1:])
        dphi = np.diff(phi(s))
        return float(np.sum(dphi / sm**r))
    g[~np.isfinite(g)] = 0.0
    return _simpson(g, u)


def stieltjes_upper_integral(phi: YoungFunction, t: float, p: float) -> float:
    """int_t^inf dPhi(s)/s^p, truncated where the integrand is below 1e-16 of its value at t."""
    u_lo = math.log(t)
    u = np.linspace(u_lo, u_lo + _UPPER_DECADES * math.log(10.0),
                    int(_UPPER_DECADES * _QUAD_PER_DECADE) + 1)
    s = np.exp(u)
    if phi.density is not None:
        g = phi.d(s) * s ** (1.0 - p)
    else:
        sm = np.sqrt(s[:-1] * s[1:])
        dphi = np.diff(phi(s))
        return float(np.sum(dphi / sm**p))
    g[~np.isfinite(g)] = 0.0
    return _simpson(g, u)


def verify_hardy(
    phi: YoungFunction,
    r: float,
    c_r: float,
    p: float,
    c_p: float,
    t_values: Optional[np.ndarray] = None,
    rtol: float = 1e-9,
):
    """Check both Hardy inequalities at the given exponents/constants.

    Returns the measured ratios (integral divided by Phi(t)/t^exponent); raises
    HardyVerificationError when any ratio exceeds its constant.
    """
    if t_values is None:
        t_values = np.logspace(-3, 3, 20)
    lower = np.array([stieltjes_lower_integral(phi, t, r) / (phi(t) / t**r) for t in t_values])
    upper = np.array([stieltjes_upper_integral(phi, t, p) / (phi(t) / t**p) for t in t_values])
    if np.any(lower > c_r * (1.0 + rtol)):
        raise HardyVerificationError(
            f"{phi.label}: lower Hardy ratio {lower.max():.6g} exceeds C_r = {c_r:.6g}"
        )
    if np.any(upper > c_p * (1.0 + rtol)):
        raise HardyVerificationError(
            f"{phi.label}: upper Hardy ratio {upper.max():.6g} exceeds C_p = {c_p:.6g}"
        )
    return lower, upper


def hardy_constants(phi: YoungFunction, cert: GrowthCertificate) -> HardyReport:
    """Closed-form Hardy constants at r = (1+R)/2 and p = 2P, verified by quadrature.

    With the margin construction the quasi-power companions equal 1, so the
    dilation factor at 1 is exactly 1 and the constants reduce to
    C_r = 1 + r/(R-r) and C_p = 1 + p/(p-P).
    """
    if cert.mu is None or cert.ell is None:
        raise NotCertifiedError(f"{phi.label}: both growth conditions required for Hardy constants")
    R, P = cert.quasi_incr_exp, cert.quasi_decr_exp
    a, b = cert.quasi_incr_const, cert.quasi_decr_const
    r = 0.5 * (1.0 + R)
    p = 2.0 * P
    mu_a = 1.0 if a == 1.0 else dilation_constant(phi, a, cert)
    c_r = 1.0 + (r / (R - r)) * a * mu_a
    c_p = 1.0 + p * b / (p - P)
    lower, upper = verify_hardy(phi, r, c_r, p, c_p)
    return HardyReport(r=r, c_r=c_r, p=p, c_p=c_p, lower_ratios=lower, upper_ratios=upper)


# -- complementary function ----------------------------------------------------


@dataclass(frozen=True)
class ComplementaryPair:
    phi: YoungFunction
    psi: YoungFunction
    legendre_grid: np.ndarray
    psi_values: np.ndarray


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max(obj, lo: float, hi: float, rel_tol: float = 1e-12):
    """Golden-section maximum of a unimodal objective on [lo, hi] (log parameter)."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = obj(c), obj(d)
    while (b - a) > rel_tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = obj(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = obj(d)
    u = 0.5 * (a + b)
    return u, obj(u)


def complementary(phi: YoungFunction, y_grid: np.ndarray) -> ComplementaryPair:
    """Tabulate Psi(y) = sup_x {x*y - Phi(x)} over the scan window of phi.

    The objective is concave in x, hence unimodal in log x; golden-section
    search to relative tolerance 1e-12 finds the maximizer.  A maximizer
    within a whisker of either window end raises MaximizerAtBoundaryError
    (that y is outside the range of the density on the window).

    The returned complementary function evaluates by monotone (PCHIP)
    interpolation in log-log coordinates through the tabulated nodes, is
    validated at exactly those nodes, and carries its own density from the
    interpolant derivative.
    """
    y_grid = np.asarray(y_grid, dtype=float)
    if np.any(y_grid <= 0) or np.any(np.diff(y_grid) <= 0):
        raise ValueError("y_grid must be positive and strictly increasing")
    t_min, t_max = phi.scan_range
    if phi.density is not None:
        lo_d, hi_d = phi.d(t_min), phi.d(t_max)
        if y_grid[0] <= lo_d or y_grid[-1] >= hi_d:
            raise MaximizerAtBoundaryError(
                f"{phi.label}: y_grid [{y_grid[0]:g}, {y_grid[-1]:g}] outside density range "
                f"({lo_d:g}, {hi_d:g}) on the scan window"
            )
    u_lo, u_hi = math.log(t_min), math.log(t_max)
    edge = 1e-6 * (u_hi - u_lo)
    values = np.empty_like(y_grid)
    for i, y in enumerate(y_grid):
        def obj(u, y=y):
            x = math.exp(u)
            return x * y - float(phi(x))

        u_star, val = _golden_max(obj, u_lo, u_hi)
        if u_star - u_lo < edge or u_hi - u_star < edge:
            raise MaximizerAtBoundaryError(f"{phi.label}: maximizer at window end for y = {y:g}")
        values[i] = val
    if np.any(values <= 0):
        raise MaximizerAtBoundaryError(f"{phi.label}: non-positive conjugate value (y below density range)")

    # discrete convexity / monotonicity of the tabulation
    if not np.all(np.diff(values) > 0):
        raise InvalidYoungError(f"{phi.label}: conjugate tabulation not increasing")
    interp = PchipInterpolator(np.log(y_grid), np.log(values), extrapolate=True)
    dinterp = interp.derivative()

    def psi_eval(y):
        y_arr = np.asarray(y, dtype=float)
        out = np.zeros_like(y_arr)
        pos = y_arr > 0
        out[pos] = np.exp(interp(np.log(y_arr[pos])))
        return out

    def psi_density(y):
        y_arr = np.asarray(y, dtype=float)
        out = np.zeros_like(y_arr)
        pos = y_arr > 0
        ly = np.log(y_arr[pos])
        out[pos] = np.exp(interp(ly)) * dinterp(ly) / y_arr[pos]
        return out

    psi = YoungFunction(
        psi_eval,
        density=psi_density,
        label=f"conj[{phi.label}]",
        scan_range=(float(y_grid[0]), float(y_grid[-1])),
        check_grid=y_grid,
    )
    pair = ComplementaryPair(phi=phi, psi=psi, legendre_grid=y_grid, psi_values=values)
    _check_young_inequality(pair)
    return pair


def _check_young_inequality(pair: ComplementaryPair, n_x: int = 100):
    x = log_grid(*pair.phi.scan_range, per_decade=max(1, n_x // 12))[:n_x]
    phi_x = pair.phi(x)
    psi_y = pair.psi_values
    prod = x[:, None] * pair.legendre_grid[None, :]
    slack = phi_x[:, None] + psi_y[None, :] - prod
    floor = -1e-9 * (phi_x[:, None] + psi_y[None, :])
    if not np.all(slack >= floor):
        raise InvalidYoungError(f"{pair.phi.label}: product-grid slack below tolerance")
