"""Problem data for the screening model and the hypothesis checks on it.

Consumers are types ``x`` in the unit square, goods are points ``z(y) =
(y, F(y))`` on a convex quality curve, and a consumer of type ``x`` values
good ``y`` at ``x . z(y)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
from scipy import integrate, optimize

from .exceptions import (
    CurveTooShortError,
    InvalidGridError,
    NonConvexityError,
    NonMonotoneExclusionError,
)
from .quadrature import gauss_legendre

log = logging.getLogger(__name__)

ArrayFn = Callable[[np.ndarray], np.ndarray]
PlaneFn = Callable[[np.ndarray, np.ndarray], np.ndarray]

CONVEXITY_SLACK = 1e-10
SAMPLE_POINTS = 1000


@dataclass(frozen=True)
class QualityCurve:
    f_eval: ArrayFn
    f_deriv: ArrayFn
    y_max: float
    name: str = "curve"

    def __post_init__(self):
        if not self.y_max > 0:
            raise ValueError("y_max must be positive")

    def z(self, y):
        y = np.asarray(y, dtype=float)
        return np.stack([y, self.F(y)], axis=-1)

    def F(self, y):
        return np.asarray(self.f_eval(np.asarray(y, dtype=float)), dtype=float)

    def dF(self, y):
        return np.asarray(self.f_deriv(np.asarray(y, dtype=float)), dtype=float)

    def validate(self, samples: int = SAMPLE_POINTS) -> None:
        if self.F(0.0) != 0.0:
            raise ValueError(f"{self.name}: F(0) must be exactly 0, got {self.F(0.0)!r}")
        ys = np.linspace(0.0, self.y_max, samples)
        slopes = np.diff(self.F(ys)) / np.diff(ys)
        if np.any(slopes < -CONVEXITY_SLACK):
            raise NonConvexityError(f"{self.name}: F is decreasing somewhere on [0, y_max]")
        if np.any(np.diff(slopes) < -CONVEXITY_SLACK):
            raise NonConvexityError(f"{self.name}: F is not convex on [0, y_max]")


@dataclass(frozen=True)
class CostModel:
    c_eval: PlaneFn
    c_grad: Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]
    name: str = "cost"

    def __call__(self, z1, z2):
        return np.asarray(self.c_eval(np.asarray(z1, dtype=float), np.asarray(z2, dtype=float)), dtype=float)

    def along(self, curve: QualityCurve, y):
        y = np.asarray(y, dtype=float)
        return self(y, curve.F(y))

    def validate(self, curve: QualityCurve, samples: int = SAMPLE_POINTS) -> None:
        if self(0.0, 0.0) != 0.0:
            raise ValueError(f"{self.name}: c(0, 0) must be exactly 0")
        ys = np.linspace(0.0, curve.y_max, samples)
        slopes = np.diff(self.along(curve, ys)) / np.diff(ys)
        if np.any(slopes < -CONVEXITY_SLACK):
            raise NonConvexityError(f"{self.name}: c(z(y)) is decreasing somewhere")
        if np.any(np.diff(slopes) < -CONVEXITY_SLACK):
            raise NonConvexityError(f"{self.name}: c(z(y)) is not convex")


@dataclass(frozen=True)
class DensityModel:
    """Consumer density on the unit square together with its declared bounds.

    The bounds are trusted as given; :meth:`audit` cross-checks them on a grid.
    ``grad`` is optional and falls back to central differences.
    ``quad_refine`` is the number of 4-way triangle subdivisions polygon
    integrals use by default (0 is exact for polynomial densities).
    """

    f_eval: PlaneFn
    alpha: float
    f_sup: float
    fx1_sup: float = 0.0
    fx2_sup: float = 0.0
    fx1x1_sup: float = 0.0
    grad: Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]] | None = None
    uniform: bool = False
    quad_refine: int = 0
    name: str = "density"

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("density lower bound alpha must be positive")
        if self.f_sup < self.alpha:
            raise ValueError("f_sup must be at least alpha")

    def __call__(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        return np.broadcast_to(np.asarray(self.f_eval(x1, x2), dtype=float), np.broadcast(x1, x2).shape)

    def gradient(self, x1, x2, h: float = 1e-6):
        if self.grad is not None:
            g1, g2 = self.grad(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
            return np.asarray(g1, dtype=float), np.asarray(g2, dtype=float)
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        g1 = (self(x1 + h, x2) - self(x1 - h, x2)) / (2 * h)
        g2 = (self(x1, x2 + h) - self(x1, x2 - h)) / (2 * h)
        return g1, g2

    def total_mass(self, nodes: int = 64) -> float:
        x, w = gauss_legendre(0.0, 1.0, nodes)
        X1, X2 = np.meshgrid(x, x, indexing="ij")
        return float(np.einsum("i,j,ij->", w, w, self(X1, X2)))

    def audit(self, points: int = 100, rtol: float = 1e-6) -> list[str]:
        """Sample the declared bounds and return a list of contradictions found."""
        issues = []
        g = np.linspace(0.0, 1.0, points)
        X1, X2 = np.meshgrid(g, g, indexing="ij")
        vals = self(X1, X2)
        if vals.min() < self.alpha * (1 - rtol):
            issues.append(f"f below alpha: min sampled {vals.min():.6g} < {self.alpha:.6g}")
        if vals.max() > self.f_sup * (1 + rtol):
            issues.append(f"f above f_sup: max sampled {vals.max():.6g} > {self.f_sup:.6g}")
        mass = self.total_mass()
        if abs(mass - 1.0) > 1e-6:
            issues.append(f"density integrates to {mass:.12g}, not 1")
        g1, g2 = self.gradient(X1, X2)
        for label, arr, bound in (("f_x1", g1, self.fx1_sup), ("f_x2", g2, self.fx2_sup)):
            peak = float(np.abs(arr).max())
            if peak > bound * (1 + 1e-4) + 1e-8:
                issues.append(f"|{label}| sampled {peak:.6g} exceeds declared {bound:.6g}")
        for msg in issues:
            log.warning("%s: %s", self.name, msg)
        return issues


@dataclass(frozen=True, eq=False)
class ProductGrid:
    """Goods y_0 = 0 < y_1 < ... < y_N on the quality curve."""

    ys: np.ndarray
    zs: np.ndarray
    costs: np.ndarray
    chord_slopes: np.ndarray

    def __post_init__(self):
        ys = self.ys
        if ys.ndim != 1 or len(ys) < 2:
            raise InvalidGridError("a grid needs y_0 = 0 and at least one product")
        if ys[0] != 0.0:
            raise InvalidGridError("y_0 must be 0 (the opt-out good)")
        if np.any(np.diff(ys) <= 0):
            raise InvalidGridError("grid points must be strictly increasing")
        recomputed = np.diff(self.zs[:, 1]) / np.diff(ys)
        if np.max(np.abs(recomputed - self.chord_slopes)) > 1e-12:
            raise InvalidGridError("chord slopes inconsistent with grid points")
        if np.any(np.diff(self.chord_slopes) < -CONVEXITY_SLACK):
            raise NonConvexityError("chord slopes decrease: F is not convex along the grid")

    @classmethod
    def from_points(cls, curve: QualityCurve, cost: CostModel, ys) -> "ProductGrid":
        ys = np.asarray(ys, dtype=float)
        Fs = curve.F(ys)
        zs = np.column_stack([ys, Fs])
        costs = cost(ys, Fs)
        with np.errstate(divide="ignore", invalid="ignore"):
            slopes = np.diff(Fs) / np.diff(ys)  # bad spacing is reported by __post_init__
        for arr in (ys, zs, costs, slopes):
            arr.setflags(write=False)
        return cls(ys=ys, zs=zs, costs=costs, chord_slopes=slopes)

    @property
    def n(self) -> int:
        return len(self.ys) - 1

    @property
    def Fs(self) -> np.ndarray:
        return self.zs[:, 1]

    @property
    def dy(self) -> np.ndarray:
        return np.diff(self.ys)

    @property
    def dF(self) -> np.ndarray:
        return np.diff(self.Fs)

    @property
    def dc(self) -> np.ndarray:
        return np.diff(self.costs)

    @property
    def strictly_convex(self) -> bool:
        return bool(np.all(np.diff(self.chord_slopes) > 0))

    def chord_lengths(self) -> np.ndarray:
        return np.hypot(self.dy, self.dF)


@dataclass(frozen=True)
class ScreeningInstance:
    curve: QualityCurve
    cost: CostModel
    density: DensityModel
    grid: ProductGrid

    def __post_init__(self):
        z = self.curve.z(self.grid.ys)
        if np.max(np.abs(z - self.grid.zs)) > 1e-12:
            raise InvalidGridError("grid points do not lie on the quality curve")

    def with_grid(self, grid: ProductGrid) -> "ScreeningInstance":
        return ScreeningInstance(self.curve, self.cost, self.density, grid)

    def truncated(self, n: int) -> "ScreeningInstance":
        """Keep only the opt-out good and the first ``n`` products."""
        return self.with_grid(ProductGrid.from_points(self.curve, self.cost, self.grid.ys[: n + 1]))


SpacingMode = Literal["chord", "arclength", "explicit"]


def _next_chord_point(curve: QualityCurve, y0: float, s: float) -> float:
    F0 = float(curve.F(y0))

    def gap(y):
        return (y - y0) ** 2 + (float(curve.F(y)) - F0) ** 2 - s * s

    if gap(curve.y_max) < 0:
        raise CurveTooShortError(
            f"chord of length {s:g} from y={y0:g} would pass y_max={curve.y_max:g}")
    # the chord reaches length s before y moves by s
    hi = min(curve.y_max, y0 + s)
    return optimize.brentq(gap, y0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def curve_arclength(curve: QualityCurve, a: float, b: float) -> float:
    val, _ = integrate.quad(lambda y: np.sqrt(1.0 + float(curve.dF(y)) ** 2), a, b,
                            epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


def build_grid(curve: QualityCurve, cost: CostModel, mode: SpacingMode, n: int | None = None,
               *, s: float | None = None, ys=None) -> ProductGrid:
    """Place goods on the curve.

    ``chord``: consecutive points at Euclidean distance ``s`` (default ``1/n``).
    ``arclength``: ``n`` pieces of equal arclength covering ``[0, y_max]``.
    ``explicit``: the given ``ys`` (must start at 0).
    """
    if mode == "explicit":
        if ys is None:
            raise ValueError("explicit mode needs ys")
        pts = np.asarray(ys, dtype=float)
        if pts[-1] > curve.y_max:
            raise CurveTooShortError("explicit grid extends past y_max")
        return ProductGrid.from_points(curve, cost, pts)
    if n is None or n < 1:
        raise ValueError("n must be >= 1")
    if mode == "chord":
        step = 1.0 / n if s is None else float(s)
        pts = [0.0]
        for _ in range(n):
            pts.append(_next_chord_point(curve, pts[-1], step))
    elif mode == "arclength":
        total = curve_arclength(curve, 0.0, curve.y_max)
        piece = total / n
        pts = [0.0]
        for i in range(1, n):
            prev = pts[-1]
            y = optimize.brentq(lambda y: curve_arclength(curve, prev, y) - piece, prev, curve.y_max,
                                xtol=1e-15, rtol=4 * np.finfo(float).eps)
            pts.append(y)
        pts.append(curve.y_max)
    else:
        raise ValueError(f"unknown spacing mode {mode!r}")
    return ProductGrid.from_points(curve, cost, pts)


# ---------------------------------------------------------------------------
# hypothesis checks


@dataclass
class H1Report:
    passed: bool
    worst_triple: tuple[int, int, int] | None
    margin: float


@dataclass
class IndexedReport:
    """Per-index verdict for a local hypothesis; endpoints are not tested."""

    passed: bool
    indices: list[int]
    lhs: np.ndarray
    rhs: np.ndarray
    skipped: list[int] = field(default_factory=list)

    @property
    def failures(self) -> list[int]:
        return [i for i, l, r in zip(self.indices, self.lhs, self.rhs) if not l > r]

    @property
    def margin(self) -> float:
        return float(np.min(self.lhs - self.rhs)) if len(self.indices) else float("inf")


def _cost_over_F(grid: ProductGrid, a, b):
    return (grid.costs[b] - grid.costs[a]) / (grid.Fs[b] - grid.Fs[a])


def check_h1(inst: ScreeningInstance) -> H1Report:
    """c is more convex than F: cost-over-quality quotients increase along every triple."""
    g = inst.grid
    n = g.n
    if n < 2:
        raise InvalidGridError("H1 needs at least two products")
    idx = np.arange(n + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        Q = _cost_over_F(g, idx[:, None], idx[None, :])
    best = (None, np.inf)
    for i in range(1, n):
        k = int(np.argmax(Q[:i, i]))
        j = i + 1 + int(np.argmin(Q[i, i + 1:]))
        gap = Q[i, j] - Q[k, i]
        if gap < best[1]:
            best = ((k, i, j), float(gap))
    triple, margin = best
    return H1Report(passed=bool(margin > 0), worst_triple=triple, margin=margin)


def _interior(grid: ProductGrid):
    n = grid.n
    return list(range(1, n)), [0, n] if n >= 1 else [0]


def check_h2(inst: ScreeningInstance) -> IndexedReport:
    """Local convexity gap between c and F against the density bounds."""
    g, d = inst.grid, inst.density
    idx, skipped = _interior(g)
    s = g.chord_slopes
    q = g.dc / g.dy
    lhs, rhs = [], []
    for i in idx:
        denom = s[i] - s[i - 1]
        if denom == 0:
            raise InvalidGridError(f"equal chord slopes at i={i}: second difference of F vanishes")
        lhs.append((q[i] - q[i - 1]) / denom)
        rhs.append((1.5 * d.f_sup + 0.5 * d.fx1_sup * (1.0 + s[i] + q[i])) / d.alpha)
    lhs, rhs = np.array(lhs), np.array(rhs)
    return IndexedReport(bool(np.all(lhs > rhs)), idx, lhs, rhs, skipped)


def check_h3(inst: ScreeningInstance) -> IndexedReport:
    """Local upper bound on the chord slope of F.

    Reported with ``lhs`` the bound and ``rhs`` the chord slope so that
    ``lhs > rhs`` means the index passes.
    """
    g, d = inst.grid, inst.density
    idx, skipped = _interior(g)
    s = g.chord_slopes
    r = g.dc / g.dF  # cost increments per unit of F
    bound, slope = [], []
    for i in idx:
        if s[i] == s[i - 1]:
            raise InvalidGridError(f"equal chord slopes at i={i}")
        denom = d.f_sup * (2.0 + s[i] / s[i - 1]) + d.fx2_sup * (1.0 + 2.0 / s[i - 1] + r[i])
        factor = 1.0 + (r[i] - r[i - 1]) / (1.0 / s[i - 1] - 1.0 / s[i])
        bound.append(2.0 * d.alpha / denom * factor)
        slope.append(s[i])
    bound, slope = np.array(bound), np.array(slope)
    return IndexedReport(bool(np.all(bound > slope)), idx, bound, slope, skipped)


def check_premium(inst: ScreeningInstance) -> bool:
    g = inst.grid
    return bool(g.costs[1] > g.Fs[1])


def exclusion_margins(grid: ProductGrid) -> np.ndarray:
    """Per-unit-quality gain of the top type (1, 1) moving from good i-1 to i at cost."""
    return 1.0 + grid.dF / grid.dy - grid.dc / grid.dy


def market_size(inst: ScreeningInstance) -> int:
    """Largest index i whose good the top type prefers to good i-1 when both sell at cost."""
    g = inst.grid
    gains = g.dy + g.dF - g.dc
    ok = gains > 0
    m = int(np.max(np.nonzero(ok)[0]) + 1) if ok.any() else 0
    if not ok[:m].all():
        bad = [i + 1 for i in np.nonzero(~ok[:m])[0]]
        raise NonMonotoneExclusionError(
            f"goods {bad} are not preferred at cost although good {m} is")
    return m


@dataclass
class UniquenessReport:
    passed: bool
    gradient_ok: bool
    edge_ok: bool
    edge_margin: float
    details: str = ""


def check_uniqueness(inst: ScreeningInstance, points: int = SAMPLE_POINTS) -> UniquenessReport:
    d, curve = inst.density, inst.curve
    slope = float(curve.dF(curve.y_max))
    if slope == 0:
        raise InvalidGridError("F'(y_max) = 0: the right-edge condition is undefined")
    x2 = np.linspace(0.0, 1.0, points)
    g1, g2 = d.gradient(np.ones_like(x2), x2)
    edge = g2 / slope**2 + g1 / slope
    margin = float(edge.min() - d.fx1x1_sup)
    gradient_ok = d.fx1_sup <= d.alpha
    edge_ok = margin >= 0
    details = (f"|f_x1| sup {d.fx1_sup:.6g} vs alpha {d.alpha:.6g}; "
               f"min right-edge term {edge.min():.6g} vs |f_x1x1| sup {d.fx1x1_sup:.6g}")
    return UniquenessReport(gradient_ok and edge_ok, gradient_ok, edge_ok, margin, details)
