"""Semi-discrete optimal transport between the consumer density and goods on the grid.

For a target distribution ``nu`` over the goods, the splitting level of gap i
is the value ``k`` for which the half-plane ``{x . (z_{i+1} - z_i) <= k}``
carries the cumulative target mass of goods ``0..i``. When these half-planes
are strictly nested, summing the levels gives the dual prices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .exceptions import NonNestedScheduleError
from .geometry import (
    BOUNDARY_TOL,
    ConvexRegion,
    IndiffLine,
    clip_halfplane,
    lines_cross_in_closed_square,
    polygon_mass,
)
from .model import DensityModel, ProductGrid

LEVEL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_masses(cls, masses, n_goods: int) -> "DiscreteMeasure":
        """Pad region masses with zeros up to ``n_goods`` atoms and renormalize rounding."""
        w = np.zeros(n_goods)
        w[: len(masses)] = masses
        return cls(w / w.sum())

    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.weights)


@dataclass(frozen=True, eq=False)
class LevelSchedule:
    ks: np.ndarray  # one level per gap 0..N-1


def _sublevel(grid: ProductGrid, i: int, k: float) -> ConvexRegion:
    return clip_halfplane(ConvexRegion.unit_square(), IndiffLine.from_level(grid, i, k), "below")


def level_range(grid: ProductGrid, i: int) -> tuple[float, float]:
    return 0.0, float(grid.dy[i] + grid.dF[i])


def sublevel_mass(grid: ProductGrid, density: DensityModel, i: int, k: float) -> float:
    return polygon_mass(_sublevel(grid, i, k), density)


def level_for(grid: ProductGrid, density: DensityModel, i: int, cum: float) -> float:
    """Level k whose sublevel set on gap i carries mass ``cum``."""
    lo, hi = level_range(grid, i)
    if cum <= 0:
        return lo
    if cum >= 1:
        return hi
    h = lambda k: sublevel_mass(grid, density, i, k) - cum
    k = optimize.brentq(h, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    if abs(h(k)) >= LEVEL_TOL:
        # brentq's bracket is too coarse near flat spots; finish by bisection
        a, b = lo, hi
        while b - a > 1e-16 * max(1.0, hi):
            mid = 0.5 * (a + b)
            a, b = (mid, b) if h(mid) < 0 else (a, mid)
        k = 0.5 * (a + b)
    return float(k)


def level_schedule(grid: ProductGrid, density: DensityModel, nu: DiscreteMeasure) -> LevelSchedule:
    cum = nu.cumulative()
    return LevelSchedule(np.array([level_for(grid, density, i, min(cum[i], 1.0)) for i in range(grid.n)]))


@dataclass
class NestednessCheck:
    passed: bool
    violations: list[tuple[int, int, str]] = field(default_factory=list)


def _level_lines(grid: ProductGrid, schedule: LevelSchedule) -> list[IndiffLine]:
    return [IndiffLine.from_level(grid, i, k) for i, k in enumerate(schedule.ks)]


def check_discrete_nestedness(grid: ProductGrid, schedule: LevelSchedule, nu: DiscreteMeasure) -> NestednessCheck:
    """Strict inclusion of sublevel sets for every pair separated by positive target mass."""
    lines = _level_lines(grid, schedule)
    subs = [_sublevel(grid, i, k) for i, k in enumerate(schedule.ks)]
    w = nu.weights
    violations = []
    n = grid.n
    for i in range(n):
        for j in range(i + 1, n):
            if not w[i + 1: j + 1].sum() > 0:
                continue
            hit = lines_cross_in_closed_square(lines[i], lines[j])
            if hit.crosses:
                violations.append((i, j, f"level lines cross at ({hit.point[0]:.6g}, {hit.point[1]:.6g})"))
                continue
            if subs[i].is_empty:
                continue
            worst = float(np.max(lines[j].side_value(subs[i].vertices)))
            if not worst < -BOUNDARY_TOL:
                violations.append((i, j, f"sublevel set {i} reaches level line {j} (gap {worst:.3g})"))
    return NestednessCheck(not violations, violations)


@dataclass(frozen=True, eq=False)
class PotentialPair:
    v_list: np.ndarray
    zs: np.ndarray

    def u_eval(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.max(x @ self.zs.T - self.v_list, axis=-1)


def potentials(grid: ProductGrid, schedule: LevelSchedule, nu: DiscreteMeasure | None = None) -> PotentialPair:
    """Dual prices v_i = sum of the first i levels, and the payoff u as their transform."""
    if nu is not None:
        check = check_discrete_nestedness(grid, schedule, nu)
        if not check.passed:
            raise NonNestedScheduleError(f"schedule is not discretely nested: {check.violations[0]}")
    v = np.concatenate([[0.0], np.cumsum(schedule.ks)])
    return PotentialPair(v, np.asarray(grid.zs))


@dataclass(frozen=True)
class MapResult:
    index: int
    on_boundary: bool


def assign(grid: ProductGrid, schedule: LevelSchedule, xs) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`optimal_map` over an (n, 2) array of types."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    g = np.stack([line.side_value(xs) for line in _level_lines(grid, schedule)], axis=1)
    below = g <= BOUNDARY_TOL
    idx = np.where(below.any(axis=1), np.argmax(below, axis=1), grid.n)
    rows = np.arange(len(xs))
    near_here = (idx < grid.n) & (np.abs(g[rows, np.minimum(idx, grid.n - 1)]) <= BOUNDARY_TOL)
    near_prev = (idx > 0) & (np.abs(g[rows, np.maximum(idx - 1, 0)]) <= BOUNDARY_TOL)
    return idx, near_here | near_prev


def optimal_map(grid: ProductGrid, schedule: LevelSchedule, x) -> MapResult:
    """Good assigned to type x: the first gap whose sublevel set contains x."""
    idx, near = assign(grid, schedule, x)
    return MapResult(int(idx[0]), bool(near[0]))


def transport_cells(grid: ProductGrid, schedule: LevelSchedule) -> list[ConvexRegion]:
    lines = _level_lines(grid, schedule)
    square = ConvexRegion.unit_square()
    cells = [clip_halfplane(square, lines[0], "below")]
    for i in range(1, len(lines)):
        cells.append(clip_halfplane(clip_halfplane(square, lines[i - 1], "above"), lines[i], "below"))
    cells.append(clip_halfplane(square, lines[-1], "above"))
    return cells


@dataclass
class PushforwardReport:
    masses: np.ndarray
    max_deviation: float

    @property
    def passed(self) -> bool:
        return self.max_deviation < 1e-8


def pushforward_check(grid: ProductGrid, density: DensityModel, schedule: LevelSchedule,
                      nu: DiscreteMeasure) -> PushforwardReport:
    masses = np.array([polygon_mass(c, density) for c in transport_cells(grid, schedule)])
    return PushforwardReport(masses, float(np.max(np.abs(masses - nu.weights))))
