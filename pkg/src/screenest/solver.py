"""Prices, regions and profit as functions of the breakpoints, and the optimizers.

A breakpoint ``t_i`` is the abscissa where the indifference line between
goods ``i`` and ``i+1`` meets the top edge of the square. Given the
breakpoints, prices follow by summing the top-edge utility increments, and
the profit separates into one term per breakpoint.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .exceptions import NonNestedConfigurationError, WrongMethodError
from .geometry import (
    ConvexRegion,
    IndiffLine,
    clip_halfplane,
    lines_cross_in_closed_square,
    polygon_mass,
    segment_density_integral,
)
from .model import DensityModel, ProductGrid, ScreeningInstance, check_premium, market_size
from .quadrature import gauss_legendre

log = logging.getLogger(__name__)

MASS_FLOOR = 1e-9


@dataclass(frozen=True, eq=False)
class Breakpoints:
    ts: np.ndarray

    def __post_init__(self):
        ts = np.asarray(self.ts, dtype=float)
        if np.any(ts < 0) or np.any(ts > 1):
            raise ValueError("breakpoints must lie in [0, 1]")
        object.__setattr__(self, "ts", ts)

    @property
    def m(self) -> int:
        return len(self.ts)

    @property
    def increasing(self) -> bool:
        return bool(np.all(np.diff(self.ts) > 0))


@dataclass(frozen=True, eq=False)
class Tariff:
    vs: np.ndarray  # v_0 = 0, ..., v_M


@dataclass
class NestednessReport:
    monotone: bool
    no_crossings: bool
    positive_masses: bool
    violations: list[str] = field(default_factory=list)

    @property
    def nested(self) -> bool:
        return self.monotone and self.no_crossings and self.positive_masses


@dataclass(eq=False)
class SolutionBundle:
    breakpoints: Breakpoints
    tariff: Tariff
    regions: list[ConvexRegion]
    masses: np.ndarray
    profit: float
    report: NestednessReport
    method: Literal["closed-form", "numeric"]
    boundary_flags: list[int] = field(default_factory=list)

    @property
    def nested(self) -> bool:
        return self.report.nested

    @property
    def m(self) -> int:
        return self.breakpoints.m


def _lines(grid: ProductGrid, bp: Breakpoints) -> list[IndiffLine]:
    return [IndiffLine.for_gap(grid, i, t) for i, t in enumerate(bp.ts)]


def prices_from_breakpoints(grid: ProductGrid, bp: Breakpoints) -> Tariff:
    m = bp.m
    inc = bp.ts * grid.dy[:m] + grid.dF[:m]
    return Tariff(np.concatenate([[0.0], np.cumsum(inc)]))


def regions_from_breakpoints(grid: ProductGrid, bp: Breakpoints, permissive: bool = False) -> list[ConvexRegion]:
    """Regions X_0..X_M cut from the square by the M indifference lines.

    Unless ``permissive``, lines crossing inside the closed square raise
    :class:`NonNestedConfigurationError`.
    """
    lines = _lines(grid, bp)
    if not permissive:
        for a in range(len(lines)):
            for b in range(a + 1, len(lines)):
                hit = lines_cross_in_closed_square(lines[a], lines[b])
                if hit.crosses:
                    raise NonNestedConfigurationError(
                        f"indifference lines {a} and {b} cross at {tuple(np.round(hit.point, 12))}")
    square = ConvexRegion.unit_square()
    if not lines:
        return [square]
    regions = [clip_halfplane(square, lines[0], "below")]
    for i in range(1, len(lines)):
        above = clip_halfplane(square, lines[i - 1], "above")
        regions.append(clip_halfplane(above, lines[i], "below"))
    regions.append(clip_halfplane(square, lines[-1], "above"))
    return regions


def region_masses(inst: ScreeningInstance, regions: list[ConvexRegion]) -> np.ndarray:
    return np.array([polygon_mass(r, inst.density) for r in regions])


def profit(inst: ScreeningInstance, bp: Breakpoints, permissive: bool = False) -> float:
    """Sum over sold goods of (price - cost) times the mass of buyers."""
    tariff = prices_from_breakpoints(inst.grid, bp)
    masses = region_masses(inst, regions_from_breakpoints(inst.grid, bp, permissive))
    margins = tariff.vs - inst.grid.costs[: bp.m + 1]
    return float(np.dot(margins[1:], masses[1:]))


def upper_set(t: float, i: int, grid: ProductGrid) -> ConvexRegion:
    """Consumers preferring good i+1 to good i when the gap-i line is anchored at t."""
    return clip_halfplane(ConvexRegion.unit_square(), IndiffLine.for_gap(grid, i, t), "above")


def _term_value(density: DensityModel, dy: float, dF: float, dc: float, t: float) -> float:
    upper = clip_halfplane(ConvexRegion.unit_square(), IndiffLine(float(t), 0, dy, dF), "above")
    return float((t * dy + dF - dc) * polygon_mass(upper, density))


def _term_slope(density: DensityModel, dy: float, dF: float, dc: float, t: float) -> float:
    line = IndiffLine(float(t), 0, dy, dF)
    upper = polygon_mass(clip_halfplane(ConvexRegion.unit_square(), line, "above"), density)
    boundary = segment_density_integral(line, density).value
    return float(dy * upper + boundary * (dc - t * dy - dF))


def profit_term(inst: ScreeningInstance, i: int, t: float) -> float:
    """Contribution of breakpoint i to the profit.

    By summation by parts the profit equals the sum over i of
    ``(t dy_i + dF_i - dc_i) * mu(D_i(t_i))`` where D_i is the upper set of
    line i, so each breakpoint can be optimized on its own.
    """
    g = inst.grid
    return _term_value(inst.density, g.dy[i], g.dF[i], g.dc[i], t)


def dprofit_dti(inst: ScreeningInstance, i: int, t: float) -> float:
    g = inst.grid
    return _term_slope(inst.density, g.dy[i], g.dF[i], g.dc[i], t)


def validate_nested(grid: ProductGrid, bp: Breakpoints, masses: np.ndarray | None = None,
                    inst: ScreeningInstance | None = None) -> NestednessReport:
    """Check monotone breakpoints, no crossing lines in the closed square and positive masses."""
    violations = []
    ts = bp.ts
    monotone = True
    for i in range(len(ts) - 1):
        if not ts[i] < ts[i + 1]:
            monotone = False
            violations.append(f"t_{i} = {ts[i]:.6g} >= t_{i + 1} = {ts[i + 1]:.6g}")
    lines = _lines(grid, bp)
    no_cross = True
    for a in range(len(lines)):
        for b in range(a + 1, len(lines)):
            hit = lines_cross_in_closed_square(lines[a], lines[b])
            if hit.crosses:
                no_cross = False
                violations.append(f"lines {a} and {b} cross at ({hit.point[0]:.6g}, {hit.point[1]:.6g})")
    if masses is None:
        if inst is None:
            raise ValueError("need masses or an instance to measure regions")
        masses = region_masses(inst, regions_from_breakpoints(grid, bp, permissive=True))
    positive = True
    for i, mass in enumerate(masses):
        if not mass > MASS_FLOOR:
            positive = False
            violations.append(f"mass of X_{i} is {mass:.3g}")
    return NestednessReport(monotone, no_cross, positive, violations)


def assemble(inst: ScreeningInstance, ts, method, boundary_flags=()) -> SolutionBundle:
    bp = Breakpoints(np.asarray(ts, dtype=float))
    tariff = prices_from_breakpoints(inst.grid, bp)
    regions = regions_from_breakpoints(inst.grid, bp, permissive=True)
    masses = region_masses(inst, regions)
    report = validate_nested(inst.grid, bp, masses)
    margins = tariff.vs - inst.grid.costs[: bp.m + 1]
    total = float(np.dot(margins[1:], masses[1:]))
    if not report.nested:
        log.info("%s solve is not nested: %s", method, "; ".join(report.violations[:3]))
    return SolutionBundle(bp, tariff, regions, masses, total, report, method, list(boundary_flags))


def closed_form_breakpoint(dy: float, dF: float, dc: float) -> float:
    """Maximizer of a single profit term under the uniform density."""
    s = dF / dy
    t = 0.5 - 0.75 * s + 0.5 * dc / dy
    if not t + s < 1:
        t = 1.0 / 3.0 - (2.0 / 3.0) * (dF - dc) / dy
    return t


def closed_form_breakpoints(grid: ProductGrid, m: int) -> np.ndarray:
    return np.array([closed_form_breakpoint(grid.dy[i], grid.dF[i], grid.dc[i]) for i in range(m)])


def solve_uniform(inst: ScreeningInstance) -> SolutionBundle:
    if not inst.density.uniform:
        raise WrongMethodError("closed-form breakpoints need the uniform density; use solve_numeric")
    if not check_premium(inst):
        raise ValueError("c(z_1) > F(y_1) is required")
    m = market_size(inst)
    raw = closed_form_breakpoints(inst.grid, m)
    clipped = np.clip(raw, 0.0, 1.0)
    flags = [i for i in range(m) if clipped[i] != raw[i]]
    return assemble(inst, clipped, "closed-form", flags)


# ---------------------------------------------------------------------------
# numeric method


SCAN_POINTS = 256
ROOT_TOL = 1e-10


def _bisect(fun, a: float, b: float, fa: float, tol: float = ROOT_TOL) -> float:
    while b - a > tol:
        mid = 0.5 * (a + b)
        fm = fun(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (fa > 0):
            a, fa = mid, fm
        else:
            b = mid
    return 0.5 * (a + b)


@dataclass
class BreakpointSolve:
    t: float
    value: float
    candidates: list[tuple[float, float]]
    boundary: bool


def _maximize_term(density: DensityModel, dy: float, dF: float, dc: float, scan_points: int,
                   offset: float) -> BreakpointSolve:
    h = 1.0 / (scan_points - 1)
    nodes = np.clip(np.arange(scan_points) * h + offset * h, 0.0, 1.0)
    nodes = np.unique(np.concatenate([[0.0], nodes, [1.0]]))
    fun = lambda t: _term_slope(density, dy, dF, dc, t)
    der = np.array([fun(t) for t in nodes])
    cands = [0.0, 1.0]
    for a, b, fa, fb in zip(nodes[:-1], nodes[1:], der[:-1], der[1:]):
        if fa == 0:
            cands.append(float(a))
        elif fa * fb < 0:
            cands.append(_bisect(fun, float(a), float(b), float(fa)))
    scored = sorted({(round(c, 13), _term_value(density, dy, dF, dc, c)) for c in cands})
    best_t, best_v = scored[0]
    for t, v in scored[1:]:
        # ties go to the smaller breakpoint
        if v > best_v + 1e-14:
            best_t, best_v = t, v
    boundary = best_t in (0.0, 1.0)
    return BreakpointSolve(float(best_t), float(best_v), [(float(t), float(v)) for t, v in scored], boundary)


def solve_breakpoint(inst: ScreeningInstance, i: int, scan_points: int = SCAN_POINTS,
                     offset: float = 0.0) -> BreakpointSolve:
    """Global maximizer over [0, 1] of the profit term of breakpoint i.

    Scan the derivative, bisect each sign change, then pick the best
    stationary point or endpoint by the profile value. ``offset`` shifts the
    interior scan nodes by a fraction of one cell.
    """
    g = inst.grid
    return _maximize_term(inst.density, float(g.dy[i]), float(g.dF[i]), float(g.dc[i]), scan_points, offset)


def profile_by_integration(inst: ScreeningInstance, i: int, t: float, pieces: int = 64) -> float:
    """Profit term of breakpoint i relative to t = 0, by integrating the derivative.

    The derivative has a kink where the line passes the corner (1, 0), so the
    range is split there before applying Gauss-Legendre piecewise.
    """
    if t == 0:
        return 0.0
    kink = 1.0 - inst.grid.dF[i] / inst.grid.dy[i]
    stops = [0.0, kink, t] if 0.0 < kink < t else [0.0, t]
    edges = np.unique(np.concatenate([np.linspace(a, b, pieces + 1) for a, b in zip(stops[:-1], stops[1:])]))
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        x, w = gauss_legendre(a, b, 8)
        total += float(np.dot(w, [dprofit_dti(inst, i, s) for s in x]))
    return total


def solve_numeric(inst: ScreeningInstance, scan_points: int = SCAN_POINTS, offset: float = 0.0,
                  max_workers: int | None = None) -> SolutionBundle:
    if not check_premium(inst):
        raise ValueError("c(z_1) > F(y_1) is required")
    m = market_size(inst)
    if m < 1:
        raise ValueError("no good is worth selling: market size is 0")
    work = lambda i: solve_breakpoint(inst, i, scan_points, offset)
    if max_workers == 1:
        results = [work(i) for i in range(m)]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(work, range(m)))
    flags = [i for i, r in enumerate(results) if r.boundary]
    for i in flags:
        log.warning("breakpoint %d sits on the boundary of [0, 1]", i)
    return assemble(inst, [r.t for r in results], "numeric", flags)


def solve(inst: ScreeningInstance, method: Literal["closed", "numeric", "auto"] = "auto", **kw) -> SolutionBundle:
    if method == "closed" or (method == "auto" and inst.density.uniform):
        return solve_uniform(inst)
    return solve_numeric(inst, **kw)


# ---------------------------------------------------------------------------
# consumer side


@dataclass(frozen=True)
class Payoff:
    u: float
    chosen: int


def payoff(inst: ScreeningInstance, bundle: SolutionBundle, x) -> Payoff:
    x = np.asarray(x, dtype=float)
    m = bundle.m
    util = inst.grid.zs[: m + 1] @ x - bundle.tariff.vs
    j = int(np.argmax(util))  # first maximum: ties go to the cheaper good
    return Payoff(float(util[j]), j)


def region_index(inst: ScreeningInstance, bundle: SolutionBundle, x) -> int:
    """Index of the slab containing x, counting the lines it lies strictly above."""
    lines = _lines(inst.grid, bundle.breakpoints)
    return int(sum(line.side_value(np.asarray(x, dtype=float)) > 0 for line in lines))


def piecewise_payoff(inst: ScreeningInstance, bundle: SolutionBundle, x) -> float:
    i = region_index(inst, bundle, x)
    return float(inst.grid.zs[i] @ np.asarray(x, dtype=float) - bundle.tariff.vs[i])


# ---------------------------------------------------------------------------
# continuum of goods


def continuous_limit_t(inst_or_parts, y: float, density: DensityModel | None = None) -> float:
    """Limit of the breakpoint attached to quality y as the grid refines.

    Dividing a profit term by dy and letting dy -> 0 leaves the term with
    direction (1, F'(y)) and cost increment dc/dy along the curve. The uniform
    density has a closed form; other densities reuse the per-gap maximizer.
    """
    if isinstance(inst_or_parts, ScreeningInstance):
        curve, cost = inst_or_parts.curve, inst_or_parts.cost
        density = density or inst_or_parts.density
    else:
        curve, cost = inst_or_parts
    slope = float(curve.dF(y))
    cx1, cx2 = cost.c_grad(np.float64(y), np.float64(curve.F(y)))
    dc = float(cx1) + slope * float(cx2)
    if density is None or density.uniform:
        return closed_form_breakpoint(1.0, slope, dc)
    return _maximize_term(density, 1.0, slope, dc, SCAN_POINTS, 0.0).t


@dataclass
class RefinementRow:
    n: int
    y_n: float
    t_n: float
    t_y: float

    @property
    def abs_err(self) -> float:
        return abs(self.t_n - self.t_y)


def refinement_study(curve, cost, density, y: float, ns, mode: str = "chord",
                     chord_scale: float = 1.0) -> list[RefinementRow]:
    """Breakpoint nearest to quality y on grids of increasing size, against the continuum limit."""
    from .model import build_grid

    t_y = continuous_limit_t((curve, cost), y, density)
    rows = []
    for n in ns:
        grid = build_grid(curve, cost, mode, n, s=chord_scale / n if mode == "chord" else None)
        inst = ScreeningInstance(curve, cost, density, grid)
        i = int(np.argmin(np.abs(grid.ys[:-1] - y)))
        if density.uniform:
            t = closed_form_breakpoint(grid.dy[i], grid.dF[i], grid.dc[i])
        else:
            t = solve_breakpoint(inst, i).t
        rows.append(RefinementRow(n, float(grid.ys[i]), float(t), t_y))
    return rows


def eventually_decreasing(rows: list[RefinementRow], start: int = 1) -> bool:
    errs = [r.abs_err for r in rows[start:]]
    return all(b < a for a, b in zip(errs, errs[1:]))
