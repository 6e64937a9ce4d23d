"""Convex polygons in the unit square, half-plane clipping and density integrals.

Indifference lines between neighbouring goods i and i+1 are the level sets
``x . d_i = k`` with ``d_i = z_{i+1} - z_i``. Both components of ``d_i`` are
positive, so "below" a line (``x . d_i <= k``) is the side containing the
origin.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .exceptions import NonNestedConfigurationError
from .model import DensityModel, ProductGrid
from .quadrature import gauss_legendre, triangle_rule

BOUNDARY_TOL = 1e-12
EMPTY_AREA = 1e-14


@dataclass(frozen=True)
class IndiffLine:
    """Line through ``(anchor_t, 1)`` with normal ``(dy, dF)`` for gap ``seg_index``.

    ``anchor_t`` may leave [0, 1] for lines that meet the left edge instead of
    the top edge; splitting levels in the transport module produce those.
    """

    anchor_t: float
    seg_index: int
    dy: float
    dF: float

    def __post_init__(self):
        if not (self.dy > 0 and self.dF > 0):
            raise ValueError("indifference line needs a direction with positive components")

    @classmethod
    def for_gap(cls, grid: ProductGrid, i: int, t: float) -> "IndiffLine":
        return cls(float(t), i, float(grid.dy[i]), float(grid.dF[i]))

    @classmethod
    def from_level(cls, grid: ProductGrid, i: int, k: float) -> "IndiffLine":
        dy, dF = float(grid.dy[i]), float(grid.dF[i])
        return cls((k - dF) / dy, i, dy, dF)

    @property
    def slope(self) -> float:
        return -self.dy / self.dF

    @property
    def normal(self) -> np.ndarray:
        return np.array([self.dy, self.dF])

    @property
    def level(self) -> float:
        return self.anchor_t * self.dy + self.dF

    def side_value(self, pts) -> np.ndarray:
        """Signed ``x . d - k``: negative below the line, positive above."""
        pts = np.asarray(pts, dtype=float)
        return pts[..., 0] * self.dy + pts[..., 1] * self.dF - self.level


@dataclass(frozen=True, eq=False)
class ConvexRegion:
    vertices: np.ndarray  # (n, 2), counterclockwise

    @classmethod
    def empty(cls) -> "ConvexRegion":
        return cls(np.zeros((0, 2)))

    @classmethod
    def unit_square(cls) -> "ConvexRegion":
        return cls(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]))

    @property
    def is_empty(self) -> bool:
        return len(self.vertices) < 3

    def area(self) -> float:
        if self.is_empty:
            return 0.0
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))

    def is_convex(self, tol: float = 1e-12) -> bool:
        if self.is_empty:
            return True
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        en = np.roll(e, -1, axis=0)
        cross = e[:, 0] * en[:, 1] - e[:, 1] * en[:, 0]
        return bool(np.all(cross >= -tol))

    def in_unit_square(self, tol: float = BOUNDARY_TOL) -> bool:
        return bool(np.all((self.vertices >= -tol) & (self.vertices <= 1 + tol)))


def _normalize(pts: list[np.ndarray]) -> ConvexRegion:
    if len(pts) < 3:
        return ConvexRegion.empty()
    out = [pts[0]]
    for p in pts[1:]:
        if np.max(np.abs(p - out[-1])) > BOUNDARY_TOL:
            out.append(p)
    if len(out) > 1 and np.max(np.abs(out[0] - out[-1])) <= BOUNDARY_TOL:
        out.pop()
    region = ConvexRegion(np.array(out)) if len(out) >= 3 else ConvexRegion.empty()
    if region.area() < EMPTY_AREA:
        return ConvexRegion.empty()
    return region


def clip_halfplane(region: ConvexRegion, line: IndiffLine,
                   side: Literal["below", "above"]) -> ConvexRegion:
    """Intersect ``region`` with the closed half-plane on ``side`` of ``line``."""
    if region.is_empty:
        return region
    sign = 1.0 if side == "below" else -1.0
    v = region.vertices
    g = sign * line.side_value(v)
    g = np.where(np.abs(g) <= BOUNDARY_TOL, 0.0, g)
    if np.all(g <= 0):
        return region
    if np.all(g >= 0):
        return ConvexRegion.empty()
    out = []
    n = len(v)
    for a in range(n):
        b = (a + 1) % n
        pa, pb, ga, gb = v[a], v[b], g[a], g[b]
        if ga <= 0:
            out.append(pa)
        if (ga < 0 < gb) or (gb < 0 < ga):
            out.append(pa + (ga / (ga - gb)) * (pb - pa))
    return _normalize(out)


def slab(grid: ProductGrid, t_low: float, i_low: int, t_high: float, i_high: int,
         permissive: bool = False) -> ConvexRegion:
    """Part of the square above line ``(i_low, t_low)`` and below ``(i_high, t_high)``."""
    low = IndiffLine.for_gap(grid, i_low, t_low)
    high = IndiffLine.for_gap(grid, i_high, t_high)
    if not permissive:
        hit = lines_cross_in_closed_square(low, high)
        if hit.crosses:
            raise NonNestedConfigurationError(
                f"lines of gaps {i_low} and {i_high} cross at {tuple(np.round(hit.point, 12))}")
    r = clip_halfplane(ConvexRegion.unit_square(), low, "above")
    return clip_halfplane(r, high, "below")


def _subdivide(tri: np.ndarray, levels: int) -> np.ndarray:
    """Split each triangle (..., 3, 2) into 4**levels congruent pieces."""
    for _ in range(levels):
        a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
        ab, bc, ca = 0.5 * (a + b), 0.5 * (b + c), 0.5 * (c + a)
        tri = np.concatenate([
            np.stack([a, ab, ca], 1), np.stack([ab, b, bc], 1),
            np.stack([ca, bc, c], 1), np.stack([ab, bc, ca], 1)])
    return tri


def polygon_mass(region: ConvexRegion, density: DensityModel, order: int = 7,
                 refine: int | None = None) -> float:
    """Integral of the density over a convex polygon.

    Fan triangulation from the vertex centroid, optional uniform refinement,
    then a symmetric rule exact to degree ``order`` on each triangle.
    """
    if region.is_empty:
        return 0.0
    v = region.vertices
    centre = v.mean(axis=0)
    tri = np.stack([np.broadcast_to(centre, v.shape), v, np.roll(v, -1, axis=0)], axis=1)
    tri = _subdivide(tri, density.quad_refine if refine is None else refine)
    bary, w = triangle_rule(order)
    pts = np.einsum("qk,tkd->tqd", bary, tri)
    e1 = tri[:, 1] - tri[:, 0]
    e2 = tri[:, 2] - tri[:, 0]
    areas = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    vals = density(pts[..., 0], pts[..., 1])
    return float(np.sum(areas * (vals @ w)))


@dataclass(frozen=True)
class SegmentIntegral:
    value: float
    x2_low: float
    x2_high: float
    intersects: bool


def segment_extent(line: IndiffLine) -> tuple[float, float]:
    """x2-range of the part of ``line`` inside the closed square."""
    s = line.dF / line.dy  # x1 = t + s (1 - x2)
    t = line.anchor_t
    lo = max(0.0, 1.0 - (1.0 - t) / s)
    hi = min(1.0, 1.0 + t / s)
    return lo, hi


def segment_density_integral(line: IndiffLine, density: DensityModel, order: int = 32) -> SegmentIntegral:
    """``cos(theta) * integral of f along the segment``, written as an integral over x2."""
    lo, hi = segment_extent(line)
    if hi <= lo:
        return SegmentIntegral(0.0, lo, hi, False)
    x2, w = gauss_legendre(lo, hi, order)
    x1 = line.anchor_t + (line.dF / line.dy) * (1.0 - x2)
    return SegmentIntegral(float(np.dot(w, density(x1, x2))), lo, hi, True)


@dataclass(frozen=True)
class Crossing:
    crosses: bool
    point: np.ndarray | None
    parallel: bool = False


def lines_cross_in_closed_square(a: IndiffLine, b: IndiffLine, tol: float = BOUNDARY_TOL) -> Crossing:
    A = np.array([a.normal, b.normal])
    rhs = np.array([a.level, b.level])
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    if abs(det) <= 1e-15 * np.abs(A).max() ** 2:
        return Crossing(False, None, parallel=True)
    p = np.linalg.solve(A, rhs)
    inside = bool(np.all(p >= -tol) and np.all(p <= 1 + tol))
    return Crossing(inside, p)
