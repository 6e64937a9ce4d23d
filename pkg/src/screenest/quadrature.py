"""Fixed-order quadrature tables for triangles and intervals.

Triangle rules are given in barycentric coordinates with weights that sum to
one, so an integral over a triangle is ``area * sum(w * f(points))``.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import permutations

import numpy as np

__all__ = ["triangle_rule", "gauss_legendre", "SUPPORTED_DEGREES"]


def _s21(a: float) -> list[tuple[float, float, float]]:
    b = 1.0 - 2.0 * a
    return [(a, a, b), (a, b, a), (b, a, a)]


def _s111(a: float, b: float) -> list[tuple[float, float, float]]:
    return sorted(set(permutations((a, b, 1.0 - a - b))))


def _build(orbits: list[tuple[list[tuple[float, float, float]], float]]):
    pts: list[tuple[float, float, float]] = []
    wts: list[float] = []
    for orbit, w in orbits:
        pts.extend(orbit)
        wts.extend([w] * len(orbit))
    return np.array(pts), np.array(wts)


_CENTROID = [(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)]
_R15 = np.sqrt(15.0)

# degree -> (barycentric points, weights)
_RULES = {
    1: _build([(_CENTROID, 1.0)]),
    2: _build([(_s21(1.0 / 6.0), 1.0 / 3.0)]),
    # Radon's 7-point rule
    5: _build([
        (_CENTROID, 9.0 / 40.0),
        (_s21((6.0 - _R15) / 21.0), (155.0 - _R15) / 1200.0),
        (_s21((6.0 + _R15) / 21.0), (155.0 + _R15) / 1200.0),
    ]),
    # Dunavant 13-point rule, constants re-solved from the moment equations
    7: _build([
        (_CENTROID, -0.1495700444675452),
        (_s21(0.2603459660790211), 0.17561525743317805),
        (_s21(0.06513010290221732), 0.05334723560884105),
        (_s111(0.048690315425309195, 0.3128654960048827), 0.07711376089024798),
    ]),
}

SUPPORTED_DEGREES = tuple(sorted(_RULES))


def triangle_rule(degree: int = 7) -> tuple[np.ndarray, np.ndarray]:
    """Return the cheapest tabulated symmetric rule exact to at least ``degree``."""
    for d in SUPPORTED_DEGREES:
        if d >= degree:
            pts, wts = _RULES[d]
            return pts, wts
    raise ValueError(f"no triangle rule of degree {degree}; max is {SUPPORTED_DEGREES[-1]}")


@lru_cache(maxsize=None)
def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(a: float, b: float, n: int = 32) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the n-point Gauss-Legendre rule on [a, b]."""
    x, w = _leggauss(n)
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w
