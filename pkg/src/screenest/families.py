"""Ready-made curves, costs and densities used by the examples and the CLI."""

from __future__ import annotations

from math import erf, pi, sqrt

import numpy as np

from .model import CostModel, DensityModel, QualityCurve


def quadratic_curve(A: float, y_max: float = 2.0) -> QualityCurve:
    """F(y) = A y^2."""
    return QualityCurve(lambda y: A * y * y, lambda y: 2.0 * A * y, y_max, name=f"quadratic(A={A:g})")


def linear_curve(slope: float = 1.0, y_max: float = 2.0) -> QualityCurve:
    return QualityCurve(lambda y: slope * y, lambda y: slope + 0.0 * y, y_max, name=f"linear({slope:g})")


def half_squared_norm_cost() -> CostModel:
    """c(z) = |z|^2 / 2."""
    return CostModel(lambda z1, z2: 0.5 * (z1 * z1 + z2 * z2), lambda z1, z2: (z1, z2),
                     name="half_squared_norm")


def linear_cost(a: float, b: float) -> CostModel:
    """c(z) = a z1 + b z2."""
    return CostModel(lambda z1, z2: a * z1 + b * z2,
                     lambda z1, z2: (a + 0.0 * z1, b + 0.0 * z2), name=f"linear({a:g},{b:g})")


def uniform_density() -> DensityModel:
    return DensityModel(lambda x1, x2: np.ones(np.broadcast(x1, x2).shape), alpha=1.0, f_sup=1.0,
                        grad=lambda x1, x2: (np.zeros(np.broadcast(x1, x2).shape),) * 2,
                        uniform=True, quad_refine=0, name="uniform")


def affine_density(a1: float, a2: float = 0.0) -> DensityModel:
    """f(x) proportional to 1 + a1 x1 + a2 x2, normalized on the square."""
    z = 1.0 + 0.5 * a1 + 0.5 * a2
    corners = [(1 + a1 * p + a2 * q) / z for p in (0, 1) for q in (0, 1)]
    if min(corners) <= 0:
        raise ValueError("affine density must stay positive on the square")
    return DensityModel(
        lambda x1, x2: (1.0 + a1 * x1 + a2 * x2) / z,
        alpha=min(corners), f_sup=max(corners),
        fx1_sup=abs(a1) / z, fx2_sup=abs(a2) / z, fx1x1_sup=0.0,
        grad=lambda x1, x2: (np.full(np.broadcast(x1, x2).shape, a1 / z),
                             np.full(np.broadcast(x1, x2).shape, a2 / z)),
        quad_refine=0, name=f"affine({a1:g},{a2:g})")


def _gauss_factor(m: float, s: float):
    g = lambda t: np.exp(-((t - m) ** 2) / (2 * s * s))
    dg = lambda t: -(t - m) / (s * s) * g(t)
    ddg = lambda t: ((t - m) ** 2 / s**4 - 1.0 / s**2) * g(t)
    mass = s * sqrt(pi / 2) * (erf((1 - m) / (s * sqrt(2))) + erf(m / (s * sqrt(2))))
    # sup norms over [0, 1]: dense samples plus every interior critical point
    cand = np.concatenate([np.linspace(0.0, 1.0, 2001),
                           np.clip([m, m - s, m + s, m - sqrt(3) * s, m + sqrt(3) * s], 0.0, 1.0)])
    stats = dict(lo=float(g(cand).min()), hi=float(g(cand).max()),
                 d1=float(np.abs(dg(cand)).max()), d2=float(np.abs(ddg(cand)).max()))
    return g, dg, ddg, mass, stats


def gaussian_density(mean=(0.5, 0.5), sigma: float = 0.5, quad_refine: int = 3) -> DensityModel:
    """Isotropic Gaussian restricted to the unit square and renormalized there."""
    g1, dg1, ddg1, z1, s1 = _gauss_factor(float(mean[0]), sigma)
    g2, dg2, _, z2, s2 = _gauss_factor(float(mean[1]), sigma)
    z = z1 * z2
    return DensityModel(
        lambda x1, x2: g1(x1) * g2(x2) / z,
        alpha=s1["lo"] * s2["lo"] / z,
        f_sup=s1["hi"] * s2["hi"] / z,
        fx1_sup=s1["d1"] * s2["hi"] / z,
        fx2_sup=s1["hi"] * s2["d1"] / z,
        fx1x1_sup=s1["d2"] * s2["hi"] / z,
        grad=lambda x1, x2: (dg1(x1) * g2(x2) / z, g1(x1) * dg2(x2) / z),
        quad_refine=quad_refine,
        name=f"gaussian(mean=({mean[0]:g},{mean[1]:g}), sigma={sigma:g})")
