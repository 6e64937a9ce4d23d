"""Semi-discrete monopolist screening with two-dimensional types and a one-dimensional product line."""

from .families import (
    affine_density,
    gaussian_density,
    half_squared_norm_cost,
    linear_cost,
    linear_curve,
    quadratic_curve,
    uniform_density,
)
from .model import (
    CostModel,
    DensityModel,
    ProductGrid,
    QualityCurve,
    ScreeningInstance,
    build_grid,
    check_h1,
    check_h2,
    check_h3,
    check_premium,
    check_uniqueness,
    market_size,
)
from .solver import (
    Breakpoints,
    SolutionBundle,
    Tariff,
    dprofit_dti,
    prices_from_breakpoints,
    profit,
    regions_from_breakpoints,
    solve,
    solve_numeric,
    solve_uniform,
    validate_nested,
)

__version__ = "0.1.0"

__all__ = [
    "affine_density",
    "gaussian_density",
    "half_squared_norm_cost",
    "linear_cost",
    "linear_curve",
    "quadratic_curve",
    "uniform_density",
    "CostModel",
    "DensityModel",
    "ProductGrid",
    "QualityCurve",
    "ScreeningInstance",
    "build_grid",
    "check_h1",
    "check_h2",
    "check_h3",
    "check_premium",
    "check_uniqueness",
    "market_size",
    "Breakpoints",
    "SolutionBundle",
    "Tariff",
    "dprofit_dti",
    "prices_from_breakpoints",
    "profit",
    "regions_from_breakpoints",
    "solve",
    "solve_numeric",
    "solve_uniform",
    "validate_nested",
]
