from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_instance
from screenest import (
    CostModel,
    DensityModel,
    ProductGrid,
    ScreeningInstance,
    build_grid,
    check_h1,
    check_h2,
    check_h3,
    check_premium,
    check_uniqueness,
    market_size,
)
from screenest.exceptions import CurveTooShortError, InvalidGridError, NonConvexityError
from screenest.families import (
    affine_density,
    gaussian_density,
    half_squared_norm_cost,
    linear_cost,
    linear_curve,
    quadratic_curve,
    uniform_density,
)
from screenest.model import QualityCurve, curve_arclength


def h1_triple_loop(grid: ProductGrid) -> float:
    """Smallest quotient gap over all ordered triples, straight from the definition."""
    c, F = grid.costs, grid.Fs
    worst = np.inf
    for i, j, k in itertools.combinations(range(grid.n + 1), 3):
        gap = (c[k] - c[j]) / (F[k] - F[j]) - (c[j] - c[i]) / (F[j] - F[i])
        worst = min(worst, gap)
    return worst


# ---------------------------------------------------------------- curves and costs


def test_quadratic_curve_values():
    c = quadratic_curve(1 / 6)
    assert c.F(0.3) == pytest.approx(0.015)
    assert c.dF(0.3) == pytest.approx(0.1)
    np.testing.assert_allclose(c.z(np.array([0.0, 0.6])), [[0.0, 0.0], [0.6, 0.06]])


def test_curve_validation_rejects_concave_and_offset():
    QualityCurve(lambda y: y * y, lambda y: 2 * y, 1.0).validate()
    with pytest.raises(NonConvexityError):
        QualityCurve(np.sqrt, lambda y: 0.5 / np.sqrt(np.maximum(y, 1e-300)), 1.0).validate()
    with pytest.raises(ValueError):
        QualityCurve(lambda y: y + 1.0, lambda y: 1.0 + 0 * y, 1.0).validate()
    with pytest.raises(ValueError):
        QualityCurve(lambda y: y, lambda y: 1.0 + 0 * y, 0.0)


def test_cost_validation():
    curve = quadratic_curve(1 / 6)
    half_squared_norm_cost().validate(curve)
    bad = CostModel(lambda a, b: -(a * a + b * b), lambda a, b: (-2 * a, -2 * b))
    with pytest.raises(NonConvexityError):
        bad.validate(curve)


# ---------------------------------------------------------------- densities


def test_uniform_density_audit_is_clean():
    assert uniform_density().audit() == []
    assert uniform_density().total_mass() == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("mean,sigma", [((0.5, 0.5), 0.5), ((0.3, 0.7), 0.25)])
def test_gaussian_density_normalized_and_bounds(mean, sigma):
    d = gaussian_density(mean, sigma)
    assert d.total_mass() == pytest.approx(1.0, abs=1e-12)
    assert d.audit() == []
    # analytic gradient against central differences
    pts = np.random.default_rng(0).random((20, 2))
    g1, g2 = d.gradient(pts[:, 0], pts[:, 1])
    h = 1e-6
    fd1 = (d(pts[:, 0] + h, pts[:, 1]) - d(pts[:, 0] - h, pts[:, 1])) / (2 * h)
    fd2 = (d(pts[:, 0], pts[:, 1] + h) - d(pts[:, 0], pts[:, 1] - h)) / (2 * h)
    np.testing.assert_allclose(g1, fd1, rtol=1e-6, atol=1e-8)
    np.testing.assert_allclose(g2, fd2, rtol=1e-6, atol=1e-8)


def test_affine_density_closed_form_bounds():
    d = affine_density(0.5)
    # f = (1 + x1/2) / 1.25
    assert d.alpha == pytest.approx(0.8)
    assert d.f_sup == pytest.approx(1.2)
    assert d.fx1_sup == pytest.approx(0.4)
    assert d.audit() == []


def test_density_audit_flags_wrong_bounds():
    d = DensityModel(lambda x1, x2: 0.5 + x1, alpha=0.9, f_sup=1.0)
    issues = d.audit()
    assert any("below alpha" in m for m in issues)
    assert any("above f_sup" in m for m in issues)
    assert any("f_x1" in m for m in issues)


def test_density_rejects_bad_bounds():
    with pytest.raises(ValueError):
        DensityModel(lambda a, b: 1 + 0 * a, alpha=0.0, f_sup=1.0)
    with pytest.raises(ValueError):
        DensityModel(lambda a, b: 1 + 0 * a, alpha=2.0, f_sup=1.0)


# ---------------------------------------------------------------- grids


def test_linear_chord_grid():
    grid = build_grid(linear_curve(), linear_cost(1.0, 1.0), "chord", 2, s=np.sqrt(2) / 4)
    np.testing.assert_allclose(grid.ys, [0.0, 0.25, 0.5], atol=1e-15)
    assert not grid.strictly_convex


def test_quadratic_chord_grid_first_point():
    A = 1 / 6
    grid = build_grid(quadratic_curve(A), half_squared_norm_cost(), "chord", 28)
    y1 = grid.ys[1]
    assert y1**2 + A**2 * y1**4 == pytest.approx((1 / 28) ** 2, abs=1e-10)
    np.testing.assert_allclose(grid.chord_lengths(), 1 / 28, atol=1e-12)


def test_explicit_grid_chord_slopes():
    grid = build_grid(quadratic_curve(1 / 6), half_squared_norm_cost(), "explicit", ys=[0, 0.3, 0.7])
    np.testing.assert_allclose(grid.chord_slopes, [0.05, 1 / 6], rtol=1e-13)


def test_arclength_grid_equal_pieces():
    curve = quadratic_curve(1 / 4, y_max=1.5)
    grid = build_grid(curve, half_squared_norm_cost(), "arclength", 12)
    pieces = [curve_arclength(curve, a, b) for a, b in zip(grid.ys[:-1], grid.ys[1:])]
    np.testing.assert_allclose(pieces, pieces[0], rtol=1e-10)
    assert grid.ys[-1] == 1.5


def test_grid_errors():
    curve, cost = quadratic_curve(1 / 6, y_max=0.5), half_squared_norm_cost()
    with pytest.raises(CurveTooShortError):
        build_grid(curve, cost, "chord", 4, s=0.2)
    with pytest.raises(CurveTooShortError):
        build_grid(curve, cost, "explicit", ys=[0, 0.4, 0.6])
    with pytest.raises(InvalidGridError):
        build_grid(curve, cost, "explicit", ys=[0, 0.3, 0.3])
    with pytest.raises(InvalidGridError):
        build_grid(curve, cost, "explicit", ys=[0.1, 0.3])
    with pytest.raises(ValueError):
        build_grid(curve, cost, "chord", 0)


def test_instance_rejects_foreign_grid():
    cost = half_squared_norm_cost()
    grid = build_grid(quadratic_curve(1 / 4), cost, "chord", 4)
    with pytest.raises(InvalidGridError):
        ScreeningInstance(quadratic_curve(1 / 6), cost, uniform_density(), grid)


def test_truncated_instance(base):
    small = base.truncated(2)
    assert small.grid.n == 2
    np.testing.assert_array_equal(small.grid.ys, base.grid.ys[:3])


# ---------------------------------------------------------------- hypotheses


@settings(max_examples=40, deadline=None)
@given(A=st.floats(0.05, 1.0), n=st.integers(2, 30), scale=st.floats(0.5, 1.5))
def test_h1_matches_triple_loop(A, n, scale):
    inst = make_instance(A, n, s=scale / n)
    rep = check_h1(inst)
    oracle = h1_triple_loop(inst.grid)
    assert rep.margin == pytest.approx(oracle, rel=1e-9, abs=1e-15)
    assert rep.passed == (oracle > 0)


def test_h1_fails_when_cost_affine_in_F():
    # c = z2 is exactly F, so every quotient equals 1 and the strict increase fails
    curve = quadratic_curve(1 / 6)
    cost = linear_cost(0.0, 1.0)
    grid = build_grid(curve, cost, "chord", 8)
    rep = check_h1(ScreeningInstance(curve, cost, uniform_density(), grid))
    assert not rep.passed
    assert abs(rep.margin) < 1e-12


@pytest.mark.parametrize("A,n", [(1 / 6, 28), (1 / 6, 4), (0.33, 64)])
def test_quadratic_hypotheses_pass(A, n):
    inst = make_instance(A, n)
    assert check_h1(inst).passed
    assert check_h2(inst).passed
    assert check_h3(inst).passed
    assert check_premium(inst)


def test_h2_fails_for_steep_curve(steep):
    rep = check_h2(steep)
    assert not rep.passed
    assert rep.failures and rep.indices == list(range(1, 28))


def test_h3_fails_with_large_x2_gradient():
    base = make_instance(1 / 6, 28)
    steep = DensityModel(lambda a, b: 1 + 0 * a, alpha=1.0, f_sup=1.0, fx2_sup=1e3)
    assert not check_h3(ScreeningInstance(base.curve, base.cost, steep, base.grid)).passed


def test_h2_h3_degenerate_slopes():
    curve = linear_curve()
    cost = half_squared_norm_cost()
    grid = build_grid(curve, cost, "chord", 4, s=0.1)
    inst = ScreeningInstance(curve, cost, uniform_density(), grid)
    with pytest.raises(InvalidGridError):
        check_h2(inst)
    with pytest.raises(InvalidGridError):
        check_h3(inst)


def test_h3_uniform_bound_below_one():
    # with f = 1 the bound over the slope ratio is (12N^2 - 18N - (2N - 7)) / (12N^2 - 18N) < 1
    for n in (4, 8, 28):
        rep = check_h3(make_instance(1 / 6, n))
        assert rep.passed
        assert np.all(rep.rhs < rep.lhs)


def test_premium_and_market_size():
    inst = make_instance(1 / 6, 28)
    assert check_premium(inst)
    gains = inst.grid.dy + inst.grid.dF - inst.grid.dc
    assert market_size(inst) == int(np.max(np.nonzero(gains > 0)[0]) + 1)

    curve = quadratic_curve(1 / 6)
    free = CostModel(lambda a, b: 0.0 * a, lambda a, b: (0.0 * a, 0.0 * b))
    inst0 = ScreeningInstance(curve, free, uniform_density(), build_grid(curve, free, "chord", 10))
    assert market_size(inst0) == 10
    assert not check_premium(inst0)

    pricey = CostModel(lambda a, b: 10.0 * (a + b), lambda a, b: (10.0 + 0 * a, 10.0 + 0 * b))
    inst1 = ScreeningInstance(curve, pricey, uniform_density(), build_grid(curve, pricey, "chord", 10))
    assert market_size(inst1) == 0


def test_market_size_partial():
    # only the cheap end of the line is worth selling to the top type
    curve, cost = quadratic_curve(1 / 6, y_max=4.0), half_squared_norm_cost()
    inst = ScreeningInstance(curve, cost, uniform_density(), build_grid(curve, cost, "chord", 60, s=1 / 20))
    m = market_size(inst)
    assert 0 < m < 60
    gains = inst.grid.dy + inst.grid.dF - inst.grid.dc
    assert np.all(gains[:m] > 0) and np.all(gains[m:] <= 0)


def test_uniqueness_conditions():
    curve, cost = quadratic_curve(1 / 6), half_squared_norm_cost()
    grid = build_grid(curve, cost, "chord", 8)
    assert check_uniqueness(ScreeningInstance(curve, cost, uniform_density(), grid)).passed
    rep = check_uniqueness(ScreeningInstance(curve, cost, affine_density(0.5), grid))
    assert rep.gradient_ok  # 0.4 <= 0.8
    convex = DensityModel(lambda a, b: 1 + 0 * a, alpha=1.0, f_sup=1.0, fx1x1_sup=0.5,
                          grad=lambda a, b: (0 * a, 0 * b))
    rep = check_uniqueness(ScreeningInstance(curve, cost, convex, grid))
    assert not rep.passed and not rep.edge_ok
    flat = QualityCurve(lambda y: np.where(y < 1, (y - 1) ** 3 + 1, 1.0) - 0.0, lambda y: 0 * y, 1.0)
    with pytest.raises(InvalidGridError):
        check_uniqueness(ScreeningInstance(flat, cost, uniform_density(), build_grid(flat, cost, "explicit", ys=[0, 0.5])))
