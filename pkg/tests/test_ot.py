from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_instance
from screenest import ot, solver
from screenest.exceptions import NonNestedScheduleError
from screenest.families import half_squared_norm_cost, linear_curve, uniform_density
from screenest.geometry import IndiffLine
from screenest.model import ScreeningInstance, build_grid


@pytest.fixture(scope="module")
def diagonal():
    curve, cost = linear_curve(1.0), half_squared_norm_cost()
    grid = build_grid(curve, cost, "chord", 3, s=np.sqrt(2) * 0.1)
    return ScreeningInstance(curve, cost, uniform_density(), grid)


def test_measure_validation():
    with pytest.raises(ValueError):
        ot.DiscreteMeasure(np.array([0.5, 0.4]))
    with pytest.raises(ValueError):
        ot.DiscreteMeasure(np.array([1.2, -0.2]))
    nu = ot.DiscreteMeasure.from_masses([0.5, 0.5 - 1e-15], 4)
    assert len(nu.weights) == 4 and nu.weights.sum() == pytest.approx(1.0, abs=1e-15)


def test_level_diagonal(diagonal):
    g = diagonal.grid
    s = g.dy[0]
    assert g.dF[0] == pytest.approx(s)
    # x1 + x2 <= 1 carries half the mass
    assert ot.level_for(g, uniform_density(), 0, 0.5) == pytest.approx(s, abs=1e-14)
    assert ot.level_for(g, uniform_density(), 0, 1.0) == pytest.approx(g.dy[0] + g.dF[0])
    assert ot.level_for(g, uniform_density(), 0, 0.0) == 0.0


@settings(max_examples=10, deadline=None)
@given(i=st.integers(0, 27), cum=st.floats(0.01, 0.99))
def test_level_gaussian_self_consistent(base, gaussian, i, cum):
    k = ot.level_for(base.grid, gaussian, i, cum)
    assert abs(ot.sublevel_mass(base.grid, gaussian, i, k) - cum) < 1e-8


def test_round_trip_uniform(base):
    b = solver.solve_uniform(base)
    nu = ot.DiscreteMeasure.from_masses(b.masses, base.grid.n + 1)
    sched = ot.level_schedule(base.grid, base.density, nu)
    np.testing.assert_allclose(sched.ks, np.diff(b.tariff.vs), atol=1e-8)
    assert ot.check_discrete_nestedness(base.grid, sched, nu).passed
    pair = ot.potentials(base.grid, sched, nu)
    np.testing.assert_allclose(pair.v_list, b.tariff.vs, atol=1e-8)
    rep = ot.pushforward_check(base.grid, base.density, sched, nu)
    assert rep.passed


def test_steep_levels_not_nested(steep):
    b = solver.solve_uniform(steep)
    nu = ot.DiscreteMeasure.from_masses(b.masses / b.masses.sum(), steep.grid.n + 1)
    sched = ot.level_schedule(steep.grid, steep.density, nu)
    check = ot.check_discrete_nestedness(steep.grid, sched, nu)
    assert not check.passed
    with pytest.raises(NonNestedScheduleError):
        ot.potentials(steep.grid, sched, nu)


def test_single_atom_is_vacuously_nested(base):
    w = np.zeros(base.grid.n + 1)
    w[0] = 1.0
    nu = ot.DiscreteMeasure(w)
    sched = ot.level_schedule(base.grid, base.density, nu)
    assert ot.check_discrete_nestedness(base.grid, sched, nu).passed


def test_single_gap_potential():
    inst = make_instance(1 / 6, 1)
    pair = ot.potentials(inst.grid, ot.LevelSchedule(np.array([0.02])))
    np.testing.assert_allclose(pair.v_list, [0.0, 0.02])
    assert pair.u_eval([0.0, 0.0]) == 0.0


def test_optimal_map(base):
    b = solver.solve_uniform(base)
    nu = ot.DiscreteMeasure.from_masses(b.masses, base.grid.n + 1)
    sched = ot.level_schedule(base.grid, base.density, nu)
    assert ot.optimal_map(base.grid, sched, [0.0, 0.0]) == ot.MapResult(0, False)
    assert ot.optimal_map(base.grid, sched, [1.0, 1.0]).index == base.grid.n
    line = IndiffLine.from_level(base.grid, 5, sched.ks[5])
    x = [line.anchor_t + line.dF / line.dy * 0.5, 0.5]
    hit = ot.optimal_map(base.grid, sched, x)
    assert hit.index == 5 and hit.on_boundary


def test_assign_matches_optimal_map(base):
    b = solver.solve_uniform(base)
    nu = ot.DiscreteMeasure.from_masses(b.masses, base.grid.n + 1)
    sched = ot.level_schedule(base.grid, base.density, nu)
    xs = np.random.default_rng(1).random((200, 2))
    idx, near = ot.assign(base.grid, sched, xs)
    for x, i, flag in zip(xs, idx, near):
        assert ot.optimal_map(base.grid, sched, x) == ot.MapResult(int(i), bool(flag))
    # the assignment agrees with the consumers' own argmax
    for x, i in zip(xs, idx):
        assert solver.payoff(base, b, x).chosen == i


def test_transport_cells_match_regions(base):
    b = solver.solve_uniform(base)
    nu = ot.DiscreteMeasure.from_masses(b.masses, base.grid.n + 1)
    sched = ot.level_schedule(base.grid, base.density, nu)
    cells = ot.transport_cells(base.grid, sched)
    for c, r in zip(cells, b.regions):
        assert c.area() == pytest.approx(r.area(), abs=1e-9)
