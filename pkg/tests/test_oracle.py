from __future__ import annotations

import numpy as np
import pytest

from screenest import oracle, solver
from screenest.exceptions import InstanceTooLargeError
from screenest.solver import Tariff


def test_overpriced_single_good(base):
    one = base.truncated(1)
    g = one.grid
    rep = oracle.choice_partition(one, Tariff(np.array([0.0, g.ys[1] + g.Fs[1] + 1e-3])), 256)
    assert rep.masses[1] == 0.0 and rep.profit_estimate == 0.0


def test_nested_masses_match_geometry(base):
    b = solver.solve_uniform(base)
    rep = oracle.choice_partition(base, b.tariff, 1024)
    assert np.max(np.abs(rep.masses - b.masses)) < 4 / 1024
    assert rep.triple_ties == 0
    assert rep.masses[0] > 0


def test_non_nested_masses_disagree(steep):
    b = solver.solve_uniform(steep)
    rep = oracle.choice_partition(steep, b.tariff, 1024)
    assert np.max(np.abs(rep.masses - b.masses)) > 4 / 1024


def test_price_search_single_good(base):
    one = base.truncated(1)
    b = solver.solve_uniform(one)
    res = oracle.brute_force_prices(one, per_good_grid=64, resolution=512)
    g = one.grid
    step = (g.ys[1] + g.Fs[1] - g.costs[1]) / 63
    assert abs(res.best_tariff.vs[1] - b.tariff.vs[1]) <= step
    assert res.best_profit <= b.profit + 1e-4


def test_price_search_priced_out(base):
    assert oracle.brute_force_prices(base, m=0).best_profit == 0.0


def test_price_search_limits(base):
    with pytest.raises(InstanceTooLargeError):
        oracle.brute_force_prices(base, m=4)
    with pytest.raises(InstanceTooLargeError):
        oracle.brute_force_prices(base, per_good_grid=65, m=1)
    with pytest.raises(ValueError):
        oracle.choice_partition(base, Tariff(np.zeros(1)), 32)


def test_compare_two_goods(base):
    two = base.truncated(2)
    b = solver.solve_uniform(two)
    v = oracle.compare(two, b, resolution=512, search_grid=32)
    assert v.passed
    assert v.search_profit <= b.profit + 5e-3
