"""Brute-force ground truth: simulate every consumer's choice on a dense grid.

Nothing here uses the polygon geometry. Each cell centre picks the best good
among all goods, which is what lets it expose non-nested tariffs.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from .exceptions import InstanceTooLargeError
from .model import ScreeningInstance
from .solver import SolutionBundle, Tariff

log = logging.getLogger(__name__)

CHUNK = 1 << 16


@dataclass
class ChoiceGridReport:
    resolution: int
    assignment: np.ndarray  # (resolution, resolution), indexed [x1 cell, x2 cell]
    masses: np.ndarray
    profit_estimate: float
    triple_ties: int = 0


@dataclass
class _Cells:
    pts: np.ndarray
    weights: np.ndarray


def _cells(inst: ScreeningInstance, resolution: int) -> _Cells:
    c = (np.arange(resolution) + 0.5) / resolution
    X1, X2 = np.meshgrid(c, c, indexing="ij")
    pts = np.column_stack([X1.ravel(), X2.ravel()])
    weights = inst.density(pts[:, 0], pts[:, 1]) / resolution**2
    return _Cells(pts, weights)


def _choose(pts: np.ndarray, zs: np.ndarray, vs: np.ndarray, tie_margin: float = 1e-10):
    out = np.empty(len(pts), dtype=np.int64)
    ties = 0
    for a in range(0, len(pts), CHUNK):
        util = pts[a: a + CHUNK] @ zs.T - vs
        out[a: a + CHUNK] = np.argmax(util, axis=1)
        if util.shape[1] >= 3:
            top3 = -np.partition(-util, 2, axis=1)[:, :3]
            ties += int(np.sum(top3[:, 0] - top3[:, 2] <= tie_margin))
    return out, ties


def choice_partition(inst: ScreeningInstance, tariff: Tariff, resolution: int = 1024,
                     _cells_cache: _Cells | None = None) -> ChoiceGridReport:
    if resolution < 64:
        raise ValueError("resolution must be at least 64")
    vs = np.asarray(tariff.vs, dtype=float)
    m = len(vs) - 1
    cells = _cells_cache or _cells(inst, resolution)
    zs = inst.grid.zs[: m + 1]
    chosen, ties = _choose(cells.pts, zs, vs)
    masses = np.bincount(chosen, weights=cells.weights, minlength=m + 1)
    margins = vs - inst.grid.costs[: m + 1]
    return ChoiceGridReport(resolution, chosen.reshape(resolution, resolution), masses,
                            float(np.dot(margins[1:], masses[1:])), ties)


@dataclass
class PriceSearchResult:
    best_tariff: Tariff
    best_profit: float
    evaluated: int


def brute_force_prices(inst: ScreeningInstance, per_good_grid: int = 32, resolution: int = 512,
                       m: int | None = None) -> PriceSearchResult:
    """Exhaustive search over price vectors.

    Good j is priced on an even grid over [c_j, y_j + F(y_j)]: below cost it
    loses money on every buyer, above the top type's value nobody buys it.
    """
    grid = inst.grid
    m = grid.n if m is None else m
    if m > 3 or per_good_grid > 64:
        raise InstanceTooLargeError(f"search over {per_good_grid}^{m} tariffs is too large")
    if m == 0:
        return PriceSearchResult(Tariff(np.zeros(1)), 0.0, 0)
    axes = [np.linspace(grid.costs[j], grid.ys[j] + grid.Fs[j], per_good_grid) for j in range(1, m + 1)]
    log.info("brute force: bounds per good %s", [(round(a[0], 6), round(a[-1], 6)) for a in axes])
    cells = _cells(inst, resolution)
    zs = grid.zs[: m + 1]
    util0 = cells.pts @ zs.T  # prices only shift columns
    costs = grid.costs[: m + 1]
    best = (None, -np.inf)
    count = 0
    for prices in itertools.product(*axes):
        vs = np.concatenate([[0.0], prices])
        chosen = np.argmax(util0 - vs, axis=1)
        masses = np.bincount(chosen, weights=cells.weights, minlength=m + 1)
        value = float(np.dot((vs - costs)[1:], masses[1:]))
        count += 1
        if value > best[1]:
            best = (vs, value)
    return PriceSearchResult(Tariff(best[0]), best[1], count)


@dataclass
class Verdict:
    passed: bool
    oracle_profit: float
    bundle_profit: float
    profit_gap: float
    max_mass_gap: float
    search_profit: float | None = None
    messages: list[str] | None = None


def compare(inst: ScreeningInstance, bundle: SolutionBundle, resolution: int = 1024,
            search_grid: int = 32, search_resolution: int = 512, slack: float = 5e-3) -> Verdict:
    msgs = []
    rep = choice_partition(inst, bundle.tariff, resolution)
    gap = abs(rep.profit_estimate - bundle.profit)
    mass_gap = float(np.max(np.abs(rep.masses - bundle.masses)))
    ok = gap < 1e-3
    if not ok:
        msgs.append(f"oracle profit {rep.profit_estimate:.6g} vs bundle {bundle.profit:.6g}")
    search = None
    if bundle.m <= 3:
        res = brute_force_prices(inst, search_grid, search_resolution, m=bundle.m)
        search = res.best_profit
        if search > bundle.profit + slack:
            ok = False
            msgs.append(f"price search found {search:.6g} > bundle {bundle.profit:.6g} + {slack:g}")
    return Verdict(ok, rep.profit_estimate, bundle.profit, gap, mass_gap, search, msgs)
