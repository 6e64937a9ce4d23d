"""Command line front end.

Exit codes: 0 ok, 2 bad config, 3 a hypothesis fails, 4 non-nested solution,
5 solver failure, 6 oracle disagreement, 7 refinement errors not decreasing.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import model, oracle, report, solver
from .config import RunConfig, load_config
from .exceptions import ConfigError, ScreeningError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_HYPOTHESIS = 3
EXIT_NON_NESTED = 4
EXIT_SOLVE = 5
EXIT_ORACLE = 6
EXIT_REFINE = 7

log = logging.getLogger("screenest")


def worker_count() -> int | None:
    raw = os.environ.get("SCREENEST_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        log.warning("ignoring SCREENEST_THREADS=%r", raw)
        return None
    return None if n <= 0 else n


def _row(name: str, ok: bool, detail: str) -> str:
    return f"{name:<12} {'PASS' if ok else 'FAIL':<5} {detail}"


def cmd_check(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    inst = cfg.instance
    rows = []
    all_ok = True
    if inst.grid.n >= 2:
        h1 = model.check_h1(inst)
        rows.append(_row("H1", h1.passed, f"margin {h1.margin:.6g} at triple {h1.worst_triple}"))
        all_ok &= h1.passed
        for name, rep in (("H2", model.check_h2(inst)), ("H3", model.check_h3(inst))):
            fails = rep.failures
            detail = f"margin {rep.margin:.6g} over i=1..{inst.grid.n - 1}"
            if fails:
                detail += f"; fails at i={fails}"
            rows.append(_row(name, rep.passed, detail))
            all_ok &= rep.passed
    else:
        rows.append(_row("H1-H3", False, "need at least two products"))
        all_ok = False
    prem = model.check_premium(inst)
    rows.append(_row("premium", prem, f"c(z_1) = {inst.grid.costs[1]:.6g}, F(y_1) = {inst.grid.Fs[1]:.6g}"))
    all_ok &= prem
    try:
        uq = model.check_uniqueness(inst)
        rows.append(_row("uniqueness", uq.passed, uq.details))
        all_ok &= uq.passed
    except ScreeningError as exc:
        rows.append(_row("uniqueness", False, str(exc)))
        all_ok = False
    try:
        rows.append(f"{'market size':<12} {'':<5} M = {model.market_size(inst)} of N = {inst.grid.n}")
    except ScreeningError as exc:
        rows.append(_row("market size", False, str(exc)))
        all_ok = False
    print("\n".join(rows), file=out)
    return EXIT_OK if all_ok else EXIT_HYPOTHESIS


def _solve(cfg: RunConfig, method: str) -> solver.SolutionBundle:
    inst = cfg.instance
    if method == "closed" or (method == "auto" and inst.density.uniform):
        return solver.solve_uniform(inst)
    return solver.solve_numeric(inst, max_workers=worker_count())


def cmd_solve(cfg: RunConfig, method: str = "auto", out_dir: Path = Path("."), svg: bool = False,
              csv: bool = True, out=None) -> int:
    out = out or sys.stdout
    try:
        bundle = _solve(cfg, method)
    except (ScreeningError, ValueError) as exc:
        print(f"solve failed: {exc}", file=sys.stderr)
        return EXIT_SOLVE
    out_dir.mkdir(parents=True, exist_ok=True)
    grid = cfg.instance.grid
    if csv:
        report.write_solution_csv(out_dir / "solution.csv", bundle)
        report.write_regions_csv(out_dir / "regions.csv", bundle.regions)
    if svg:
        (out_dir / "regions.svg").write_text(report.regions_svg(grid, bundle, cfg.source))
        if not bundle.nested:
            (out_dir / "levels.svg").write_text(report.levels_svg(grid, bundle, cfg.source))
    print(f"method      {bundle.method}", file=out)
    print(f"market size {bundle.m}", file=out)
    print(f"profit      {report.num(bundle.profit)}", file=out)
    print(f"mass total  {report.num(bundle.masses.sum())}", file=out)
    print(f"nested      {'yes' if bundle.nested else 'no'}", file=out)
    rep = bundle.report
    if not rep.nested:
        crossings = [v for v in rep.violations if " cross at " in v]
        print(f"  monotone breakpoints  {'yes' if rep.monotone else 'no'}", file=out)
        print(f"  crossing line pairs   {len(crossings)}", file=out)
        print(f"  positive masses       {'yes' if rep.positive_masses else 'no'}", file=out)
        others = [v for v in rep.violations if v not in crossings]
        for v in others[:5] + crossings[:5]:
            print(f"  violation: {v}", file=out)
    return EXIT_OK if bundle.nested else EXIT_NON_NESTED


def cmd_oracle(cfg: RunConfig, resolution: int = 1024, search_grid: int = 32, method: str = "auto",
               out=None) -> int:
    out = out or sys.stdout
    try:
        bundle = _solve(cfg, method)
    except (ScreeningError, ValueError) as exc:
        print(f"solve failed: {exc}", file=sys.stderr)
        return EXIT_SOLVE
    if not bundle.nested:
        print("solution is not nested; the oracle comparison needs a nested bundle", file=out)
        return EXIT_ORACLE
    verdict = oracle.compare(cfg.instance, bundle, resolution, search_grid)
    print(f"bundle profit   {report.num(verdict.bundle_profit)}", file=out)
    print(f"oracle profit   {report.num(verdict.oracle_profit)}  (delta {verdict.profit_gap:.3g})", file=out)
    print(f"max mass delta  {verdict.max_mass_gap:.3g}", file=out)
    if verdict.search_profit is not None:
        print(f"price search    {report.num(verdict.search_profit)}", file=out)
    for m in verdict.messages or []:
        print(f"  {m}", file=out)
    print(f"verdict         {'PASS' if verdict.passed else 'FAIL'}", file=out)
    return EXIT_OK if verdict.passed else EXIT_ORACLE


def cmd_refine(cfg: RunConfig, y: float, ns: list[int], out_dir: Path = Path("."), out=None) -> int:
    out = out or sys.stdout
    inst = cfg.instance
    mode = cfg.grid_spec.get("mode", "chord")
    if mode == "explicit":
        print("refinement needs a chord or arclength grid", file=sys.stderr)
        return EXIT_CONFIG
    scale = 1.0
    if mode == "chord" and cfg.grid_spec.get("s") is not None:
        scale = float(cfg.grid_spec["s"]) * float(cfg.grid_spec["n"])
    try:
        rows = solver.refinement_study(inst.curve, inst.cost, inst.density, y, ns, mode, scale)
    except ScreeningError as exc:
        print(f"refinement failed: {exc}", file=sys.stderr)
        return EXIT_SOLVE
    out_dir.mkdir(parents=True, exist_ok=True)
    report.write_table_csv(out_dir / "refine.csv", ["N", "y_iN", "t_iN", "t_y", "abs_err"],
                           [[r.n, report.num(r.y_n), report.num(r.t_n), report.num(r.t_y), report.num(r.abs_err)]
                            for r in rows])
    for r in rows:
        print(f"N={r.n:<5d} y={r.y_n:.6f} t={r.t_n:.8f} err={r.abs_err:.3e}", file=out)
    ok = solver.eventually_decreasing(rows)
    print(f"errors eventually decreasing: {'yes' if ok else 'no'}", file=out)
    return EXIT_OK if ok else EXIT_REFINE


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="screenest", description="Semi-discrete monopolist screening solver")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="evaluate the nestedness hypotheses")
    c.add_argument("config")

    s = sub.add_parser("solve", help="compute breakpoints, prices and regions")
    s.add_argument("config")
    s.add_argument("--method", choices=["closed", "numeric", "auto"], default="auto")
    s.add_argument("--out-dir", type=Path, default=Path("."))
    s.add_argument("--svg", action="store_true")
    s.add_argument("--csv", action=argparse.BooleanOptionalAction, default=True)

    o = sub.add_parser("oracle", help="compare the solution with brute-force simulation")
    o.add_argument("config")
    o.add_argument("--resolution", type=int, default=1024)
    o.add_argument("--search-grid", type=int, default=32)
    o.add_argument("--method", choices=["closed", "numeric", "auto"], default="auto")

    r = sub.add_parser("refine", help="grid refinement study towards the continuum of goods")
    r.add_argument("config")
    r.add_argument("--y", type=float, required=True)
    r.add_argument("--ns", type=lambda s: [int(v) for v in s.split(",")], default=[10, 20, 40, 80, 160])
    r.add_argument("--out-dir", type=Path, default=Path("."))
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "check":
        return cmd_check(cfg)
    if args.command == "solve":
        return cmd_solve(cfg, args.method, args.out_dir, args.svg, args.csv)
    if args.command == "oracle":
        return cmd_oracle(cfg, args.resolution, args.search_grid, args.method)
    return cmd_refine(cfg, args.y, args.ns, args.out_dir)


if __name__ == "__main__":
    sys.exit(main())
