"""CSV and SVG writers. Output is byte-for-byte deterministic."""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .geometry import ConvexRegion, IndiffLine, segment_extent
from .model import ProductGrid
from .solver import Breakpoints, SolutionBundle

SIZE = 1000


def num(x: float) -> str:
    """17 significant digits: enough to round-trip any double."""
    return format(float(x), ".17g")


def _write_rows(path: Path, header: list[str], rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.write_text(buf.getvalue())


def write_solution_csv(path: Path, bundle: SolutionBundle) -> None:
    ts, vs, m = bundle.breakpoints.ts, bundle.tariff.vs, bundle.m
    rows = []
    for i in range(m + 1):
        t = num(ts[i]) if i < m else ""
        rows.append([i, t, num(vs[i]), num(bundle.masses[i]), len(bundle.regions[i].vertices)])
    _write_rows(path, ["i", "t_i", "v_i", "mass_i", "vertex_count"], rows)


def read_solution_csv(path: Path) -> Breakpoints:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return Breakpoints(np.array([float(r["t_i"]) for r in rows if r["t_i"] != ""]))


def write_regions_csv(path: Path, regions: list[ConvexRegion]) -> None:
    rows = [[i, num(x1), num(x2)] for i, r in enumerate(regions) for x1, x2 in r.vertices]
    _write_rows(path, ["region_index", "x1", "x2"], rows)


def write_table_csv(path: Path, header: list[str], rows) -> None:
    _write_rows(path, header, rows)


def _px(x1: float, x2: float) -> str:
    return f"{x1 * SIZE:.3f},{(1.0 - x2) * SIZE:.3f}"


def _ramp(i: int, n: int) -> str:
    # light yellow to dark blue
    lo, hi = np.array([255, 247, 188]), np.array([8, 48, 107])
    a = i / max(n - 1, 1)
    r, g, b = np.rint(lo + a * (hi - lo)).astype(int)
    return f"#{r:02x}{g:02x}{b:02x}"


def _segment(line: IndiffLine) -> tuple[tuple[float, float], tuple[float, float]] | None:
    lo, hi = segment_extent(line)
    if hi <= lo:
        return None
    s = line.dF / line.dy
    x1 = lambda x2: line.anchor_t + s * (1.0 - x2)
    return (x1(lo), lo), (x1(hi), hi)


def _svg(body: list[str], title: str) -> str:
    head = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {SIZE} {SIZE}" width="{SIZE}" height="{SIZE}">',
        f"<title>{title}</title>",
        f'<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="#ffffff" stroke="#000000" stroke-width="1"/>',
    ]
    return "\n".join(head + body + ["</svg>", ""])


def regions_svg(grid: ProductGrid, bundle: SolutionBundle, title: str = "regions") -> str:
    body = []
    n = len(bundle.regions)
    for i, region in enumerate(bundle.regions):
        if region.is_empty:
            continue
        pts = " ".join(_px(*v) for v in region.vertices)
        body.append(f'<polygon points="{pts}" fill="{_ramp(i, n)}" stroke="none"><title>X_{i}</title></polygon>')
    for i, t in enumerate(bundle.breakpoints.ts):
        seg = _segment(IndiffLine.for_gap(grid, i, t))
        if seg:
            (a1, a2), (b1, b2) = seg
            body.append(f'<line x1="{a1 * SIZE:.3f}" y1="{(1 - a2) * SIZE:.3f}" x2="{b1 * SIZE:.3f}" '
                        f'y2="{(1 - b2) * SIZE:.3f}" stroke="#000000" stroke-width="1"/>')
    return _svg(body, title)


def levels_svg(grid: ProductGrid, bundle: SolutionBundle, title: str = "level lines") -> str:
    """Indifference lines of every gap drawn across the whole square, crossings marked."""
    from .geometry import lines_cross_in_closed_square

    lines = [IndiffLine.for_gap(grid, i, t) for i, t in enumerate(bundle.breakpoints.ts)]
    body = []
    n = len(lines)
    for i, line in enumerate(lines):
        seg = _segment(line)
        if seg:
            (a1, a2), (b1, b2) = seg
            body.append(f'<line x1="{a1 * SIZE:.3f}" y1="{(1 - a2) * SIZE:.3f}" x2="{b1 * SIZE:.3f}" '
                        f'y2="{(1 - b2) * SIZE:.3f}" stroke="{_ramp(i, n)}" stroke-width="1"/>')
    for a in range(n):
        for b in range(a + 1, n):
            hit = lines_cross_in_closed_square(lines[a], lines[b])
            if hit.crosses:
                x, y = hit.point
                body.append(f'<circle cx="{x * SIZE:.3f}" cy="{(1 - y) * SIZE:.3f}" r="3" fill="#d62728"/>')
    return _svg(body, title)
