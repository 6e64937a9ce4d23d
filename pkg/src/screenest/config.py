"""JSON run configuration -> ScreeningInstance.

Example::

    {
      "curve":   {"kind": "quadratic", "A": 0.16666666666666666, "y_max": 2.0},
      "cost":    {"kind": "half_squared_norm"},
      "density": {"kind": "uniform"},
      "grid":    {"mode": "chord", "n": 28}
    }

Expression kinds take a formula over ``y`` (curve), ``z1, z2`` (cost) or
``x1, x2`` (density) using ``+ - * / ^``, ``exp`` and ``sqrt``.
"""

from __future__ import annotations

import ast
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import sympy

from .exceptions import ConfigError, ScreeningError
from .families import gaussian_density, half_squared_norm_cost, quadratic_curve, uniform_density
from .model import CostModel, DensityModel, QualityCurve, ScreeningInstance, build_grid

_ALLOWED_NODES = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Constant, ast.Name, ast.Call, ast.Load,
                  ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.BitXor, ast.USub, ast.UAdd)
_FUNCS = {"exp": sympy.exp, "sqrt": sympy.sqrt}


@dataclass
class RunConfig:
    source: str
    raw: dict[str, Any]
    instance: ScreeningInstance
    grid_spec: dict[str, Any]
    options: dict[str, Any] = field(default_factory=dict)


def _locate(text: str, needle: str) -> tuple[int | None, int | None]:
    pos = text.find(needle)
    if pos < 0:
        return None, None
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


class _Builder:
    def __init__(self, text: str):
        self.text = text

    def fail(self, msg: str, anchor: str | None = None):
        line, col = _locate(self.text, anchor) if anchor else (None, None)
        raise ConfigError(msg, line, col)

    def section(self, raw: dict, key: str) -> dict:
        if key not in raw:
            self.fail(f"missing section {key!r}")
        val = raw[key]
        if not isinstance(val, dict):
            self.fail(f"section {key!r} must be an object", f'"{key}"')
        return val

    def number(self, sec: dict, key: str, where: str, default=None) -> float:
        if key not in sec:
            if default is not None:
                return default
            self.fail(f"{where}: missing field {key!r}", f'"{where}"')
        val = sec[key]
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            self.fail(f"{where}: field {key!r} must be a number", f'"{key}"')
        return float(val)

    def expression(self, src: Any, variables: tuple[str, ...], where: str):
        if not isinstance(src, str):
            self.fail(f"{where}: expression must be a string", f'"{where}"')
        try:
            tree = ast.parse(src.strip(), mode="eval")
        except SyntaxError as exc:
            line, col = _locate(self.text, src)
            raise ConfigError(f"{where}: cannot parse expression {src!r}: {exc.msg}",
                              line, None if col is None else col + (exc.offset or 1)) from None
        for node in ast.walk(tree):
            bad = None
            if not isinstance(node, _ALLOWED_NODES):
                bad = type(node).__name__
            elif isinstance(node, ast.Name) and node.id not in variables and node.id not in _FUNCS:
                bad = f"name {node.id!r}"
            elif isinstance(node, ast.Call) and (not isinstance(node.func, ast.Name) or len(node.args) != 1
                                                 or node.keywords):
                bad = "call"
            elif isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
                bad = "constant"
            if bad:
                self.fail(f"{where}: {bad} not allowed in expression {src!r}", src)
        syms = {v: sympy.Symbol(v, real=True) for v in variables}
        expr = sympy.sympify(src.replace("^", "**"), locals={**syms, **_FUNCS})
        return expr, [syms[v] for v in variables]


def _lambdify(args, expr):
    fn = sympy.lambdify(args, expr, "numpy")

    def call(*xs):
        xs = [np.asarray(x, dtype=float) for x in xs]
        return np.broadcast_to(np.asarray(fn(*xs), dtype=float), np.broadcast(*xs).shape).copy()

    return call


def _curve(b: _Builder, sec: dict) -> QualityCurve:
    kind = sec.get("kind")
    y_max = b.number(sec, "y_max", "curve", default=2.0)
    if kind == "quadratic":
        return quadratic_curve(b.number(sec, "A", "curve"), y_max)
    if kind == "expression":
        expr, (y,) = b.expression(sec.get("expr"), ("y",), "curve")
        return QualityCurve(_lambdify([y], expr), _lambdify([y], sympy.diff(expr, y)), y_max,
                            name=f"F(y) = {sec['expr']}")
    if kind == "table":
        ys = np.asarray(sec.get("ys", []), dtype=float)
        Fs = np.asarray(sec.get("Fs", []), dtype=float)
        if len(ys) < 2 or len(ys) != len(Fs) or ys[0] != 0 or np.any(np.diff(ys) <= 0):
            b.fail("curve table needs matching 'ys'/'Fs' lists with increasing ys starting at 0", '"table"')
        slopes = np.diff(Fs) / np.diff(ys)

        def deriv(y):
            j = np.clip(np.searchsorted(ys, y, side="right") - 1, 0, len(slopes) - 1)
            return slopes[j]

        return QualityCurve(lambda y: np.interp(y, ys, Fs), deriv, float(ys[-1]), name="table")
    b.fail(f"unknown curve kind {kind!r}", '"curve"')


def _cost(b: _Builder, sec: dict) -> CostModel:
    kind = sec.get("kind")
    if kind == "half_squared_norm":
        return half_squared_norm_cost()
    if kind == "expression":
        expr, (z1, z2) = b.expression(sec.get("expr"), ("z1", "z2"), "cost")
        f = _lambdify([z1, z2], expr)
        g1 = _lambdify([z1, z2], sympy.diff(expr, z1))
        g2 = _lambdify([z1, z2], sympy.diff(expr, z2))
        return CostModel(f, lambda a, c: (g1(a, c), g2(a, c)), name=f"c(z) = {sec['expr']}")
    b.fail(f"unknown cost kind {kind!r}", '"cost"')


def _density(b: _Builder, sec: dict) -> DensityModel:
    kind = sec.get("kind")
    if kind == "uniform":
        return uniform_density()
    if kind == "gaussian":
        mean = sec.get("mean", [0.5, 0.5])
        if not (isinstance(mean, list) and len(mean) == 2):
            b.fail("gaussian mean must be a list of two numbers", '"mean"')
        return gaussian_density(mean, b.number(sec, "sigma", "density", default=0.5),
                                int(sec.get("quad_refine", 3)))
    if kind == "expression":
        expr, (x1, x2) = b.expression(sec.get("expr"), ("x1", "x2"), "density")
        if sec.get("normalize", False):
            raw = _lambdify([x1, x2], expr)
            probe = DensityModel(raw, alpha=1.0, f_sup=1.0)
            expr = expr / probe.total_mass()
        bounds = {k: b.number(sec, k, "density") for k in ("alpha", "f_sup", "fx1_sup", "fx2_sup", "fx1x1_sup")}
        g1 = _lambdify([x1, x2], sympy.diff(expr, x1))
        g2 = _lambdify([x1, x2], sympy.diff(expr, x2))
        return DensityModel(_lambdify([x1, x2], expr), grad=lambda a, c: (g1(a, c), g2(a, c)),
                            quad_refine=int(sec.get("quad_refine", 3)), name=f"f(x) = {sec['expr']}",
                            **bounds)
    b.fail(f"unknown density kind {kind!r}", '"density"')


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be an object", 1, 1)
    b = _Builder(text)
    curve = _curve(b, b.section(raw, "curve"))
    cost = _cost(b, b.section(raw, "cost"))
    density = _density(b, b.section(raw, "density"))
    gsec = b.section(raw, "grid")
    mode = gsec.get("mode")
    if mode not in ("chord", "arclength", "explicit"):
        b.fail(f"grid mode must be chord, arclength or explicit, not {mode!r}", '"mode"')
    try:
        curve.validate()
        cost.validate(curve)
        if mode == "explicit":
            grid = build_grid(curve, cost, "explicit", ys=gsec.get("ys"))
        else:
            n = int(b.number(gsec, "n", "grid"))
            s = gsec.get("s")
            grid = build_grid(curve, cost, mode, n, s=None if s is None else float(s))
        inst = ScreeningInstance(curve, cost, density, grid)
    except (ScreeningError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{source}: {exc}") from None
    return RunConfig(source, raw, inst, gsec, raw.get("options", {}))


def load_config(path: str | Path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {p}: {exc.strerror}") from None
    return parse_config(text, str(p))
