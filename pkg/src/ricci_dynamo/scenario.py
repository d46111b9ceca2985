"""Scenario files: parsing, validation, sweep expansion, velocity grammar.

A scenario is a TOML document (key-value pairs with nested tables):

    model = "reduced"              # or "grid"
    outputs = ["spectrum", "classify"]
    seed = 7
    div_sign = 1                   # optional, +1 or -1

    [parameters]
    R = -1.0                       # scalar, or a sweep table:
    eta = { min = 1e-4, max = 1e-1, count = 4, scale = "log" }
    theta = 1.0
    rho = 1.0
    Lambda = 1.0

    [grid]                         # only read for model = "grid"
    N = 16
    velocity = "shear:1.0"         # zero | shear:a | rotation:w | {vx=..., vy=...}
    k = 4

    [time]                         # required by evolve / ricci_flow outputs
    t_end = 1.0
    dt = 0.01

Velocity component expressions admit +, -, *, /, unary minus, sin, cos,
exp, the names x, y, pi, and numeric literals; nothing else.
"""

from __future__ import annotations

import ast
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .errors import ScenarioError
from .operator import grid_coordinates

__all__ = [
    "SweepRange",
    "Scenario",
    "OUTPUT_KINDS",
    "load_scenario",
    "parse_scenario",
    "velocity_field",
    "eval_field_expression",
]

OUTPUT_KINDS = ("spectrum", "sweep", "evolve", "classify", "ricci_flow", "discrepancy")
PARAMETER_NAMES = ("R", "theta", "eta", "rho", "Lambda")


@dataclass(frozen=True)
class SweepRange:
    min: float
    max: float
    count: int
    scale: str = "linear"

    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.min, self.max, self.count)
        return np.linspace(self.min, self.max, self.count)


ParameterValue = Union[float, SweepRange]


@dataclass(frozen=True)
class Scenario:
    model: str
    outputs: tuple[str, ...]
    seed: int
    parameters: dict
    grid_n: int
    velocity: object
    grid_k: int
    t_end: float
    dt: float
    div_sign: int
    digest: str

    def parameter(self, name: str) -> ParameterValue:
        return self.parameters[name]

    def scalar(self, name: str, context: str) -> float:
        value = self.parameters[name]
        if isinstance(value, SweepRange):
            raise ScenarioError(f"parameters.{name}",
                                f"{context} requires a scalar value, got a sweep")
        return value

    def is_sweep(self, name: str) -> bool:
        return isinstance(self.parameters[name], SweepRange)


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_bytes()
    except OSError as exc:
        raise ScenarioError(str(path), f"cannot read scenario file: {exc}") from exc
    try:
        raw = tomllib.loads(text.decode("utf-8"))
    except (UnicodeDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ScenarioError(str(path), f"TOML parse error: {exc}") from exc
    return parse_scenario(raw)


def _expect(mapping, key, types, where, default=None, required=False):
    if key not in mapping:
        if required:
            raise ScenarioError(where, "missing required field")
        return default
    value = mapping[key]
    if isinstance(value, bool) or not isinstance(value, types):
        names = "/".join(t.__name__ for t in (types if isinstance(types, tuple) else (types,)))
        raise ScenarioError(where, f"expected {names}, got {type(value).__name__}")
    return value


def _parse_sweep(entry: dict, where: str) -> SweepRange:
    allowed = {"min", "max", "count", "scale"}
    unknown = set(entry) - allowed
    if unknown:
        raise ScenarioError(where, f"unknown sweep keys: {sorted(unknown)}")
    lo = _expect(entry, "min", (int, float), f"{where}.min", required=True)
    hi = _expect(entry, "max", (int, float), f"{where}.max", required=True)
    count = _expect(entry, "count", int, f"{where}.count", required=True)
    scale = _expect(entry, "scale", str, f"{where}.scale", default="linear")
    if count < 2:
        raise ScenarioError(f"{where}.count", f"sweep count must be at least 2, got {count}")
    if not lo < hi:
        raise ScenarioError(f"{where}.min", f"sweep requires min < max, got min={lo}, max={hi}")
    if scale not in ("linear", "log"):
        raise ScenarioError(f"{where}.scale", f"scale must be 'linear' or 'log', got {scale!r}")
    if scale == "log" and lo <= 0.0:
        raise ScenarioError(f"{where}.min", f"log scale requires min > 0, got {lo}")
    return SweepRange(min=float(lo), max=float(hi), count=count, scale=scale)


def parse_scenario(raw: dict) -> Scenario:
    if not isinstance(raw, dict):
        raise ScenarioError("scenario", "top level must be a table")
    known_top = {"model", "outputs", "seed", "div_sign", "parameters", "grid", "time"}
    unknown = set(raw) - known_top
    if unknown:
        raise ScenarioError(sorted(unknown)[0], "unknown top-level field")

    model = _expect(raw, "model", str, "model", required=True)
    if model not in ("reduced", "grid"):
        raise ScenarioError("model", f"must be 'reduced' or 'grid', got {model!r}")

    outputs = raw.get("outputs")
    if not isinstance(outputs, list) or not outputs:
        raise ScenarioError("outputs", "must be a non-empty list of output kinds")
    for kind in outputs:
        if kind not in OUTPUT_KINDS:
            raise ScenarioError("outputs", f"unknown output kind {kind!r}; "
                                           f"choose from {list(OUTPUT_KINDS)}")

    seed = _expect(raw, "seed", int, "seed", default=0)
    div_sign = _expect(raw, "div_sign", int, "div_sign", default=1)
    if div_sign not in (1, -1):
        raise ScenarioError("div_sign", f"must be 1 or -1, got {div_sign}")

    params_raw = raw.get("parameters", {})
    if not isinstance(params_raw, dict):
        raise ScenarioError("parameters", "must be a table")
    unknown = set(params_raw) - set(PARAMETER_NAMES)
    if unknown:
        raise ScenarioError(f"parameters.{sorted(unknown)[0]}", "unknown parameter")
    parameters = {}
    for name in PARAMETER_NAMES:
        entry = params_raw.get(name, 0.0)
        where = f"parameters.{name}"
        if isinstance(entry, dict):
            parameters[name] = _parse_sweep(entry, where)
        elif isinstance(entry, bool) or not isinstance(entry, (int, float)):
            raise ScenarioError(where, f"expected number or sweep table, "
                                       f"got {type(entry).__name__}")
        else:
            parameters[name] = float(entry)

    grid_raw = raw.get("grid", {})
    if not isinstance(grid_raw, dict):
        raise ScenarioError("grid", "must be a table")
    grid_n = _expect(grid_raw, "N", int, "grid.N", default=16)
    if grid_n < 8:
        raise ScenarioError("grid.N", f"grid size must be at least 8, got {grid_n}")
    grid_k = _expect(grid_raw, "k", int, "grid.k", default=4)
    if not 1 <= grid_k <= 10:
        raise ScenarioError("grid.k", f"eigenvalue count must be in 1..10, got {grid_k}")
    velocity = grid_raw.get("velocity", "zero")
    _validate_velocity_spec(velocity)

    time_raw = raw.get("time", {})
    if not isinstance(time_raw, dict):
        raise ScenarioError("time", "must be a table")
    t_end = float(_expect(time_raw, "t_end", (int, float), "time.t_end", default=1.0))
    dt = float(_expect(time_raw, "dt", (int, float), "time.dt", default=0.01))
    if t_end <= 0.0:
        raise ScenarioError("time.t_end", f"must be positive, got {t_end}")
    if dt <= 0.0 or dt > t_end:
        raise ScenarioError("time.dt", f"must satisfy 0 < dt <= t_end, got {dt}")

    digest = _digest(model, tuple(outputs), seed, div_sign, parameters,
                     grid_n, velocity, grid_k, t_end, dt)
    return Scenario(model=model, outputs=tuple(outputs), seed=seed,
                    parameters=parameters, grid_n=grid_n, velocity=velocity,
                    grid_k=grid_k, t_end=t_end, dt=dt, div_sign=div_sign,
                    digest=digest)


def _digest(*parts) -> str:
    def canon(obj):
        if isinstance(obj, SweepRange):
            return {"min": obj.min, "max": obj.max, "count": obj.count, "scale": obj.scale}
        if isinstance(obj, dict):
            return {k: canon(v) for k, v in sorted(obj.items())}
        if isinstance(obj, (tuple, list)):
            return [canon(v) for v in obj]
        return obj

    payload = json.dumps(canon(list(parts)), sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


# -- velocity grammar ---------------------------------------------------------

_ALLOWED_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
_ALLOWED_BINOPS = {ast.Add: np.add, ast.Sub: np.subtract,
                   ast.Mult: np.multiply, ast.Div: np.divide}


def eval_field_expression(expr: str, x, y, where: str = "expression"):
    """Evaluate a velocity component expression on grid coordinates.

    Grammar: numbers, x, y, pi, + - * /, unary minus, sin/cos/exp calls.
    """
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise ScenarioError(where, f"invalid expression {expr!r}: {exc.msg}") from exc

    def walk(node):
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id == "x":
                return x
            if node.id == "y":
                return y
            if node.id == "pi":
                return math.pi
            raise ScenarioError(where, f"unknown name {node.id!r} in expression")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            operand = walk(node.operand)
            return -operand if isinstance(node.op, ast.USub) else operand
        if isinstance(node, ast.BinOp) and type(node.op) in _ALLOWED_BINOPS:
            return _ALLOWED_BINOPS[type(node.op)](walk(node.left), walk(node.right))
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) \
                and node.func.id in _ALLOWED_FUNCS and len(node.args) == 1 \
                and not node.keywords:
            return _ALLOWED_FUNCS[node.func.id](walk(node.args[0]))
        raise ScenarioError(where, f"disallowed construct in expression {expr!r}")

    return walk(tree)


def _validate_velocity_spec(spec):
    where = "grid.velocity"
    if isinstance(spec, str):
        if spec == "zero":
            return
        for prefix in ("shear:", "rotation:"):
            if spec.startswith(prefix):
                try:
                    float(spec[len(prefix):])
                except ValueError:
                    raise ScenarioError(where, f"{prefix}<number> expected, got {spec!r}")
                return
        raise ScenarioError(where, f"unknown velocity preset {spec!r}; use 'zero', "
                                   f"'shear:<a>', 'rotation:<w>', or a {{vx, vy}} table")
    if isinstance(spec, dict):
        if set(spec) != {"vx", "vy"}:
            raise ScenarioError(where, "expression table must have exactly keys vx and vy")
        for key in ("vx", "vy"):
            if not isinstance(spec[key], str):
                raise ScenarioError(f"{where}.{key}", "component expression must be a string")
            # parse eagerly so malformed expressions fail at validation time
            eval_field_expression(spec[key], 0.0, 0.0, where=f"{where}.{key}")
        return
    raise ScenarioError(where, f"expected string preset or table, got {type(spec).__name__}")


def velocity_field(spec, n: int) -> np.ndarray:
    """Materialize a velocity spec on the N x N grid."""
    x, y = grid_coordinates(n)
    if isinstance(spec, str):
        if spec == "zero":
            return np.zeros((2, n, n))
        if spec.startswith("shear:"):
            a = float(spec.split(":", 1)[1])
            return np.stack([a * np.sin(y), np.zeros_like(y)])
        if spec.startswith("rotation:"):
            w = float(spec.split(":", 1)[1])
            return np.stack([-w * (y - math.pi), w * (x - math.pi)])
    if isinstance(spec, dict):
        vx = eval_field_expression(spec["vx"], x, y, where="grid.velocity.vx")
        vy = eval_field_expression(spec["vy"], x, y, where="grid.velocity.vy")
        return np.stack([np.broadcast_to(vx, x.shape).astype(float),
                         np.broadcast_to(vy, x.shape).astype(float)])
    raise ScenarioError("grid.velocity", f"unsupported velocity spec {spec!r}")
