"""Scenario configuration: JSON documents turned into models and systems.

A config is a single JSON object::

    {
      "name": "tb_damped_oscillator",
      "command": "simulate",                   # subcommand the file is meant for
      "algebroid": {"builtin": "tangent_bundle", "n": 1},
      "system": {"side": "lagrangian", "expression": "0.5*y1^2 - lam*s",
                 "parameters": {"lam": 0.5}},
      "initial_state": {"q": [1.0], "w": [0.0], "s": 0.0},
      "integrator": {"method": "rk4", "h": 0.001, "t_end": 5.0, "sample_every": 10},
      "checks": [{"name": "section", "tol": 1e-9}],
      "sampling": {"points": 50, "radius": 1.0},
      "seed": 7
    }

Algebroids are ``{"builtin": "tangent_bundle", "n": k}``, ``{"builtin": "so3"}``,
``{"builtin": "lie_algebra", "m": k, "constants": {"g,a,b": value}}``,
``{"builtin": "action_so3"}``, ``{"builtin": "atiyah_trivial", ...}`` or
``{"custom": {"n": .., "m": .., "anchor": [[..]], "structure": {"g,a,b": ..}}}``.
Structure keys are 1-based with a < b.  Any entry may be a number or an
expression string in q1..qn and the ``parameters`` of the algebroid block.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .algebroid import (
    AlgebroidModel,
    State,
    atiyah_curvature,
    atiyah_trivial,
    lie_algebra,
    so3_action,
    so3_constants,
    tangent_bundle,
)
from .calculus import ScalarField
from .expr import Context, ExprError, parse, to_scalar_field
from .hamiltonian import ContactHamiltonianSystem
from .lagrangian import ContactLagrangianSystem

__all__ = ["ConfigError", "Scenario", "load_config", "build_scenario", "base_entry"]


class ConfigError(ValueError):
    """Invalid configuration; ``path`` locates the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass
class Scenario:
    name: str
    command: str
    model: AlgebroidModel
    side: str
    field: ScalarField
    system: ContactLagrangianSystem | ContactHamiltonianSystem
    state0: State | None
    integrator: dict
    checks: list[dict]
    sampling: dict
    seed: int
    legendre: dict = field(default_factory=dict)
    hj: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)


def load_config(path: str | Path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError("<file>", f"cannot read {path}: {err.strerror}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError("<file>", f"invalid JSON at line {err.lineno} column {err.colno}: {err.msg}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("<root>", "expected a JSON object")
    return cfg


# -- small typed accessors ---------------------------------------------------


def _get(d: dict, key: str, path: str, kind=None, default: Any = ...):
    if key not in d:
        if default is ...:
            raise ConfigError(f"{path}.{key}" if path else key, "missing required field")
        return default
    value = d[key]
    if kind is not None and not _is_kind(value, kind):
        raise ConfigError(f"{path}.{key}" if path else key, f"expected {_kind_name(kind)}, got {type(value).__name__}")
    return value


def _is_kind(value, kind) -> bool:
    if kind is float:
        return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)
    if kind is int:
        return isinstance(value, int) and not isinstance(value, bool)
    return isinstance(value, kind)


def _kind_name(kind) -> str:
    return {float: "a finite number", int: "an integer", str: "a string", dict: "an object", list: "an array"}.get(
        kind, str(kind)
    )


def _vector(value, length: int, path: str) -> np.ndarray:
    if not isinstance(value, list) or not all(_is_kind(v, float) for v in value):
        raise ConfigError(path, "expected an array of numbers")
    if len(value) != length:
        raise ConfigError(path, f"expected {length} values, got {len(value)}")
    return np.array(value, dtype=float)


def _parameters(d: dict, path: str) -> dict[str, float]:
    params = _get(d, "parameters", path, dict, {})
    for k, v in params.items():
        if not _is_kind(v, float):
            raise ConfigError(f"{path}.parameters.{k}", "expected a finite number")
    return {k: float(v) for k, v in params.items()}


def _expr_field(text, ctx: Context, params: dict, path: str) -> ScalarField:
    if not isinstance(text, str):
        raise ConfigError(path, "expected an expression string")
    try:
        return to_scalar_field(parse(text, ctx), ctx, params, label=text)
    except ExprError as err:
        raise ConfigError(path, str(err)) from None


def base_entry(value, n: int, params: dict, path: str):
    """A number, or a base expression in q that is folded to a float when constant."""
    if _is_kind(value, float):
        return float(value)
    ctx = Context(n, 0, "base", tuple(params))
    if not isinstance(value, str):
        raise ConfigError(path, "expected a number or an expression string")
    try:
        tree = parse(value, ctx)
    except ExprError as err:
        raise ConfigError(path, str(err)) from None
    fld = _expr_field(value, ctx, params, path)
    if not _mentions_q(tree):
        return float(fld(np.zeros(n)))
    return fld


def _mentions_q(tree) -> bool:
    from .expr import Bin, Call, Neg, Var

    if isinstance(tree, Var):
        return tree.name.startswith("q") and tree.name[1:].isdigit()
    if isinstance(tree, Neg):
        return _mentions_q(tree.operand)
    if isinstance(tree, Call):
        return _mentions_q(tree.arg)
    if isinstance(tree, Bin):
        return _mentions_q(tree.left) or _mentions_q(tree.right)
    return False


def _index_key(key: str, path: str, bounds: tuple[int, ...]) -> tuple[int, ...]:
    try:
        parts = tuple(int(x) for x in key.split(","))
    except ValueError:
        raise ConfigError(path, f"key {key!r} must be comma-separated 1-based integers") from None
    if len(parts) != len(bounds) or not all(1 <= p <= b for p, b in zip(parts, bounds)):
        raise ConfigError(path, f"key {key!r} out of range for dimensions {bounds}")
    return tuple(p - 1 for p in parts)


def _constants(block, m: int, path: str) -> np.ndarray:
    c = np.zeros((m, m, m))
    if not isinstance(block, dict):
        raise ConfigError(path, "expected an object mapping 'g,a,b' to numbers")
    for key, v in block.items():
        g, a, b = _index_key(key, path, (m, m, m))
        if a >= b:
            raise ConfigError(f"{path}.{key}", "lower indices must satisfy a < b")
        if not _is_kind(v, float):
            raise ConfigError(f"{path}.{key}", "expected a number")
        c[g, a, b], c[g, b, a] = float(v), -float(v)
    return c


# -- algebroids --------------------------------------------------------------


def build_algebroid(block: dict, path: str = "algebroid") -> AlgebroidModel:
    """Construct the model without validating the structure equations."""
    if not isinstance(block, dict):
        raise ConfigError(path, "expected an object")
    if "custom" in block:
        return _custom_algebroid(_get(block, "custom", path, dict), f"{path}.custom")
    name = _get(block, "builtin", path, str)
    if name == "tangent_bundle":
        n = _get(block, "n", path, int)
        if n < 1:
            raise ConfigError(f"{path}.n", "must be >= 1")
        return tangent_bundle(n)
    if name == "so3":
        return lie_algebra("so3", validate=False)
    if name == "lie_algebra":
        m = _get(block, "m", path, int)
        if m < 1:
            raise ConfigError(f"{path}.m", "must be >= 1")
        return lie_algebra(_constants(_get(block, "constants", path, dict), m, f"{path}.constants"), validate=False)
    if name == "action_so3":
        return so3_action()
    if name == "atiyah_trivial":
        return _atiyah(block, path)
    raise ConfigError(f"{path}.builtin", f"unknown builtin {name!r}")


def _atiyah(block: dict, path: str) -> AlgebroidModel:
    n = _get(block, "n", path, int)
    params = _parameters(block, path)
    algebra = _get(block, "lie_algebra", path, default="so3")
    if algebra == "so3":
        c = so3_constants()
    elif isinstance(algebra, dict):
        d = _get(algebra, "m", f"{path}.lie_algebra", int)
        c = _constants(_get(algebra, "constants", f"{path}.lie_algebra", dict), d, f"{path}.lie_algebra.constants")
    else:
        raise ConfigError(f"{path}.lie_algebra", "expected 'so3' or an object with m and constants")
    d = c.shape[0]
    conn = _get(block, "connection", path, list)
    if len(conn) != d or not all(isinstance(row, list) and len(row) == n for row in conn):
        raise ConfigError(f"{path}.connection", f"expected {d} rows of {n} entries")
    connection = [
        [base_entry(v, n, params, f"{path}.connection[{a}][{i}]") for i, v in enumerate(row)]
        for a, row in enumerate(conn)
    ]
    curvature = None
    if "curvature" in block:
        curv = _get(block, "curvature", path, dict)
        curvature = {}
        for key, v in curv.items():
            cc, i, j = _index_key(key, f"{path}.curvature", (d, n, n))
            if i >= j:
                raise ConfigError(f"{path}.curvature.{key}", "base indices must satisfy i < j")
            curvature[(cc, i, j)] = base_entry(v, n, params, f"{path}.curvature.{key}")
    else:
        curvature = atiyah_curvature(c, connection)
    return atiyah_trivial(c, connection, curvature, validate=False)


def _custom_algebroid(block: dict, path: str) -> AlgebroidModel:
    n = _get(block, "n", path, int)
    m = _get(block, "m", path, int)
    if n < 0 or m < 1:
        raise ConfigError(path, "need n >= 0 and m >= 1")
    params = _parameters(block, path)
    rows = _get(block, "anchor", path, list, [[0.0] * m for _ in range(n)])
    if len(rows) != n or not all(isinstance(r, list) and len(r) == m for r in rows):
        raise ConfigError(f"{path}.anchor", f"expected {n} rows of {m} entries")
    anchor = {}
    for i, row in enumerate(rows):
        for a, v in enumerate(row):
            e = base_entry(v, n, params, f"{path}.anchor[{i}][{a}]")
            if not (isinstance(e, float) and e == 0.0):
                anchor[(i, a)] = e
    structure = {}
    for key, v in _get(block, "structure", path, dict, {}).items():
        g, a, b = _index_key(key, f"{path}.structure", (m, m, m))
        if a >= b:
            raise ConfigError(f"{path}.structure.{key}", "lower indices must satisfy a < b")
        structure[(g, a, b)] = base_entry(v, n, params, f"{path}.structure.{key}")
    return AlgebroidModel(n, m, anchor, structure, label=block.get("label", "custom"))


# -- scenario ----------------------------------------------------------------

_COMMANDS = ("simulate", "check", "legendre-compare", "hj-check")


def build_scenario(cfg: dict, seed_override: int | None = None) -> Scenario:
    name = _get(cfg, "name", "", str, "scenario")
    command = _get(cfg, "command", "", str, "simulate")
    if command not in _COMMANDS:
        raise ConfigError("command", f"must be one of {_COMMANDS}")
    model = build_algebroid(_get(cfg, "algebroid", "", dict))
    sysd = _get(cfg, "system", "", dict)
    side = _get(sysd, "side", "system", str)
    if side not in ("lagrangian", "hamiltonian"):
        raise ConfigError("system.side", "must be 'lagrangian' or 'hamiltonian'")
    params = _parameters(sysd, "system")
    ctx = Context(model.n, model.m, side, tuple(params))
    fld = _expr_field(_get(sysd, "expression", "system"), ctx, params, "system.expression")
    if side == "lagrangian":
        system = ContactLagrangianSystem(model, fld, label=name)
    else:
        system = ContactHamiltonianSystem(model, fld, label=name)
    state0 = None
    if "initial_state" in cfg:
        st = _get(cfg, "initial_state", "", dict)
        q = _vector(_get(st, "q", "initial_state", default=[]), model.n, "initial_state.q")
        w = _vector(_get(st, "w", "initial_state"), model.m, "initial_state.w")
        s = float(_get(st, "s", "initial_state", float, 0.0))
        state0 = State(q, w, s, side)
    integ = dict(_get(cfg, "integrator", "", dict, {}))
    _check_integrator(integ, command == "simulate")
    if command == "simulate" and state0 is None:
        raise ConfigError("initial_state", "required by the simulate command")
    checks = _get(cfg, "checks", "", list, [])
    for k, chk in enumerate(checks):
        if not isinstance(chk, dict) or not isinstance(chk.get("name"), str):
            raise ConfigError(f"checks[{k}]", "expected an object with a string 'name'")
        if "tol" in chk and not _is_kind(chk["tol"], float):
            raise ConfigError(f"checks[{k}].tol", "expected a number")
    sampling = dict(_get(cfg, "sampling", "", dict, {}))
    sampling.setdefault("points", 50)
    sampling.setdefault("radius", 1.0)
    if not _is_kind(sampling["points"], int) or sampling["points"] < 1:
        raise ConfigError("sampling.points", "expected a positive integer")
    if not _is_kind(sampling["radius"], float) or sampling["radius"] <= 0:
        raise ConfigError("sampling.radius", "expected a positive number")
    seed = _get(cfg, "seed", "", int, 0) if seed_override is None else int(seed_override)
    legendre = dict(_get(cfg, "legendre", "", dict, {}))
    if command == "legendre-compare":
        if side != "lagrangian":
            raise ConfigError("system.side", "legendre-compare needs a Lagrangian system")
        if state0 is None:
            raise ConfigError("initial_state", "required by legendre-compare")
        for key in ("t_end", "h"):
            v = _get(legendre, key, "legendre", float)
            if v <= 0:
                raise ConfigError(f"legendre.{key}", "must be positive")
    hj = dict(_get(cfg, "hj", "", dict, {}))
    if command == "hj-check":
        if side != "hamiltonian":
            raise ConfigError("system.side", "hj-check needs a Hamiltonian system")
        _check_hj(hj, model)
    return Scenario(name, command, model, side, fld, system, state0, integ, checks, sampling, seed, legendre, hj, cfg)


def _check_integrator(integ: dict, required: bool) -> None:
    if not integ:
        if required:
            raise ConfigError("integrator", "required by the simulate command")
        return
    method = integ.setdefault("method", "rk4")
    if method not in ("rk4", "adaptive"):
        raise ConfigError("integrator.method", "must be 'rk4' or 'adaptive'")
    t_end = _get(integ, "t_end", "integrator", float)
    if t_end <= 0:
        raise ConfigError("integrator.t_end", "must be positive")
    key = "h" if method == "rk4" else "tol"
    if _get(integ, key, "integrator", float) <= 0:
        raise ConfigError(f"integrator.{key}", "must be positive")
    every = integ.setdefault("sample_every", 1)
    if not _is_kind(every, int) or every < 1:
        raise ConfigError("integrator.sample_every", "expected a positive integer")


def _check_hj(hj: dict, model: AlgebroidModel) -> None:
    params = _parameters(hj, "hj")
    hj["_f"] = _expr_field(_get(hj, "f", "hj"), Context(model.n, 0, "base", tuple(params)), params, "hj.f")
    which = hj.setdefault("which", "hamiltonian")
    if which not in ("hamiltonian", "evolution"):
        raise ConfigError("hj.which", "must be 'hamiltonian' or 'evolution'")
    grid = _get(hj, "grid", "hj", dict)
    lo = _vector(_get(grid, "lo", "hj.grid"), model.n, "hj.grid.lo")
    hi = _vector(_get(grid, "hi", "hj.grid"), model.n, "hj.grid.hi")
    pts = _get(grid, "points", "hj.grid", int)
    if pts < 1:
        raise ConfigError("hj.grid.points", "expected a positive integer")
    hj["_grid"] = (lo, hi, pts)
    hj["_q0"] = _vector(_get(hj, "q0", "hj"), model.n, "hj.q0")
    for key in ("t_end", "h"):
        if _get(hj, key, "hj", float) <= 0:
            raise ConfigError(f"hj.{key}", "must be positive")
    hj.setdefault("level", 0.0)
    hj.setdefault("tol", 1e-10)
    hj.setdefault("gap_tol", 1e-6)
