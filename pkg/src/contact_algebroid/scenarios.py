"""Builtin scenario catalog.

Every entry is a config document (see :mod:`contact_algebroid.config`); the
JSON files under ``configs/`` are written from this table by
``write_configs``.
"""

from __future__ import annotations

import copy
import json
import math
from pathlib import Path

from .config import Scenario, build_scenario

__all__ = ["CATALOG", "HJ_COEFFICIENT", "scenario", "config", "write_configs", "config_text"]

# positive root of 2a^2 + a - 1/2 = 0
HJ_COEFFICIENT = (-1.0 + math.sqrt(5.0)) / 4.0

_SO3_INERTIA = {"I1": 1.0, "I2": 2.0, "I3": 3.0}

_ATIYAH = {
    "builtin": "atiyah_trivial",
    "n": 2,
    "lie_algebra": "so3",
    "connection": [["q2", "0.5*sin(q1)"], ["0.3*q1*q2", 0.0], [0.2, "q1^2"]],
}

_SECTION_CHECKS = [
    {"name": "structure", "tol": 1e-10},
    {"name": "section", "tol": 1e-9},
    {"name": "dissipation", "tol": 1e-10},
    {"name": "fd", "tol": 1e-6},
    {"name": "hessian_symmetry", "tol": 1e-14},
]

CATALOG: dict[str, dict] = {
    "tb_damped_oscillator_lagrangian": {
        "command": "simulate",
        "algebroid": {"builtin": "tangent_bundle", "n": 1},
        "system": {"side": "lagrangian", "expression": "0.5*y1^2 - 0.5*q1^2 - lam*s", "parameters": {"lam": 0.5}},
        "initial_state": {"q": [1.0], "w": [0.0], "s": 0.0},
        "integrator": {"method": "rk4", "h": 0.002, "t_end": 5.0, "sample_every": 25},
        "checks": _SECTION_CHECKS + [{"name": "ds_residual", "tol": 1e-12}, {"name": "energy_dissipation", "tol": 1e-9}],
        "seed": 11,
    },
    "tb_damped_oscillator_hamiltonian": {
        "command": "simulate",
        "algebroid": {"builtin": "tangent_bundle", "n": 1},
        "system": {"side": "hamiltonian", "expression": "0.5*p1^2 + 0.5*q1^2 + lam*s", "parameters": {"lam": 0.5}},
        "initial_state": {"q": [1.0], "w": [0.0], "s": 0.0},
        "integrator": {"method": "rk4", "h": 0.002, "t_end": 5.0, "sample_every": 25},
        "checks": _SECTION_CHECKS + [{"name": "dissipation_trajectory", "tol": 1e-10}],
        "seed": 12,
    },
    "tb_damped_oscillator_adaptive": {
        "command": "simulate",
        "algebroid": {"builtin": "tangent_bundle", "n": 1},
        "system": {"side": "hamiltonian", "expression": "0.5*p1^2 + 0.5*q1^2 + lam*s", "parameters": {"lam": 0.5}},
        "initial_state": {"q": [1.0], "w": [0.0], "s": 0.0},
        "integrator": {"method": "adaptive", "tol": 1e-10, "t_end": 5.0},
        "checks": [{"name": "dissipation_trajectory", "tol": 1e-10}],
        "seed": 13,
    },
    "so3_euler_poincare_herglotz": {
        "command": "simulate",
        "algebroid": {"builtin": "so3"},
        "system": {
            "side": "lagrangian",
            "expression": "0.5*(I1*y1^2 + I2*y2^2 + I3*y3^2) + kappa*s",
            "parameters": {**_SO3_INERTIA, "kappa": 0.3},
        },
        "initial_state": {"w": [0.3, -0.7, 0.4], "s": 0.0},
        "integrator": {"method": "rk4", "h": 0.002, "t_end": 5.0, "sample_every": 25},
        "checks": _SECTION_CHECKS + [{"name": "ds_residual", "tol": 1e-12}, {"name": "energy_dissipation", "tol": 1e-9}],
        "seed": 21,
    },
    "so3_lie_poisson_jacobi": {
        "command": "simulate",
        "algebroid": {"builtin": "so3"},
        "system": {
            "side": "hamiltonian",
            "expression": "0.5*(p1^2/I1 + p2^2/I2 + p3^2/I3) + lam*s",
            "parameters": {**_SO3_INERTIA, "lam": 0.3},
        },
        "initial_state": {"w": [0.3, -0.7, 0.4], "s": 0.0},
        "integrator": {"method": "rk4", "h": 0.002, "t_end": 5.0, "sample_every": 25},
        "checks": _SECTION_CHECKS + [{"name": "dissipation_trajectory", "tol": 1e-10}],
        "seed": 22,
    },
    "so3_free_top": {
        "command": "simulate",
        "algebroid": {"builtin": "so3"},
        "system": {
            "side": "hamiltonian",
            "expression": "0.5*(p1^2/I1 + p2^2/I2 + p3^2/I3)",
            "parameters": dict(_SO3_INERTIA),
        },
        "initial_state": {"w": [0.3, -0.7, 0.4], "s": 0.0},
        "integrator": {"method": "rk4", "h": 0.001, "t_end": 10.0, "sample_every": 100},
        "checks": _SECTION_CHECKS + [{"name": "drift", "tol": 1e-8}, {"name": "dissipation_trajectory", "tol": 1e-10}],
        "seed": 23,
    },
    "action_so3_lagrangian": {
        "command": "check",
        "algebroid": {"builtin": "action_so3"},
        "system": {
            "side": "lagrangian",
            "expression": "0.5*(y1^2 + 2*y2^2 + 3*y3^2) + 0.1*q1*y2 - 0.5*(q1^2 + 2*q2^2) - 0.2*s - 0.05*s^2*y1",
        },
        "initial_state": {"q": [1.0, 0.2, -0.3], "w": [0.1, 0.4, -0.2], "s": 0.0},
        "integrator": {"method": "rk4", "h": 0.002, "t_end": 2.0, "sample_every": 25},
        "checks": _SECTION_CHECKS + [{"name": "energy_dissipation", "tol": 1e-9}],
        "seed": 31,
    },
    "action_so3_hamiltonian": {
        "command": "check",
        "algebroid": {"builtin": "action_so3"},
        "system": {
            "side": "hamiltonian",
            "expression": "0.5*(p1^2 + p2^2/2 + p3^2/3) + 0.5*(q1^2 + 2*q2^2) + q3*p1*s + 0.2*s",
        },
        "checks": _SECTION_CHECKS,
        "seed": 32,
    },
    "atiyah_lagrange_poincare_herglotz": {
        "command": "simulate",
        "algebroid": copy.deepcopy(_ATIYAH),
        "system": {
            "side": "lagrangian",
            "expression": "0.5*(y1^2 + y2^2) + 0.5*(I1*y3^2 + I2*y4^2 + I3*y5^2) - 0.5*(q1^2 + q2^2) - lam*s",
            "parameters": {**_SO3_INERTIA, "lam": 0.2},
        },
        "initial_state": {"q": [0.3, -0.2], "w": [0.1, 0.2, 0.3, -0.1, 0.2], "s": 0.0},
        "integrator": {"method": "rk4", "h": 0.002, "t_end": 2.0, "sample_every": 25},
        "checks": _SECTION_CHECKS + [{"name": "ds_residual", "tol": 1e-12}, {"name": "energy_dissipation", "tol": 1e-9}],
        "seed": 41,
    },
    "atiyah_hamilton_poincare_herglotz": {
        "command": "check",
        "algebroid": copy.deepcopy(_ATIYAH),
        "system": {
            "side": "hamiltonian",
            "expression": "0.5*(p1^2 + p2^2) + 0.5*(p3^2/I1 + p4^2/I2 + p5^2/I3) + 0.5*(q1^2 + q2^2) + lam*s",
            "parameters": {**_SO3_INERTIA, "lam": 0.2},
        },
        "checks": _SECTION_CHECKS,
        "seed": 42,
    },
    "tb2_nonlinear_lagrangian": {
        "command": "simulate",
        "algebroid": {"builtin": "tangent_bundle", "n": 2},
        "system": {
            "side": "lagrangian",
            "expression": "0.5*(1 + 0.1*q1^2)*y1^2 + 0.5*y2^2 + 0.2*y1*y2 + 0.25*y2^4 - cos(q2) - 0.3*s*y1 - 0.05*s^2",
        },
        "initial_state": {"q": [0.4, -0.3], "w": [0.2, 0.5], "s": 0.0},
        "integrator": {"method": "rk4", "h": 0.002, "t_end": 3.0, "sample_every": 25},
        "checks": _SECTION_CHECKS + [{"name": "ds_residual", "tol": 1e-12}, {"name": "energy_dissipation", "tol": 1e-9}],
        "seed": 51,
    },
    "tb2_nonlinear_hamiltonian": {
        "command": "simulate",
        "algebroid": {"builtin": "tangent_bundle", "n": 2},
        "system": {
            "side": "hamiltonian",
            "expression": "0.5*p1^2/(1 + 0.1*q1^2) + 0.5*p2^2 + cos(q2) + 0.2*s*p1 + 0.1*s^2 + exp(0.1*q1)",
        },
        "initial_state": {"q": [0.4, -0.3], "w": [0.2, 0.5], "s": 0.0},
        "integrator": {"method": "rk4", "h": 0.002, "t_end": 3.0, "sample_every": 25},
        "checks": _SECTION_CHECKS + [{"name": "dissipation_trajectory", "tol": 1e-10}],
        "seed": 52,
    },
    "legendre_tb_damped_oscillator": {
        "command": "legendre-compare",
        "algebroid": {"builtin": "tangent_bundle", "n": 1},
        "system": {"side": "lagrangian", "expression": "0.5*y1^2 - 0.5*q1^2 - 0.5*s"},
        "initial_state": {"q": [1.0], "w": [0.2], "s": 0.0},
        "legendre": {"t_end": 5.0, "h": 0.001, "tol": 1e-6, "sample_every": 50},
        "checks": _SECTION_CHECKS,
        "seed": 61,
    },
    "legendre_tb_quartic": {
        "command": "legendre-compare",
        "algebroid": {"builtin": "tangent_bundle", "n": 1},
        "system": {"side": "lagrangian", "expression": "0.25*y1^4 + 0.5*y1^2 - 0.5*q1^2 - 0.5*s"},
        "initial_state": {"q": [1.0], "w": [0.5], "s": 0.0},
        "legendre": {"t_end": 2.0, "h": 0.01, "tol": 1e-6, "sample_every": 5},
        "checks": _SECTION_CHECKS,
        "seed": 62,
    },
    "hj_constructed": {
        "command": "hj-check",
        "algebroid": {"builtin": "tangent_bundle", "n": 1},
        "system": {"side": "hamiltonian", "expression": "0.5*p1^2 - 0.5*q1^2 + lam*s", "parameters": {"lam": 1.0}},
        "hj": {
            "f": "a*q1^2",
            "parameters": {"a": HJ_COEFFICIENT},
            "grid": {"lo": [-2.0], "hi": [2.0], "points": 100},
            "q0": [0.5],
            "t_end": 3.0,
            "h": 0.001,
            "sample_every": 50,
            "tol": 1e-10,
            "gap_tol": 1e-6,
        },
        "checks": _SECTION_CHECKS,
        "seed": 71,
    },
    "hj_negative_control": {
        "command": "hj-check",
        "algebroid": {"builtin": "tangent_bundle", "n": 1},
        "system": {"side": "hamiltonian", "expression": "0.5*p1^2 - 0.5*q1^2 + lam*s", "parameters": {"lam": 1.0}},
        "hj": {
            "f": "q1",
            "grid": {"lo": [-2.0], "hi": [2.0], "points": 100},
            "q0": [0.5],
            "t_end": 1.0,
            "h": 0.001,
            "sample_every": 50,
            "tol": 1e-10,
            "gap_tol": 1e-6,
        },
        "checks": _SECTION_CHECKS,
        "seed": 72,
    },
}

for _name, _cfg in CATALOG.items():
    _cfg["name"] = _name


def config(name: str) -> dict:
    """A deep copy of the catalog entry ``name``."""
    try:
        return copy.deepcopy(CATALOG[name])
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; known: {', '.join(sorted(CATALOG))}") from None


def scenario(name: str, seed: int | None = None) -> Scenario:
    return build_scenario(config(name), seed)


def config_text(name: str) -> str:
    cfg = config(name)
    ordered = {"name": cfg.pop("name"), "command": cfg.pop("command"), **cfg}
    return json.dumps(ordered, indent=2) + "\n"


def write_configs(directory: str | Path) -> list[Path]:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name in CATALOG:
        path = out / f"{name}.json"
        path.write_text(config_text(name), encoding="utf-8", newline="\n")
        paths.append(path)
    return paths
