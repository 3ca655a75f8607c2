"""Command-line interface: simulate, check, legendre-compare, hj-check.

Exit codes: 0 ok, 1 a check failed, 2 config or parse error, 3 numerical
failure (singular Hessian, domain error, blow-up, Newton failure).
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import sys
import warnings
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .algebroid import State, StructureError
from .calculus import fd_crosscheck
from .config import ConfigError, Scenario, build_scenario, load_config
from .expr import ExprError
from .hamilton_jacobi import jet_hj_residuals, projected_dynamics_check
from .hamiltonian import ContactHamiltonianSystem
from .integrate import Trajectory, adaptive_integrate, integrate
from .lagrangian import ContactLagrangianSystem
from .legendre import equivalence_check

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

DEFAULT_TOLS = {
    "structure": 1e-10,
    "section": 1e-9,
    "dissipation": 1e-10,
    "fd": 1e-6,
    "hessian_symmetry": 1e-14,
    "ds_residual": 1e-12,
    "energy_dissipation": 1e-9,
    "dissipation_trajectory": 1e-10,
    "drift": 1e-8,
}

SAMPLED_CHECKS = ("structure", "section", "dissipation", "fd", "hessian_symmetry")
TRAJECTORY_CHECKS = ("ds_residual", "energy_dissipation", "dissipation_trajectory", "drift")


class NumericalFailure(ArithmeticError):
    pass


def fmt(x: float) -> str:
    return "%.17g" % x


def write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n")


class Reporter:
    def __init__(self, quiet: bool):
        self.quiet = quiet

    def __call__(self, msg: str = "") -> None:
        if not self.quiet:
            print(msg)


# -- sampled states ------------------------------------------------------------


def random_states(sc: Scenario, count: int | None = None) -> list[State]:
    rng = np.random.default_rng(sc.seed)
    r = float(sc.sampling["radius"])
    n, m = sc.model.n, sc.model.m
    out = []
    for _ in range(count or sc.sampling["points"]):
        q = rng.uniform(-r, r, n)
        w = rng.uniform(-r, r, m)
        s = float(rng.uniform(-r, r))
        out.append(State(q, w, s, sc.side))
    return out


def random_points(sc: Scenario) -> list[np.ndarray]:
    rng = np.random.default_rng(sc.seed)
    r = float(sc.sampling["radius"])
    return [rng.uniform(-r, r, sc.model.n) for _ in range(sc.sampling["points"])]


# -- diagnostics -----------------------------------------------------------------


def lagrangian_energy_residual(sys_: ContactLagrangianSystem, st: State) -> float:
    """grad E_L . F + rho(R_L)(E_L) E_L along the Herglotz field."""
    d = sys_.derivatives(st)
    f = sys_.herglotz_field(st)
    y = st.w
    e = float(y @ d.grad_w - d.value)
    e_q = d.mixed_qw @ y - d.grad_q
    e_y = d.hess_ww @ y
    e_s = float(y @ d.mixed_sw - d.d_s)
    rate = float(e_q @ f.dq + e_y @ f.dw + e_s * f.ds)
    return rate + sys_.reeb_coeffs(st)[2] * e


def diagnostics_for(sc: Scenario) -> dict[str, Callable[[State], float]]:
    sys_ = sc.system
    if isinstance(sys_, ContactLagrangianSystem):
        return {
            "E": sys_.energy,
            "ds_residual": lambda st: sys_.herglotz_field(st).ds - sys_.L(st.q, st.w, st.s),
            "energy_dissipation_residual": lambda st: lagrangian_energy_residual(sys_, st),
        }
    return {"H": sys_.value, "dissipation_residual": sys_.dissipation_residual}


def sampled_check(sc: Scenario, name: str) -> list[tuple[str, float]]:
    """Rows (label, max residual) for a check evaluated at seeded random points."""
    sys_ = sc.system
    if name == "structure":
        jac_max = anc_max = 0.0
        for q in random_points(sc):
            jac, anc = sc.model.structure_residuals(q)
            jac_max = max(jac_max, float(np.max(np.abs(jac), initial=0.0)))
            anc_max = max(anc_max, float(np.max(np.abs(anc), initial=0.0)))
        return [("structure_jacobi", jac_max), ("structure_anchor", anc_max)]
    states = random_states(sc)
    if name == "section":
        return [("section", max(sys_.verify(st).max for st in states))]
    if name == "dissipation":
        if isinstance(sys_, ContactHamiltonianSystem):
            vals = [abs(sys_.dissipation_residual(st)) / (1.0 + abs(sys_.value(st))) for st in states]
        else:
            vals = [abs(lagrangian_energy_residual(sys_, st)) / (1.0 + abs(sys_.energy(st))) for st in states]
        return [("dissipation", max(vals))]
    if name == "fd":
        return [("fd", max(fd_crosscheck(sc.field, st.q, st.w, st.s) for st in states))]
    if name == "hessian_symmetry":
        worst = 0.0
        for st in states:
            hess = sc.field.bundle(st.q, st.w, st.s).hess
            worst = max(worst, float(np.max(np.abs(hess - hess.T))))
        return [("hessian_symmetry", worst)]
    raise ValueError(name)


def _configured(sc: Scenario, names: Sequence[str], defaults: bool) -> list[tuple[str, float]]:
    chosen = [(c["name"], float(c.get("tol", DEFAULT_TOLS.get(c["name"], 0.0)))) for c in sc.checks if c["name"] in names]
    if not chosen and defaults:
        chosen = [(n, DEFAULT_TOLS[n]) for n in names]
    return chosen


# -- commands --------------------------------------------------------------------


def _validate_structure(sc: Scenario) -> None:
    sc.model.validate(points=min(20, sc.sampling["points"]), seed=sc.seed, radius=sc.sampling["radius"])


def cmd_simulate(sc: Scenario, out: Path, say: Reporter) -> int:
    _validate_structure(sc)
    sys_ = sc.system
    fld = sys_.herglotz_field if isinstance(sys_, ContactLagrangianSystem) else sys_.hamilton_field
    diag = diagnostics_for(sc)
    integ = sc.integrator
    if integ["method"] == "rk4":
        traj = integrate(fld, sc.state0, integ["t_end"], integ["h"], diag, integ.get("sample_every", 1))
    else:
        traj = adaptive_integrate(fld, sc.state0, integ["t_end"], integ["tol"], diag)
    letter = "y" if sc.side == "lagrangian" else "p"
    header = ["t"] + [f"q{i + 1}" for i in range(sc.model.n)] + [f"{letter}{a + 1}" for a in range(sc.model.m)] + ["s"]
    header += list(diag)
    rows = (
        [t, *st.pack(), *(traj.diagnostics[k][i] for k in diag)]
        for i, (t, st) in enumerate(zip(traj.times, traj.states))
    )
    write_csv(out / "trajectory.csv", header, rows)
    results = _trajectory_checks(sc, traj)
    summary = {
        "scenario": sc.name,
        "samples": len(traj.times),
        "steps": traj.steps,
        "t_final": float(traj.times[-1]),
        "failed": traj.failed,
        "failure_time": traj.failure_time,
        "message": traj.message,
        "max_abs": {k: float(np.max(np.abs(v), initial=0.0)) for k, v in traj.diagnostics.items() if k not in ("E", "H")},
        "checks": [{"name": n, "value": v, "tol": t, "pass": ok} for n, v, t, ok in results],
    }
    write_json(out / "summary.json", summary)
    say(f"simulate {sc.name}: {len(traj.times)} samples to t={fmt(traj.times[-1])}")
    for n, v, t, ok in results:
        say(f"  {n:<26} {v:.3e}  tol {t:.1e}  {'PASS' if ok else 'FAIL'}")
    if traj.failed:
        say(f"  numerical failure at t={fmt(traj.failure_time)}: {traj.message}")
        return EXIT_NUMERIC
    return EXIT_OK if all(r[3] for r in results) else EXIT_CHECK


def _trajectory_checks(sc: Scenario, traj: Trajectory) -> list[tuple[str, float, float, bool]]:
    out = []
    d = traj.diagnostics
    energy = d.get("E", d.get("H"))
    for name, tol in _configured(sc, TRAJECTORY_CHECKS, defaults=False):
        if name == "ds_residual" and "ds_residual" in d:
            v = float(np.max(np.abs(d["ds_residual"])))
        elif name == "energy_dissipation" and "energy_dissipation_residual" in d:
            v = float(np.max(np.abs(d["energy_dissipation_residual"]) / (1.0 + np.abs(energy))))
        elif name == "dissipation_trajectory" and "dissipation_residual" in d:
            v = float(np.max(np.abs(d["dissipation_residual"]) / (1.0 + np.abs(energy))))
        elif name == "drift":
            v = float(np.max(np.abs(energy - energy[0])))
        else:
            continue
        out.append((name, v, tol, v < tol))
    return out


def cmd_check(sc: Scenario, out: Path, say: Reporter) -> int:
    rows = []
    for name, tol in _configured(sc, SAMPLED_CHECKS, defaults=True):
        for label, value in sampled_check(sc, name):
            rows.append((label, value, tol, value < tol))
    write_csv(out / "check_report.csv", ["check", "max_residual", "tol", "status"],
              ([lbl, v, t, "pass" if ok else "fail"] for lbl, v, t, ok in rows))
    say(f"check {sc.name} ({sc.model.label}, n={sc.model.n}, m={sc.model.m}, seed={sc.seed})")
    for lbl, v, t, ok in rows:
        say(f"  {lbl:<20} {v:.3e}  tol {t:.1e}  {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if all(r[3] for r in rows) else EXIT_CHECK


def cmd_legendre_compare(sc: Scenario, out: Path, say: Reporter) -> int:
    _validate_structure(sc)
    lg = sc.legendre
    res = equivalence_check(sc.system, sc.state0, lg["t_end"], lg["h"], int(lg.get("sample_every", 1)))
    tol = float(lg.get("tol", 1e-6))
    write_csv(out / "legendre_gap.csv", ["t", "gap"], zip(res.times, res.gaps))
    ok = res.sup_gap < tol and not res.failed
    write_json(out / "summary.json", {"scenario": sc.name, "sup_gap": res.sup_gap, "tol": tol, "pass": ok,
                                      "failed": res.failed, "failure_time": res.failure_time})
    say(f"legendre-compare {sc.name}: sup_gap {res.sup_gap:.3e}  tol {tol:.1e}  {'PASS' if ok else 'FAIL'}")
    if res.failed:
        say(f"  numerical failure at t={fmt(res.failure_time)}")
        return EXIT_NUMERIC
    return EXIT_OK if ok else EXIT_CHECK


def _grid(lo: np.ndarray, hi: np.ndarray, points: int) -> list[np.ndarray]:
    axes = [np.linspace(a, b, points) for a, b in zip(lo, hi)]
    return [np.array(p) for p in itertools.product(*axes)]


def cmd_hj_check(sc: Scenario, out: Path, say: Reporter) -> int:
    _validate_structure(sc)
    hj = sc.hj
    f, which, level = hj["_f"], hj["which"], float(hj["level"])
    n, m = sc.model.n, sc.model.m
    header = [f"q{i + 1}" for i in range(n)] + [f"dE{a + 1}" for a in range(m)]
    if which == "hamiltonian":
        header.append("H_gamma")
    rows, grid_max = [], 0.0
    for q in _grid(*hj["_grid"]):
        r = jet_hj_residuals(sc.system, f, q, which, level)
        rows.append([*q, *r.d_e] + ([r.value] if which == "hamiltonian" else []))
        grid_max = max(grid_max, r.max)
    write_csv(out / "hj_residuals.csv", header, rows)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        proj = projected_dynamics_check(sc.system, f, hj["_q0"], hj["t_end"], hj["h"], which, level,
                                        int(hj.get("sample_every", 1)))
    write_csv(out / "hj_gap.csv", ["t", "gap"], zip(proj.times, proj.gaps))
    tol, gap_tol = float(hj["tol"]), float(hj["gap_tol"])
    ok_grid, ok_gap = grid_max < tol, proj.sup_gap < gap_tol
    failed = proj.base.failed or proj.full.failed
    write_json(out / "summary.json", {
        "scenario": sc.name, "which": which, "level": level,
        "grid_max_residual": grid_max, "tol": tol, "sup_gap": proj.sup_gap, "gap_tol": gap_tol,
        "pass": ok_grid and ok_gap and not failed, "failed": failed,
    })
    say(f"hj-check {sc.name} ({which})")
    say(f"  grid residual  {grid_max:.3e}  tol {tol:.1e}  {'PASS' if ok_grid else 'FAIL'}")
    say(f"  projected gap  {proj.sup_gap:.3e}  tol {gap_tol:.1e}  {'PASS' if ok_gap else 'FAIL'}")
    for w in caught:
        say(f"  warning: {w.message}")
    if failed:
        return EXIT_NUMERIC
    return EXIT_OK if ok_grid and ok_gap else EXIT_CHECK


COMMANDS = {
    "simulate": cmd_simulate,
    "check": cmd_check,
    "legendre-compare": cmd_legendre_compare,
    "hj-check": cmd_hj_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="contact-algebroid",
        description="Contact Lagrangian and Hamiltonian mechanics on Lie algebroids.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="scenario JSON file")
        p.add_argument("--out", default=".", help="output directory (created if missing)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--quiet", action="store_true", help="suppress the console summary")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    say = Reporter(args.quiet)
    try:
        sc = build_scenario(load_config(args.config), args.seed)
    except (ConfigError, ExprError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        return COMMANDS[args.command](sc, out, say)
    except StructureError as err:
        print(f"structure check failed: {err}", file=sys.stderr)
        return EXIT_CHECK
    except ArithmeticError as err:
        print(f"numerical failure: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
