"""Fixed-step and step-doubling RK4 integration of state fields."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .algebroid import State, StateDerivative

__all__ = ["Trajectory", "integrate", "adaptive_integrate", "rk4_step"]

Field = Callable[[State], StateDerivative]
Diagnostic = Callable[[State], float]


@dataclass
class Trajectory:
    """Sampled solution with per-sample diagnostics.

    On failure the trajectory is truncated at the last good sample and
    ``failed``/``failure_time``/``message`` describe what happened.
    """

    times: np.ndarray
    states: list[State]
    diagnostics: dict[str, np.ndarray] = field(default_factory=dict)
    failed: bool = False
    failure_time: float | None = None
    message: str = ""
    steps: int = 0
    rejected: int = 0

    def array(self) -> np.ndarray:
        """Samples as rows (q, w, s)."""
        return np.array([s.pack() for s in self.states])

    @property
    def final(self) -> State:
        return self.states[-1]


def rk4_step(f: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float) -> np.ndarray:
    k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _packed(fld: Field, n: int, m: int, side: str) -> Callable[[np.ndarray], np.ndarray]:
    def f(x: np.ndarray) -> np.ndarray:
        out = fld(State.unpack(x, n, m, side)).pack()
        if not np.all(np.isfinite(out)):
            raise FloatingPointError("non-finite field value")
        return out

    return f


class _Recorder:
    def __init__(self, state0: State, diagnostics: Mapping[str, Diagnostic] | None):
        self.n, self.m, self.side = state0.q.size, state0.w.size, state0.side
        self.diag = dict(diagnostics or {})
        self.times: list[float] = []
        self.states: list[State] = []
        self.values: dict[str, list[float]] = {k: [] for k in self.diag}

    def add(self, t: float, x: np.ndarray) -> None:
        st = State.unpack(x, self.n, self.m, self.side)
        self.times.append(t)
        self.states.append(st)
        for k, fn in self.diag.items():
            self.values[k].append(float(fn(st)))

    def build(self, **kw) -> Trajectory:
        return Trajectory(
            np.array(self.times),
            self.states,
            {k: np.array(v) for k, v in self.values.items()},
            **kw,
        )


def integrate(
    fld: Field,
    state0: State,
    t_end: float,
    h: float,
    diagnostics: Mapping[str, Diagnostic] | None = None,
    sample_every: int = 1,
) -> Trajectory:
    """Classical RK4 with fixed step ``h``; the last step is shortened to hit ``t_end``.

    Step k ends at time k*h (not an accumulated sum) so sample times are
    reproducible.  Arithmetic failures (domain errors, singular Hessians,
    non-finite values) stop the run and are reported on the trajectory.
    """
    if h <= 0 or t_end <= 0:
        raise ValueError("need h > 0 and t_end > 0")
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    rec = _Recorder(state0, diagnostics)
    f = _packed(fld, rec.n, rec.m, rec.side)
    ratio = t_end / h
    steps = max(1, int(round(ratio)) if abs(ratio - round(ratio)) <= 1e-9 * ratio else math.ceil(ratio))
    x = state0.pack()
    rec.add(0.0, x)
    t = 0.0
    for k in range(1, steps + 1):
        t_next = t_end if k == steps else k * h
        try:
            x_new = rk4_step(f, x, t_next - t)
            if not np.all(np.isfinite(x_new)):
                raise FloatingPointError("non-finite state")
        except ArithmeticError as err:
            if rec.times[-1] != t:
                rec.add(t, x)
            return rec.build(failed=True, failure_time=t, message=f"{type(err).__name__}: {err}", steps=k - 1)
        x, t = x_new, t_next
        if k % sample_every == 0 or k == steps:
            rec.add(t, x)
    return rec.build(steps=steps)


def adaptive_integrate(
    fld: Field,
    state0: State,
    t_end: float,
    tol: float,
    diagnostics: Mapping[str, Diagnostic] | None = None,
    h0: float | None = None,
    h_min: float | None = None,
    h_max: float | None = None,
) -> Trajectory:
    """RK4 with step-doubling error control.

    Each step compares one step of size h with two of size h/2; the
    difference divided by 15 estimates the local error of the two-step
    result, which is accepted when the estimate (max-norm) is at most ``tol``.
    Every accepted step is sampled.
    """
    if tol <= 0 or t_end <= 0:
        raise ValueError("need tol > 0 and t_end > 0")
    h_max = t_end if h_max is None else h_max
    h = min(h_max, t_end if h0 is None else h0)
    h_min = 1e-12 * t_end if h_min is None else h_min
    rec = _Recorder(state0, diagnostics)
    f = _packed(fld, rec.n, rec.m, rec.side)
    x = state0.pack()
    rec.add(0.0, x)
    t, accepted, rejected = 0.0, 0, 0
    while t < t_end:
        h = min(h, t_end - t)
        try:
            full = rk4_step(f, x, h)
            half = rk4_step(f, rk4_step(f, x, 0.5 * h), 0.5 * h)
            err = float(np.max(np.abs(half - full))) / 15.0
            if not (np.all(np.isfinite(half)) and math.isfinite(err)):
                raise FloatingPointError("non-finite state")
        except ArithmeticError as err_:
            return rec.build(failed=True, failure_time=t, message=f"{type(err_).__name__}: {err_}",
                             steps=accepted, rejected=rejected)
        if err <= tol:
            t = t_end if t_end - t - h <= 1e-15 * t_end else t + h
            x = half
            accepted += 1
            rec.add(t, x)
        else:
            rejected += 1
        factor = 4.0 if err == 0.0 else min(4.0, max(0.1, 0.9 * (tol / err) ** 0.2))
        h = min(h_max, h * factor)
        if h < h_min and t < t_end:
            return rec.build(failed=True, failure_time=t, message=f"step size underflow (h = {h:.3e})",
                             steps=accepted, rejected=rejected)
    return rec.build(steps=accepted, rejected=rejected)
