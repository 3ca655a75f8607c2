"""Legendre transform, induced Hamiltonian and trajectory equivalence."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebroid import State
from .calculus import DerivativeBundle, ScalarField, as_vector
from .hamiltonian import ContactHamiltonianSystem
from .integrate import Trajectory, integrate
from .lagrangian import ContactLagrangianSystem, invert_regular

__all__ = [
    "LegendreError",
    "legendre",
    "legendre_inverse",
    "InducedHamiltonian",
    "induced_hamiltonian",
    "EquivalenceResult",
    "equivalence_check",
]

NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 50
NEWTON_MAX_HALVINGS = 30


class LegendreError(ArithmeticError):
    """Newton inversion of the fiber derivative failed."""


def legendre(sys: ContactLagrangianSystem, state: State) -> State:
    """(q, y, s) -> (q, dL/dy, s)."""
    b = sys.L.bundle(state.q, state.w, state.s, second=False)
    return State(state.q.copy(), b.grad_w.copy(), state.s, "hamiltonian")


def _solve_fiber(L: ScalarField, q, p, s, guess, second: bool = True):
    """Newton iteration for dL/dy(q, y, s) = p.

    Returns (y, bundle at y, inverse of W at y).  With ``second=False`` the
    bundle at the root is first-order only and the inverse is None.
    """
    p = as_vector(p)
    y = p.copy() if guess is None else as_vector(guess).copy()
    d = L.bundle(q, y, s, second=True)
    res = d.grad_w - p
    norm = float(np.max(np.abs(res), initial=0.0))
    for it in range(NEWTON_MAX_ITER + 1):
        if norm < NEWTON_TOL:
            if not second:
                return y, d, None
            if d.hess is None:
                d = L.bundle(q, y, s, second=True)
            return y, d, invert_regular(d.hess_ww)
        if it == NEWTON_MAX_ITER:
            break
        if d.hess is None:
            d = L.bundle(q, y, s, second=True)
        step = -invert_regular(d.hess_ww) @ res
        lam = 1.0
        for _h in range(NEWTON_MAX_HALVINGS + 1):
            y_try = y + lam * step
            d_try = L.bundle(q, y_try, s, second=False)
            res_try = d_try.grad_w - p
            norm_try = float(np.max(np.abs(res_try), initial=0.0))
            if norm_try < norm:
                break
            lam *= 0.5
        else:
            raise LegendreError(f"no decrease after {NEWTON_MAX_HALVINGS} step halvings (residual {norm:.3e})")
        y, d, res, norm = y_try, d_try, res_try, norm_try
    raise LegendreError(f"Newton did not converge in {NEWTON_MAX_ITER} iterations (residual {norm:.3e})")


def legendre_inverse(sys: ContactLagrangianSystem, h_state: State, guess=None) -> State:
    """Lagrangian state whose Legendre image is ``h_state``; default guess y = p."""
    if h_state.side != "hamiltonian":
        raise ValueError("expected a Hamiltonian-side state")
    y, _, _ = _solve_fiber(sys.L, h_state.q, h_state.w, h_state.s, guess)
    return State(h_state.q.copy(), y, h_state.s, "lagrangian")


class InducedHamiltonian(ScalarField):
    """H(q, p, s) = E_L at the Legendre preimage of (q, p, s).

    Derivatives come from the implicit-function rule at the converged point,
    reusing the inverse of W computed for the regularity check:
    dH/dp = y, dH/dq = -dL/dq, dH/ds = -dL/ds, and
    dy/dp = W^-1, dy/dq = -W^-1 L_yq, dy/ds = -W^-1 L_ys.
    """

    def __init__(self, sys: ContactLagrangianSystem):
        self.sys = sys
        n, m = sys.model.n, sys.model.m
        super().__init__(self._no_jets, n, m, label=f"E_L o Leg^-1 [{sys.L.label}]")

    @staticmethod
    def _no_jets(q, w, s):
        raise TypeError("the induced Hamiltonian is evaluated through bundle(), not jets")

    def __call__(self, q, w=(), s: float = 0.0) -> float:
        return self.bundle(q, w, s, second=False).value

    def jet(self, q, w=(), s: float = 0.0, second: bool = True):
        raise TypeError("the induced Hamiltonian does not support jet evaluation")

    def bundle(self, q, w=(), s: float = 0.0, second: bool = True) -> DerivativeBundle:
        self._check(q, w)
        q, p, s = as_vector(q), as_vector(w), float(s)
        y, d, w_inv = _solve_fiber(self.sys.L, q, p, s, None, second)
        n, m = self.n, self.m
        value = float(y @ p - d.value)
        grad_q, grad_p, d_s = -d.grad_q, y.copy(), -d.d_s
        hess = None
        if second:
            k = n + m + 1
            lqy = d.mixed_qw  # n x m
            lsy = d.mixed_sw  # m
            full = d.hess
            lqq = full[:n, :n]
            lqs = full[:n, n + m]
            lss = full[n + m, n + m]
            y_p = w_inv
            y_q = -w_inv @ lqy.T
            y_s = -w_inv @ lsy
            hess = np.zeros((k, k))
            hess[:n, :n] = -(lqq + lqy @ y_q)
            hess[:n, n : n + m] = y_q.T
            hess[n : n + m, :n] = y_q
            hess[:n, n + m] = hess[n + m, :n] = -(lqs + lqy @ y_s)
            hess[n : n + m, n : n + m] = 0.5 * (y_p + y_p.T)
            hess[n : n + m, n + m] = hess[n + m, n : n + m] = y_s
            hess[n + m, n + m] = -(lss + lsy @ y_s)
        return DerivativeBundle(value, grad_q, grad_p, float(d_s), hess, n, m)


def induced_hamiltonian(sys: ContactLagrangianSystem) -> ContactHamiltonianSystem:
    return ContactHamiltonianSystem(sys.model, InducedHamiltonian(sys), label=f"induced({sys.label})")


@dataclass
class EquivalenceResult:
    sup_gap: float
    times: np.ndarray
    gaps: np.ndarray
    lagrangian: Trajectory
    hamiltonian: Trajectory

    @property
    def failed(self) -> bool:
        return self.lagrangian.failed or self.hamiltonian.failed

    @property
    def failure_time(self) -> float | None:
        times = [t.failure_time for t in (self.lagrangian, self.hamiltonian) if t.failed]
        return min(times) if times else None


def equivalence_check(
    sys: ContactLagrangianSystem,
    state0: State,
    t_end: float,
    h: float,
    sample_every: int = 1,
    hamiltonian: ContactHamiltonianSystem | None = None,
) -> EquivalenceResult:
    """Integrate both pictures with identical settings and compare Leg(c(t)) with sigma(t).

    ``hamiltonian`` defaults to the induced Hamiltonian; a closed-form H may be
    supplied instead.  The gap is the max-norm over (q, p, s) at each shared
    sample time.
    """
    ham = hamiltonian or induced_hamiltonian(sys)
    lag_traj = integrate(sys.herglotz_field, state0, t_end, h, sample_every=sample_every)
    ham_traj = integrate(ham.hamilton_field, legendre(sys, state0), t_end, h, sample_every=sample_every)
    k = min(len(lag_traj.times), len(ham_traj.times))
    gaps = np.array(
        [float(np.max(np.abs(legendre(sys, lag_traj.states[i]).pack() - ham_traj.states[i].pack()))) for i in range(k)]
    )
    return EquivalenceResult(float(gaps.max(initial=0.0)), lag_traj.times[:k], gaps, lag_traj, ham_traj)
