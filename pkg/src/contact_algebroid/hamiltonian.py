"""Contact Hamiltonian and evolution dynamics on the dual of an algebroid."""

from __future__ import annotations

import numpy as np

from .algebroid import AlgebroidModel, State, StateDerivative
from .calculus import DerivativeBundle, ScalarField
from .lagrangian import CoframeComponents, ResidualReport

__all__ = [
    "ContactHamiltonianSystem",
    "hamilton_field",
    "evolution_field",
    "dissipation_rate",
    "verify_hamiltonian_section",
]


class ContactHamiltonianSystem:
    """A Hamiltonian H(q, p, s) on E* x R."""

    def __init__(self, model: AlgebroidModel, hamiltonian: ScalarField, label: str = ""):
        if hamiltonian.base or hamiltonian.arity != (model.n, model.m):
            raise ValueError(
                f"Hamiltonian arity {hamiltonian.arity} does not match algebroid (n, m) = ({model.n}, {model.m})"
            )
        self.model = model
        self.H = hamiltonian
        self.label = label or hamiltonian.label

    def _state(self, state: State) -> State:
        if state.side != "hamiltonian":
            raise ValueError("expected a Hamiltonian-side state")
        if state.q.size != self.model.n or state.w.size != self.model.m:
            raise ValueError(f"state dims ({state.q.size}, {state.w.size}) != ({self.model.n}, {self.model.m})")
        return state

    def derivatives(self, state: State, second: bool = False) -> DerivativeBundle:
        state = self._state(state)
        return self.H.bundle(state.q, state.w, state.s, second=second)

    def value(self, state: State) -> float:
        state = self._state(state)
        return self.H(state.q, state.w, state.s)

    def _components(self, state: State, d: DerivativeBundle) -> tuple[np.ndarray, np.ndarray, float]:
        rho = self.model.anchor_matrix(state.q)
        c = self.model.structure_tensor(state.q)
        p = state.w
        dq = rho @ d.grad_w
        dp = -(rho.T @ d.grad_q + np.einsum("gab,g,b->a", c, p, d.grad_w) + p * d.d_s)
        return dq, dp, float(p @ d.grad_w)

    def hamilton_field(self, state: State) -> StateDerivative:
        d = self.derivatives(state)
        dq, dp, p_hp = self._components(state, d)
        return StateDerivative(dq, dp, p_hp - d.value)

    def evolution_field(self, state: State) -> StateDerivative:
        d = self.derivatives(state)
        dq, dp, p_hp = self._components(state, d)
        return StateDerivative(dq, dp, p_hp)

    def __call__(self, state: State) -> StateDerivative:
        return self.hamilton_field(state)

    def dissipation_rate(self, state: State) -> float:
        """Predicted dH/dt along the Hamiltonian section, -(dH/ds) H."""
        d = self.derivatives(state)
        return -d.d_s * d.value

    def dissipation_residual(self, state: State) -> float:
        """grad H . F + (dH/ds) H, evaluated by the chain rule."""
        d = self.derivatives(state)
        dq, dp, p_hp = self._components(state, d)
        rate = float(d.grad_q @ dq + d.grad_w @ dp + d.d_s * (p_hp - d.value))
        return rate + d.d_s * d.value

    def coframe(self, state: State) -> CoframeComponents:
        """Components of eta = V^s - p_a X^a and d eta."""
        p = state.w
        c = self.model.structure_tensor(state.q)
        m = self.model.m
        xx = 0.5 * np.einsum("gab,g->ab", c, p)
        return CoframeComponents(-p.copy(), np.zeros(m), 1.0, xx, np.eye(m), np.zeros(m))

    def section(self, state: State) -> np.ndarray:
        """Components (dH/dp, dp/dt, ds/dt) of the Hamiltonian section."""
        d = self.derivatives(state)
        _, dp, p_hp = self._components(state, d)
        return np.concatenate([d.grad_w, dp, [p_hp - d.value]])

    def verify(self, state: State, section: np.ndarray | None = None) -> ResidualReport:
        """r1 = i_xi eta + H and r2 = i_xi d eta - dH + R(H) eta with R = V_s."""
        d = self.derivatives(state)
        xi = self.section(state) if section is None else np.asarray(section, float)
        cf = self.coframe(state)
        rho = self.model.anchor_matrix(state.q)
        dh = np.concatenate([rho.T @ d.grad_q, d.grad_w, [d.d_s]])
        r1 = cf.contract_eta(xi) + d.value
        r2 = cf.contract_d_eta(xi) - dh + d.d_s * cf.eta
        return ResidualReport(float(r1), r2)


def hamilton_field(sys: ContactHamiltonianSystem, state: State) -> StateDerivative:
    return sys.hamilton_field(state)


def evolution_field(sys: ContactHamiltonianSystem, state: State) -> StateDerivative:
    return sys.evolution_field(state)


def dissipation_rate(sys: ContactHamiltonianSystem, state: State) -> float:
    return sys.dissipation_rate(state)


def verify_hamiltonian_section(
    sys: ContactHamiltonianSystem, state: State, section: np.ndarray | None = None
) -> ResidualReport:
    return sys.verify(state, section)
