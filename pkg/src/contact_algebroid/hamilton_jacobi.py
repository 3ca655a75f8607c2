"""Sections of E* x R, 1-jets and Hamilton-Jacobi residuals."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .algebroid import AlgebroidModel, State, StateDerivative
from .calculus import ScalarField, as_vector
from .hamiltonian import ContactHamiltonianSystem
from .integrate import Trajectory, integrate

__all__ = [
    "SectionGamma",
    "ExplicitSection",
    "OneJet",
    "one_jet",
    "legendrian_residual",
    "xi_h_gamma",
    "relatedness_residuals",
    "HJResiduals",
    "jet_hj_residuals",
    "ProjectionResult",
    "projected_dynamics_check",
    "HJ_WARN_TOL",
]

HJ_WARN_TOL = 1e-8


@dataclass(frozen=True)
class SectionValue:
    """gamma and its first q-derivatives at one point.

    ``d_gamma0[a, i]`` is d gamma_a / d q^i.
    """

    gamma0: np.ndarray
    d_gamma0: np.ndarray
    gamma_s: float
    d_gamma_s: np.ndarray


class SectionGamma:
    """A section q -> (gamma_0(q), gamma_s(q)) of E* x R over the chart."""

    model: AlgebroidModel

    def evaluate(self, q) -> SectionValue:
        raise NotImplementedError

    def __call__(self, q) -> State:
        v = self.evaluate(q)
        return State(as_vector(q), v.gamma0, v.gamma_s, "hamiltonian")


class ExplicitSection(SectionGamma):
    """gamma_0 given componentwise by m base fields, gamma_s by one more."""

    def __init__(self, model: AlgebroidModel, gamma0, gamma_s: ScalarField):
        gamma0 = list(gamma0)
        if len(gamma0) != model.m:
            raise ValueError(f"gamma_0 needs {model.m} components, got {len(gamma0)}")
        for f in [*gamma0, gamma_s]:
            if not f.base or f.n != model.n:
                raise ValueError("section components must be base fields on the chart")
        self.model = model
        self.gamma0 = gamma0
        self.gamma_s = gamma_s

    def evaluate(self, q) -> SectionValue:
        q = as_vector(q)
        bundles = [f.bundle(q, second=False) for f in self.gamma0]
        bs = self.gamma_s.bundle(q, second=False)
        g0 = np.array([b.value for b in bundles])
        dg0 = np.array([b.grad_q for b in bundles]).reshape(self.model.m, self.model.n)
        return SectionValue(g0, dg0, bs.value, bs.grad_q)


class OneJet(SectionGamma):
    """j^1 f = (rho^T grad f, f)."""

    def __init__(self, model: AlgebroidModel, f: ScalarField):
        if not f.base or f.n != model.n:
            raise ValueError("the 1-jet needs a base field on the chart")
        self.model = model
        self.f = f

    def evaluate(self, q) -> SectionValue:
        q = as_vector(q)
        b = self.f.bundle(q, second=True)
        rho = self.model.anchor_matrix(q)
        drho = self.model.anchor_jacobian(q)  # [i, a, k]
        g0 = rho.T @ b.grad_q
        # d gamma_a / dq^k = d rho^i_a/dq^k df/dq^i + rho^i_a d2f/dq^i dq^k
        dg0 = np.einsum("iak,i->ak", drho, b.grad_q) + rho.T @ b.hess_qq
        return SectionValue(g0, dg0, b.value, b.grad_q.copy())


def one_jet(model: AlgebroidModel, f: ScalarField) -> OneJet:
    return OneJet(model, f)


def legendrian_residual(model: AlgebroidModel, gamma: SectionGamma, q) -> np.ndarray:
    """d^E gamma_s - gamma_0; zero exactly when gamma is Legendrian."""
    v = gamma.evaluate(q)
    return model.d_e(v.d_gamma_s, q) - v.gamma0


def _h_at(sys: ContactHamiltonianSystem, q, v: SectionValue, level: float):
    d = sys.H.bundle(as_vector(q), v.gamma0, v.gamma_s, second=False)
    return d, d.value - level


def xi_h_gamma(sys: ContactHamiltonianSystem, gamma: SectionGamma, q) -> np.ndarray:
    """Fiber components dH/dp at gamma(q) of the reduced section on E."""
    v = gamma.evaluate(q)
    return sys.H.bundle(as_vector(q), v.gamma0, v.gamma_s, second=False).grad_w.copy()


def relatedness_residuals(
    sys: ContactHamiltonianSystem, gamma: SectionGamma, q, level: float = 0.0
) -> tuple[np.ndarray, float]:
    """Left minus right sides of the two gamma-relatedness conditions.

    r_p[a] = -[rho^i_a H_q + C^e_ab gamma_e H_pb + gamma_a H_s] - rho^i_b H_pb d gamma_a/dq^i
    r_s    = gamma_a H_pa - H - rho^i_a H_pa d gamma_s/dq^i
    with H shifted by ``level``.
    """
    q = as_vector(q)
    model = sys.model
    v = gamma.evaluate(q)
    d, h = _h_at(sys, q, v, level)
    rho = model.anchor_matrix(q)
    c = model.structure_tensor(q)
    base_vel = rho @ d.grad_w
    lhs_p = -(rho.T @ d.grad_q + np.einsum("eab,e,b->a", c, v.gamma0, d.grad_w) + v.gamma0 * d.d_s)
    r_p = lhs_p - v.d_gamma0 @ base_vel
    r_s = float(v.gamma0 @ d.grad_w - h - base_vel @ v.d_gamma_s)
    return r_p, r_s


@dataclass(frozen=True)
class HJResiduals:
    """d^E(H o gamma) and, for the Hamiltonian section, H o gamma."""

    d_e: np.ndarray
    value: float | None
    which: str

    @property
    def max(self) -> float:
        out = float(np.max(np.abs(self.d_e), initial=0.0))
        return out if self.value is None else max(out, abs(self.value))


def jet_hj_residuals(
    sys: ContactHamiltonianSystem, f: ScalarField, q, which: str = "hamiltonian", level: float = 0.0
) -> HJResiduals:
    """Hamilton-Jacobi residuals for gamma = j^1 f.

    ``which`` is "hamiltonian" (both conditions) or "evolution" (only the
    differential).  A nonzero ``level`` tests H o gamma = level instead of 0.
    """
    if which not in ("hamiltonian", "evolution"):
        raise ValueError("which must be 'hamiltonian' or 'evolution'")
    q = as_vector(q)
    gamma = OneJet(sys.model, f)
    v = gamma.evaluate(q)
    d, h = _h_at(sys, q, v, level)
    # chain rule: d(H o gamma)/dq = H_q + (d gamma_0/dq)^T H_p + H_s grad f
    grad = d.grad_q + v.d_gamma0.T @ d.grad_w + d.d_s * v.d_gamma_s
    de = sys.model.d_e(grad, q)
    return HJResiduals(de, h if which == "hamiltonian" else None, which)


@dataclass
class ProjectionResult:
    sup_gap: float
    times: np.ndarray
    gaps: np.ndarray
    max_hj_residual: float
    base: Trajectory
    full: Trajectory


def projected_dynamics_check(
    sys: ContactHamiltonianSystem,
    f: ScalarField,
    q0,
    t_end: float,
    h: float,
    which: str = "hamiltonian",
    level: float = 0.0,
    sample_every: int = 1,
) -> ProjectionResult:
    """Compare the lifted base flow of xi_H^gamma with the full flow from gamma(q0).

    The base curve solves dq/dt = rho(q) dH/dp(gamma(q)) for gamma = j^1 f; it
    is lifted through gamma and compared in max-norm with the contact
    Hamilton (or evolution) trajectory.  Warns when the HJ residuals along
    the base curve exceed ``HJ_WARN_TOL``.
    """
    model = sys.model
    gamma = OneJet(model, f)

    def base_field(st: State) -> StateDerivative:
        xi = xi_h_gamma(sys, gamma, st.q)
        return StateDerivative(model.anchor_matrix(st.q) @ xi, np.zeros(0), 0.0)

    full_field = sys.hamilton_field if which == "hamiltonian" else sys.evolution_field
    if level != 0.0 and which == "hamiltonian":
        full_field = _shifted(sys, level).hamilton_field
    base = integrate(base_field, State(as_vector(q0), np.zeros(0), 0.0, "hamiltonian"), t_end, h,
                     sample_every=sample_every)
    full = integrate(full_field, gamma(q0), t_end, h, sample_every=sample_every)
    k = min(len(base.times), len(full.times))
    gaps = np.empty(k)
    worst_hj = 0.0
    for i in range(k):
        q = base.states[i].q
        lifted = gamma(q).pack()
        gaps[i] = float(np.max(np.abs(lifted - full.states[i].pack())))
        worst_hj = max(worst_hj, jet_hj_residuals(sys, f, q, which, level).max)
    if worst_hj > HJ_WARN_TOL:
        warnings.warn(
            f"Hamilton-Jacobi residual {worst_hj:.3e} along the base curve; the lift need not follow the flow",
            RuntimeWarning,
            stacklevel=2,
        )
    return ProjectionResult(float(gaps.max(initial=0.0)), base.times[:k], gaps, worst_hj, base, full)


class _Shifted(ScalarField):
    """H - level, delegating evaluation to H."""

    def __init__(self, inner: ScalarField, level: float):
        self.inner, self.level = inner, float(level)
        super().__init__(inner.body, inner.n, inner.m, label=f"({inner.label}) - {level!r}")

    def __call__(self, q, w=(), s: float = 0.0) -> float:
        return self.inner(q, w, s) - self.level

    def bundle(self, q, w=(), s: float = 0.0, second: bool = True):
        b = self.inner.bundle(q, w, s, second=second)
        return replace(b, value=b.value - self.level)


def _shifted(sys: ContactHamiltonianSystem, level: float) -> ContactHamiltonianSystem:
    return ContactHamiltonianSystem(sys.model, _Shifted(sys.H, level))
