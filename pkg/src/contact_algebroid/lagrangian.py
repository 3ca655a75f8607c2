"""Contact (Herglotz) Lagrangian dynamics on a Lie algebroid."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebroid import AlgebroidModel, State, StateDerivative
from .calculus import DerivativeBundle, ScalarField

__all__ = [
    "RegularityError",
    "CoframeComponents",
    "ResidualReport",
    "Regularity",
    "ContactLagrangianSystem",
    "energy",
    "regularity",
    "reeb_coeffs",
    "herglotz_field",
    "verify_lagrangian_section",
    "DET_TOL",
    "invert_regular",
    "COND_CAP",
]

DET_TOL = 1e-12
COND_CAP = 1e12


class RegularityError(ArithmeticError):
    """The fiber Hessian is singular or too badly conditioned."""

    def __init__(self, message: str, det: float, cond: float):
        super().__init__(message)
        self.det = det
        self.cond = cond


@dataclass(frozen=True, eq=False)
class CoframeComponents:
    """A 1-section and a 2-section in the coframe {X^a, V^a, V^s}.

    ``eta = (a, b, c)`` are the coefficients of X^a, V^a and V^s.  ``xx``,
    ``xv`` and ``xs`` are the coefficients of X^a^X^b, X^a^V^b and X^a^V^s;
    ``xx`` is stored antisymmetric.
    """

    a: np.ndarray
    b: np.ndarray
    c: float
    xx: np.ndarray
    xv: np.ndarray
    xs: np.ndarray

    @property
    def eta(self) -> np.ndarray:
        return np.concatenate([self.a, self.b, [self.c]])

    def omega(self) -> np.ndarray:
        """Antisymmetric matrix of the 2-section, so that i_Z(d eta) = Z @ omega."""
        m = self.a.size
        k = np.zeros((2 * m + 1, 2 * m + 1))
        k[:m, :m] = self.xx
        k[:m, m : 2 * m] = self.xv
        k[:m, 2 * m] = self.xs
        return k - k.T

    def contract_eta(self, z: np.ndarray) -> float:
        return float(self.eta @ z)

    def contract_d_eta(self, z: np.ndarray) -> np.ndarray:
        return z @ self.omega()


@dataclass(frozen=True)
class ResidualReport:
    r1: float
    r2: np.ndarray

    @property
    def max(self) -> float:
        return max(abs(self.r1), float(np.max(np.abs(self.r2), initial=0.0)))


@dataclass(frozen=True)
class Regularity:
    det: float
    cond: float
    is_regular: bool


def _inverse_regularity(w: np.ndarray):
    """Inverse of W with its determinant and 1-norm condition number.

    numpy's det and inv both go through LAPACK's partially pivoted LU.
    Returns (inverse or None, Regularity).
    """
    m = w.shape[0]
    scale = float(np.abs(w).max(initial=0.0))
    if not scale > 0.0 or not np.isfinite(scale):
        return None, Regularity(0.0, float("inf"), False)
    det = float(np.linalg.det(w))
    try:
        inv = np.linalg.inv(w)
    except np.linalg.LinAlgError:
        return None, Regularity(det, float("inf"), False)
    cond = float(np.abs(w).sum(axis=0).max() * np.abs(inv).sum(axis=0).max())
    ok = abs(det) > DET_TOL * scale**m and cond < COND_CAP
    return inv, Regularity(det, cond, bool(ok))


def _check_regular(w: np.ndarray) -> Regularity:
    return _inverse_regularity(w)[1]


def invert_regular(w: np.ndarray) -> np.ndarray:
    """Inverse of a regular W; raises RegularityError otherwise."""
    inv, reg = _inverse_regularity(w)
    if not reg.is_regular:
        raise RegularityError(
            f"singular fiber Hessian: det W = {reg.det:.3e}, cond = {reg.cond:.3e}", reg.det, reg.cond
        )
    return inv


class ContactLagrangianSystem:
    """A Lagrangian L(q, y, s) on an algebroid."""

    def __init__(self, model: AlgebroidModel, lagrangian: ScalarField, label: str = ""):
        if lagrangian.base or lagrangian.arity != (model.n, model.m):
            raise ValueError(
                f"Lagrangian arity {lagrangian.arity} does not match algebroid (n, m) = ({model.n}, {model.m})"
            )
        self.model = model
        self.L = lagrangian
        self.label = label or lagrangian.label

    def _state(self, state: State) -> State:
        if state.side != "lagrangian":
            raise ValueError("expected a Lagrangian-side state")
        if state.q.size != self.model.n or state.w.size != self.model.m:
            raise ValueError(f"state dims ({state.q.size}, {state.w.size}) != ({self.model.n}, {self.model.m})")
        return state

    def derivatives(self, state: State) -> DerivativeBundle:
        state = self._state(state)
        return self.L.bundle(state.q, state.w, state.s, second=True)

    def energy(self, state: State) -> float:
        state = self._state(state)
        b = self.L.bundle(state.q, state.w, state.s, second=False)
        return float(state.w @ b.grad_w - b.value)

    def regularity(self, state: State) -> Regularity:
        return _check_regular(self.derivatives(state).hess_ww)

    def _inverse(self, d: DerivativeBundle) -> np.ndarray:
        return invert_regular(d.hess_ww)

    def reeb_coeffs(self, state: State) -> tuple[float, np.ndarray, float]:
        """(v_s, v, rho(R_L)(E_L)) with R_L = V_s + v^a V_a."""
        d = self.derivatives(state)
        v = -self._inverse(d) @ d.mixed_sw
        y = state.w
        de_s = float(y @ d.mixed_sw - d.d_s)
        de_y = d.hess_ww @ y
        return 1.0, v, de_s + float(v @ de_y)

    def _rhs(self, state: State, d: DerivativeBundle) -> np.ndarray:
        rho = self.model.anchor_matrix(state.q)
        c = self.model.structure_tensor(state.q)
        y = state.w
        return (
            rho.T @ d.grad_q
            - np.einsum("b,gab,g->a", y, c, d.grad_w)
            + d.grad_w * d.d_s
            - d.mixed_qw.T @ (rho @ y)
            - d.value * d.mixed_sw
        )

    def acceleration(self, state: State) -> np.ndarray:
        d = self.derivatives(state)
        return self._inverse(d) @ self._rhs(state, d)

    def herglotz_field(self, state: State) -> StateDerivative:
        d = self.derivatives(state)
        accel = self._inverse(d) @ self._rhs(state, d)
        rho = self.model.anchor_matrix(state.q)
        return StateDerivative(rho @ state.w, accel, d.value)

    def __call__(self, state: State) -> StateDerivative:
        return self.herglotz_field(state)

    def coframe(self, state: State) -> CoframeComponents:
        """Components of eta_L and d eta_L."""
        d = self.derivatives(state)
        rho = self.model.anchor_matrix(state.q)
        c = self.model.structure_tensor(state.q)
        m = self.model.m
        # M[a, b] = rho^i_b d2L/dq^i dy^a + 1/2 C^g_ab dL/dy^g
        mm = d.mixed_qw.T @ rho + 0.5 * np.einsum("gab,g->ab", c, d.grad_w)
        xx = 0.5 * (mm - mm.T)
        return CoframeComponents(-d.grad_w, np.zeros(m), 1.0, xx, d.hess_ww.copy(), d.mixed_sw.copy())

    def energy_differential(self, state: State) -> np.ndarray:
        """dE_L in the coframe {X^a, V^a, V^s}."""
        d = self.derivatives(state)
        rho = self.model.anchor_matrix(state.q)
        y = state.w
        return np.concatenate(
            [rho.T @ (d.mixed_qw @ y - d.grad_q), d.hess_ww @ y, [y @ d.mixed_sw - d.d_s]]
        )

    def section(self, state: State) -> np.ndarray:
        """Components (y, B, L) of the Lagrangian section."""
        f = self.herglotz_field(state)
        return np.concatenate([state.w, f.dw, [f.ds]])

    def verify(self, state: State, section: np.ndarray | None = None) -> ResidualReport:
        """Residuals of the defining equations.

        r1 = i_G eta_L + E_L and
        r2 = i_G d eta_L - dE_L + rho(R_L)(E_L) eta_L,
        both zero for the Lagrangian section G.
        """
        g = self.section(state) if section is None else np.asarray(section, float)
        cf = self.coframe(state)
        _, _, reeb_e = self.reeb_coeffs(state)
        r1 = cf.contract_eta(g) + self.energy(state)
        r2 = cf.contract_d_eta(g) - self.energy_differential(state) + reeb_e * cf.eta
        return ResidualReport(float(r1), r2)


# functional spellings

def energy(sys: ContactLagrangianSystem, state: State) -> float:
    return sys.energy(state)


def regularity(sys: ContactLagrangianSystem, state: State) -> Regularity:
    return sys.regularity(state)


def reeb_coeffs(sys: ContactLagrangianSystem, state: State):
    return sys.reeb_coeffs(state)


def herglotz_field(sys: ContactLagrangianSystem, state: State) -> StateDerivative:
    return sys.herglotz_field(state)


def verify_lagrangian_section(
    sys: ContactLagrangianSystem, state: State, section: np.ndarray | None = None
) -> ResidualReport:
    return sys.verify(state, section)
