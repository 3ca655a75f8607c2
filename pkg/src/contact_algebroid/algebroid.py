"""Lie algebroids in a single local chart.

An algebroid of rank m over an n-dimensional chart is given by its anchor
matrix rho^i_a(q) and structure functions C^g_ab(q) on a local basis of
sections.  Only the entries with a < b are stored; the accessor fills in the
antisymmetric half, so C^g_ab = -C^g_ba holds exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

from .calculus import DerivativeBundle, ScalarField, as_vector

__all__ = [
    "State",
    "StateDerivative",
    "AlgebroidModel",
    "StructureError",
    "anchor_matrix",
    "structure_tensor",
    "d_e_function",
    "structure_residuals",
    "tangent_bundle",
    "lie_algebra",
    "so3_constants",
    "hat",
    "action_algebroid",
    "so3_action",
    "atiyah_trivial",
    "atiyah_curvature",
    "builtin",
]

SIDES = ("lagrangian", "hamiltonian")

Entry = Union[float, ScalarField]


@dataclass(frozen=True, eq=False)
class State:
    """A point (q, w, s); w holds velocities y or momenta p depending on ``side``."""

    q: np.ndarray
    w: np.ndarray
    s: float
    side: str = "lagrangian"

    def __post_init__(self):
        if self.side not in SIDES:
            raise ValueError(f"side must be one of {SIDES}, got {self.side!r}")
        object.__setattr__(self, "q", as_vector(self.q))
        object.__setattr__(self, "w", as_vector(self.w))
        object.__setattr__(self, "s", float(self.s))

    @property
    def p(self) -> np.ndarray:
        return self.w

    @property
    def y(self) -> np.ndarray:
        return self.w

    def pack(self) -> np.ndarray:
        return np.concatenate([self.q, self.w, [self.s]])

    @classmethod
    def unpack(cls, x: np.ndarray, n: int, m: int, side: str) -> "State":
        return cls(x[:n].copy(), x[n : n + m].copy(), float(x[n + m]), side)

    def replace(self, **changes) -> "State":
        fields = {"q": self.q, "w": self.w, "s": self.s, "side": self.side}
        fields.update(changes)
        return State(**fields)

    def __repr__(self) -> str:
        letter = "y" if self.side == "lagrangian" else "p"
        return f"State(q={self.q.tolist()}, {letter}={self.w.tolist()}, s={self.s!r})"


@dataclass(frozen=True, eq=False)
class StateDerivative:
    """Time derivative (dq, dw, ds) of a State."""

    dq: np.ndarray
    dw: np.ndarray
    ds: float

    def pack(self) -> np.ndarray:
        return np.concatenate([self.dq, self.dw, [self.ds]])


class StructureError(ValueError):
    """Structure equations fail for a candidate algebroid."""


def _is_const(entry: Entry) -> bool:
    return not isinstance(entry, ScalarField)


@dataclass(frozen=True, eq=False)
class AlgebroidModel:
    """Local data (n, m, rho, C) of a Lie algebroid.

    ``anchor`` maps (i, a) to an entry and ``structure`` maps (g, a, b) with
    a < b to an entry; indices are 0-based and missing keys are zero.  An entry
    is either a float or a base ScalarField in q.
    """

    n: int
    m: int
    anchor: Mapping[tuple[int, int], Entry] = field(default_factory=dict)
    structure: Mapping[tuple[int, int, int], Entry] = field(default_factory=dict)
    label: str = ""

    def __post_init__(self):
        if self.n < 0 or self.m < 1:
            raise ValueError(f"need n >= 0 and m >= 1, got n={self.n}, m={self.m}")
        for (i, a), e in self.anchor.items():
            if not (0 <= i < self.n and 0 <= a < self.m):
                raise ValueError(f"anchor index ({i}, {a}) outside {self.n}x{self.m}")
            self._check_entry(e, f"anchor[{i},{a}]")
        for (g, a, b), e in self.structure.items():
            if not (0 <= g < self.m and 0 <= a < b < self.m):
                raise ValueError(f"structure key ({g}, {a}, {b}) must satisfy a < b < m")
            self._check_entry(e, f"structure[{g},{a},{b}]")
        const_rho = np.zeros((self.n, self.m))
        const_c = np.zeros((self.m, self.m, self.m))
        var_rho, var_c = [], []
        for (i, a), e in self.anchor.items():
            if _is_const(e):
                const_rho[i, a] = float(e)
            else:
                var_rho.append(((i, a), e))
        for (g, a, b), e in self.structure.items():
            if _is_const(e):
                const_c[g, a, b] = float(e)
                const_c[g, b, a] = -float(e)
            else:
                var_c.append(((g, a, b), e))
        object.__setattr__(self, "_rho0", const_rho)
        object.__setattr__(self, "_c0", const_c)
        object.__setattr__(self, "_var_rho", tuple(var_rho))
        object.__setattr__(self, "_var_c", tuple(var_c))

    def _check_entry(self, e: Entry, where: str) -> None:
        if isinstance(e, ScalarField):
            if not e.base or e.n != self.n:
                raise ValueError(f"{where} must be a base field of {self.n} coordinates")
        elif not np.isfinite(float(e)):
            raise ValueError(f"{where} is not finite")

    @property
    def is_constant(self) -> bool:
        return not self._var_rho and not self._var_c

    def _q(self, q) -> np.ndarray:
        q = as_vector(q)
        if q.size != self.n:
            raise ValueError(f"{self.label or 'model'} expects q of length {self.n}, got {q.size}")
        return q

    def anchor_matrix(self, q=()) -> np.ndarray:
        q = self._q(q)
        rho = self._rho0.copy()
        for (i, a), e in self._var_rho:
            rho[i, a] = e(q)
        return rho

    def structure_tensor(self, q=()) -> np.ndarray:
        """C[g, a, b] = C^g_ab(q)."""
        q = self._q(q)
        c = self._c0.copy()
        for (g, a, b), e in self._var_c:
            v = e(q)
            c[g, a, b] = v
            c[g, b, a] = -v
        return c

    def anchor_jacobian(self, q=()) -> np.ndarray:
        """D[i, a, j] = d rho^i_a / d q^j."""
        q = self._q(q)
        d = np.zeros((self.n, self.m, self.n))
        for (i, a), e in self._var_rho:
            d[i, a, :] = e.bundle(q, second=False).grad_q
        return d

    def structure_jacobian(self, q=()) -> np.ndarray:
        """D[g, a, b, j] = d C^g_ab / d q^j."""
        q = self._q(q)
        d = np.zeros((self.m, self.m, self.m, self.n))
        for (g, a, b), e in self._var_c:
            grad = e.bundle(q, second=False).grad_q
            d[g, a, b, :] = grad
            d[g, b, a, :] = -grad
        return d

    def d_e(self, grad_f: np.ndarray, q=()) -> np.ndarray:
        """(d^E f)_a = rho^i_a df/dq^i from a precomputed gradient."""
        return self.anchor_matrix(q).T @ as_vector(grad_f)

    def structure_residuals(self, q=()) -> tuple[np.ndarray, np.ndarray]:
        rho = self.anchor_matrix(q)
        c = self.structure_tensor(q)
        drho = self.anchor_jacobian(q)
        dc = self.structure_jacobian(q)
        # S[v,a,b,g] = rho^i_a dC^v_bg/dq^i + C^v_am C^m_bg, summed cyclically
        s = np.einsum("ia,vbgi->vabg", rho, dc) + np.einsum("vam,mbg->vabg", c, c)
        jac = s + np.einsum("vbga->vabg", s) + np.einsum("vgab->vabg", s)
        t = np.einsum("ja,ibj->iab", rho, drho)
        anc = t - t.transpose(0, 2, 1) - np.einsum("ig,gab->iab", rho, c)
        return jac, anc

    def validate(self, points: int = 20, seed: int = 0, radius: float = 1.0, tol: float = 1e-10) -> None:
        """Reject the model if the structure equations fail at sampled points."""
        rng = np.random.default_rng(seed)
        samples = [np.zeros(self.n)] if self.is_constant else rng.uniform(-radius, radius, (points, self.n))
        for q in samples:
            jac, anc = self.structure_residuals(q)
            for name, arr in (("jacobi", jac), ("anchor", anc)):
                if arr.size and np.max(np.abs(arr)) > tol:
                    idx = np.unravel_index(np.argmax(np.abs(arr)), arr.shape)
                    raise StructureError(
                        f"{self.label or 'algebroid'}: {name} structure equation fails at "
                        f"index {tuple(int(k) for k in idx)} (0-based), residual "
                        f"{arr[idx]:.3e} at q={np.round(q, 6).tolist()}"
                    )

    def __repr__(self) -> str:
        return f"AlgebroidModel({self.label!r}, n={self.n}, m={self.m})"


# functional spellings

def anchor_matrix(model: AlgebroidModel, q=()) -> np.ndarray:
    return model.anchor_matrix(q)


def structure_tensor(model: AlgebroidModel, q=()) -> np.ndarray:
    return model.structure_tensor(q)


def d_e_function(model: AlgebroidModel, f: ScalarField, q=()) -> np.ndarray:
    """Components of d^E f for a base field f."""
    if not f.base:
        raise ValueError("d_e_function needs a field of q only")
    return model.d_e(f.bundle(q, second=False).grad_q, q)


def structure_residuals(model: AlgebroidModel, q=()) -> tuple[np.ndarray, np.ndarray]:
    return model.structure_residuals(q)


# ---------------------------------------------------------------------------
# builtins
# ---------------------------------------------------------------------------


def _constants_to_entries(c: np.ndarray) -> dict:
    c = np.asarray(c, dtype=float)
    m = c.shape[0]
    if c.shape != (m, m, m):
        raise ValueError("structure constants must have shape (m, m, m)")
    if np.max(np.abs(c + c.transpose(0, 2, 1)), initial=0.0) > 0:
        raise ValueError("structure constants must be antisymmetric in the lower indices")
    return {(g, a, b): float(c[g, a, b]) for g in range(m) for a in range(m) for b in range(a + 1, m) if c[g, a, b] != 0}


def so3_constants() -> np.ndarray:
    """Levi-Civita symbol, C[g, a, b] = eps_abg."""
    eps = np.zeros((3, 3, 3))
    for a, b, g in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[g, a, b] = 1.0
        eps[g, b, a] = -1.0
    return eps


def hat(v) -> np.ndarray:
    """Skew matrix with hat(v) @ x = v x x."""
    x, y, z = as_vector(v)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def tangent_bundle(n: int) -> AlgebroidModel:
    if n < 1:
        raise ValueError("tangent bundle needs n >= 1")
    return AlgebroidModel(n, n, {(i, i): 1.0 for i in range(n)}, {}, label=f"tangent_bundle({n})")


def lie_algebra(constants="so3", validate: bool = True) -> AlgebroidModel:
    """A Lie algebra as an algebroid over a point."""
    if isinstance(constants, str):
        if constants != "so3":
            raise ValueError(f"unknown Lie algebra {constants!r}")
        c, label = so3_constants(), "so3"
    else:
        c, label = np.asarray(constants, float), "lie_algebra"
    model = AlgebroidModel(0, c.shape[0], {}, _constants_to_entries(c), label=label)
    if validate:
        model.validate()
    return model


def _linear_field(row: np.ndarray, n: int) -> ScalarField | float:
    coeffs = [(j, float(v)) for j, v in enumerate(row) if v != 0.0]
    if not coeffs:
        return 0.0

    def body(q):
        total = 0.0
        for j, v in coeffs:
            total = total + v * q[j]
        return total

    return ScalarField(body, n, base=True, label=" + ".join(f"{v!r}*q{j + 1}" for j, v in coeffs))


def action_algebroid(generators: Sequence[np.ndarray], constants, label: str = "action", validate: bool = True) -> AlgebroidModel:
    """Action algebroid of a linear Lie algebra action on R^n.

    Generator matrices M_a with [M_a, M_b] = C^g_ab M_g act by x -> M_a x; the
    anchor is rho(e_a)(q) = -M_a q.
    """
    mats = [np.asarray(g, float) for g in generators]
    n, m = mats[0].shape[0], len(mats)
    anchor = {}
    for a, mat in enumerate(mats):
        for i in range(n):
            entry = _linear_field(-mat[i], n)
            if isinstance(entry, ScalarField):
                anchor[(i, a)] = entry
    model = AlgebroidModel(n, m, anchor, _constants_to_entries(np.asarray(constants, float)), label=label)
    if validate:
        model.validate()
    return model


def so3_action() -> AlgebroidModel:
    """so(3) acting on R^3 by infinitesimal rotation, xi_Q(q) = xi x q."""
    return action_algebroid([hat(e) for e in np.eye(3)], so3_constants(), label="action_so3_R3")


def atiyah_curvature(c: np.ndarray, connection: Sequence[Sequence[ScalarField | float]]):
    """Curvature entries B^C_ij = dA^C_j/dq^i - dA^C_i/dq^j - c^C_EF A^E_i A^F_j.

    This is the combination the structure equations force for the bracket
    convention of :func:`atiyah_trivial`.  ``connection[A][i]`` is A^A_i.
    """
    c = np.asarray(c, float)
    d = c.shape[0]
    n = len(connection[0])
    fields = [[_as_base_field(connection[a][i], n) for i in range(n)] for a in range(d)]

    jets = _ConnectionJets(fields)
    out = {}
    for cc in range(d):
        for i in range(n):
            for j in range(i + 1, n):
                out[(cc, i, j)] = _CurvatureEntry(c, jets, cc, i, j, n)
    return out


def _as_base_field(e, n: int) -> ScalarField:
    if isinstance(e, ScalarField):
        return e
    v = float(e)
    return ScalarField(lambda q: v, n, base=True, label=repr(v))


class _ConnectionJets:
    """Jets of every A^A_i at the most recent q, shared by all curvature entries."""

    def __init__(self, fields):
        self.fields = fields
        self._key = None
        self._bundles = None

    def at(self, q: np.ndarray, second: bool):
        key = (q.tobytes(), second)
        if key != self._key:
            self._bundles = [[f.bundle(q, second=second) for f in row] for row in self.fields]
            self._key = key
        return self._bundles


class _CurvatureEntry(ScalarField):
    """B^C_ij as a base field; its gradient needs second-order jets of A."""

    def __init__(self, c, jets, cc, i, j, n):
        self._c, self._jets, self._idx = c, jets, (cc, i, j)
        self._pairs = [(e, f, float(c[cc, e, f])) for e in range(c.shape[0]) for f in range(c.shape[0])
                       if c[cc, e, f] != 0.0]
        super().__init__(self._body, n, base=True, label=f"B^{cc + 1}_{i + 1}{j + 1}")

    def _body(self, q):
        raise NotImplementedError("curvature entries are evaluated through bundle()")

    def _parts(self, q, with_grad: bool):
        cc, i, j = self._idx
        b = self._jets.at(q, with_grad)
        val = b[cc][j].grad_q[i] - b[cc][i].grad_q[j]
        grad = b[cc][j].hess_qq[i] - b[cc][i].hess_qq[j] if with_grad else None
        for e, f, k in self._pairs:
            ai, aj = b[e][i], b[f][j]
            val -= k * ai.value * aj.value
            if with_grad:
                grad = grad - k * (ai.grad_q * aj.value + ai.value * aj.grad_q)
        return float(val), grad

    def __call__(self, q, w=(), s=0.0):
        return self._parts(as_vector(q), False)[0]

    def bundle(self, q, w=(), s=0.0, second=True):
        if second:
            raise NotImplementedError("curvature entries provide first derivatives only")
        val, grad = self._parts(as_vector(q), True)
        return DerivativeBundle(val, np.asarray(grad, float), np.zeros(0), 0.0, None, self.n, 0)


def atiyah_trivial(c, connection, curvature=None, label: str = "atiyah_trivial", validate: bool = True) -> AlgebroidModel:
    """Trivial Atiyah algebroid TQ x g in the basis {e_i, e^_A}.

    Brackets: [e_i, e_j] = -B^C_ij e^_C, [e_i, e^_A] = c^C_AB A^B_i e^_C,
    [e^_A, e^_B] = c^C_AB e^_C, anchor e_i -> d/dq^i and e^_A -> 0.
    ``connection[A][i]`` gives A^A_i(q) and ``curvature`` maps (C, i, j),
    i < j, to B^C_ij(q).  When ``curvature`` is None it is computed by
    :func:`atiyah_curvature`.
    """
    c = np.asarray(c, float)
    d = c.shape[0]
    n = len(connection[0])
    if any(len(row) != n for row in connection) or len(connection) != d:
        raise ValueError(f"connection must be {d} rows of {n} entries")
    if curvature is None:
        curvature = atiyah_curvature(c, connection)
    m = n + d
    anchor = {(i, i): 1.0 for i in range(n)}
    structure: dict = {}
    for (cc, i, j), b in curvature.items():
        if not 0 <= i < j < n:
            raise ValueError("curvature keys must satisfy i < j < n")
        structure[(n + cc, i, j)] = _negate(b, n)
    for i in range(n):
        for a in range(d):
            for cc in range(d):
                pieces = [(c[cc, a, bb], connection[bb][i]) for bb in range(d) if c[cc, a, bb] != 0.0]
                entry = _combination(pieces, n)
                if not (isinstance(entry, float) and entry == 0.0):
                    structure[(n + cc, i, n + a)] = entry
    for cc, a, b in zip(*np.nonzero(c)):
        if a < b:
            structure[(n + int(cc), n + int(a), n + int(b))] = float(c[cc, a, b])
    model = AlgebroidModel(n, m, anchor, structure, label=label)
    if validate:
        model.validate()
    return model


def _negate(e, n: int):
    if isinstance(e, ScalarField):
        return _Scaled(e, -1.0)
    return -float(e)


def _combination(pieces, n: int):
    """sum_k coeff_k * entry_k, kept as a float when every entry is constant."""
    if all(not isinstance(e, ScalarField) for _, e in pieces):
        return float(sum(k * float(e) for k, e in pieces))
    fields = [(float(k), _as_base_field(e, n)) for k, e in pieces]

    def body(q):
        total = 0.0
        for k, f in fields:
            total = total + k * f.body(q)
        return total

    return ScalarField(body, n, base=True, label=" + ".join(f"{k!r}*({f.label})" for k, f in fields))


class _Scaled(ScalarField):
    def __init__(self, inner: ScalarField, k: float):
        self._inner, self._k = inner, k
        super().__init__(None, inner.n, base=True, label=f"{k!r}*({inner.label})")

    def __call__(self, q, w=(), s=0.0):
        return self._k * self._inner(q)

    def bundle(self, q, w=(), s=0.0, second=True):
        b = self._inner.bundle(q, second=second)
        hess = None if b.hess is None else self._k * b.hess
        return DerivativeBundle(self._k * b.value, self._k * b.grad_q, b.grad_w, 0.0, hess, b.n, 0)


def builtin(name: str, **params) -> AlgebroidModel:
    """Builtin algebroids by name: tangent_bundle, so3, lie_algebra, action_so3, atiyah_trivial."""
    if name == "tangent_bundle":
        return tangent_bundle(int(params.get("n", 1)))
    if name == "so3":
        return lie_algebra("so3")
    if name == "lie_algebra":
        return lie_algebra(params.get("constants", "so3"))
    if name in ("action_so3", "action_algebroid"):
        return so3_action()
    if name == "atiyah_trivial":
        return atiyah_trivial(params["c"], params["connection"], params.get("curvature"))
    raise ValueError(f"unknown builtin algebroid {name!r}")
