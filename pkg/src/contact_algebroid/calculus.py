"""Second-order forward-mode differentiation and scalar fields on (q, w, s).

A :class:`Jet` carries a value together with its gradient and Hessian with
respect to a fixed set of seeded variables, i.e. a truncated second-order
Taylor expansion.  Arithmetic on jets propagates both orders exactly, so every
partial derivative used by the dynamics modules is available to machine
precision without step-size tuning.

The elementary functions in this module (``sin``, ``exp``, ...) accept plain
floats or jets, which lets one evaluation rule serve both plain evaluation and
differentiation.  Invalid arguments raise :class:`DomainError` instead of
producing NaN.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "DomainError",
    "Jet",
    "DerivativeBundle",
    "ScalarField",
    "eval_with_derivatives",
    "fd_crosscheck",
    "sin",
    "cos",
    "tan",
    "exp",
    "log",
    "sqrt",
    "fabs",
    "power",
    "divide",
    "FUNCTIONS",
]


class DomainError(ArithmeticError):
    """An elementary function was evaluated outside its (differentiable) domain."""

    def __init__(self, message: str, expr: str | None = None):
        self.message = message
        self.expr = expr
        super().__init__(self._text())

    def _text(self) -> str:
        if self.expr is None:
            return self.message
        return f"{self.message} in sub-expression '{self.expr}'"

    def attach(self, expr: str) -> None:
        """Record the innermost offending sub-expression (first caller wins)."""
        if self.expr is None:
            self.expr = expr
            self.args = (self._text(),)


class Jet:
    """Value, gradient and (optionally) Hessian w.r.t. seeded variables."""

    __slots__ = ("val", "grad", "hess")

    def __init__(self, val: float, grad: np.ndarray, hess: np.ndarray | None):
        self.val = val
        self.grad = grad
        self.hess = hess

    @classmethod
    def variable(cls, value: float, index: int, size: int, second: bool = True) -> "Jet":
        units, zero = _seeds(size)
        return cls(float(value), units[index], zero if second else None)

    # -- helpers -----------------------------------------------------------
    def _unary(self, f0: float, f1: float, f2: float) -> "Jet":
        """Chain rule for g(self) with g = f0, g' = f1, g'' = f2."""
        grad = f1 * self.grad
        if self.hess is None:
            return Jet(f0, grad, None)
        g = self.grad
        return Jet(f0, grad, f1 * self.hess + f2 * (g[:, None] * g))

    def _scale(self, c: float) -> "Jet":
        return Jet(self.val * c, self.grad * c, None if self.hess is None else self.hess * c)

    # -- arithmetic --------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Jet):
            hess = None if self.hess is None else self.hess + other.hess
            return Jet(self.val + other.val, self.grad + other.grad, hess)
        return Jet(self.val + other, self.grad, self.hess)

    __radd__ = __add__

    def __neg__(self) -> "Jet":
        return Jet(-self.val, -self.grad, None if self.hess is None else -self.hess)

    def __pos__(self) -> "Jet":
        return self

    def __sub__(self, other):
        if isinstance(other, Jet):
            hess = None if self.hess is None else self.hess - other.hess
            return Jet(self.val - other.val, self.grad - other.grad, hess)
        return Jet(self.val - other, self.grad, self.hess)

    def __rsub__(self, other):
        return Jet(other - self.val, -self.grad, None if self.hess is None else -self.hess)

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = self, other
            grad = a.val * b.grad + b.val * a.grad
            if a.hess is None:
                return Jet(a.val * b.val, grad, None)
            cross = a.grad[:, None] * b.grad
            hess = a.val * b.hess + b.val * a.hess + cross + cross.T
            return Jet(a.val * b.val, grad, hess)
        return self._scale(other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return divide(self, other)

    def __rtruediv__(self, other):
        return divide(other, self)

    def __pow__(self, other):
        return power(self, other)

    def __rpow__(self, other):
        return power(other, self)

    def __float__(self) -> float:
        return float(self.val)

    def __repr__(self) -> str:
        return f"Jet({self.val!r}, grad={self.grad!r})"


_SEEDS: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _seeds(size: int) -> tuple[np.ndarray, np.ndarray]:
    """Read-only unit gradients and zero Hessian for ``size`` variables.

    Jet arithmetic never writes into its operands, so seeds can be shared.
    """
    if size not in _SEEDS:
        units, zero = np.eye(size), np.zeros((size, size))
        units.flags.writeable = False
        zero.flags.writeable = False
        _SEEDS[size] = (units, zero)
    return _SEEDS[size]


def _value(x) -> float:
    return x.val if isinstance(x, Jet) else float(x)


def _reciprocal(x: Jet) -> Jet:
    v = x.val
    if v == 0.0:
        raise DomainError("division by zero")
    inv = 1.0 / v
    return x._unary(inv, -inv * inv, 2.0 * inv * inv * inv)


def divide(a, b):
    if isinstance(b, Jet):
        return a * _reciprocal(b)
    if b == 0:
        raise DomainError("division by zero")
    if isinstance(a, Jet):
        return a._scale(1.0 / b)
    return a / b


def _is_integer(x: float) -> bool:
    return math.isfinite(x) and float(x).is_integer()


def power(base, expo):
    """``base ** expo``; non-integer or variable exponents need a positive base."""
    if not isinstance(expo, Jet) and _is_integer(float(expo)):
        k = int(expo)
        if not isinstance(base, Jet):
            if base == 0 and k < 0:
                raise DomainError("division by zero")
            return _guard(lambda: float(base) ** k)
        v = base.val
        if k == 0:
            return 1.0
        if v == 0.0 and k < 0:
            raise DomainError("division by zero")
        if k == 1:
            return base
        if k == 2:
            return base * base
        f1 = k * v ** (k - 1)
        f2 = k * (k - 1) * v ** (k - 2)
        return base._unary(v**k, f1, f2)
    if _value(base) <= 0.0:
        raise DomainError(f"non-integer power of non-positive base {_value(base)!r}")
    if not isinstance(expo, Jet) and not isinstance(base, Jet):
        return _guard(lambda: float(base) ** float(expo))
    if not isinstance(expo, Jet):
        c = float(expo)
        v = base.val
        return base._unary(_guard(lambda: v**c), c * v ** (c - 1.0), c * (c - 1.0) * v ** (c - 2.0))
    return exp(expo * log(base))


def _guard(fn: Callable[[], float]) -> float:
    try:
        out = fn()
    except OverflowError as exc:
        raise DomainError(f"overflow ({exc})") from None
    if isinstance(out, complex) or not math.isfinite(out):
        raise DomainError("non-finite result")
    return out


def sin(x):
    if isinstance(x, Jet):
        s, c = math.sin(x.val), math.cos(x.val)
        return x._unary(s, c, -s)
    return math.sin(x)


def cos(x):
    if isinstance(x, Jet):
        s, c = math.sin(x.val), math.cos(x.val)
        return x._unary(c, -s, -c)
    return math.cos(x)


def tan(x):
    v = _value(x)
    if math.cos(v) == 0.0:
        raise DomainError("tan at a pole")
    t = math.tan(v)
    if isinstance(x, Jet):
        sec2 = 1.0 + t * t
        return x._unary(t, sec2, 2.0 * t * sec2)
    return t


def exp(x):
    e = _guard(lambda: math.exp(_value(x)))
    if isinstance(x, Jet):
        return x._unary(e, e, e)
    return e


def log(x):
    v = _value(x)
    if v <= 0.0:
        raise DomainError(f"log of non-positive argument {v!r}")
    if isinstance(x, Jet):
        return x._unary(math.log(v), 1.0 / v, -1.0 / (v * v))
    return math.log(v)


def sqrt(x):
    v = _value(x)
    if isinstance(x, Jet):
        if v <= 0.0:
            raise DomainError(f"sqrt is not differentiable at {v!r}")
        r = math.sqrt(v)
        return x._unary(r, 0.5 / r, -0.25 / (r * v))
    if v < 0.0:
        raise DomainError(f"sqrt of negative argument {v!r}")
    return math.sqrt(v)


def fabs(x):
    v = _value(x)
    if isinstance(x, Jet):
        if v == 0.0:
            raise DomainError("abs is not differentiable at 0")
        sgn = 1.0 if v > 0.0 else -1.0
        return x._unary(abs(v), sgn, 0.0)
    return abs(v)


FUNCTIONS: dict[str, Callable] = {
    "sin": sin,
    "cos": cos,
    "tan": tan,
    "exp": exp,
    "log": log,
    "sqrt": sqrt,
    "abs": fabs,
}


# ---------------------------------------------------------------------------
# Scalar fields
# ---------------------------------------------------------------------------


@dataclass
class DerivativeBundle:
    """Value and partial derivatives of a field at one point.

    ``hess`` is the full Hessian over the ordered variables (q, w, s); the
    named blocks are views into it.  Base fields (functions of q only) have
    m = 0 and no s-variable.
    """

    value: float
    grad_q: np.ndarray
    grad_w: np.ndarray
    d_s: float
    hess: np.ndarray | None
    n: int
    m: int

    @property
    def hess_ww(self) -> np.ndarray:
        n, m = self.n, self.m
        return self.hess[n : n + m, n : n + m]

    @property
    def mixed_qw(self) -> np.ndarray:
        n, m = self.n, self.m
        return self.hess[:n, n : n + m]

    @property
    def mixed_sw(self) -> np.ndarray:
        n, m = self.n, self.m
        return self.hess[n + m, n : n + m]

    @property
    def hess_qq(self) -> np.ndarray:
        return self.hess[: self.n, : self.n]

    @property
    def gradient(self) -> np.ndarray:
        """All first partials in (q, w, s) order."""
        return np.concatenate([self.grad_q, self.grad_w, [self.d_s]])


class ScalarField:
    """A smooth real function of (q, w, s).

    ``body(q, w, s)`` must be written with the elementary functions of this
    module so that it accepts floats and jets alike.  A *base* field depends on
    q only; it is called as ``body(q)`` and reports derivatives in q alone.
    """

    def __init__(
        self,
        body: Callable,
        n: int,
        m: int = 0,
        *,
        base: bool = False,
        label: str = "",
    ):
        self.body = body
        self.n = n
        self.m = 0 if base else m
        self.base = base
        self.label = label

    @property
    def arity(self) -> tuple[int, int]:
        return (self.n, self.m)

    @property
    def size(self) -> int:
        """Number of seeded variables."""
        return self.n if self.base else self.n + self.m + 1

    def _check(self, q, w) -> None:
        if len(q) != self.n or (not self.base and len(w) != self.m):
            raise ValueError(
                f"field {self.label or '<anonymous>'} expects (n, m) = {self.arity}, "
                f"got ({len(q)}, {len(w)})"
            )

    def __call__(self, q, w=(), s: float = 0.0) -> float:
        self._check(q, w)
        q = [float(x) for x in q]
        if self.base:
            return float(self.body(q))
        return float(self.body(q, [float(x) for x in w], float(s)))

    def jet(self, q, w=(), s: float = 0.0, second: bool = True):
        """Evaluate on freshly seeded jets; returns a Jet or a float constant."""
        self._check(q, w)
        k = self.size
        qj = [Jet.variable(x, i, k, second) for i, x in enumerate(q)]
        if self.base:
            return self.body(qj)
        n = self.n
        wj = [Jet.variable(x, n + a, k, second) for a, x in enumerate(w)]
        sj = Jet.variable(s, k - 1, k, second)
        return self.body(qj, wj, sj)

    def bundle(self, q, w=(), s: float = 0.0, second: bool = True) -> DerivativeBundle:
        out = self.jet(q, w, s, second)
        k = self.size
        if isinstance(out, Jet):
            val, grad = out.val, out.grad
            hess = out.hess if second else None
        else:
            val, grad = float(out), np.zeros(k)
            hess = np.zeros((k, k)) if second else None
        n, m = self.n, self.m
        if self.base:
            return DerivativeBundle(float(val), grad[:n], np.zeros(0), 0.0, hess, n, 0)
        return DerivativeBundle(float(val), grad[:n], grad[n : n + m], float(grad[n + m]), hess, n, m)

    def __repr__(self) -> str:
        kind = "base" if self.base else f"m={self.m}"
        return f"ScalarField({self.label!r}, n={self.n}, {kind})"


def eval_with_derivatives(field: ScalarField, state, second: bool = True) -> DerivativeBundle:
    """Derivative bundle of ``field`` at a :class:`~contact_algebroid.algebroid.State`."""
    if field.base:
        return field.bundle(state.q, second=second)
    return field.bundle(state.q, state.w, state.s, second=second)


def _fd_steps(x: np.ndarray, h: float) -> np.ndarray:
    return h * np.maximum(1.0, np.abs(x))


def fd_crosscheck(field: ScalarField, q, w=(), s: float = 0.0, h: float = 1e-5) -> float:
    """Worst relative discrepancy between jet partials and central differences.

    First partials are compared against central differences of the value;
    second partials against central differences of the jet gradient.  Each
    error is measured relative to ``max(1, |exact|)``.
    """
    if h <= 0:
        raise ValueError("step must be positive")
    if field.base:
        x0 = np.asarray(q, dtype=float)
    else:
        x0 = np.concatenate([np.asarray(q, float), np.asarray(w, float), [float(s)]])
    n, m = field.n, field.m

    def split(x):
        if field.base:
            return (x,)
        return (x[:n], x[n : n + m], x[n + m])

    exact = field.bundle(*split(x0), second=True)
    grad0 = exact.gradient if not field.base else exact.grad_q
    hess0 = exact.hess
    steps = _fd_steps(x0, h)
    worst = 0.0
    for i in range(x0.size):
        e = np.zeros_like(x0)
        e[i] = steps[i]
        fp = field(*split(x0 + e))
        fm = field(*split(x0 - e))
        d1 = (fp - fm) / (2.0 * steps[i])
        worst = max(worst, abs(d1 - grad0[i]) / max(1.0, abs(grad0[i])))
        bp = field.bundle(*split(x0 + e), second=False)
        bm = field.bundle(*split(x0 - e), second=False)
        gp = bp.grad_q if field.base else bp.gradient
        gm = bm.grad_q if field.base else bm.gradient
        col = (gp - gm) / (2.0 * steps[i])
        err = np.abs(col - hess0[:, i]) / np.maximum(1.0, np.abs(hess0[:, i]))
        worst = max(worst, float(err.max(initial=0.0)))
    return worst


def constant_field(value: float, n: int, m: int = 0, *, base: bool = False) -> ScalarField:
    """A field returning ``value`` everywhere."""
    c = float(value)
    if base:
        return ScalarField(lambda q: c, n, base=True, label=repr(c))
    return ScalarField(lambda q, w, s: c, n, m, label=repr(c))


def seeded_points(rng: np.random.Generator, count: int, dim: int, radius: float = 1.0) -> np.ndarray:
    """``count`` uniform points in the cube [-radius, radius]^dim."""
    return rng.uniform(-radius, radius, size=(count, dim))


def as_vector(values: Sequence[float] | np.ndarray) -> np.ndarray:
    return np.asarray(values, dtype=float).reshape(-1)
