"""Forward-mode automatic differentiation with multi-tangent dual numbers.

A :class:`Dual` carries a value (scalar or ndarray) together with ``k``
tangent components, stored with the tangent index *leading*:
``tangents.shape == (k,) + np.shape(value)``. Keeping the tangent axis first
lets ordinary numpy broadcasting do most of the work, e.g. for ``a @ b`` the
tangent is simply ``ta @ b + a @ tb``.

All functions in this module accept plain floats/arrays as well and then
return plain results, so model code can be written once and evaluated either
with ordinary numbers or with duals.
"""

from __future__ import annotations

from typing import Any, Callable, Sequence

import numpy as np

__all__ = [
    "Dual",
    "DualDomainError",
    "lift",
    "constant",
    "value_of",
    "is_dual",
    "exp",
    "log",
    "sqrt",
    "sin",
    "cos",
    "atan2",
    "hypot",
    "absolute",
    "sigmoid",
    "softmax_pair",
    "bose",
    "x_over_expm1",
    "where",
    "stack",
    "concatenate",
    "einsum",
    "kron",
    "jacobian_forward",
]


class DualDomainError(ValueError):
    """Raised when a primitive is evaluated outside its domain."""


class Dual:
    """Value with ``k`` forward-mode tangents.

    A scalar ``Dual`` is the multi-tangent dual scalar; array-valued duals are
    the same object applied elementwise and are what the model builders use.
    """

    __slots__ = ("value", "tangents")
    # make ndarray defer to our reflected operators
    __array_ufunc__ = None

    def __init__(self, value: Any, tangents: Any):
        value = np.asarray(value, dtype=float)
        tangents = np.asarray(tangents, dtype=float)
        if tangents.shape[1:] != value.shape:
            raise ValueError(
                f"tangent shape {tangents.shape} does not match value shape {value.shape}"
            )
        self.value = value
        self.tangents = tangents

    # -- basic properties ------------------------------------------------
    @property
    def k(self) -> int:
        return self.tangents.shape[0]

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    @property
    def T(self) -> "Dual":
        return Dual(self.value.T, np.swapaxes(self.tangents, -1, -2) if self.ndim >= 2 else self.tangents)

    def __len__(self) -> int:
        return len(self.value)

    def __float__(self) -> float:
        return float(self.value)

    def __repr__(self) -> str:
        return f"Dual(value={self.value!r}, tangents={self.tangents!r})"

    def __getitem__(self, idx) -> "Dual":
        if not isinstance(idx, tuple):
            idx = (idx,)
        return Dual(self.value[idx], self.tangents[(slice(None),) + idx])

    def reshape(self, *shape) -> "Dual":
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        value = self.value.reshape(shape)
        return Dual(value, self.tangents.reshape((self.k,) + value.shape))

    def sum(self, axis=None) -> "Dual":
        if axis is None:
            axes = tuple(range(1, self.tangents.ndim))
            return Dual(self.value.sum(), self.tangents.sum(axis=axes))
        axis_t = axis + 1 if axis >= 0 else axis
        return Dual(self.value.sum(axis=axis), self.tangents.sum(axis=axis_t))

    # -- arithmetic ------------------------------------------------------
    def _check(self, other: "Dual") -> None:
        if other.k != self.k:
            raise ValueError(f"cannot mix duals with {self.k} and {other.k} tangents")

    def __neg__(self) -> "Dual":
        return Dual(-self.value, -self.tangents)

    def __pos__(self) -> "Dual":
        return self

    def __add__(self, other) -> "Dual":
        if isinstance(other, Dual):
            self._check(other)
            v = self.value + other.value
            return Dual(v, _bt(self.tangents, v) + _bt(other.tangents, v))
        v = self.value + np.asarray(other, dtype=float)
        return Dual(v, _bt(self.tangents, v))

    __radd__ = __add__

    def __sub__(self, other) -> "Dual":
        return self + (-other)

    def __rsub__(self, other) -> "Dual":
        return (-self) + other

    def __mul__(self, other) -> "Dual":
        if isinstance(other, Dual):
            self._check(other)
            v = self.value * other.value
            n = np.ndim(v)
            return Dual(
                v,
                _bt(_expand(self.tangents, n) * other.value, v) + _bt(self.value * _expand(other.tangents, n), v),
            )
        o = np.asarray(other, dtype=float)
        v = self.value * o
        return Dual(v, _bt(_expand(self.tangents, v.ndim) * o, v))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Dual":
        if isinstance(other, Dual):
            return self * other.reciprocal()
        o = np.asarray(other, dtype=float)
        if np.any(o == 0):
            raise DualDomainError("div: division by zero")
        return self * (1.0 / o)

    def __rtruediv__(self, other) -> "Dual":
        return self.reciprocal() * other

    def reciprocal(self) -> "Dual":
        if np.any(self.value == 0):
            raise DualDomainError("div: division by zero")
        inv = 1.0 / self.value
        return Dual(inv, -self.tangents * inv**2)

    def __pow__(self, p) -> "Dual":
        if isinstance(p, Dual):
            return exp(p * log(self))
        p = float(p)
        if p == 2.0:
            return self * self
        return Dual(self.value**p, p * self.value ** (p - 1.0) * self.tangents)

    def __matmul__(self, other) -> "Dual":
        if isinstance(other, Dual):
            self._check(other)
            return Dual(
                self.value @ other.value,
                self.tangents @ other.value + _const_matmul_tangent(self.value, other),
            )
        o = np.asarray(other, dtype=float)
        return Dual(self.value @ o, self.tangents @ o)

    def __rmatmul__(self, other) -> "Dual":
        o = np.asarray(other, dtype=float)
        return Dual(o @ self.value, _const_matmul_tangent(o, self))


def _const_matmul_tangent(a: np.ndarray, b: "Dual") -> np.ndarray:
    """Tangent of ``a @ b`` for constant ``a``, with the tangent axis kept first."""
    if b.ndim == 1:
        # (k, m) tangents: contract m against the last axis of a
        return b.tangents @ (a.T if a.ndim == 2 else a)
    return a @ b.tangents


def _expand(t: np.ndarray, ndim: int) -> np.ndarray:
    """Insert unit axes after the tangent axis so the value part has ``ndim`` dims."""
    extra = ndim - (t.ndim - 1)
    if extra <= 0:
        return t
    return t.reshape((t.shape[0],) + (1,) * extra + t.shape[1:])


def _bt(t: np.ndarray, v) -> np.ndarray:
    """Broadcast tangents ``t`` to the tangent shape of value ``v``."""
    shape = (t.shape[0],) + np.shape(v)
    if t.shape == shape:
        return t
    return np.broadcast_to(_expand(t, len(shape) - 1), shape)


# -- construction helpers ---------------------------------------------------

def lift(x, slot: int, k: int) -> Dual:
    """Seed ``x`` as independent variable number ``slot`` out of ``k``."""
    if not 0 <= slot < k:
        raise IndexError(f"slot {slot} out of range for {k} tangents")
    t = np.zeros(k)
    t[slot] = 1.0
    return Dual(float(x), t)


def constant(x, k: int) -> Dual:
    x = np.asarray(x, dtype=float)
    return Dual(x, np.zeros((k,) + x.shape))


def is_dual(x) -> bool:
    return isinstance(x, Dual)


def value_of(x):
    return x.value if isinstance(x, Dual) else x


def _k_of(xs) -> int | None:
    for x in xs:
        if isinstance(x, Dual):
            return x.k
    return None


# -- primitives -------------------------------------------------------------

def _unary(x, f: Callable, df: Callable):
    if isinstance(x, Dual):
        v = f(x.value)
        return Dual(v, df(x.value, v) * x.tangents)
    return f(np.asarray(x, dtype=float)) if np.ndim(x) else float(f(x))


def exp(x):
    return _unary(x, np.exp, lambda x, v: v)


def log(x):
    if np.any(value_of(x) <= 0):
        raise DualDomainError("ln: argument must be positive")
    return _unary(x, np.log, lambda x, v: 1.0 / x)


def sqrt(x):
    if np.any(value_of(x) <= 0):
        # derivative is unbounded at 0
        raise DualDomainError("sqrt: argument must be positive")
    return _unary(x, np.sqrt, lambda x, v: 0.5 / v)


def sin(x):
    return _unary(x, np.sin, lambda x, v: np.cos(x))


def cos(x):
    return _unary(x, np.cos, lambda x, v: -np.sin(x))


def absolute(x):
    """|x| with derivative sign(x) (0 at the kink)."""
    return _unary(x, np.abs, lambda x, v: np.sign(x))


def sigmoid(x):
    """Logistic function 1/(1+exp(-x))."""
    def f(x):
        return 0.5 * (1.0 + np.tanh(0.5 * x))

    return _unary(x, f, lambda x, v: v * (1.0 - v))


def x_over_expm1(x):
    """``x / (exp(x) - 1)``, continuous at 0 with value 1.

    A series is used near zero; the direct formula cancels badly there for
    both the value and the derivative.
    """

    def f(x):
        x = np.asarray(x, dtype=float)
        small = np.abs(x) < 1e-4
        xs = np.where(small, 1.0, x)
        with np.errstate(over="ignore"):
            out = np.where(small, 1.0 - x / 2.0 + x * x / 12.0, xs / np.expm1(xs))
        return out

    def df(x, v):
        x = np.asarray(x, dtype=float)
        small = np.abs(x) < 1e-4
        xs = np.where(small, 1.0, x)
        # d/dx x/(e^x-1) = v*(1/x - e^x/(e^x-1)), ratio written overflow-free
        pos = np.where(xs > 0, xs, 1.0)
        neg = np.where(xs < 0, xs, -1.0)
        ratio = np.where(xs > 0, -1.0 / np.expm1(-pos), np.exp(neg) / np.expm1(neg))
        big = v * (1.0 / xs - ratio)
        return np.where(small, -0.5 + x / 6.0, big)

    return _unary(x, f, df)


def bose(x):
    """Bose-Einstein occupation ``1/(exp(x)-1)`` for ``x = omega/T``."""
    if np.any(value_of(x) == 0):
        raise DualDomainError("bose: occupation diverges at zero frequency")

    def f(x):
        return 1.0 / np.expm1(x)

    return _unary(x, f, lambda x, v: -v * (1.0 + v))


def atan2(y, x):
    k = _k_of((y, x))
    yv, xv = value_of(y), value_of(x)
    v = np.arctan2(yv, xv)
    if k is None:
        return v if np.ndim(v) else float(v)
    r2 = np.asarray(xv * xv + yv * yv, dtype=float)
    safe = np.where(r2 == 0, 1.0, r2)
    t = np.zeros((k,) + np.shape(v))
    if isinstance(y, Dual):
        t = t + np.where(r2 == 0, 0.0, xv / safe) * _expand(y.tangents, np.ndim(v))
    if isinstance(x, Dual):
        t = t - np.where(r2 == 0, 0.0, yv / safe) * _expand(x.tangents, np.ndim(v))
    return Dual(v, t)


def hypot(a, b):
    """sqrt(a^2 + b^2); derivative taken as 0 at the origin."""
    k = _k_of((a, b))
    av, bv = value_of(a), value_of(b)
    v = np.hypot(av, bv)
    if k is None:
        return v if np.ndim(v) else float(v)
    safe = np.where(v == 0, 1.0, v)
    t = np.zeros((k,) + np.shape(v))
    if isinstance(a, Dual):
        t = t + np.where(v == 0, 0.0, av / safe) * _expand(a.tangents, np.ndim(v))
    if isinstance(b, Dual):
        t = t + np.where(v == 0, 0.0, bv / safe) * _expand(b.tangents, np.ndim(v))
    return Dual(v, t)


def softmax_pair(u0, u1):
    """Two-way softmax; returns ``(p0, p1)`` with ``p0 + p1 == 1``."""
    p0 = sigmoid(u0 - u1)
    return p0, 1.0 - p0


def where(cond, a, b):
    cond = np.asarray(cond, dtype=bool)
    k = _k_of((a, b))
    av, bv = value_of(a), value_of(b)
    v = np.where(cond, av, bv)
    if k is None:
        return v
    ta = _expand(a.tangents, v.ndim) if isinstance(a, Dual) else 0.0
    tb = _expand(b.tangents, v.ndim) if isinstance(b, Dual) else 0.0
    return Dual(v, np.where(cond, ta, tb) + np.zeros((k,) + v.shape))


def stack(items: Sequence, axis: int = 0):
    """np.stack for a mix of floats, arrays and duals."""
    k = _k_of(items)
    if k is None:
        return np.stack([np.asarray(i, dtype=float) for i in items], axis=axis)
    duals = [i if isinstance(i, Dual) else constant(i, k) for i in items]
    v = np.stack([d.value for d in duals], axis=axis)
    ax = axis + 1 if axis >= 0 else axis
    return Dual(v, np.stack([d.tangents for d in duals], axis=ax))


def concatenate(items: Sequence, axis: int = 0):
    """np.concatenate for a mix of arrays and duals."""
    k = _k_of(items)
    if k is None:
        return np.concatenate([np.asarray(i, dtype=float) for i in items], axis=axis)
    duals = [i if isinstance(i, Dual) else constant(i, k) for i in items]
    ax = axis + 1 if axis >= 0 else axis
    return Dual(
        np.concatenate([d.value for d in duals], axis=axis),
        np.concatenate([d.tangents for d in duals], axis=ax),
    )


def einsum(subscripts: str, *operands):
    """Product-rule einsum; at most one tangent axis is carried per term."""
    values = [value_of(o) for o in operands]
    out_value = np.einsum(subscripts, *values)
    k = _k_of(operands)
    if k is None:
        return out_value
    inputs, output = subscripts.replace(" ", "").split("->")
    inputs = inputs.split(",")
    used = set(subscripts)
    tan = next(c for c in "tzyxwvusrqpo" if c not in used)
    t = np.zeros((k,) + np.shape(out_value))
    for i, op in enumerate(operands):
        if not isinstance(op, Dual):
            continue
        subs = list(inputs)
        subs[i] = tan + subs[i]
        ops = list(values)
        ops[i] = op.tangents
        t = t + np.einsum(",".join(subs) + "->" + tan + output, *ops)
    return Dual(out_value, t)


def kron(a, b):
    """Kronecker product of two matrices (duals or arrays)."""
    if not (isinstance(a, Dual) or isinstance(b, Dual)):
        return np.kron(a, b)
    n, m = np.shape(value_of(a))
    p, q = np.shape(value_of(b))
    out = einsum("ij,kl->ikjl", a, b)
    return out.reshape(n * p, m * q)


def jacobian_forward(f: Callable, theta) -> np.ndarray:
    """Full Jacobian of a vector function by one multi-tangent forward pass.

    Returns an ``(n_outputs, len(theta))`` array whose column ``j`` is
    ``df/dtheta_j``.
    """
    theta = np.asarray(theta, dtype=float)
    k = theta.size
    x = Dual(theta, np.eye(k))
    out = f(x)
    if isinstance(out, Dual):
        t = out.tangents.reshape(k, -1)
        return t.T.copy()
    n = np.size(out)
    return np.zeros((n, k))
