"""Forward-mode jets: a value together with its gradient and (optionally) Hessian.

A :class:`Jet` carries exact first and second derivatives through arithmetic,
so evaluating an expression tree on seeded jets gives derivatives that are
exact up to floating-point rounding.  Order-1 jets have ``hess is None``.

Jets mix freely with plain floats.  All Hessian updates are assembled from
symmetric pieces, so ``hess`` is exactly symmetric at every step.
"""

from __future__ import annotations

import math

import numpy as np


class JetDomainError(ArithmeticError):
    """Raised when a jet operation leaves the domain of the function."""


class Jet:
    __slots__ = ("value", "grad", "hess")

    def __init__(self, value: float, grad: np.ndarray, hess: np.ndarray | None = None):
        self.value = float(value)
        self.grad = grad
        self.hess = hess

    # construction -----------------------------------------------------------------

    @classmethod
    def constant(cls, value: float, m: int, order: int = 1) -> "Jet":
        return cls(value, np.zeros(m), np.zeros((m, m)) if order >= 2 else None)

    @classmethod
    def variable(cls, value: float, index: int, m: int, order: int = 1) -> "Jet":
        g = np.zeros(m)
        g[index] = 1.0
        return cls(value, g, np.zeros((m, m)) if order >= 2 else None)

    @classmethod
    def seed(cls, values, order: int = 1) -> list["Jet"]:
        """One independent jet per entry of ``values``."""
        m = len(values)
        return [cls.variable(v, i, m, order) for i, v in enumerate(values)]

    @property
    def order(self) -> int:
        return 1 if self.hess is None else 2

    @property
    def size(self) -> int:
        return self.grad.shape[0]

    def __repr__(self) -> str:
        return f"Jet(value={self.value!r}, grad={self.grad!r}, hess={self.hess!r})"

    # chain rules ------------------------------------------------------------------

    def apply(self, f: float, df: float, d2f: float) -> "Jet":
        """Compose a scalar function with value ``f`` and derivatives ``df``, ``d2f``."""
        g = df * self.grad
        if self.hess is None:
            return Jet(f, g)
        return Jet(f, g, df * self.hess + d2f * np.outer(self.grad, self.grad))

    @staticmethod
    def apply2(a: "Jet", b: "Jet", f, fa, fb, faa, fbb, fab) -> "Jet":
        """Compose a two-argument function given its partial derivatives."""
        g = fa * a.grad + fb * b.grad
        if a.hess is None or b.hess is None:
            return Jet(f, g)
        ab = np.outer(a.grad, b.grad)
        h = (
            fa * a.hess
            + fb * b.hess
            + faa * np.outer(a.grad, a.grad)
            + fbb * np.outer(b.grad, b.grad)
            + fab * (ab + ab.T)
        )
        return Jet(f, g, h)

    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet.constant(other, self.size, self.order)

    # arithmetic -------------------------------------------------------------------

    def __neg__(self) -> "Jet":
        return Jet(-self.value, -self.grad, None if self.hess is None else -self.hess)

    def __pos__(self) -> "Jet":
        return self

    def __add__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            return Jet(self.value + other, self.grad, self.hess)
        h = None if self.hess is None or other.hess is None else self.hess + other.hess
        return Jet(self.value + other.value, self.grad + other.grad, h)

    __radd__ = __add__

    def __sub__(self, other) -> "Jet":
        return self + (-other)

    def __rsub__(self, other) -> "Jet":
        return (-self) + other

    def __mul__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            other = float(other)
            return Jet(
                self.value * other,
                self.grad * other,
                None if self.hess is None else self.hess * other,
            )
        a, b = self, other
        return Jet.apply2(a, b, a.value * b.value, b.value, a.value, 0.0, 0.0, 1.0)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        v = self.value
        if v == 0.0:
            raise JetDomainError("division by zero")
        r = 1.0 / v
        return self.apply(r, -r * r, 2.0 * r * r * r)

    def __truediv__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            if other == 0:
                raise JetDomainError("division by zero")
            return self * (1.0 / other)
        return self * other.reciprocal()

    def __rtruediv__(self, other) -> "Jet":
        return self.reciprocal() * other

    def __pow__(self, other) -> "Jet":
        if isinstance(other, Jet):
            return jet_pow(self, other)
        return self.powc(float(other))

    def __rpow__(self, other) -> "Jet":
        return jet_pow(self._lift(other), self)

    def powc(self, c: float) -> "Jet":
        """``self ** c`` for a constant exponent."""
        v = self.value
        if c == 0.0:
            return self.apply(1.0, 0.0, 0.0)
        if c == 1.0:
            return self
        if v == 0.0:
            if c < 0.0:
                raise JetDomainError("0 raised to a negative power")
            # derivatives of v**c at 0 are finite only for integer c >= 2 (or c == 1)
            if c == 2.0:
                return self.apply(0.0, 0.0, 2.0)
            if c.is_integer() and c > 2.0:
                return self.apply(0.0, 0.0, 0.0)
            raise JetDomainError(f"derivative of x^{c!r} undefined at x = 0")
        if v < 0.0 and not c.is_integer():
            raise JetDomainError(f"negative base raised to non-integer power {c!r}")
        return self.apply(v**c, c * v ** (c - 1.0), c * (c - 1.0) * v ** (c - 2.0))


def jet_pow(a: Jet, b: Jet) -> Jet:
    """``a ** b`` where the exponent carries derivatives; requires ``a > 0``."""
    if not np.any(b.grad) and (b.hess is None or not np.any(b.hess)):
        return a.powc(b.value)
    if a.value <= 0.0:
        raise JetDomainError("non-positive base raised to a variable power")
    return exp(b * log(a))


# elementary functions on floats or jets ------------------------------------------------


def sin(x):
    if isinstance(x, Jet):
        s, c = math.sin(x.value), math.cos(x.value)
        return x.apply(s, c, -s)
    return math.sin(x)


def cos(x):
    if isinstance(x, Jet):
        s, c = math.sin(x.value), math.cos(x.value)
        return x.apply(c, -s, -c)
    return math.cos(x)


def tan(x):
    if isinstance(x, Jet):
        t = math.tan(x.value)
        sec2 = 1.0 + t * t
        return x.apply(t, sec2, 2.0 * t * sec2)
    return math.tan(x)


def exp(x):
    if isinstance(x, Jet):
        e = math.exp(x.value)
        return x.apply(e, e, e)
    return math.exp(x)


def log(x):
    v = x.value if isinstance(x, Jet) else x
    if v <= 0.0:
        raise JetDomainError("logarithm of a non-positive number")
    if isinstance(x, Jet):
        return x.apply(math.log(v), 1.0 / v, -1.0 / (v * v))
    return math.log(v)


def sqrt(x):
    v = x.value if isinstance(x, Jet) else x
    if v < 0.0:
        raise JetDomainError("square root of a negative number")
    if isinstance(x, Jet):
        if v == 0.0:
            raise JetDomainError("derivative of sqrt undefined at 0")
        s = math.sqrt(v)
        return x.apply(s, 0.5 / s, -0.25 / (s * v))
    return math.sqrt(v)


def atan2(y, x):
    if not isinstance(y, Jet) and not isinstance(x, Jet):
        return math.atan2(y, x)
    if not isinstance(y, Jet):
        y = x._lift(y)
    if not isinstance(x, Jet):
        x = y._lift(x)
    yv, xv = y.value, x.value
    r2 = xv * xv + yv * yv
    if r2 == 0.0:
        raise JetDomainError("atan2 derivative undefined at the origin")
    r4 = r2 * r2
    return Jet.apply2(
        y,
        x,
        math.atan2(yv, xv),
        xv / r2,
        -yv / r2,
        -2.0 * xv * yv / r4,
        2.0 * xv * yv / r4,
        (yv * yv - xv * xv) / r4,
    )


def value_of(x) -> float:
    return x.value if isinstance(x, Jet) else float(x)
