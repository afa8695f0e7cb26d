"""
dual.py

Forward-mode dual numbers for derivatives of metric expressions.

A Dual holds a real part and a dual (derivative) part. Either part may
be a float, a numpy array, or another Dual, so nesting one Dual inside
another gives second derivatives. With vector seeds the dual part
carries the whole gradient at once:

    first order   x_k = Dual(x_k, e_k)
    second order  x_k = Dual(Dual(x_k, e_k), Dual(e_k[:, None], 0))

For the nested seed, f.real.real is the value, f.real.dual the
gradient (n,), and f.dual.dual the Hessian (n, n).
"""

from __future__ import annotations

import numpy as np


class Dual:
    """Dual number real + dual*eps with eps**2 = 0."""

    __slots__ = ("real", "dual")

    # numpy defers mixed operations to the Dual methods
    __array_ufunc__ = None

    def __init__(self, real, dual):
        self.real = real
        self.dual = dual

    def __repr__(self) -> str:
        return f"Dual({self.real!r}, {self.dual!r})"

    # ------------------------------------------------------------
    # arithmetic
    # ------------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.real + other.real, self.dual + other.dual)
        return Dual(self.real + other, self.dual)

    __radd__ = __add__

    def __neg__(self):
        return Dual(-self.real, -self.dual)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.real * other.real, self.real * other.dual + self.dual * other.real)
        return Dual(self.real * other, self.dual * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            inv = 1.0 / other.real
            return Dual(
                self.real * inv,
                (self.dual * other.real - self.real * other.dual) * (inv * inv),
            )
        return Dual(self.real / other, self.dual / other)

    def __rtruediv__(self, other):
        inv = 1.0 / self.real
        return Dual(other * inv, -other * self.dual * (inv * inv))

    def __pow__(self, exponent):
        if isinstance(exponent, Dual):
            return exp(exponent * ln(self))
        if exponent == 0:
            return Dual(power(self.real, 0.0), self.dual * 0.0)
        return Dual(power(self.real, exponent), exponent * power(self.real, exponent - 1) * self.dual)

    def __rpow__(self, base):
        return exp(self * ln(base))


# ------------------------------------------------------------
# ELEMENTARY FUNCTIONS (dispatch on Dual, fall back to numpy)
# ------------------------------------------------------------

def sin(x):
    if isinstance(x, Dual):
        return Dual(sin(x.real), cos(x.real) * x.dual)
    return np.sin(x)


def cos(x):
    if isinstance(x, Dual):
        return Dual(cos(x.real), -sin(x.real) * x.dual)
    return np.cos(x)


def sinh(x):
    if isinstance(x, Dual):
        return Dual(sinh(x.real), cosh(x.real) * x.dual)
    return np.sinh(x)


def cosh(x):
    if isinstance(x, Dual):
        return Dual(cosh(x.real), sinh(x.real) * x.dual)
    return np.cosh(x)


def exp(x):
    if isinstance(x, Dual):
        e = exp(x.real)
        return Dual(e, e * x.dual)
    return np.exp(x)


def ln(x):
    if isinstance(x, Dual):
        return Dual(ln(x.real), x.dual / x.real)
    return np.log(x)


def power(x, y):
    """x ** y for any mix of floats and Duals."""
    if isinstance(y, Dual):
        return exp(y * ln(x))
    if isinstance(x, Dual):
        return x ** y
    return np.power(x, y)


FUNCTIONS = {
    "sin": sin,
    "cos": cos,
    "sinh": sinh,
    "cosh": cosh,
    "exp": exp,
    "ln": ln,
}


# ------------------------------------------------------------
# SEEDING AND EXTRACTION
# ------------------------------------------------------------

def seed_first(point) -> list[Dual]:
    """Coordinates as first-order duals carrying unit gradient vectors."""
    point = np.asarray(point, dtype=float)
    eye = np.eye(point.size)
    return [Dual(float(point[k]), eye[k]) for k in range(point.size)]


def seed_second(point) -> list[Dual]:
    """Coordinates as nested duals carrying gradient and Hessian slots."""
    point = np.asarray(point, dtype=float)
    n = point.size
    eye = np.eye(n)
    zeros = np.zeros((n, n))
    return [
        Dual(Dual(float(point[k]), eye[k]), Dual(eye[k][:, None], zeros))
        for k in range(n)
    ]


def split_first(value, n: int) -> tuple[float, np.ndarray]:
    """(value, gradient) from a first-order result; constants have zero gradient."""
    if isinstance(value, Dual):
        return float(value.real), np.broadcast_to(np.asarray(value.dual, dtype=float), (n,)).copy()
    return float(value), np.zeros(n)


def split_second(value, n: int) -> tuple[float, np.ndarray, np.ndarray]:
    """(value, gradient, Hessian) from a nested second-order result."""
    if not isinstance(value, Dual):
        return float(value), np.zeros(n), np.zeros((n, n))
    inner, outer = value.real, value.dual
    if isinstance(inner, Dual):
        val = float(inner.real)
        grad = np.broadcast_to(np.asarray(inner.dual, dtype=float), (n,)).copy()
    else:
        val, grad = float(inner), np.zeros(n)
    if isinstance(outer, Dual):
        hess = np.broadcast_to(np.asarray(outer.dual, dtype=float), (n, n)).copy()
    else:
        hess = np.zeros((n, n))
    return val, grad, 0.5 * (hess + hess.T)
