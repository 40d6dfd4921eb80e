"""Exact scalars: rationals and elements of a quadratic field Q(sqrt d).

``QuadScalar`` keeps ``(a + b*sqrt(d)) / c`` as three Python ints with
``c > 0`` and ``gcd(a, b, c) == 1``, which makes equality a field-by-field
comparison and keeps the arithmetic at a single gcd per operation.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd, isqrt
import numbers

import mpmath

from .errors import DivisionByZero, MixedDiscriminant

Rational = Fraction

__all__ = [
    "Rational",
    "QuadScalar",
    "quad_arith",
    "quad_conjugate",
    "quad_embed",
    "is_squarefree",
    "as_quad",
]


def is_squarefree(d: int) -> bool:
    if d == 0:
        return False
    n = abs(d)
    k = 2
    while k * k <= n:
        if n % (k * k) == 0:
            return False
        k += 1
    return True


def _merge_d(d1: int, d2: int) -> int:
    if d1 == d2 or d2 == 1:
        return d1
    if d1 == 1:
        return d2
    raise MixedDiscriminant(f"cannot combine Q(sqrt {d1}) with Q(sqrt {d2})")


class QuadScalar:
    __slots__ = ("_a", "_b", "_c", "d")

    def __init__(self, rat=0, surd=0, d: int = 1):
        rat = Fraction(rat)
        surd = Fraction(surd)
        if d != 1 and not is_squarefree(d):
            raise ValueError(f"discriminant {d} is not square-free")
        if d == 1 and surd:
            # sqrt(1) == 1 collapses into the rational part
            rat += surd
            surd = Fraction(0)
        c = rat.denominator * surd.denominator // gcd(rat.denominator, surd.denominator)
        self._set(rat.numerator * (c // rat.denominator),
                  surd.numerator * (c // surd.denominator), c, d)

    def _set(self, a, b, c, d):
        g = gcd(a, b, c)
        if g != 1:
            a //= g
            b //= g
            c //= g
        self._a, self._b, self._c, self.d = a, b, c, d

    @classmethod
    def _raw(cls, a, b, c, d):
        obj = object.__new__(cls)
        if c < 0:
            a, b, c = -a, -b, -c
        obj._set(a, b, c, d)
        return obj

    @classmethod
    def sqrt(cls, d: int) -> "QuadScalar":
        """The generator sqrt(d) of the field."""
        if d == 1:
            return cls(1)
        return cls(0, 1, d)

    # -- components -------------------------------------------------------
    @property
    def rat_part(self) -> Fraction:
        return Fraction(self._a, self._c)

    @property
    def surd_part(self) -> Fraction:
        return Fraction(self._b, self._c)

    @property
    def discriminant(self) -> int:
        return self.d

    def is_rational(self) -> bool:
        return self._b == 0

    def __bool__(self):
        return self._a != 0 or self._b != 0

    def __eq__(self, other):
        if isinstance(other, QuadScalar):
            return (self._a == other._a and self._b == other._b and self._c == other._c
                    and (self._b == 0 or self.d == other.d))
        if isinstance(other, int):
            return self._b == 0 and self._c == 1 and self._a == other
        if isinstance(other, Fraction):
            return self._b == 0 and self._a == other.numerator and self._c == other.denominator
        return NotImplemented

    def __hash__(self):
        if self._b == 0:
            return hash(Fraction(self._a, self._c))
        return hash((self._a, self._b, self._c, self.d))

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, QuadScalar):
            other = _coerce(other)
            if other is NotImplemented:
                return other
        d = self.d if self.d == other.d else _merge_d(self.d, other.d)
        c1, c2 = self._c, other._c
        if c1 == c2:
            return QuadScalar._raw(self._a + other._a, self._b + other._b, c1, d)
        return QuadScalar._raw(self._a * c2 + other._a * c1,
                               self._b * c2 + other._b * c1, c1 * c2, d)

    __radd__ = __add__

    def __neg__(self):
        obj = object.__new__(QuadScalar)
        obj._a, obj._b, obj._c, obj.d = -self._a, -self._b, self._c, self.d
        return obj

    def __pos__(self):
        return self

    def __sub__(self, other):
        if not isinstance(other, QuadScalar):
            other = _coerce(other)
            if other is NotImplemented:
                return other
        return self + (-other)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        if not isinstance(other, QuadScalar):
            if isinstance(other, int):
                return QuadScalar._raw(self._a * other, self._b * other, self._c, self.d)
            other = _coerce(other)
            if other is NotImplemented:
                return other
        d = self.d if self.d == other.d else _merge_d(self.d, other.d)
        a1, b1, a2, b2 = self._a, self._b, other._a, other._b
        if b1 == 0 and b2 == 0:
            return QuadScalar._raw(a1 * a2, 0, self._c * other._c, d)
        return QuadScalar._raw(a1 * a2 + d * b1 * b2, a1 * b2 + a2 * b1,
                               self._c * other._c, d)

    __rmul__ = __mul__

    def inverse(self) -> "QuadScalar":
        # 1/((a + b s)/c) = c (a - b s) / (a^2 - d b^2)
        a, b, c = self._a, self._b, self._c
        norm = a * a - self.d * b * b
        if norm == 0:
            raise DivisionByZero("division by zero in Q(sqrt d)")
        return QuadScalar._raw(c * a, -c * b, norm, self.d)

    def __truediv__(self, other):
        if not isinstance(other, QuadScalar):
            other = _coerce(other)
            if other is NotImplemented:
                return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return other * self.inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        result = QuadScalar(1, 0, self.d)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def conjugate(self) -> "QuadScalar":
        return QuadScalar._raw(self._a, -self._b, self._c, self.d)

    def norm(self) -> Fraction:
        return Fraction(self._a * self._a - self.d * self._b * self._b, self._c * self._c)

    def to_complex(self) -> complex:
        if self._b == 0:
            return complex(Fraction(self._a, self._c))
        root = complex(abs(self.d) ** 0.5) if self.d > 0 else complex(0, abs(self.d) ** 0.5)
        return (self._a + self._b * root) / self._c

    def embed(self, precision: int = 53):
        return quad_embed(self, precision)

    def __repr__(self):
        if self._b == 0:
            return f"QuadScalar({self.rat_part})"
        return f"QuadScalar({self.rat_part}, {self.surd_part}, d={self.d})"

    def __str__(self):
        r, s = self.rat_part, self.surd_part
        if not s:
            return str(r)
        surd = f"{s}*sqrt({self.d})" if s not in (1, -1) else ("" if s == 1 else "-") + f"sqrt({self.d})"
        if not r:
            return surd
        return f"{r}{'+' if s > 0 else ''}{surd}"


def _coerce(x):
    if isinstance(x, (int, Fraction)):
        return as_quad(x)
    return NotImplemented


def as_quad(x, d: int = 1) -> QuadScalar:
    if isinstance(x, QuadScalar):
        return x
    if isinstance(x, (int, Fraction)):
        x = Fraction(x)
        return QuadScalar._raw(x.numerator, 0, x.denominator, d)
    if isinstance(x, numbers.Rational):
        return QuadScalar(Fraction(x.numerator, x.denominator), 0, d)
    raise TypeError(f"cannot convert {type(x).__name__} to an exact scalar")


_OPS = {
    "add": lambda x, y: x + y,
    "sub": lambda x, y: x - y,
    "mul": lambda x, y: x * y,
    "div": lambda x, y: x / y,
}


def quad_arith(op: str, x, y) -> QuadScalar:
    try:
        fn = _OPS[op]
    except KeyError:
        raise ValueError(f"unknown operation {op!r}") from None
    return fn(as_quad(x), as_quad(y))


def quad_conjugate(x) -> QuadScalar:
    return as_quad(x).conjugate()


def quad_embed(x, precision: int = 53):
    """Numerical value of ``x``.

    Returns a Python ``complex`` for ``precision <= 53`` and an ``mpmath.mpc``
    carrying ``precision`` bits otherwise. Negative discriminants use the
    principal root ``i*sqrt(|d|)``.
    """
    if precision < 53:
        raise ValueError("precision must be at least 53 bits")
    x = as_quad(x)
    if precision == 53:
        return x.to_complex()
    with mpmath.workprec(precision + 10):
        d = x.d
        if x._b == 0:
            val = mpmath.mpc(mpmath.mpf(x._a) / x._c)
        else:
            r = isqrt(abs(d))
            root = mpmath.mpf(r) if r * r == abs(d) else mpmath.sqrt(abs(d))
            if d < 0:
                root = mpmath.mpc(0, root)
            val = (x._a + x._b * root) / mpmath.mpf(x._c)
        val = mpmath.mpc(val)
    with mpmath.workprec(precision):
        return +val
