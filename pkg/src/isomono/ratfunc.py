"""Sparse multivariate polynomials and reduced rational functions.

Polynomials are dicts mapping exponent tuples to ``QuadScalar``
coefficients. All polynomials taking part in one operation are first
aligned to a common generator tuple; ``z`` always comes first, the
remaining names keep their order of first appearance.

The gcd is recursive: monomial content is split off, variables that only
occur in one argument are eliminated through contents, and the rest goes
through a subresultant remainder sequence in one main variable.
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Iterable, Mapping

import mpmath

from .errors import DivisionByZero, PoleHit, UnknownVariable
from .exactnum import QuadScalar, as_quad

__all__ = [
    "MPoly",
    "RatFunc",
    "poly_gcd",
    "rf_arith",
    "rf_derive",
    "rf_eval",
    "rf_equal",
    "merge_gens",
]

_ONE = QuadScalar(1)
_ZERO = QuadScalar(0)


# ---------------------------------------------------------------------------
# dict-level kernels; every dict in one call shares the exponent length
# ---------------------------------------------------------------------------

def _grlex_key(e):
    return (sum(e), e)


def _lead_grlex(p):
    return max(p, key=_grlex_key)


def _add(p, q):
    if len(p) < len(q):
        p, q = q, p
    r = dict(p)
    for e, c in q.items():
        v = r.get(e)
        if v is None:
            r[e] = c
        else:
            v = v + c
            if v:
                r[e] = v
            else:
                del r[e]
    return r


def _neg(p):
    return {e: -c for e, c in p.items()}


def _sub(p, q):
    r = dict(p)
    for e, c in q.items():
        v = r.get(e)
        if v is None:
            r[e] = -c
        else:
            v = v - c
            if v:
                r[e] = v
            else:
                del r[e]
    return r


def _scale(p, c):
    if not c:
        return {}
    if c == 1:
        return dict(p)
    return {e: v * c for e, v in p.items()}


def _mul(p, q):
    if not p or not q:
        return {}
    if len(p) < len(q):
        p, q = q, p
    if len(q) == 1:
        (eq, cq), = q.items()
        if not any(eq):
            return _scale(p, cq)
        return {tuple(x + y for x, y in zip(ep, eq)): cp * cq for ep, cp in p.items()}
    r = {}
    get = r.get
    for ep, cp in p.items():
        for eq, cq in q.items():
            e = tuple(x + y for x, y in zip(ep, eq))
            v = get(e)
            r[e] = cp * cq if v is None else v + cp * cq
    return {e: c for e, c in r.items() if c}


def _pow(p, k, n):
    result = {(0,) * n: _ONE}
    base = p
    while k:
        if k & 1:
            result = _mul(result, base)
        k >>= 1
        if k:
            base = _mul(base, base)
    return result


def _const(c, n):
    return {(0,) * n: as_quad(c)} if c else {}


def _is_const(p):
    return not p or (len(p) == 1 and not any(next(iter(p))))


def _trydiv(p, q):
    """Exact quotient ``p / q`` or None when ``q`` does not divide ``p``."""
    if not q:
        raise DivisionByZero("polynomial division by zero")
    if not p:
        return {}
    if len(q) == 1:
        (eq, cq), = q.items()
        inv = cq.inverse()
        out = {}
        for e, c in p.items():
            d = tuple(x - y for x, y in zip(e, eq))
            if d and min(d) < 0:
                return None
            out[d] = c * inv
        return out
    lq = max(q)
    inv = q[lq].inverse()
    rest = [(e, c) for e, c in q.items() if e != lq]
    r = dict(p)
    quo = {}
    while r:
        lr = max(r)
        d = tuple(x - y for x, y in zip(lr, lq))
        if d and min(d) < 0:
            return None
        t = r.pop(lr) * inv
        quo[d] = t
        for e, c in rest:
            m = tuple(x + y for x, y in zip(e, d))
            v = r.get(m)
            if v is None:
                r[m] = -(c * t)
            else:
                v = v - c * t
                if v:
                    r[m] = v
                else:
                    del r[m]
    return quo


def _divexact(p, q):
    out = _trydiv(p, q)
    if out is None:
        raise ArithmeticError("inexact polynomial division")
    return out


def _monic(p):
    if not p:
        return {}
    lc = p[_lead_grlex(p)]
    if lc == 1:
        return p
    return _scale(p, lc.inverse())


def _degrees(p, n):
    hi = [0] * n
    lo = None
    for e in p:
        if lo is None:
            lo = list(e)
        for i, x in enumerate(e):
            if x > hi[i]:
                hi[i] = x
            if x < lo[i]:
                lo[i] = x
    return hi, lo or [0] * n


def _coeffs_in(p, i):
    """Split ``p`` by powers of variable ``i``; coefficients have exponent 0 there."""
    out = {}
    for e, c in p.items():
        k = e[i]
        out.setdefault(k, {})[e[:i] + (0,) + e[i + 1:]] = c
    return out


def _shift_var(p, i, k):
    if k == 0:
        return p
    return {e[:i] + (e[i] + k,) + e[i + 1:]: c for e, c in p.items()}


def _from_coeffs(cs, i):
    out = {}
    for k, cp in cs.items():
        for e, c in cp.items():
            out[e[:i] + (k,) + e[i + 1:]] = c
    return out


def _content_in(p, i, n):
    cs = list(_coeffs_in(p, i).values())
    cs.sort(key=len)
    g = cs[0]
    for c in cs[1:]:
        if _is_const(g):
            break
        g = _gcd(g, c, n)
    return _monic(g)


def _univariate_gcd(p, q, i, n):
    # Euclid over the coefficient field in the single variable i
    def dense(d):
        deg = max(e[i] for e in d)
        out = [_ZERO] * (deg + 1)
        for e, c in d.items():
            out[e[i]] = c
        return out

    a, b = dense(p), dense(q)
    if len(a) < len(b):
        a, b = b, a
    while b and any(b):
        while b and not b[-1]:
            b.pop()
        if not b:
            break
        inv = b[-1].inverse()
        r = list(a)
        while len(r) >= len(b):
            t = r[-1] * inv
            if t:
                off = len(r) - len(b)
                for j, c in enumerate(b):
                    r[off + j] = r[off + j] - t * c
            r.pop()
            while r and not r[-1]:
                r.pop()
        a, b = b, r
    while a and not a[-1]:
        a.pop()
    inv = a[-1].inverse()
    base = [0] * n
    out = {}
    for k, c in enumerate(a):
        if c:
            e = list(base)
            e[i] = k
            out[tuple(e)] = c * inv
    return out


def _prem(A, B, i):
    """Pseudo-remainder of A by B in variable i (coefficient-split form)."""
    dB = max(B)
    lcB = B[dB]
    R = dict(A)
    dR = max(R) if R else -1
    e = dR - dB + 1
    while R and dR >= dB:
        lcR = R.pop(dR)
        s = dR - dB
        R = {k: _mul(c, lcB) for k, c in R.items()}
        for k, c in B.items():
            if k == dB:
                continue
            v = R.get(k + s, {})
            v = _sub(v, _mul(lcR, c))
            if v:
                R[k + s] = v
            else:
                R.pop(k + s, None)
        R = {k: c for k, c in R.items() if c}
        e -= 1
        dR = max(R) if R else -1
    if e > 0 and R:
        f = lcB
        for _ in range(e - 1):
            f = _mul(f, lcB)
        R = {k: _mul(c, f) for k, c in R.items()}
    return R


def _subresultant_gcd(p, q, i, n):
    """gcd of p, q primitive in variable i (up to a unit)."""
    A = _coeffs_in(p, i)
    B = _coeffs_in(q, i)
    if max(A) < max(B):
        A, B = B, A
    one = _const(1, n)
    g = one
    h = one
    while True:
        delta = max(A) - max(B)
        R = _prem(A, B, i)
        if not R:
            break
        if max(R) == 0:
            return one
        A = B
        div = _mul(g, _pow(h, delta, n)) if delta else g
        B = {k: _divexact(c, div) for k, c in R.items()}
        g = A[max(A)]
        if delta == 0:
            pass
        elif delta == 1:
            h = g
        else:
            h = _divexact(_pow(g, delta, n), _pow(h, delta - 1, n))
    res = _from_coeffs(B, i)
    cont = _content_in(res, i, n)
    if not _is_const(cont):
        res = _divexact(res, cont)
    return res


def _gcd(p, q, n):
    if not p:
        return _monic(q)
    if not q:
        return _monic(p)
    if p == q:
        return _monic(p)
    hp, lp = _degrees(p, n)
    hq, lq = _degrees(q, n)
    mono = tuple(min(x, y) for x, y in zip(lp, lq))
    if any(lp):
        p = {tuple(x - y for x, y in zip(e, lp)): c for e, c in p.items()}
        hp = [x - y for x, y in zip(hp, lp)]
    if any(lq):
        q = {tuple(x - y for x, y in zip(e, lq)): c for e, c in q.items()}
        hq = [x - y for x, y in zip(hq, lq)]
    monopart = {mono: _ONE}
    if _is_const(p) or _is_const(q):
        return monopart
    vp = {k for k in range(n) if hp[k]}
    vq = {k for k in range(n) if hq[k]}
    only = (vp - vq) or (vq - vp)
    if only:
        k = min(only)
        if k in vp:
            g = _gcd(_content_in(p, k, n), q, n)
        else:
            g = _gcd(p, _content_in(q, k, n), n)
        return _mul(monopart, g)
    if len(vp) == 1:
        (k,) = vp
        return _mul(monopart, _univariate_gcd(p, q, k, n))
    # q | p or p | q short-cuts the remainder sequence in the frequent
    # "denominator divides denominator" situation
    small, big = (p, q) if sum(hp) <= sum(hq) else (q, p)
    if _trydiv(big, small) is not None:
        return _mul(monopart, _monic(small))
    k = min(vp, key=lambda j: (max(hp[j], hq[j]), j))
    cp = _content_in(p, k, n)
    cq = _content_in(q, k, n)
    c = _gcd(cp, cq, n)
    pp = p if _is_const(cp) else _divexact(p, cp)
    qq = q if _is_const(cq) else _divexact(q, cq)
    g = _subresultant_gcd(pp, qq, k, n)
    return _monic(_mul(monopart, _mul(c, g)))


def _diff(p, i):
    out = {}
    for e, c in p.items():
        k = e[i]
        if k:
            out[e[:i] + (k - 1,) + e[i + 1:]] = c * k
    return out


def _subs(p, i, val, n):
    """Substitute variable i by the dict polynomial ``val`` (Horner)."""
    cs = _coeffs_in(p, i)
    if not cs:
        return {}
    deg = max(cs)
    acc = cs.get(deg, {})
    for k in range(deg - 1, -1, -1):
        acc = _mul(acc, val)
        c = cs.get(k)
        if c:
            acc = _add(acc, c)
    return acc


# ---------------------------------------------------------------------------
# generator bookkeeping
# ---------------------------------------------------------------------------

def merge_gens(g1: tuple, g2: tuple) -> tuple:
    if g1 == g2:
        return g1
    seen = list(g1)
    for g in g2:
        if g not in seen:
            seen.append(g)
    if "z" in seen:
        seen.remove("z")
        seen.insert(0, "z")
    return tuple(seen)


def _reindex(terms, src: tuple, dst: tuple):
    if src == dst:
        return terms
    pos = [dst.index(g) for g in src]
    m = len(dst)
    out = {}
    for e, c in terms.items():
        ne = [0] * m
        for j, x in zip(pos, e):
            ne[j] = x
        out[tuple(ne)] = c
    return out


class MPoly:
    __slots__ = ("gens", "terms")

    def __init__(self, gens: Iterable[str], terms: Mapping | None = None):
        self.gens = tuple(gens)
        if terms is None:
            self.terms = {}
        else:
            self.terms = {tuple(e): as_quad(c) for e, c in terms.items() if c}

    @classmethod
    def _wrap(cls, gens, terms):
        obj = object.__new__(cls)
        obj.gens = gens
        obj.terms = terms
        return obj

    @classmethod
    def const(cls, c, gens: Iterable[str] = ()):
        gens = tuple(gens)
        return cls._wrap(gens, _const(c, len(gens)))

    @classmethod
    def var(cls, name: str, gens: Iterable[str] | None = None):
        gens = tuple(gens) if gens is not None else (name,)
        if name not in gens:
            gens = merge_gens(gens, (name,))
        e = tuple(1 if g == name else 0 for g in gens)
        return cls._wrap(gens, {e: _ONE})

    # -- structure --------------------------------------------------------
    @property
    def nvars(self):
        return len(self.gens)

    def lift(self, gens: tuple) -> "MPoly":
        gens = tuple(gens)
        if gens == self.gens:
            return self
        missing = [g for g in self.gens if g not in gens and self.degree(g) > 0]
        if missing:
            raise UnknownVariable(f"variables {missing} not in target generators {gens}")
        keep = [g for g in self.gens if g in gens]
        src = self.gens
        if len(keep) != len(src):
            idx = [src.index(g) for g in keep]
            terms = {tuple(e[j] for j in idx): c for e, c in self.terms.items()}
            return MPoly._wrap(gens, _reindex(terms, tuple(keep), gens))
        return MPoly._wrap(gens, _reindex(self.terms, src, gens))

    def _align(self, other):
        if isinstance(other, MPoly):
            if other.gens == self.gens:
                return self.gens, self.terms, other.terms
            gens = merge_gens(self.gens, other.gens)
            return gens, _reindex(self.terms, self.gens, gens), _reindex(other.terms, other.gens, gens)
        c = as_quad(other)
        return self.gens, self.terms, _const(c, len(self.gens))

    def is_zero(self):
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def is_constant(self):
        return _is_const(self.terms)

    def constant_value(self) -> QuadScalar:
        if not self.terms:
            return _ZERO
        if not self.is_constant():
            raise ValueError("polynomial is not constant")
        return next(iter(self.terms.values()))

    def degree(self, var: str | None = None) -> int:
        if not self.terms:
            return -1
        if var is None:
            return max(sum(e) for e in self.terms)
        if var not in self.gens:
            return 0
        i = self.gens.index(var)
        return max(e[i] for e in self.terms)

    def free_vars(self) -> tuple:
        hi, _ = _degrees(self.terms, len(self.gens))
        return tuple(g for g, d in zip(self.gens, hi) if d)

    def leading_term(self):
        e = _lead_grlex(self.terms)
        return e, self.terms[e]

    def monic(self) -> "MPoly":
        return MPoly._wrap(self.gens, _monic(self.terms))

    def coefficients(self, var: str) -> dict:
        """Coefficients as polynomials (same generators) keyed by power of ``var``."""
        if var not in self.gens:
            return {0: self} if self.terms else {}
        i = self.gens.index(var)
        return {k: MPoly._wrap(self.gens, c) for k, c in _coeffs_in(self.terms, i).items()}

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, (MPoly, QuadScalar, int, Fraction)):
            return NotImplemented
        gens, p, q = self._align(other)
        return MPoly._wrap(gens, _add(p, q))

    __radd__ = __add__

    def __neg__(self):
        return MPoly._wrap(self.gens, _neg(self.terms))

    def __sub__(self, other):
        if not isinstance(other, (MPoly, QuadScalar, int, Fraction)):
            return NotImplemented
        gens, p, q = self._align(other)
        return MPoly._wrap(gens, _sub(p, q))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, MPoly):
            gens, p, q = self._align(other)
            return MPoly._wrap(gens, _mul(p, q))
        if isinstance(other, (QuadScalar, int, Fraction)):
            return MPoly._wrap(self.gens, _scale(self.terms, as_quad(other)))
        return NotImplemented

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power of a polynomial")
        return MPoly._wrap(self.gens, _pow(self.terms, k, len(self.gens)))

    def divexact(self, other) -> "MPoly":
        gens, p, q = self._align(other)
        out = _trydiv(p, q)
        if out is None:
            raise ArithmeticError("polynomial does not divide exactly")
        return MPoly._wrap(gens, out)

    def trydiv(self, other):
        gens, p, q = self._align(other)
        out = _trydiv(p, q)
        return None if out is None else MPoly._wrap(gens, out)

    def __eq__(self, other):
        if isinstance(other, MPoly):
            if self.gens == other.gens:
                return self.terms == other.terms
            _, p, q = self._align(other)
            return p == q
        if isinstance(other, (int, Fraction, QuadScalar)):
            return self.terms == _const(as_quad(other), len(self.gens))
        return NotImplemented

    def __hash__(self):
        # generator-independent so that aligned copies hash alike
        return hash(frozenset((tuple((g, x) for g, x in zip(self.gens, e) if x), c)
                              for e, c in self.terms.items()))

    def derive(self, var: str) -> "MPoly":
        if var not in self.gens:
            return MPoly._wrap(self.gens, {})
        return MPoly._wrap(self.gens, _diff(self.terms, self.gens.index(var)))

    def subs(self, var: str, value) -> "MPoly":
        """Exact substitution of a polynomial (or scalar) for ``var``."""
        if var not in self.gens:
            return self
        if not isinstance(value, MPoly):
            value = MPoly.const(value, self.gens)
        gens = merge_gens(self.gens, value.gens)
        p = _reindex(self.terms, self.gens, gens)
        v = _reindex(value.terms, value.gens, gens)
        return MPoly._wrap(gens, _subs(p, gens.index(var), v, len(gens)))

    def eval_exact(self, assignment: Mapping[str, object]) -> QuadScalar:
        vals = [as_quad(assignment[g]) if g in assignment else None for g in self.gens]
        total = _ZERO
        for e, c in self.terms.items():
            t = c
            for v, k in zip(vals, e):
                if k:
                    if v is None:
                        raise UnknownVariable("assignment misses a variable")
                    t = t * v ** k
            total = total + t
        return total

    def eval_numeric(self, values: list):
        """Evaluate at numeric values aligned with ``gens``; returns (value, scale)."""
        total = 0j
        scale = 0.0
        for e, c in self.terms.items():
            t = c.to_complex()
            for v, k in zip(values, e):
                if k:
                    t = t * v ** k
            total = total + t
            scale = scale + abs(t)
        return total, scale

    def __repr__(self):
        return f"MPoly({self.gens}, {self!s})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for e in sorted(self.terms, key=_grlex_key, reverse=True):
            c = self.terms[e]
            mono = "*".join(g if k == 1 else f"{g}^{k}" for g, k in zip(self.gens, e) if k)
            if not mono:
                parts.append(f"({c})" if not c.is_rational() else str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"({c})*{mono}" if not c.is_rational() else f"{c}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")


def _coeff_mp(c: QuadScalar):
    from .exactnum import quad_embed
    return quad_embed(c, mpmath.mp.prec)


def poly_gcd(p: MPoly, q: MPoly) -> MPoly:
    """A gcd of ``p`` and ``q`` with leading (graded-lex) coefficient 1."""
    if not isinstance(q, MPoly):
        q = MPoly.const(q, p.gens)
    gens, a, b = p._align(q)
    return MPoly._wrap(gens, _gcd(a, b, len(gens)))


# ---------------------------------------------------------------------------
# rational functions
# ---------------------------------------------------------------------------

class RatFunc:
    __slots__ = ("num", "den")

    def __init__(self, num, den=None):
        if not isinstance(num, MPoly):
            gens = den.gens if isinstance(den, MPoly) else ()
            num = MPoly.const(num, gens)
        if den is None:
            den = MPoly.const(1, num.gens)
        elif not isinstance(den, MPoly):
            den = MPoly.const(den, num.gens)
        if not den.terms:
            raise DivisionByZero("rational function with zero denominator")
        gens = merge_gens(num.gens, den.gens)
        n = len(gens)
        p = _reindex(num.terms, num.gens, gens)
        q = _reindex(den.terms, den.gens, gens)
        self.num, self.den = _canon(gens, p, q, n)

    @classmethod
    def _wrap(cls, num, den):
        obj = object.__new__(cls)
        obj.num = num
        obj.den = den
        return obj

    @classmethod
    def _from_dicts(cls, gens, p, q, reduce=True):
        if reduce:
            a, b = _canon(gens, p, q, len(gens))
            return cls._wrap(a, b)
        return cls._wrap(MPoly._wrap(gens, p), MPoly._wrap(gens, q))

    @classmethod
    def const(cls, c, gens: Iterable[str] = ()):
        gens = tuple(gens)
        return cls._wrap(MPoly.const(c, gens), MPoly.const(1, gens))

    @classmethod
    def var(cls, name: str, gens: Iterable[str] | None = None):
        v = MPoly.var(name, gens)
        return cls._wrap(v, MPoly.const(1, v.gens))

    @property
    def gens(self):
        return self.num.gens

    def lift(self, gens) -> "RatFunc":
        gens = tuple(gens)
        if gens == self.gens:
            return self
        return RatFunc._wrap(self.num.lift(gens), self.den.lift(gens))

    def is_zero(self):
        return not self.num.terms

    def __bool__(self):
        return bool(self.num.terms)

    def is_polynomial(self):
        return self.den.is_constant()

    def is_constant(self):
        return self.num.is_constant() and self.den.is_constant()

    def constant_value(self) -> QuadScalar:
        if not self.is_constant():
            raise ValueError(f"{self} is not constant")
        return self.num.constant_value() / self.den.constant_value()

    def free_vars(self) -> tuple:
        used = set(self.num.free_vars()) | set(self.den.free_vars())
        return tuple(g for g in self.gens if g in used)

    def depends_on(self, var: str) -> bool:
        return var in self.free_vars()

    def _parts(self, other):
        if isinstance(other, RatFunc):
            if other.num.gens == self.num.gens:
                return self.gens, self.num.terms, self.den.terms, other.num.terms, other.den.terms
            gens = merge_gens(self.gens, other.gens)
            return (gens, _reindex(self.num.terms, self.gens, gens), _reindex(self.den.terms, self.gens, gens),
                    _reindex(other.num.terms, other.gens, gens), _reindex(other.den.terms, other.gens, gens))
        if isinstance(other, MPoly):
            gens = merge_gens(self.gens, other.gens)
            n = len(gens)
            return (gens, _reindex(self.num.terms, self.gens, gens), _reindex(self.den.terms, self.gens, gens),
                    _reindex(other.terms, other.gens, gens), _const(1, n))
        c = as_quad(other)
        n = len(self.gens)
        return self.gens, self.num.terms, self.den.terms, _const(c, n), _const(1, n)

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, (RatFunc, MPoly, QuadScalar, int, Fraction)):
            return NotImplemented
        gens, n1, d1, n2, d2 = self._parts(other)
        return RatFunc._from_parts_add(gens, n1, d1, n2, d2)

    __radd__ = __add__

    @staticmethod
    def _from_parts_add(gens, n1, d1, n2, d2):
        n = len(gens)
        if not n1:
            return RatFunc._wrap(MPoly._wrap(gens, n2), MPoly._wrap(gens, d2))
        if not n2:
            return RatFunc._wrap(MPoly._wrap(gens, n1), MPoly._wrap(gens, d1))
        if d1 == d2:
            num = _add(n1, n2)
            if not num:
                return RatFunc._wrap(MPoly._wrap(gens, {}), MPoly._wrap(gens, _const(1, n)))
            if _is_const(d1):
                return RatFunc._wrap(MPoly._wrap(gens, num), MPoly._wrap(gens, d1))
            a, b = _canon(gens, num, d1, n)
            return RatFunc._wrap(a, b)
        if _is_const(d1) and _is_const(d2):
            c1 = next(iter(d1.values()))
            c2 = next(iter(d2.values()))
            num = _add(_scale(n1, c1.inverse()), _scale(n2, c2.inverse()))
            return RatFunc._wrap(MPoly._wrap(gens, num), MPoly._wrap(gens, _const(1, n)))
        g = _gcd(d1, d2, n)
        if _is_const(g):
            num = _add(_mul(n1, d2), _mul(n2, d1))
            den = _mul(d1, d2)
            if not num:
                return RatFunc._wrap(MPoly._wrap(gens, {}), MPoly._wrap(gens, _const(1, n)))
            lc = den[_lead_grlex(den)]
            if lc != 1:
                inv = lc.inverse()
                num, den = _scale(num, inv), _scale(den, inv)
            return RatFunc._wrap(MPoly._wrap(gens, num), MPoly._wrap(gens, den))
        d1g = _divexact(d1, g)
        d2g = _divexact(d2, g)
        num = _add(_mul(n1, d2g), _mul(n2, d1g))
        if not num:
            return RatFunc._wrap(MPoly._wrap(gens, {}), MPoly._wrap(gens, _const(1, n)))
        den = _mul(d1g, d2)
        h = _gcd(num, g, n)
        if not _is_const(h):
            num = _divexact(num, h)
            den = _divexact(den, h)
        lc = den[_lead_grlex(den)]
        if lc != 1:
            inv = lc.inverse()
            num, den = _scale(num, inv), _scale(den, inv)
        return RatFunc._wrap(MPoly._wrap(gens, num), MPoly._wrap(gens, den))

    def __neg__(self):
        return RatFunc._wrap(-self.num, self.den)

    def __sub__(self, other):
        if not isinstance(other, (RatFunc, MPoly, QuadScalar, int, Fraction)):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, (RatFunc, MPoly, QuadScalar, int, Fraction)):
            return NotImplemented
        gens, n1, d1, n2, d2 = self._parts(other)
        return RatFunc._mul_parts(gens, n1, d1, n2, d2)

    __rmul__ = __mul__

    @staticmethod
    def _mul_parts(gens, n1, d1, n2, d2):
        n = len(gens)
        if not n1 or not n2:
            return RatFunc._wrap(MPoly._wrap(gens, {}), MPoly._wrap(gens, _const(1, n)))
        if _is_const(n2) and _is_const(d2):
            c = next(iter(n2.values())) / next(iter(d2.values()))
            return RatFunc._wrap(MPoly._wrap(gens, _scale(n1, c)), MPoly._wrap(gens, d1))
        if _is_const(n1) and _is_const(d1):
            c = next(iter(n1.values())) / next(iter(d1.values()))
            return RatFunc._wrap(MPoly._wrap(gens, _scale(n2, c)), MPoly._wrap(gens, d2))
        g1 = _gcd(n1, d2, n) if not (_is_const(d2)) else None
        g2 = _gcd(n2, d1, n) if not (_is_const(d1)) else None
        if g1 is not None and not _is_const(g1):
            n1 = _divexact(n1, g1)
            d2 = _divexact(d2, g1)
        if g2 is not None and not _is_const(g2):
            n2 = _divexact(n2, g2)
            d1 = _divexact(d1, g2)
        num = _mul(n1, n2)
        den = _mul(d1, d2)
        lc = den[_lead_grlex(den)]
        if lc != 1:
            inv = lc.inverse()
            num, den = _scale(num, inv), _scale(den, inv)
        return RatFunc._wrap(MPoly._wrap(gens, num), MPoly._wrap(gens, den))

    def inverse(self) -> "RatFunc":
        if not self.num.terms:
            raise DivisionByZero("division by the zero rational function")
        gens = self.gens
        num, den = self.den.terms, self.num.terms
        lc = den[_lead_grlex(den)]
        if lc != 1:
            inv = lc.inverse()
            num, den = _scale(num, inv), _scale(den, inv)
        return RatFunc._wrap(MPoly._wrap(gens, num), MPoly._wrap(gens, den))

    def __truediv__(self, other):
        if isinstance(other, RatFunc):
            return self * other.inverse()
        if isinstance(other, MPoly):
            return self * RatFunc(MPoly.const(1, other.gens), other)
        if isinstance(other, (QuadScalar, int, Fraction)):
            c = as_quad(other)
            if not c:
                raise DivisionByZero("division by zero")
            return self * c.inverse()
        return NotImplemented

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        return RatFunc._wrap(self.num ** k, self.den ** k)

    def __eq__(self, other):
        if isinstance(other, RatFunc):
            return self.num == other.num and self.den == other.den
        if isinstance(other, (int, Fraction, QuadScalar)):
            return self.den.is_constant() and self.num == other
        return NotImplemented

    def __hash__(self):
        return hash((hash(self.num), hash(self.den)))

    # -- calculus and evaluation -----------------------------------------
    def derive(self, var: str) -> "RatFunc":
        if var not in self.gens:
            return RatFunc.const(0, self.gens)
        i = self.gens.index(var)
        gens = self.gens
        n = len(gens)
        p, q = self.num.terms, self.den.terms
        dp = _diff(p, i)
        dq = _diff(q, i)
        if not dq:
            return RatFunc._wrap(MPoly._wrap(gens, dp), self.den)
        # (p' q - p q') / q^2 with the gcd(q, q') shortcut
        g = _gcd(q, dq, n)
        qg = _divexact(q, g)
        num = _sub(_mul(dp, qg), _mul(p, _divexact(dq, g)))
        den = _mul(qg, q)
        return RatFunc._from_dicts(gens, num, den)

    def subs(self, var: str, value) -> "RatFunc":
        if var not in self.gens:
            return self
        if isinstance(value, RatFunc):
            # substitute value = u/v: num(u/v) * v^deg
            p_deg = max(self.num.degree(var), self.den.degree(var))
            u, v = value.num, value.den
            num = _homog_subs(self.num, var, u, v, p_deg)
            den = _homog_subs(self.den, var, u, v, p_deg)
            return RatFunc(num, den)
        return RatFunc(self.num.subs(var, value), self.den.subs(var, value))

    def eval(self, assignment: Mapping[str, complex], precision: int = 53):
        return rf_eval(self, assignment, precision)

    def eval_exact(self, assignment: Mapping[str, object]) -> QuadScalar:
        d = self.den.eval_exact(assignment)
        if not d:
            raise PoleHit("denominator vanishes at the exact point")
        return self.num.eval_exact(assignment) / d

    def __repr__(self):
        return f"RatFunc({self!s})"

    def __str__(self):
        if self.den.is_constant() and self.den.constant_value() == 1:
            return str(self.num)
        return f"({self.num})/({self.den})"


def _homog_subs(p: MPoly, var, u: MPoly, v: MPoly, deg: int) -> MPoly:
    cs = p.coefficients(var)
    out = MPoly.const(0, merge_gens(p.gens, u.gens))
    for k, c in cs.items():
        out = out + c.lift(merge_gens(c.gens, u.gens)) * (u ** k) * (v ** (deg - k))
    return out


def _canon(gens, p, q, n):
    if not q:
        raise DivisionByZero("rational function with zero denominator")
    if not p:
        return MPoly._wrap(gens, {}), MPoly._wrap(gens, _const(1, n))
    if not _is_const(q):
        g = _gcd(p, q, n)
        if not _is_const(g):
            p = _divexact(p, g)
            q = _divexact(q, g)
    lc = q[_lead_grlex(q)]
    if lc != 1:
        inv = lc.inverse()
        p, q = _scale(p, inv), _scale(q, inv)
    return MPoly._wrap(gens, p), MPoly._wrap(gens, q)


def as_ratfunc(x, gens: Iterable[str] = ()) -> RatFunc:
    if isinstance(x, RatFunc):
        return x
    if isinstance(x, MPoly):
        return RatFunc._wrap(x, MPoly.const(1, x.gens))
    return RatFunc.const(x, gens)


_RF_OPS = {
    "add": lambda f, g: f + g,
    "sub": lambda f, g: f - g,
    "mul": lambda f, g: f * g,
    "div": lambda f, g: f / g,
}


def rf_arith(op: str, f, g) -> RatFunc:
    try:
        fn = _RF_OPS[op]
    except KeyError:
        raise ValueError(f"unknown operation {op!r}") from None
    return fn(as_ratfunc(f), as_ratfunc(g))


def rf_derive(f: RatFunc, var: str, declared: Iterable[str] | None = None) -> RatFunc:
    """Partial derivative; ``declared`` lists the admissible variable names."""
    if declared is not None and var not in tuple(declared):
        raise UnknownVariable(f"{var!r} is not a declared variable")
    return as_ratfunc(f).derive(var)


def rf_eval(f: RatFunc, assignment: Mapping[str, complex], precision: int = 53):
    """Numerical value of ``f``; ``PoleHit`` when the denominator vanishes.

    The denominator counts as vanishing when its modulus is below 1e-30
    times the sum of the moduli of its evaluated terms.
    """
    f = as_ratfunc(f)
    missing = [g for g in f.free_vars() if g not in assignment]
    if missing:
        raise UnknownVariable(f"assignment misses {missing}")
    if precision <= 53:
        vals = [complex(assignment.get(g, 0)) for g in f.gens]
        num, _ = f.num.eval_numeric(vals)
        den, scale = f.den.eval_numeric(vals)
        if abs(den) <= 1e-30 * scale:
            raise PoleHit(f"denominator of {f} vanishes at {dict(assignment)}")
        return num / den
    with mpmath.workprec(precision):
        vals = [_to_mpc(assignment.get(g, 0)) for g in f.gens]
        num, _ = _eval_mp(f.num, vals)
        den, scale = _eval_mp(f.den, vals)
        if abs(den) <= mpmath.mpf("1e-30") * scale:
            raise PoleHit(f"denominator of {f} vanishes at {dict(assignment)}")
        return num / den


def _to_mpc(x):
    if isinstance(x, QuadScalar):
        return _coeff_mp(x)
    if isinstance(x, Fraction):
        return mpmath.mpc(mpmath.mpf(x.numerator) / x.denominator)
    return mpmath.mpc(x)


def _eval_mp(p: MPoly, vals):
    total = mpmath.mpc(0)
    scale = mpmath.mpf(0)
    for e, c in p.terms.items():
        t = _coeff_mp(c)
        for v, k in zip(vals, e):
            if k:
                t = t * v ** k
        total += t
        scale += abs(t)
    return total, scale


def rf_equal(f, g, rng: random.Random | None = None) -> bool:
    """Exact equality with a cheap random-point pre-filter.

    Evaluates ``num(f)*den(g) - num(g)*den(f)`` at three random rational
    points; any non-zero value settles inequality without normalisation.
    """
    f, g = as_ratfunc(f), as_ratfunc(g)
    rng = rng or random.Random(0x5EED)
    gens = merge_gens(f.gens, g.gens)
    for _ in range(3):
        pt = {v: Fraction(rng.randint(-997, 997), rng.randint(1, 97)) for v in gens}
        try:
            lhs = f.num.eval_exact(pt) * g.den.eval_exact(pt)
            rhs = g.num.eval_exact(pt) * f.den.eval_exact(pt)
        except UnknownVariable:
            break
        if lhs != rhs:
            return False
    return (f - g).is_zero()
