"""sympy bridge used as an independent oracle (tests only)."""

import sympy as sp

from isomono.exactnum import QuadScalar
from isomono.matlin import MatRF
from isomono.ratfunc import MPoly, RatFunc

a, z, mu, lam = sp.symbols("a z mu lam")


def scalar_to_sympy(q: QuadScalar):
    return sp.Rational(q.rat_part.numerator, q.rat_part.denominator) + \
        sp.Rational(q.surd_part.numerator, q.surd_part.denominator) * sp.sqrt(q.d)


def poly_to_sympy(p: MPoly):
    syms = [sp.Symbol(g) for g in p.gens]
    out = sp.Integer(0)
    for e, c in p.terms.items():
        t = scalar_to_sympy(c)
        for s, k in zip(syms, e):
            t *= s ** k
        out += t
    return out


def to_sympy(f):
    if isinstance(f, MatRF):
        return sp.Matrix(f.rows, f.cols, [to_sympy(e) for e in f.entries])
    if isinstance(f, MPoly):
        return poly_to_sympy(f)
    return poly_to_sympy(f.num) / poly_to_sympy(f.den)


def same(f, expr) -> bool:
    return sp.simplify(to_sympy(f) - expr) == 0


def same_matrix(M: MatRF, E) -> bool:
    D = (to_sympy(M) - sp.Matrix(E)).applyfunc(sp.simplify)
    return all(x == 0 for x in D)


def from_sympy(expr, gens=("z", "a")) -> RatFunc:
    """Rebuild a rational function over Q from a sympy expression."""
    expr = sp.together(sp.sympify(expr))
    num, den = sp.fraction(expr)
    return _poly_from(num, gens) / _poly_from(den, gens)


def _poly_from(e, gens):
    syms = [sp.Symbol(g) for g in gens]
    P = sp.Poly(sp.expand(e), *syms)
    out = RatFunc.const(0)
    for mon, c in P.terms():
        t = RatFunc.const(sp.Rational(c).p) / sp.Rational(c).q
        for g, k in zip(gens, mon):
            t = t * RatFunc.var(g) ** k
        out = out + t
    return out
