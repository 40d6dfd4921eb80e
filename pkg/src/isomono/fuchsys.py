"""Families of Fuchsian systems with poles affine in the deformation parameters.

A family is ``dy/dz = sum_i A_i(a) / (z - l_i(a)) y`` with each pole
``l_i`` an affine form in the parameters. The residue at infinity is never
stored; it is always ``-sum A_i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import mpmath

from .errors import (CoalescingPoles, NonFuchsian, NonPolarPart, ParameterDependentSpectrum,
                     ShapeMismatch)
from .exactnum import QuadScalar, as_quad, quad_embed
from .matlin import MatRF, mat_charpoly, mat_inverse
from .ratfunc import MPoly, RatFunc, as_ratfunc, poly_gcd

Z = "z"
INFINITY = "inf"

__all__ = [
    "Z",
    "INFINITY",
    "PoleLoc",
    "FuchsFamily",
    "ResonanceEntry",
    "ResonanceReport",
    "residue_at_infinity",
    "resonance",
    "resonance_report",
    "addition",
    "gauge_transform_form",
    "substitute_form",
    "hitchin_traces",
    "partial_fractions",
    "matrix_partial_fractions",
    "family_from_dz",
    "cauchy_bound",
]


class PoleLoc:
    """An affine pole ``constant + sum_j coeffs[j] * a_j``, or the point at infinity."""

    __slots__ = ("constant", "coeffs", "is_infinity")

    def __init__(self, constant=0, coeffs: Mapping[str, object] | None = None, is_infinity=False):
        self.is_infinity = bool(is_infinity)
        self.constant = as_quad(constant)
        self.coeffs = {k: as_quad(v) for k, v in (coeffs or {}).items() if as_quad(v)}
        if self.is_infinity:
            self.constant, self.coeffs = as_quad(0), {}

    @classmethod
    def infinity(cls):
        return cls(is_infinity=True)

    @classmethod
    def from_ratfunc(cls, f) -> "PoleLoc":
        f = as_ratfunc(f)
        if not f.is_polynomial() or f.depends_on(Z):
            raise NonFuchsian(f"pole location {f} is not affine in the parameters")
        p = f.num * f.den.constant_value().inverse()
        coeffs = {}
        const = as_quad(0)
        for e, c in p.terms.items():
            deg = sum(e)
            if deg == 0:
                const = c
            elif deg == 1:
                coeffs[p.gens[e.index(1)]] = c
            else:
                raise NonFuchsian(f"pole location {f} is not affine in the parameters")
        return cls(const, coeffs)

    def as_ratfunc(self, gens=()) -> RatFunc:
        if self.is_infinity:
            raise ValueError("the point at infinity has no affine form")
        out = RatFunc.const(self.constant, gens)
        for k, c in self.coeffs.items():
            out = out + RatFunc.var(k) * c
        return out

    def derivative(self, param: str) -> QuadScalar:
        return self.coeffs.get(param, as_quad(0))

    def params(self) -> tuple:
        return tuple(sorted(self.coeffs))

    def evaluate(self, sample: Mapping[str, complex]) -> complex:
        if self.is_infinity:
            return complex("inf")
        v = self.constant.to_complex()
        for k, c in self.coeffs.items():
            v += c.to_complex() * complex(sample[k])
        return v

    def local_factor(self) -> RatFunc:
        """``z - l`` as a rational function."""
        return RatFunc.var(Z) - self.as_ratfunc()

    def _key(self):
        return (self.is_infinity, self.constant, tuple(sorted(self.coeffs.items())))

    def __eq__(self, other):
        return isinstance(other, PoleLoc) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __str__(self):
        if self.is_infinity:
            return "inf"
        return str(self.as_ratfunc().num)

    def __repr__(self):
        return f"PoleLoc({self})"


class FuchsFamily:
    """Poles, residue matrices and parameter names of a family of Fuchsian systems.

    ``parameters`` are the deformation directions; ``constants`` are symbols
    (such as a symbolic convolution parameter) that may appear in the
    residues but are never deformed.
    """

    def __init__(self, poles: Sequence, residues: Sequence[MatRF], parameters: Sequence[str] = (),
                 constants: Sequence[str] = ()):
        poles = [p if isinstance(p, PoleLoc) else PoleLoc.from_ratfunc(p) for p in poles]
        residues = list(residues)
        if not poles:
            raise ShapeMismatch("a family needs at least one finite pole")
        if len(poles) != len(residues):
            raise ShapeMismatch(f"{len(poles)} poles but {len(residues)} residues")
        if any(p.is_infinity for p in poles):
            raise ValueError("infinity is implied, not stored as a pole")
        size = residues[0].rows
        for A in residues:
            if A.shape != (size, size):
                raise ShapeMismatch("residues must be square of a common size")
            if A.depends_on(Z):
                raise NonFuchsian("residue matrices must not depend on z")
        for i in range(len(poles)):
            for j in range(i):
                if poles[i] == poles[j]:
                    raise CoalescingPoles(f"poles {j} and {i} coincide ({poles[i]})")
        constants = tuple(constants)
        params = [v for v in parameters if v not in constants]
        for thing in residues:
            for v in thing.free_vars():
                if v not in params and v not in constants:
                    params.append(v)
        for p in poles:
            for v in p.params():
                if v in constants:
                    raise ValueError(f"pole {p} depends on the constant {v}")
                if v not in params:
                    params.append(v)
        self.size = size
        self.poles = poles
        self.residues = residues
        self.parameters = tuple(params)
        self.constants = constants

    @property
    def n(self):
        return len(self.poles)

    def dz_matrix(self) -> MatRF:
        """``P(z) = sum_i A_i / (z - l_i)``."""
        P = MatRF.zeros(self.size)
        for pole, A in zip(self.poles, self.residues):
            P = P + A * pole.local_factor().inverse()
        return P

    def residue(self, index) -> MatRF:
        if index == INFINITY:
            return residue_at_infinity(self)
        return self.residues[index]

    def with_residues(self, residues) -> "FuchsFamily":
        return FuchsFamily(self.poles, residues, self.parameters, self.constants)

    def evaluate(self, sample: Mapping[str, complex]):
        """Numeric poles and residues at a parameter sample."""
        poles = [p.evaluate(sample) for p in self.poles]
        return poles, [A.evaluate(sample) for A in self.residues]

    def __eq__(self, other):
        return (isinstance(other, FuchsFamily) and self.poles == other.poles
                and len(self.residues) == len(other.residues)
                and all(a == b for a, b in zip(self.residues, other.residues)))

    __hash__ = None

    def __repr__(self):
        return f"FuchsFamily(p={self.size}, poles={[str(p) for p in self.poles]}, params={self.parameters})"


def residue_at_infinity(F: FuchsFamily) -> MatRF:
    acc = MatRF.zeros(F.size)
    for A in F.residues:
        acc = acc + A
    return -acc


# ---------------------------------------------------------------------------
# resonance
# ---------------------------------------------------------------------------

@dataclass
class ResonanceEntry:
    pole: object  # int index or INFINITY
    r: int
    witnesses: list = field(default_factory=list)
    charpoly: list = field(default_factory=list)  # ascending QuadScalar coefficients
    k_max: int = 0


@dataclass
class ResonanceReport:
    entries: list

    def by_pole(self, pole) -> ResonanceEntry:
        for e in self.entries:
            if e.pole == pole:
                return e
        raise KeyError(pole)

    def resonant_poles(self) -> list:
        return [e.pole for e in self.entries if e.r > 0]


def cauchy_bound(coeffs: Sequence[QuadScalar], precision: int = 128):
    """``1 + max |c_i / c_n|`` for a polynomial with ascending coefficients."""
    with mpmath.workprec(precision):
        lead = quad_embed(coeffs[-1], max(precision, 54))
        m = mpmath.mpf(0)
        for c in coeffs[:-1]:
            m = max(m, abs(quad_embed(c, max(precision, 54)) / lead))
        return 1 + m


def _lam_poly(coeffs, var="lam") -> MPoly:
    return MPoly((var,), {(k,): c for k, c in enumerate(coeffs)})


def resonance(F: FuchsFamily, pole_index, precision: int = 128) -> ResonanceEntry:
    """Maximal resonance at a finite pole (by index) or at ``INFINITY``.

    ``r = max{k >= 1 : deg gcd(p(l), p(l + k)) > 0}`` with ``p`` the
    characteristic polynomial; ``k`` runs up to ``ceil(2 * CauchyBound(p))``.
    """
    A = F.residue(pole_index)
    cp = mat_charpoly(A)
    consts = []
    for c in cp:
        if not c.is_constant():
            raise ParameterDependentSpectrum(
                f"characteristic polynomial at pole {pole_index} depends on {c.free_vars()}")
        consts.append(c.constant_value())
    k_max = int(mpmath.ceil(2 * cauchy_bound(consts, precision)))
    p = _lam_poly(consts)
    lam = MPoly.var("lam")
    witnesses = []
    for k in range(1, k_max + 1):
        shifted = p.subs("lam", lam + k)
        if poly_gcd(p, shifted).degree() > 0:
            witnesses.append(k)
    return ResonanceEntry(pole_index, max(witnesses) if witnesses else 0, witnesses, consts, k_max)


def resonance_report(F: FuchsFamily, include_infinity=True) -> ResonanceReport:
    idx = list(range(F.n)) + ([INFINITY] if include_infinity else [])
    return ResonanceReport([resonance(F, i) for i in idx])


# ---------------------------------------------------------------------------
# elementary transformations
# ---------------------------------------------------------------------------

def addition(F: FuchsFamily, pole_index: int, alpha) -> FuchsFamily:
    """Shift ``A_i -> A_i + alpha I`` (the infinity residue moves by ``-alpha I``)."""
    if pole_index == INFINITY or not 0 <= pole_index < F.n:
        raise IndexError(f"no finite pole with index {pole_index}")
    residues = list(F.residues)
    residues[pole_index] = residues[pole_index] + MatRF.scalar(F.size, as_ratfunc(alpha))
    return F.with_residues(residues)


def _form_params(omega, Gamma: MatRF):
    params = list(omega.params)
    for v in Gamma.free_vars():
        if v != Z and v not in params:
            params.append(v)
    return params


def gauge_transform_form(omega, Gamma: MatRF):
    """``dG G^-1 + G omega G^-1``; raises ``Singular`` if ``G`` is not invertible."""
    Gi = mat_inverse(Gamma)
    params = _form_params(omega, Gamma)
    P = Gamma.derive(Z).matmul(Gi) + Gamma.matmul(omega.P).matmul(Gi)
    Q = {}
    for j in params:
        Qj = omega.Q.get(j)
        term = Gamma.derive(j).matmul(Gi)
        if Qj is not None:
            term = term + Gamma.matmul(Qj).matmul(Gi)
        Q[j] = term
    return type(omega)(P, Q, params)


def substitute_form(omega, Gamma: MatRF):
    """The form for ``y1`` after the substitution ``y = Gamma y1``.

    This is ``G^-1 omega G - G^-1 dG``, i.e. the gauge transform by ``G^-1``.
    """
    return gauge_transform_form(omega, mat_inverse(Gamma))


def hitchin_traces(F: FuchsFamily) -> dict:
    """``tr([A_i, A_j] A_k)`` for all ``i < j`` and all ``k`` (0-based keys)."""
    out = {}
    for i in range(F.n):
        for j in range(i + 1, F.n):
            C = F.residues[i].commutator(F.residues[j])
            for k in range(F.n):
                out[(i, j, k)] = C.matmul(F.residues[k]).trace()
    return out


# ---------------------------------------------------------------------------
# partial fractions in z
# ---------------------------------------------------------------------------

def partial_fractions(f, poles: Sequence[PoleLoc]):
    """Split ``f`` into polar parts at the given poles plus a z-polynomial.

    Returns ``(polar, poly)`` where ``polar[i]`` maps a power ``m >= 1`` to
    the z-free coefficient of ``(z - l_i)^-m``. Raises ``NonFuchsian`` when
    the denominator has a z-dependent factor outside the given poles.
    """
    f = as_ratfunc(f)
    polar = [dict() for _ in poles]
    if not f.depends_on(Z):
        return polar, f
    for i, pole in enumerate(poles):
        t = pole.local_factor()
        tp = t.num
        while True:
            if f.is_zero():
                break
            den = f.den
            m = 0
            rest = den
            while True:
                q = rest.trydiv(tp)
                if q is None:
                    break
                rest = q
                m += 1
            if m == 0:
                break
            # leading Laurent coefficient: (num / rest) at z = l
            loc = pole.as_ratfunc()
            c = RatFunc(f.num, rest).subs(Z, loc)
            if c.is_zero():
                raise ArithmeticError("Laurent coefficient vanished; fraction not reduced")
            polar[i][m] = c
            f = f - c * t.inverse() ** m
    if f.den.degree(Z) > 0:
        raise NonFuchsian(f"denominator {f.den} has poles outside {[str(p) for p in poles]}")
    return polar, f


def matrix_partial_fractions(M: MatRF, poles: Sequence[PoleLoc]):
    """Entrywise ``partial_fractions``: per-pole ``{m: MatRF}`` and the z-polynomial part."""
    R, C = M.shape
    polar_entries = [dict() for _ in poles]
    poly = []
    for idx, e in enumerate(M.entries):
        pol, rest = partial_fractions(e, poles)
        poly.append(rest)
        for i, d in enumerate(pol):
            for m, c in d.items():
                polar_entries[i].setdefault(m, {})[idx] = c
    zero = RatFunc.const(0)
    polar = []
    for d in polar_entries:
        polar.append({m: MatRF(R, C, [ents.get(k, zero) for k in range(R * C)])
                      for m, ents in sorted(d.items())})
    return polar, MatRF(R, C, poly)


def family_from_dz(P: MatRF, poles: Sequence[PoleLoc], parameters: Sequence[str] = (),
                   constants: Sequence[str] = ()) -> FuchsFamily:
    """Read a Fuchsian family off a dz-coefficient; only simple poles are allowed.

    Every given pole is kept (a removed singularity shows up as a zero residue).
    """
    polar, poly = matrix_partial_fractions(P, poles)
    if not poly.is_zero():
        if any(e.depends_on(Z) for e in poly.entries):
            raise NonPolarPart("dz-coefficient grows polynomially in z")
        raise NonFuchsian("dz-coefficient does not vanish at infinity")
    residues = []
    for i, d in enumerate(polar):
        if any(m > 1 for m in d):
            raise NonFuchsian(f"pole {poles[i]} has order {max(d)}")
        residues.append(d.get(1, MatRF.zeros(P.rows)))
    return FuchsFamily(poles, residues, parameters, constants)
