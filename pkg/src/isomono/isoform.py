"""Matrix 1-forms ``P dz + sum_j Q_j da_j`` and their integrability.

A deformation is isomonodromic with form ``omega`` when ``d omega = omega ^ omega``.
Everything here is exact: derivatives, commutators and partial fractions
are computed over the rational-function field.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import CoalescingPoles, NonPolarPart, ResonanceBoundViolated, ShapeMismatch
from .fuchsys import (Z, FuchsFamily, gauge_transform_form, matrix_partial_fractions, resonance,
                      residue_at_infinity, substitute_form)
from .matlin import MatRF

__all__ = [
    "MatOneForm",
    "MatTwoForm",
    "FormClassification",
    "build_schlesinger_form",
    "build_bolibruch_form",
    "exterior_derivative",
    "wedge",
    "flatness_residual",
    "residual_breakdown",
    "schlesinger_residual",
    "classify_form",
    "reassemble",
    "gauge_transform_form",
    "substitute_form",
    "commutator_identity",
    "infinity_flow_identity",
]


class MatOneForm:
    """``P dz + sum_j Q[j] da_j``; parameters absent from ``Q`` have zero coefficient."""

    def __init__(self, P: MatRF, Q: Mapping[str, MatRF] | None = None, params: Sequence[str] | None = None):
        Q = dict(Q or {})
        if not P.is_square():
            raise ShapeMismatch("dz-coefficient must be square")
        for j, M in Q.items():
            if M.shape != P.shape:
                raise ShapeMismatch(f"da_{j}-coefficient has shape {M.shape}, expected {P.shape}")
        if params is None:
            params = list(Q)
        params = list(params)
        for j in Q:
            if j not in params:
                params.append(j)
        if Z in params:
            raise ValueError("z cannot be a deformation parameter")
        self.P = P
        self.params = tuple(params)
        self.Q = {j: Q.get(j, MatRF.zeros(P.rows)) for j in self.params}

    @property
    def size(self):
        return self.P.rows

    def __eq__(self, other):
        if not isinstance(other, MatOneForm) or self.P != other.P:
            return False
        keys = set(self.params) | set(other.params)
        zero = MatRF.zeros(self.size)
        return all(self.Q.get(j, zero) == other.Q.get(j, zero) for j in keys)

    __hash__ = None

    def __add__(self, other):
        params = list(self.params) + [j for j in other.params if j not in self.params]
        zero = MatRF.zeros(self.size)
        return MatOneForm(self.P + other.P,
                          {j: self.Q.get(j, zero) + other.Q.get(j, zero) for j in params}, params)

    def __repr__(self):
        return f"MatOneForm(p={self.size}, params={self.params})"


class MatTwoForm:
    """``sum_j R[j] dz^da_j + sum_{i<j} S[(i, j)] da_i^da_j``."""

    def __init__(self, R: Mapping[str, MatRF], S: Mapping[tuple, MatRF], params: Sequence[str]):
        self.R = dict(R)
        self.S = dict(S)
        self.params = tuple(params)

    def components(self):
        for j, M in self.R.items():
            yield (Z, j), M
        for (i, j), M in self.S.items():
            yield (i, j), M

    def is_zero(self):
        return all(M.is_zero() for _, M in self.components())

    def nonzero_components(self) -> list:
        return [k for k, M in self.components() if not M.is_zero()]

    def __sub__(self, other):
        R, S = {}, {}
        for j in set(self.R) | set(other.R):
            a, b = self.R.get(j), other.R.get(j)
            R[j] = a - b if a is not None and b is not None else (a if b is None else -b)
        for k in set(self.S) | set(other.S):
            a, b = self.S.get(k), other.S.get(k)
            S[k] = a - b if a is not None and b is not None else (a if b is None else -b)
        return MatTwoForm(R, S, self.params)

    def __repr__(self):
        return f"MatTwoForm(nonzero={self.nonzero_components()})"


def _pairs(params):
    return [(params[i], params[j]) for i in range(len(params)) for j in range(i + 1, len(params))]


def exterior_derivative(omega: MatOneForm) -> MatTwoForm:
    R = {j: omega.Q[j].derive(Z) - omega.P.derive(j) for j in omega.params}
    S = {(i, j): omega.Q[j].derive(i) - omega.Q[i].derive(j) for i, j in _pairs(omega.params)}
    return MatTwoForm(R, S, omega.params)


def wedge(omega: MatOneForm) -> MatTwoForm:
    R = {j: omega.P.commutator(omega.Q[j]) for j in omega.params}
    S = {(i, j): omega.Q[i].commutator(omega.Q[j]) for i, j in _pairs(omega.params)}
    return MatTwoForm(R, S, omega.params)


def flatness_residual(omega: MatOneForm) -> MatTwoForm:
    """``d omega - omega ^ omega``; zero exactly when the form is flat."""
    return exterior_derivative(omega) - wedge(omega)


def residual_breakdown(res: MatTwoForm, F: FuchsFamily) -> dict:
    """Split each non-zero residual component by pole and power.

    Keys are ``(component, pole_index, power)``; the z-polynomial remainder
    (if any) is stored under pole index ``None`` and power 0.
    """
    out = {}
    for key, M in res.components():
        if M.is_zero():
            continue
        polar, poly = matrix_partial_fractions(M, F.poles)
        for l, d in enumerate(polar):
            for m, C in d.items():
                if not C.is_zero():
                    out[(key, l, m)] = C
        if not poly.is_zero():
            out[(key, None, 0)] = poly
    return out


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def build_schlesinger_form(F: FuchsFamily) -> MatOneForm:
    """``sum_i A_i d(z - l_i) / (z - l_i)`` for affine poles ``l_i``."""
    P = F.dz_matrix()
    Q = {}
    for j in F.parameters:
        acc = MatRF.zeros(F.size)
        for pole, A in zip(F.poles, F.residues):
            c = pole.derivative(j)
            if c:
                acc = acc - A * (pole.local_factor().inverse() * c)
        Q[j] = acc
    return MatOneForm(P, Q, F.parameters)


def build_bolibruch_form(F: FuchsFamily, gammas: Sequence = (), holo: Mapping[str, MatRF] | None = None) -> MatOneForm:
    """Schlesinger form plus ``holo[k] da_k`` and ``gamma / (z - l)^m da_k`` terms.

    ``gammas`` holds tuples ``(l, m, k, matrix)`` with ``l`` a 0-based pole
    index, ``m`` the pole order and ``k`` a parameter name. The order may
    not exceed the maximal resonance of the pole.
    """
    bounds = {}
    for l, m, k, G in gammas:
        if G.depends_on(Z):
            raise ValueError("gamma coefficients must not depend on z")
        if l not in bounds:
            bounds[l] = resonance(F, l).r
        if not 1 <= m <= bounds[l]:
            raise ResonanceBoundViolated(
                f"order {m} at pole {F.poles[l]} exceeds its maximal resonance {bounds[l]}")
    for G in (holo or {}).values():
        if G.depends_on(Z):
            raise ValueError("holomorphic coefficients must not depend on z")
    return _assemble(F, gammas, holo or {})


# ---------------------------------------------------------------------------
# Schlesinger equations
# ---------------------------------------------------------------------------

def schlesinger_residual(F: FuchsFamily) -> dict:
    """Left-minus-right of the Schlesinger system, keyed by ``(pole, parameter)``.

    Entry ``(i, k)`` is
    ``dA_i/da_k + sum_{j != i} [A_i, A_j] (dl_i/da_k - dl_j/da_k) / (l_i - l_j)``,
    which vanishes for all ``i, k`` exactly when ``F`` is a Schlesinger
    deformation.
    """
    locs = [p.as_ratfunc() for p in F.poles]
    diffs = {}
    for i in range(F.n):
        for j in range(F.n):
            if i != j:
                d = locs[i] - locs[j]
                if d.is_zero():
                    raise CoalescingPoles(f"poles {i} and {j} coincide")
                diffs[(i, j)] = d.inverse()
    comms = {}
    out = {}
    for i, Ai in enumerate(F.residues):
        for k in F.parameters:
            acc = Ai.derive(k)
            for j, Aj in enumerate(F.residues):
                if j == i:
                    continue
                c = F.poles[i].derivative(k) - F.poles[j].derivative(k)
                if not c:
                    continue
                if (i, j) not in comms:
                    comms[(i, j)] = Ai.commutator(Aj)
                acc = acc + comms[(i, j)] * (diffs[(i, j)] * c)
            out[(i, k)] = acc
    return out


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

@dataclass
class FormClassification:
    is_flat: bool
    is_schlesinger_shape: bool
    is_normalized: bool
    nonschlesinger_terms: list = field(default_factory=list)  # (pole l, power m, param k, matrix)
    holomorphic: dict = field(default_factory=dict)  # param -> z-free matrix


def _extra_parts(omega: MatOneForm, F: FuchsFamily):
    if omega.size != F.size:
        raise ShapeMismatch("form and family have different sizes")
    if omega.P != F.dz_matrix():
        raise ShapeMismatch("dz-coefficient of the form is not the family's Fuchsian system")
    schl = build_schlesinger_form(F)
    terms, holo = [], {}
    zero = MatRF.zeros(F.size)
    for k in omega.params:
        extra = omega.Q[k] - schl.Q.get(k, zero)
        polar, poly = matrix_partial_fractions(extra, F.poles)
        if poly.depends_on(Z):
            raise NonPolarPart(f"da_{k}-coefficient grows polynomially in z")
        holo[k] = poly
        for l, d in enumerate(polar):
            for m, C in d.items():
                if not C.is_zero():
                    terms.append((l, m, k, C))
    return terms, holo


def classify_form(omega: MatOneForm, F: FuchsFamily) -> FormClassification:
    terms, holo = _extra_parts(omega, F)
    normalized = all(G.is_zero() for G in holo.values())
    return FormClassification(
        is_flat=flatness_residual(omega).is_zero(),
        is_schlesinger_shape=normalized and not terms,
        is_normalized=normalized,
        nonschlesinger_terms=terms,
        holomorphic={k: G for k, G in holo.items() if not G.is_zero()},
    )


def reassemble(cls: FormClassification, F: FuchsFamily) -> MatOneForm:
    """Rebuild the form from a classification (inverse of ``classify_form``)."""
    return _assemble(F, cls.nonschlesinger_terms, cls.holomorphic)


def _assemble(F, gammas, holo):
    omega = build_schlesinger_form(F)
    params = list(omega.params)
    Q = dict(omega.Q)
    for l, m, k, G in gammas:
        if k not in Q:
            params.append(k)
            Q[k] = MatRF.zeros(F.size)
        Q[k] = Q[k] + G * F.poles[l].local_factor().inverse() ** m
    for k, G in holo.items():
        if k not in Q:
            params.append(k)
            Q[k] = MatRF.zeros(F.size)
        Q[k] = Q[k] + G
    return MatOneForm(omega.P, Q, params)


# ---------------------------------------------------------------------------
# identities for forms laid out as A_5 da/(z - l) + B da
# ---------------------------------------------------------------------------

def _layout(omega: MatOneForm, F: FuchsFamily, pole: int, param: str):
    """Total ``da`` polar coefficient at one pole and the z-free ``da`` part."""
    polar, poly = matrix_partial_fractions(omega.Q[param], F.poles)
    if poly.depends_on(Z):
        raise NonPolarPart("da-coefficient grows polynomially in z")
    A5 = polar[pole].get(1, MatRF.zeros(F.size))
    return A5, poly


def commutator_identity(omega: MatOneForm, F: FuchsFamily, pole: int = 0, param: str = "a") -> MatRF:
    """``[A_l, A_5] - (A_l - A_5)`` where ``A_5`` is the full ``da/(z - l)`` coefficient."""
    A5, _ = _layout(omega, F, pole, param)
    Al = F.residues[pole]
    return Al.commutator(A5) - (Al - A5)


def infinity_flow_identity(omega: MatOneForm, F: FuchsFamily, param: str = "a") -> MatRF:
    """``dA_inf/da + [A_inf, B]`` where ``B`` is the z-free ``da`` coefficient."""
    _, B = _layout(omega, F, 0, param)
    Ainf = residue_at_infinity(F)
    return Ainf.derive(param) + Ainf.commutator(B)
