"""Additive middle convolution of a tuple of residue matrices.

For ``A = (A_1, ..., A_n)`` of size ``p`` and a parameter ``mu`` the
convolution matrices ``B_k`` are ``np x np`` and vanish outside block row
``k``, which holds ``(A_1, ..., A_k + mu I, ..., A_n)``. The middle
convolution is the action of the ``B_k`` on ``C^{np} / (K + L)`` with
``L = sum_k L_k``, ``L_k = Ker(A_k)`` placed in block ``k``, and
``K = Ker(sum_k B_k)``.

``mu`` may be a number or the symbol ``mu``; in the symbolic case every
kernel is generic and the pivots used are reported as assumptions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

from .errors import DependentHint, ShapeMismatch
from .fuchsys import FuchsFamily
from .matlin import MatRF, mat_det, mat_kernel, mat_rank, mat_solve
from .ratfunc import RatFunc, as_ratfunc

MU = "mu"

__all__ = [
    "MU",
    "ConvolutionTuple",
    "SubspaceData",
    "McResult",
    "convolution",
    "invariant_subspaces",
    "choose_complement",
    "middle_convolution",
    "parse_hint",
    "parse_hints",
    "induced_defect",
    "search_completions",
]


@dataclass
class ConvolutionTuple:
    mu: RatFunc
    blocks: list
    p: int
    n: int


@dataclass
class SubspaceData:
    L_bases: list  # per k: list of vectors of length n*p
    K_basis: list
    complement: list | None = None
    KL_basis: list = field(default_factory=list)
    assumptions: list = field(default_factory=list)  # non-constant pivots (MPoly)

    @property
    def dim_L(self):
        return sum(len(b) for b in self.L_bases)

    @property
    def dim_K(self):
        return len(self.K_basis)

    @property
    def dim_KL(self):
        return len(self.KL_basis)


@dataclass
class McResult:
    tuple: list
    m: int
    subspaces: SubspaceData
    basis_used: list
    family: FuchsFamily | None = None
    mu: RatFunc | None = None


def _as_mu(mu) -> RatFunc:
    if isinstance(mu, str):
        if mu != MU:
            raise ValueError(f"symbolic parameter must be called {MU!r}")
        return RatFunc.var(MU)
    return as_ratfunc(mu)


def convolution(F: FuchsFamily, mu) -> ConvolutionTuple:
    mu = _as_mu(mu)
    n, p = F.n, F.size
    N = n * p
    zero = RatFunc.const(0)
    blocks = []
    for k in range(n):
        ents = [zero] * (N * N)
        for j, A in enumerate(F.residues):
            blk = A + MatRF.scalar(p, mu) if j == k else A
            for r in range(p):
                for c in range(p):
                    ents[(k * p + r) * N + j * p + c] = blk[r, c]
        blocks.append(MatRF(N, N, ents))
    return ConvolutionTuple(mu, blocks, p, n)


def _embed(v, k, p, N):
    zero = RatFunc.const(0)
    out = [zero] * N
    out[k * p:(k + 1) * p] = v
    return out


def _independent(vectors) -> bool:
    if not vectors:
        return True
    return mat_rank(MatRF.from_columns(vectors)) == len(vectors)


def invariant_subspaces(C: ConvolutionTuple, F: FuchsFamily) -> SubspaceData:
    p, n = C.p, C.n
    N = n * p
    audits = []
    L_bases = []
    for k, A in enumerate(F.residues):
        L_bases.append([_embed(v, k, p, N) for v in mat_kernel(A, audits)])
    S = C.blocks[0]
    for B in C.blocks[1:]:
        S = S + B
    K_basis = mat_kernel(S, audits)
    # basis of K + L; the L_k are independent of each other by construction
    KL = [v for b in L_bases for v in b]
    for v in K_basis:
        if _independent(KL + [v]):
            KL.append(v)
    assumptions = []
    for au in audits:
        for piv in au.assumptions():
            if piv not in assumptions:
                assumptions.append(piv)
    return SubspaceData(L_bases, K_basis, None, KL, assumptions)


def choose_complement(S: SubspaceData, hint: Sequence | None = None, N: int | None = None) -> SubspaceData:
    """Complement of ``K + L``: hint vectors first, then standard basis vectors."""
    if N is None:
        vecs = S.KL_basis or [v for b in S.L_bases for v in b] or S.K_basis
        if vecs:
            N = len(vecs[0])
        elif hint:
            N = len(hint[0])
        else:
            raise ShapeMismatch("ambient dimension unknown")
    m = N - S.dim_KL
    chosen = []
    for i, v in enumerate(hint or []):
        v = [as_ratfunc(x) for x in v]
        if len(v) != N:
            raise ShapeMismatch(f"hint vector {i + 1} has length {len(v)}, expected {N}")
        if len(chosen) >= m or not _independent(S.KL_basis + chosen + [v]):
            raise DependentHint(f"hint vector {i + 1} lies in K + L + span(earlier hints)")
        chosen.append(v)
    j = 0
    while len(chosen) < m:
        e = [RatFunc.const(1 if t == j else 0) for t in range(N)]
        if _independent(S.KL_basis + chosen + [e]):
            chosen.append(e)
        j += 1
    return SubspaceData(S.L_bases, S.K_basis, chosen, S.KL_basis, S.assumptions)


def middle_convolution(F: FuchsFamily, mu, hint: Sequence | None = None,
                       record_det: bool = True) -> McResult:
    """The induced ``m x m`` tuple in the basis ``complement | K + L``.

    With ``record_det`` the determinant of the change of basis is appended
    to the genericity assumptions when it is not constant.
    """
    C = convolution(F, mu)
    N = C.n * C.p
    if isinstance(hint, str):
        hint = parse_hints(hint, N)
    S = choose_complement(invariant_subspaces(C, F), hint, N)
    m = len(S.complement)
    if m == 0:
        # K + L is everything: the convolution is the empty tuple
        return McResult([MatRF(0, 0, []) for _ in range(C.n)], 0, S, S.complement, None, C.mu)
    T = MatRF.from_columns(S.complement + S.KL_basis)
    if record_det:
        d = mat_det(T)
        for part in (d.num, d.den):
            if not part.is_constant() and part not in S.assumptions:
                S.assumptions.append(part)
    Cm = MatRF.from_columns(S.complement)
    rhs = [B.matmul(Cm) for B in C.blocks]
    stacked = MatRF.from_columns([col for R in rhs for col in (R.column(j) for j in range(m))])
    coords = mat_solve(T, stacked)
    tup = []
    for k in range(C.n):
        tup.append(coords.submatrix(0, m, k * m, (k + 1) * m))
    consts = tuple(F.constants)
    if C.mu.depends_on(MU) and MU not in consts:
        consts += (MU,)
    fam = FuchsFamily(F.poles, tup, F.parameters, consts) if m > 0 else None
    return McResult(tup, m, S, S.complement, fam, C.mu)


def induced_defect(result: McResult, C: ConvolutionTuple) -> list:
    """Per ``k``, the rank excess of ``[K+L | B_k c - c B~_k]`` (all zeros when consistent)."""
    S = result.subspaces
    if result.m == 0:
        return [0] * C.n
    Cm = MatRF.from_columns(S.complement)
    out = []
    for B, Bt in zip(C.blocks, result.tuple):
        D = B.matmul(Cm) - Cm.matmul(Bt)
        cols = [D.column(j) for j in range(D.cols)]
        base = mat_rank(MatRF.from_columns(S.KL_basis)) if S.KL_basis else 0
        full = mat_rank(MatRF.from_columns(S.KL_basis + cols)) if (S.KL_basis or cols) else 0
        out.append(full - base)
    return out


_TERM = re.compile(r"\s*([+-]?)\s*(\d+(?:/\d+)?)?\s*\*?\s*e(\d+)\s*")


def parse_hint(text: str, N: int) -> list:
    """Parse ``e1``, ``e1-e4``, ``2*e3+e5`` (1-based) into a vector of length ``N``."""
    from fractions import Fraction
    vec = [Fraction(0)] * N
    pos = 0
    text = text.strip()
    if not text:
        raise ValueError("empty hint vector")
    while pos < len(text):
        mt = _TERM.match(text, pos)
        if not mt or mt.end() == pos:
            raise ValueError(f"cannot parse hint vector {text!r}")
        if pos > 0 and not mt.group(1):
            raise ValueError(f"missing sign in hint vector {text!r}")
        coef = Fraction(mt.group(2)) if mt.group(2) else Fraction(1)
        if mt.group(1) == "-":
            coef = -coef
        i = int(mt.group(3))
        if not 1 <= i <= N:
            raise ValueError(f"e{i} is outside 1..{N}")
        vec[i - 1] += coef
        pos = mt.end()
    return [RatFunc.const(c) for c in vec]


def parse_hints(text: str, N: int) -> list:
    return [parse_hint(t, N) for t in text.split(",") if t.strip()]


def search_completions(F: FuchsFamily, mu, partial: Sequence, target: Sequence[MatRF]) -> list:
    """Hints extending ``partial`` by one standard vector that match ``target`` entrywise.

    The extra vector ``e_j`` is tried at every position of the hint list.
    Returns the matching hints as lists of 1-based labels.
    """
    C = convolution(F, mu)
    N = C.n * C.p
    base = choose_complement(invariant_subspaces(C, F), [], N)
    labels = [p if isinstance(p, str) else None for p in partial]
    vecs = [parse_hint(p, N) if isinstance(p, str) else list(p) for p in partial]
    found = []
    for j, pos in product(range(1, N + 1), range(len(vecs) + 1)):
        hint = vecs[:pos] + [parse_hint(f"e{j}", N)] + vecs[pos:]
        names = labels[:pos] + [f"e{j}"] + labels[pos:]
        if len(hint) != N - base.dim_KL:
            continue
        try:
            res = middle_convolution(F, mu, hint, record_det=False)
        except DependentHint:
            continue
        if all(X == Y for X, Y in zip(res.tuple, target)):
            found.append(names)
    return found
