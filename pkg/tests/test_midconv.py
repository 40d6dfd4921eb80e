import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from isomono.errors import DependentHint
from isomono.exactnum import QuadScalar
from isomono.fuchsys import FuchsFamily, PoleLoc
from isomono.matlin import MatRF, mat_conjugacy_solve, mat_det, mat_kernel, mat_rank
from isomono.midconv import (choose_complement, convolution, induced_defect, invariant_subspaces,
                             middle_convolution, parse_hint, parse_hints)
from isomono.ratfunc import RatFunc

from oracle import to_sympy

a = RatFunc.var("a")
mu = RatFunc.var("mu")
MU3 = (1 + QuadScalar.sqrt(21)) / 2


def _scalar_family(values):
    poles = [PoleLoc(k) for k in range(len(values))]
    return FuchsFamily(poles, [MatRF.from_rows([[v]]) for v in values])


def test_convolution_scalar_example():
    C = convolution(_scalar_family([2, 3]), 5)
    assert C.blocks[0] == MatRF.from_rows([[7, 3], [0, 0]])
    assert C.blocks[1] == MatRF.from_rows([[0, 0], [2, 8]])


def test_convolution_without_shift(corpus):
    F = corpus("bolibruch").family
    C = convolution(F, 0)
    for k, B in enumerate(C.blocks):
        for j, A in enumerate(F.residues):
            assert B.submatrix(2 * k, 2 * k + 2, 2 * j, 2 * j + 2) == A
        for kk in range(F.n):
            if kk != k:
                assert B.submatrix(2 * kk, 2 * kk + 2, 0, 8).is_zero()


def test_convolution_symbolic_block_row(corpus):
    F = corpus("ex2").family
    C = convolution(F, "mu")
    B1 = C.blocks[0]
    assert B1.shape == (8, 8)
    assert B1.submatrix(0, 2, 0, 2) == F.residues[0] + MatRF.scalar(2, mu)
    for j in range(1, 4):
        assert B1.submatrix(0, 2, 2 * j, 2 * j + 2) == F.residues[j]


def test_subspace_dimensions(corpus):
    F = corpus("ex2").family
    S = invariant_subspaces(convolution(F, "mu"), F)
    assert [len(b) for b in S.L_bases] == [0, 1, 1, 1]
    assert S.dim_K == 0 and 8 - S.dim_KL == 5
    G = corpus("ex3").family
    S = invariant_subspaces(convolution(G, MU3), G)
    assert S.dim_L == 3 and S.dim_K == 2 and 8 - S.dim_KL == 3
    # K is spanned by block-constant vectors (u, u, u, u)
    for v in S.K_basis:
        assert v[0:2] == v[2:4] == v[4:6] == v[6:8]


def test_trivial_subspaces_give_standard_complement():
    F = _scalar_family([2, 3])
    S = choose_complement(invariant_subspaces(convolution(F, 5), F), None, 2)
    assert S.dim_KL == 0
    assert S.complement == [[RatFunc.const(1), RatFunc.const(0)], [RatFunc.const(0), RatFunc.const(1)]]


def test_hint_accepted_and_dependent_hint(corpus):
    F = corpus("ex2").family
    S = invariant_subspaces(convolution(F, "mu"), F)
    hint = parse_hints("e1,e2,e4,e6,e8", 8)
    T = choose_complement(S, hint, 8)
    assert T.complement == hint
    bad = [S.L_bases[1][0]]
    with pytest.raises(DependentHint):
        choose_complement(S, bad, 8)


def test_mc5_matches_printed_matrices(corpus):
    F = corpus("ex2").family
    out = middle_convolution(F, "mu", hint="e1,e2,e4,e6,e8")
    assert out.m == 5
    printed = corpus("ex2-mc5").family.residues
    assert all(x == y for x, y in zip(out.tuple, printed))
    assert out.family.poles == F.poles


def test_mc3_conjugate_to_printed(corpus):
    F = corpus("ex3").family
    out = middle_convolution(F, MU3)
    assert out.m == 3
    S = mat_conjugacy_solve(out.tuple, corpus("ex3-mc3").family.residues)
    assert S is not None and not mat_det(S).is_zero()
    for X, Y in zip(out.tuple, corpus("ex3-mc3").family.residues):
        assert S.matmul(X) == Y.matmul(S)


def test_scalar_case():
    out = middle_convolution(_scalar_family([RatFunc.const(3)]), 2)
    assert out.m == 1 and out.tuple[0] == MatRF.from_rows([[5]])


def test_hint_parsing():
    v = parse_hint("e1-e4", 8)
    assert [int(x.constant_value().rat_part) for x in v] == [1, 0, 0, -1, 0, 0, 0, 0]
    v = parse_hint("2*e3 + 1/2*e5", 5)
    assert v[2] == 2 and v[4] == RatFunc.const(1) / 2
    with pytest.raises(ValueError):
        parse_hint("e9", 8)
    with pytest.raises(ValueError):
        parse_hint("e1 e2", 8)


def test_mc0_of_bolibruch_is_conjugate_to_input(corpus):
    F = corpus("bolibruch").family
    # no shared eigenvector at a generic rational point (sympy oracle)
    mats = [to_sympy(A).subs(sp.Symbol("a"), sp.Rational(2, 7)) for A in F.residues]
    vecs = [v for M in mats for _, _, vs in M.eigenvects() for v in vs]
    shared = [v for v in vecs if all(sp.Matrix.hstack(v, M * v).rank() == 1 for M in mats)]
    assert shared == []
    out = middle_convolution(F, 0)
    assert out.m == 2
    S = mat_conjugacy_solve(out.tuple, F.residues)
    assert S is not None


@pytest.mark.parametrize("name,mu_value", [("ex2", "mu"), ("ex3", MU3), ("bolibruch", 0),
                                            ("bolibruch", RatFunc.const(1) / 3)])
def test_subspace_invariants(corpus, name, mu_value):
    F = corpus(name).family
    C = convolution(F, mu_value)
    S = invariant_subspaces(C, F)
    p = F.size
    for k, Lk in enumerate(S.L_bases):
        for v in Lk:
            assert all(x.is_zero() for j, x in enumerate(v) if not k * p <= j < (k + 1) * p)
            assert all(e.is_zero() for e in F.residues[k].apply(v[k * p:(k + 1) * p]))
            for j, B in enumerate(C.blocks):
                w = B.apply(v)
                if j != k:
                    assert all(e.is_zero() for e in w)
                else:
                    assert all(x.is_zero() for i, x in enumerate(w) if not k * p <= i < (k + 1) * p)
    total = C.blocks[0]
    for B in C.blocks[1:]:
        total = total + B
    for v in S.K_basis:
        assert all(e.is_zero() for e in total.apply(v))
    L = [v for b in S.L_bases for v in b]
    if L or S.K_basis:
        assert S.dim_KL == mat_rank(MatRF.from_columns(L + S.K_basis))
    if mu_value != 0:
        # K and L intersect trivially away from mu = 0, so dimensions add
        assert S.dim_KL == S.dim_K + S.dim_L
    out = middle_convolution(F, mu_value)
    assert out.m == F.n * p - S.dim_KL
    assert induced_defect(out, C) == [0] * F.n


small = st.integers(-4, 4)


@settings(max_examples=20)
@given(st.lists(small, min_size=12, max_size=12), st.integers(1, 5))
def test_induced_matrices_round_trip(vals, m):
    res = [MatRF.from_rows([[vals[4 * k], vals[4 * k + 1]], [vals[4 * k + 2], vals[4 * k + 3]]])
           for k in range(3)]
    F = FuchsFamily([PoleLoc(0), PoleLoc(1), PoleLoc(-1)], res)
    mu_value = RatFunc.const(m) / 7
    out = middle_convolution(F, mu_value)
    C = convolution(F, mu_value)
    assert induced_defect(out, C) == [0] * 3
    S = out.subspaces
    assert out.m == 6 - S.dim_KL
