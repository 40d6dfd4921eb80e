import random
from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from isomono.errors import NotFound, ShapeMismatch, Singular
from isomono.exactnum import QuadScalar
from isomono.matlin import (MatRF, cayley_hamilton_residual, mat_arith, mat_charpoly,
                            mat_conjugacy_solve, mat_det, mat_inverse, mat_kernel, mat_rank)
from isomono.ratfunc import RatFunc

import oracle
from oracle import same, same_matrix, to_sympy

a = RatFunc.var("a")
z = RatFunc.var("z")
MU = (1 + QuadScalar.sqrt(21)) / 2

A3_EX2 = MatRF.from_rows([[1, 3 * a + 3], [1 / (1 + a), 3]])


def test_commutator_basics(corpus):
    F = corpus("bolibruch").family
    A1, A2 = F.residues[0], F.residues[1]
    assert mat_arith("commutator", A1, A1).is_zero()
    I = MatRF.identity(2)
    assert mat_arith("mul", I, A1) == A1
    C = mat_arith("commutator", A1, A2)
    at3 = C.evaluate({"a": 3})
    # brute-force 2x2 product difference at a = 3 (sympy, frozen)
    S1, S2 = to_sympy(A1).subs(oracle.a, 3), to_sympy(A2).subs(oracle.a, 3)
    brute = S1 * S2 - S2 * S1
    assert brute == sp.Matrix([[sp.Rational(-27, 2), -18], [sp.Rational(-3, 4), sp.Rational(27, 2)]])
    assert abs(at3 - [[-13.5, -18], [-0.75, 13.5]]).max() < 1e-14
    assert same_matrix(C, to_sympy(A1) * to_sympy(A2) - to_sympy(A2) * to_sympy(A1))


def test_shape_errors():
    with pytest.raises(ShapeMismatch):
        mat_arith("commutator", MatRF.identity(2), MatRF.identity(3))
    with pytest.raises(ShapeMismatch):
        mat_charpoly(MatRF.from_rows([[1, 2, 3]]))


def test_kernel_examples():
    ker = mat_kernel(MatRF.from_rows([[0, -6 * a], [0, -1]]))
    assert len(ker) == 1 and ker[0] == [RatFunc.const(1), RatFunc.const(0)]
    ker = mat_kernel(A3_EX2)
    assert len(ker) == 1
    v = ker[0]
    # proportional to (-(3a+3), 1)
    assert (v[0] * 1 - v[1] * (-(3 * a + 3))).is_zero()
    assert mat_kernel(MatRF.identity(3)) == []


def test_charpoly_examples():
    cp = mat_charpoly(A3_EX2)
    assert cp == [RatFunc.const(0), RatFunc.const(-4), RatFunc.const(1)]
    lam = oracle.lam
    ref = sp.Poly(sp.simplify((lam * sp.eye(2) - to_sympy(A3_EX2)).det()), lam).all_coeffs()[::-1]
    assert [sp.simplify(x) for x in ref] == [0, -4, 1]
    assert mat_charpoly(MatRF.zeros(2)) == [0, 0, 1]


def test_charpoly_of_mc3_residue(corpus):
    A1 = corpus("ex3-mc3").family.residues[0]
    assert mat_charpoly(A1) == [0, 0, -(MU + 1), 1]


def test_inverse_examples():
    D = MatRF.diag([z + a, 1])
    assert mat_inverse(D) == MatRF.diag([1 / (z + a), 1])
    assert mat_inverse(MatRF.identity(3)) == MatRF.identity(3)
    with pytest.raises(Singular):
        mat_inverse(MatRF.from_rows([[1, 0], [-2 * a / (a ** 2 - 1), 0]]))


def test_conjugacy_examples():
    Xs = [MatRF.diag([1, 2]), MatRF.from_rows([[0, 1], [0, 0]])]
    S = mat_conjugacy_solve(Xs[:1], Xs[:1])
    assert S.matmul(Xs[0]) == Xs[0].matmul(S) and not mat_det(S).is_zero()
    X, Y = MatRF.diag([1, 2]), MatRF.diag([2, 1])
    S = mat_conjugacy_solve([X], [Y])
    assert S.matmul(X) == Y.matmul(S)
    assert S[0, 0].is_zero() and S[1, 1].is_zero()
    assert mat_conjugacy_solve([MatRF.diag([1, 2])], [MatRF.diag([3, 4])]) is None
    # the intertwiners form a non-zero space of singular matrices
    with pytest.raises(NotFound):
        mat_conjugacy_solve([MatRF.diag([1, 2])], [MatRF.diag([1, 3])])


def test_det_matches_sympy(corpus):
    for name in ("bolibruch", "ex2"):
        for A in corpus(name).family.residues:
            assert same(mat_det(A), sp.simplify(to_sympy(A).det()))


CORPUS_SYSTEMS = ("bolibruch", "ex2", "ex3", "ex2-mc5", "ex3-mc3")


@pytest.mark.parametrize("name", CORPUS_SYSTEMS)
def test_corpus_kernels_rank_and_cayley_hamilton(corpus, name):
    F = corpus(name).family
    from isomono.fuchsys import residue_at_infinity
    for A in list(F.residues) + [residue_at_infinity(F)]:
        ker = mat_kernel(A)
        for v in ker:
            assert all(e.is_zero() for e in A.apply(v))
        assert mat_rank(A) + len(ker) == A.cols
        assert cayley_hamilton_residual(A).is_zero()


small = st.integers(-3, 3)


def _poly_entry(c0, c1):
    return RatFunc.const(c0) + c1 * a


mats = st.integers(2, 3).flatmap(
    lambda n: st.lists(st.tuples(small, small), min_size=n * n, max_size=n * n).map(
        lambda es, n=n: MatRF(n, n, [_poly_entry(*e) for e in es])))


@settings(max_examples=25)
@given(mats)
def test_kernel_and_rank_nullity(X):
    ker = mat_kernel(X)
    for v in ker:
        assert all(e.is_zero() for e in X.apply(v))
    assert mat_rank(X) + len(ker) == X.cols
    ref = to_sympy(X).rank(simplify=True)
    assert mat_rank(X) == ref


@settings(max_examples=25)
@given(mats)
def test_cayley_hamilton_random(X):
    assert cayley_hamilton_residual(X).is_zero()


@settings(max_examples=20)
@given(mats, st.integers(0, 2 ** 32))
def test_conjugacy_success_is_verified(X, seed):
    rnd = random.Random(seed)
    n = X.rows
    while True:
        S0 = MatRF(n, n, [RatFunc.const(rnd.randint(-2, 2)) for _ in range(n * n)])
        if not mat_det(S0).is_zero():
            break
    Y = S0.matmul(X).matmul(mat_inverse(S0))
    S = mat_conjugacy_solve([X], [Y])
    assert S is not None
    assert S.matmul(X) == Y.matmul(S)
    assert not mat_det(S).is_zero()
