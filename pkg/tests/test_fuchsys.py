import random

import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from isomono.errors import CoalescingPoles, NonFuchsian, ParameterDependentSpectrum, Singular
from isomono.exactnum import QuadScalar
from isomono.fuchsys import (INFINITY, FuchsFamily, PoleLoc, addition, family_from_dz,
                             gauge_transform_form, hitchin_traces, resonance, resonance_report,
                             residue_at_infinity, substitute_form)
from isomono.isoform import MatOneForm
from isomono.matlin import MatRF, mat_charpoly, mat_inverse
from isomono.ratfunc import MPoly, RatFunc, poly_gcd

import oracle
from oracle import same_matrix, to_sympy

a = RatFunc.var("a")
z = RatFunc.var("z")
MU = (1 + QuadScalar.sqrt(21)) / 2


def _index(F, loc):
    target = PoleLoc.from_ratfunc(loc)
    return F.poles.index(target)


def test_residue_at_infinity_examples(corpus):
    assert residue_at_infinity(corpus("ex2").family).is_zero()
    assert residue_at_infinity(corpus("ex3").family) == MatRF.scalar(2, MU)


def test_residue_at_infinity_of_mc3_is_minus_mu():
    # the sum of the printed residues is mu I, so minus the sum is -mu I
    from isomono.fsdio import load_corpus
    F = load_corpus("ex3-mc3").family
    acc = MatRF.zeros(3)
    for A in F.residues:
        acc = acc + A
    assert acc == MatRF.scalar(3, MU)
    assert residue_at_infinity(F) == MatRF.scalar(3, -MU)


def test_resonance_examples(corpus):
    B = corpus("bolibruch").family
    assert resonance(B, _index(B, -a)).r == 1
    E = corpus("ex2").family
    e = resonance(E, _index(E, RatFunc.const(1)))
    assert e.r == 4 and 4 in e.witnesses
    M = corpus("ex3-mc3").family
    rep = resonance_report(M)
    assert all(x.r == 0 for x in rep.entries)
    assert rep.resonant_poles() == []


def test_resonance_rejects_parameter_dependent_spectrum():
    F = FuchsFamily([PoleLoc(0)], [MatRF.diag([a, 0])], ("a",))
    with pytest.raises(ParameterDependentSpectrum):
        resonance(F, 0)


def test_addition_examples(corpus):
    B = corpus("bolibruch").family
    assert addition(B, 0, 0) == B
    i0 = _index(B, RatFunc.const(0))
    assert addition(B, i0, 1).residues[i0] == MatRF.from_rows([[1, -6 * a], [0, 0]])
    M = corpus("ex3-mc3").family
    i = _index(M, -a)
    shifted = addition(M, i, -MU)
    # eigenvalues 1, -mu, -mu: charpoly (lam - 1)(lam + mu)^2
    lam = MPoly.var("lam")
    want = (lam - 1) * (lam + MU) ** 2
    cp = mat_charpoly(shifted.residues[i])
    assert [c.constant_value() for c in cp] == [want.terms.get((k,), 0) for k in range(4)]


def test_family_validation():
    with pytest.raises(CoalescingPoles):
        FuchsFamily([PoleLoc(0), PoleLoc(0)], [MatRF.identity(2), MatRF.identity(2)])
    with pytest.raises(NonFuchsian):
        FuchsFamily([PoleLoc(0)], [MatRF.diag([z, 1])])


def test_gauge_identity_and_formula(corpus):
    w = corpus("bolibruch-form").form
    assert gauge_transform_form(w, MatRF.identity(2)) == w
    G = MatRF.from_rows([[1, z], [0, a]])
    out = gauge_transform_form(w, G)
    sG, sP = to_sympy(G), to_sympy(w.P)
    ref = sG.diff(oracle.z) * sG.inv() + sG * sP * sG.inv()
    assert same_matrix(out.P, ref)
    with pytest.raises(Singular):
        gauge_transform_form(w, MatRF.from_rows([[1, z], [1, z]]))


def test_apparent_singularity_chain(corpus):
    doc = corpus("bolibruch-form")
    F = doc.family
    # y = diag(z + a, 1) y1, i.e. the gauge by the inverse matrix
    G1 = MatRF.diag([z + a, 1])
    w1 = substitute_form(doc.form, G1)
    assert w1 == gauge_transform_form(doc.form, mat_inverse(G1))
    F1 = family_from_dz(w1.P, F.poles, F.parameters)
    assert F1.residues[_index(F1, -a)].is_zero()
    w2 = substitute_form(w1, MatRF.diag([1 / z, 1]))
    F2 = family_from_dz(w2.P, F.poles, F.parameters)
    live = [R for R in F2.residues if not R.is_zero()]
    assert len(live) == 3
    for R in live:
        for e in R.entries:
            v = e.constant_value()
            assert v.is_rational() and v.rat_part.denominator == 1


def test_hitchin_traces(corpus):
    D = FuchsFamily([PoleLoc(0), PoleLoc(1), PoleLoc(-1)],
                    [MatRF.diag([1, 2]), MatRF.diag([a, 0]), MatRF.diag([3, a])], ("a",))
    assert all(v.is_zero() for v in hitchin_traces(D).values())
    B = corpus("bolibruch").family
    tr = hitchin_traces(B)
    assert all((i, i, k) not in tr for i in range(4) for k in range(4))
    S = [to_sympy(A).subs(oracle.a, 3) for A in B.residues]
    brute = ((S[0] * S[1] - S[1] * S[0]) * S[2]).trace()
    assert oracle.scalar_to_sympy(tr[(0, 1, 2)].eval_exact({"a": 3})) == brute
    assert abs(complex(tr[(0, 1, 2)].eval({"a": 3})) - float(brute)) < 1e-12


def test_family_from_dz_roundtrip(corpus):
    F = corpus("ex2").family
    G = family_from_dz(F.dz_matrix(), F.poles, F.parameters)
    assert G == F


# random constant gauges of corpus families keep the resonance table
@settings(max_examples=8)
@given(st.integers(0, 10 ** 6), st.sampled_from(["bolibruch", "ex2", "ex3-mc3"]))
def test_resonance_invariant_under_constant_gauge(seed, name):
    from isomono.fsdio import load_corpus
    from isomono.matlin import mat_det
    F = load_corpus(name).family
    rng = random.Random(seed)
    while True:
        S = MatRF(F.size, F.size, [RatFunc.const(rng.randint(-3, 3)) for _ in range(F.size ** 2)])
        if not mat_det(S).is_zero():
            break
    Si = mat_inverse(S)
    G = F.with_residues([S.matmul(A).matmul(Si) for A in F.residues])
    before = [e.r for e in resonance_report(F).entries]
    after = [e.r for e in resonance_report(G).entries]
    assert before == after


@pytest.mark.parametrize("name", ["bolibruch", "ex2", "ex3", "ex3-mc3"])
def test_resonance_witnesses_are_exact(corpus, name):
    F = corpus(name).family
    lam = MPoly.var("lam")
    for e in resonance_report(F).entries:
        p = MPoly(("lam",), {(k,): c for k, c in enumerate(e.charpoly)})
        for k in range(1, e.k_max + 1):
            deg = poly_gcd(p, p.subs("lam", lam + k)).degree()
            assert (deg > 0) == (k in e.witnesses)
        assert e.r == (max(e.witnesses) if e.witnesses else 0)


small = st.integers(-3, 3)


@settings(max_examples=20)
@given(st.lists(small, min_size=12, max_size=12), small, st.integers(0, 2))
def test_addition_shifts_infinity(vals, alpha, idx):
    res = [MatRF.from_rows([[vals[4 * k], vals[4 * k + 1] * a], [vals[4 * k + 2], vals[4 * k + 3]]])
           for k in range(3)]
    F = FuchsFamily([PoleLoc(0), PoleLoc(1), PoleLoc(0, {"a": 1})], res, ("a",))
    G = addition(F, idx, alpha)
    assert residue_at_infinity(G) == residue_at_infinity(F) - MatRF.scalar(2, alpha)


@settings(max_examples=15)
@given(st.lists(small, min_size=4, max_size=4), st.integers(1, 3))
def test_gauge_then_inverse_is_identity(vals, k):
    from isomono.fsdio import load_corpus
    w = load_corpus("bolibruch-form").form
    G = MatRF.from_rows([[z ** k + vals[0], vals[1] * a], [vals[2], 1 + vals[3] ** 2]])
    from isomono.matlin import mat_det
    if mat_det(G).is_zero():
        return
    back = gauge_transform_form(gauge_transform_form(w, G), mat_inverse(G))
    assert back == w
