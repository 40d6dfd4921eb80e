import cmath
from fractions import Fraction
import importlib
import os
import subprocess
import sys

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from isomono import _kernels_py, monodromy
from isomono.errors import CoalescedSample
from isomono.fuchsys import FuchsFamily, PoleLoc
from isomono.matlin import MatRF
from isomono.monodromy import (as_numpy, integrate_monodromy, isomonodromy_verdict, numeric_family,
                               plan_loops, product_relation_check, word_traces)
from isomono.ratfunc import RatFunc

a = RatFunc.var("a")
TOL = 1e-10

try:
    from isomono import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = ["python"] + (["cython"] if _compiled is not None else [])


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    kern = _kernels_py if request.param == "python" else _compiled
    monkeypatch.setattr(monodromy, "_kern", kern)
    return request.param


def _scalar(c, pole=0):
    return FuchsFamily([PoleLoc(pole)], [MatRF.from_rows([[RatFunc.const(c)]])])


def test_backend_selected_at_import():
    assert monodromy.BACKEND in ("cython", "python")
    if _compiled is not None:
        assert monodromy.BACKEND == "cython"


def test_pure_python_switch():
    env = dict(os.environ, ISOMONO_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from isomono import monodromy; print(monodromy.BACKEND)"],
                         capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "python"


def test_plan_examples(corpus):
    F = corpus("bolibruch").family
    plan = plan_loops(F, {"a": 0.3})
    assert [l.pole_index for l in plan.loops] == [0, 1, 2, 3]
    assert np.allclose(plan.poles, [-0.3, 0, 1, -1])
    assert plan.radius == pytest.approx(0.3 / 3)
    with pytest.raises(CoalescedSample):
        plan_loops(F, {"a": 1})
    custom = plan_loops(F, {"a": 0.3}, base_point=-2 - 1j)
    assert custom.base_point == -2 - 1j
    for loop in custom.loops:
        assert loop.segments[0][0] == -2 - 1j
        assert loop.segments[-1][1] == -2 - 1j


def test_plan_clearance(corpus):
    F = corpus("ex3").family
    plan = plan_loops(F, {"a": 0.4})
    for loop in plan.loops:
        others = np.delete(plan.poles, loop.pole_index)
        for kind, seg in zip(loop.kinds, loop.segments):
            for t in np.linspace(0, 1, 200):
                zt, _ = monodromy._kern_point(kind, seg, t)
                assert np.min(np.abs(others - zt)) >= plan.radius * 1e-2


@pytest.mark.parametrize("c", [0.3, -1.25, 0.5 + 0.2j])
def test_scalar_loop(backend, c):
    F = FuchsFamily([PoleLoc(0)], [MatRF.from_rows([[RatFunc.const(0)]])])
    plan = plan_loops(F, {})
    Ms = integrate_monodromy(F, plan, TOL, residues=np.array([[[c]]], dtype=complex))
    assert abs(complex(Ms[0][0, 0]) - cmath.exp(2j * cmath.pi * c)) < 10 * TOL


def test_loop_without_pole_is_identity(backend):
    kern = monodromy._kern
    poles = np.array([0j, 1 + 0j])
    res = np.array([[[0.3, 1.0], [0.0, -0.2]], [[0.1, 0.0], [2.0, 0.4]]], dtype=complex)
    segs = np.array([[5 + 0j, 1.5 + 0j, complex(np.pi / 2, np.pi / 2 + 2 * np.pi)]])
    hi, lo, steps, _ = kern.transport(np.array([1], dtype=np.int64), segs, poles, res,
                                      np.eye(2, dtype=complex), TOL)
    assert steps > 0
    assert np.max(np.abs(hi + lo - np.eye(2))) < 10 * TOL


def test_kernels_agree():
    if _compiled is None:
        pytest.skip("compiled kernel not built")
    poles = np.array([-0.3, 0, 1, -1], dtype=complex)
    rng = np.random.default_rng(3)
    res = rng.normal(size=(4, 2, 2)) + 1j * rng.normal(size=(4, 2, 2))
    kinds = np.array([0, 1, 0], dtype=np.int64)
    segs = np.array([[-2 + 0j, 1 + 0.3j, 0j], [1 + 0j, 0.3 + 0j, complex(np.pi / 2, 5 * np.pi / 2)],
                     [1 + 0.3j, -2 + 0j, 0j]])
    h1, l1, s1, _ = _kernels_py.transport(kinds, segs, poles, res, np.eye(2, dtype=complex), TOL)
    h2, l2, s2, _ = _compiled.transport(kinds, segs, poles, res, np.eye(2, dtype=complex), TOL)
    assert s1 == s2
    y1, y2 = h1 + l1, h2 + l2
    assert np.max(np.abs(y1 - y2)) <= 1e-24 * np.max(np.abs(y1))


def test_tol_range(corpus):
    F = corpus("bolibruch").family
    plan = plan_loops(F, {"a": 0.3})
    for bad in (1e-3, 1e-16):
        with pytest.raises(ValueError):
            integrate_monodromy(F, plan, bad, {"a": 0.3})


CORPUS_SAMPLES = [
    ("bolibruch", {"a": 0.3}),
    ("ex2", {"a": 0.45}),
    ("ex3", {"a": 0.4}),
    ("ex3-mc3", {"a": 0.35}),
    ("ex2-mc5", {"a": 0.3, "mu": 0.37}),
]


@pytest.mark.parametrize("name,sample", CORPUS_SAMPLES)
def test_liouville_determinants(corpus, name, sample):
    F = corpus(name).family
    plan = plan_loops(F, sample)
    _, res = numeric_family(F, sample)
    Ms = integrate_monodromy(F, plan, TOL, residues=res)
    assert len(Ms) == F.n + 1
    traces = [np.trace(A) for A in res] + [-np.sum([np.trace(A) for A in res])]
    for M, t in zip(Ms, traces):
        assert M.rows == F.size
        with mpmath.workprec(128):
            d = complex(mpmath.det(M))
        assert abs(d - cmath.exp(2j * cmath.pi * t)) < 100 * TOL
    assert product_relation_check(Ms) < 1e-12


def test_product_relation(corpus):
    F = _scalar(Fraction(1, 4))
    Ms = integrate_monodromy(F, plan_loops(F, {}), TOL, {})
    assert product_relation_check(Ms) < 1e-15
    G = corpus("bolibruch").family
    Ms = [as_numpy(M) for M in integrate_monodromy(G, plan_loops(G, {"a": 0.3}), TOL, {"a": 0.3})]
    bad = [M.copy() for M in Ms]
    bad[2][0, 1] += 1e-3
    r = product_relation_check(bad)
    # the perturbation is carried through the remaining factors
    P = np.eye(2, dtype=complex)
    for M in Ms[:2]:
        P = P @ M
    E = np.zeros((2, 2), dtype=complex)
    E[0, 1] = 1e-3
    Q = np.eye(2, dtype=complex)
    for M in Ms[3:]:
        Q = Q @ M
    assert r == pytest.approx(np.max(np.abs(P @ E @ Q)), rel=1e-3)
    # with unimodular diagonal monodromy the residual is the perturbation itself
    D = FuchsFamily([PoleLoc(0), PoleLoc(1)], [MatRF.diag([Fraction(1, 3), Fraction(-1, 5)]),
                                                 MatRF.diag([Fraction(1, 7), Fraction(1, 2)])])
    Ms = [as_numpy(M) for M in integrate_monodromy(D, plan_loops(D, {}), TOL, {})]
    Ms[1][0, 1] += 1e-3
    assert product_relation_check(Ms) == pytest.approx(1e-3, rel=1e-6)


def test_word_trace_keys():
    Ms = [mpmath.eye(2) * k for k in (1, 2, 3, 4)]
    tr = word_traces(Ms)
    assert tr[(1,)] == 2 and tr[(2, 3)] == 12 and tr[(1, 2, 3)] == 12
    assert sorted(k for k in tr if len(k) == 2) == [(i, j) for i in range(1, 5) for j in range(i + 1, 5)]


def test_verdict_bolibruch(corpus):
    F = corpus("bolibruch").family
    rep = isomonodromy_verdict(F, [{"a": 0.3}, {"a": 0.45}, {"a": 0.6}], TOL)
    assert rep.consistent and rep.verdict == "isomonodromic-consistent"
    assert rep.tol == TOL and rep.threshold == 100 * TOL
    assert all(M.rows == 2 for Ms in rep.matrices for M in Ms)


def test_verdict_detects_varying_exponent():
    F = FuchsFamily([PoleLoc(0)], [MatRF.diag([a, 0])], ("a",))
    rep = isomonodromy_verdict(F, [{"a": 0.2}, {"a": 0.3}], TOL)
    assert not rep.consistent and rep.verdict == "not-consistent"


def test_identical_samples_deviation_zero(corpus):
    F = corpus("ex2").family
    rep = isomonodromy_verdict(F, [{"a": 0.4}, {"a": 0.4}], TOL)
    assert rep.max_deviation == 0.0


def test_base_point_invariance(corpus):
    F = corpus("bolibruch").family
    s = {"a": 0.3}
    t1 = word_traces(integrate_monodromy(F, plan_loops(F, s), TOL, s))
    t2 = word_traces(integrate_monodromy(F, plan_loops(F, s, base_point=-1.7 - 0.8j), TOL, s))
    assert max(abs(t1[k] - t2[k]) for k in t1) < 100 * TOL


def test_python_backend_on_corpus(corpus, monkeypatch):
    monkeypatch.setattr(monodromy, "_kern", _kernels_py)
    F = corpus("ex2").family
    s = {"a": 0.45}
    Ms = integrate_monodromy(F, plan_loops(F, s), TOL, s)
    _, res = numeric_family(F, s)
    for M, A in zip(Ms, res):
        with mpmath.workprec(128):
            d = complex(mpmath.det(M))
        assert abs(d - cmath.exp(2j * cmath.pi * np.trace(A))) < 100 * TOL


def _errors(F, s, tol):
    _, res = numeric_family(F, s)
    Ms = integrate_monodromy(F, plan_loops(F, s), tol, residues=res)
    return product_relation_check(Ms), monodromy._det_error(Ms, res)


def test_halving_tol_halves_errors(corpus):
    F = corpus("bolibruch").family
    s = {"a": 0.3}
    p1, d1 = _errors(F, s, 1e-8)
    p2, d2 = _errors(F, s, 0.5e-8)
    assert p2 <= p1 / 2 and d2 <= d1 / 2


@settings(max_examples=10)
@given(st.floats(-2, 2), st.floats(-0.5, 0.5))
def test_scalar_monodromy_property(re, im):
    c = complex(re, im)
    F = FuchsFamily([PoleLoc(0)], [MatRF.from_rows([[RatFunc.const(0)]])])
    Ms = integrate_monodromy(F, plan_loops(F, {}), TOL, residues=np.array([[[c]]]))
    want = cmath.exp(2j * cmath.pi * c)
    assert abs(complex(Ms[0][0, 0]) - want) < 10 * TOL * max(1.0, abs(want))
