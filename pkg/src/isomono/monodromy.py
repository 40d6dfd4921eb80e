"""Numerical monodromy of Fuchsian families and an isomonodromy check.

Convention: ``Y`` is the fundamental solution with ``Y(z0) = I``; carrying it
once around loop ``gamma_i`` gives ``Y -> Y M_i``, so ``M_i`` is the value of
the continued solution back at ``z0``. The infinity generator is
``M_{n+1} = (M_1 ... M_n)^-1``. Families are compared through traces of
words in the generators, which do not depend on the choice of ``Y``.

The transport kernel is compiled (``_kernels``) when available; setting
``ISOMONO_PURE_PYTHON=1`` forces the pure-Python fallback. Both sum Taylor
series in about 106-bit arithmetic, and the matrices are assembled with
``mpmath`` at ``FSD_PRECISION_BITS`` (default 128). The extra precision is
needed: with the circle radii used here the fundamental solution is badly
conditioned, and double precision loses most of the digits of the word
traces.
"""

from __future__ import annotations

import cmath
import math
import os
from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, Sequence

import mpmath
import numpy as np

from .errors import CoalescedSample
from .fuchsys import FuchsFamily

if os.environ.get("ISOMONO_PURE_PYTHON", "") not in ("", "0"):
    from . import _kernels_py as _kern
    BACKEND = "python"
else:
    try:
        from . import _kernels as _kern
        BACKEND = "cython"
    except ImportError:  # extension not built
        from . import _kernels_py as _kern
        BACKEND = "python"

LINE, ARC = 0, 1
COALESCE_DIST = 1e-6

__all__ = [
    "BACKEND",
    "LoopPlan",
    "MonodromyReport",
    "plan_loops",
    "integrate_monodromy",
    "product_relation_check",
    "word_traces",
    "isomonodromy_verdict",
    "numeric_family",
    "as_numpy",
]


def _precision_bits() -> int:
    try:
        return int(os.environ.get("FSD_PRECISION_BITS", "128"))
    except ValueError:
        return 128


def numeric_family(F: FuchsFamily, sample: Mapping[str, complex], precision: int | None = None):
    """Poles and residues of ``F`` at a parameter sample as complex arrays."""
    from .ratfunc import rf_eval
    prec = _precision_bits() if precision is None else precision
    poles = np.array([p.evaluate(sample) for p in F.poles], dtype=complex)
    res = np.array([[[complex(rf_eval(A[i, j], sample, prec)) for j in range(F.size)]
                     for i in range(F.size)] for A in F.residues], dtype=complex)
    return poles, res


@dataclass
class Loop:
    pole_index: int
    radius: float
    kinds: list
    segments: list  # each: (a, b, c) complex triples, see _kernels_py
    leg_kinds: list = field(default_factory=list)
    leg_segments: list = field(default_factory=list)


@dataclass
class LoopPlan:
    base_point: complex
    poles: np.ndarray
    radius: float
    loops: list


def _line(a, b):
    return (LINE, (complex(a), complex(b), 0j))


def plan_loops(F: FuchsFamily, sample: Mapping[str, complex], base_point: complex | None = None) -> LoopPlan:
    """One counter-clockwise loop per finite pole, in pole order.

    Each loop runs from the base point up above all poles, across to the
    pole's real part, down to ``pole + i r``, once around the circle of
    radius ``r`` and back the same way. ``r`` is a third of the smallest
    pole distance.
    """
    poles = np.array([p.evaluate(sample) for p in F.poles], dtype=complex)
    n = len(poles)
    dmin = math.inf
    for i, j in combinations(range(n), 2):
        d = abs(poles[i] - poles[j])
        if d < COALESCE_DIST:
            raise CoalescedSample(f"poles {i} and {j} coincide at the sample (distance {d:.3g})")
        dmin = min(dmin, d)
    if n == 1:
        dmin = 3.0
    r = dmin / 3.0
    if base_point is None:
        base_point = complex(min(poles.real) - 1.0, 0.0)
    base_point = complex(base_point)
    if np.min(np.abs(poles - base_point)) < r:
        raise ValueError("base point too close to a pole")
    top = max(max(poles.imag), base_point.imag) + 1.0
    loops = []
    for i, w in enumerate(poles):
        start = w + 1j * r
        legs = []
        pts = [base_point, complex(base_point.real, top), complex(w.real, top), start]
        for a, b in zip(pts, pts[1:]):
            if abs(b - a) > 0:
                legs.append(_line(a, b))
        arc = (ARC, (complex(w), complex(r), complex(math.pi / 2, math.pi / 2 + 2 * math.pi)))
        loop = Loop(i, r, [], [], [k for k, _ in legs], [s for _, s in legs])
        loop.kinds = loop.leg_kinds + [ARC] + [LINE] * len(legs)
        loop.segments = loop.leg_segments + [arc[1]] + [(s[1], s[0], 0j) for s in reversed(loop.leg_segments)]
        _check_clearance(loop, poles, i, r)
        loops.append(loop)
    return LoopPlan(base_point, poles, r, loops)


def _check_clearance(loop, poles, own, r, nsamp=64):
    others = np.delete(poles, own)
    if not len(others):
        return
    for kind, seg in zip(loop.kinds, loop.segments):
        for t in np.linspace(0.0, 1.0, nsamp):
            z, _ = _kern_point(kind, seg, t)
            if np.min(np.abs(others - z)) < r * 1e-2:
                raise CoalescedSample(f"loop {own} passes within {r * 1e-2:.3g} of another pole")


def _kern_point(kind, seg, t):
    if kind == LINE:
        return seg[0] + (seg[1] - seg[0]) * t, seg[1] - seg[0]
    r, th0, th1 = seg[1].real, seg[2].real, seg[2].imag
    e = r * cmath.exp(1j * (th0 + (th1 - th0) * t))
    return seg[0] + e, 1j * (th1 - th0) * e


def _to_mp(X):
    if isinstance(X, mpmath.matrix):
        return X
    X = np.asarray(X, dtype=complex)
    return mpmath.matrix([[mpmath.mpc(complex(X[i, j])) for j in range(X.shape[1])] for i in range(X.shape[0])])


def _transport(kinds, segs, poles, residues, tol):
    p = residues.shape[1]
    hi, lo, _, _ = _kern.transport(np.asarray(kinds, dtype=np.int64), np.asarray(segs, dtype=complex),
                                   poles, residues, np.eye(p, dtype=complex), tol)
    return mpmath.matrix([[mpmath.mpc(complex(hi[i, j])) + mpmath.mpc(complex(lo[i, j])) for j in range(p)]
                          for i in range(p)])


def integrate_monodromy(F: FuchsFamily, plan: LoopPlan, tol: float, sample: Mapping[str, complex] | None = None,
                        residues: np.ndarray | None = None) -> list:
    """Monodromy matrices ``[M_1, ..., M_n, M_{n+1}]`` (``mpmath`` matrices) for the planned loops.

    The series are summed to working precision, so the local error of every
    step is far below ``tol``.
    """
    if not 1e-14 <= tol <= 1e-4:
        raise ValueError("tol must lie in [1e-14, 1e-4]")
    if residues is None:
        if sample is None:
            raise ValueError("need a parameter sample or numeric residues")
        _, residues = numeric_family(F, sample)
    poles = plan.poles
    with mpmath.workprec(_precision_bits()):
        Ms = [_transport(loop.kinds, loop.segments, poles, residues, tol) for loop in plan.loops]
        prod = mpmath.eye(F.size)
        for M in Ms:
            prod = prod * M
        Ms.append(prod ** -1)
    return Ms


def product_relation_check(Ms: Sequence) -> float:
    """``max |M_1 ... M_n M_{n+1} - I|``."""
    with mpmath.workprec(_precision_bits()):
        Ms = [_to_mp(M) for M in Ms]
        prod = mpmath.eye(Ms[0].rows)
        for M in Ms:
            prod = prod * M
        prod = prod - mpmath.eye(prod.rows)
        return float(max(abs(prod[i, j]) for i in range(prod.rows) for j in range(prod.cols)))


def _tr(X):
    return complex(sum((X[i, i] for i in range(X.rows)), mpmath.mpc(0)))


def word_traces(Ms: Sequence) -> dict:
    """``tr M_i``, ``tr M_i M_j`` (i < j) and ``tr M_1 M_2 M_3``, keyed by 1-based words."""
    out = {}
    with mpmath.workprec(_precision_bits()):
        Ms = [_to_mp(M) for M in Ms]
        for i, M in enumerate(Ms):
            out[(i + 1,)] = _tr(M)
        for i, j in combinations(range(len(Ms)), 2):
            out[(i + 1, j + 1)] = _tr(Ms[i] * Ms[j])
        if len(Ms) >= 3:
            out[(1, 2, 3)] = _tr(Ms[0] * Ms[1] * Ms[2])
    return out


def as_numpy(M) -> np.ndarray:
    """Round a monodromy matrix to ``complex128``."""
    return np.array([[complex(M[i, j]) for j in range(M.cols)] for i in range(M.rows)], dtype=complex)


@dataclass
class MonodromyReport:
    samples: list
    matrices: list
    traces: list
    product_residuals: list
    det_errors: list
    max_deviation: float
    tol: float
    threshold: float
    consistent: bool

    @property
    def verdict(self) -> str:
        return "isomonodromic-consistent" if self.consistent else "not-consistent"


def _det_error(Ms, residues):
    errs = []
    residues = list(residues) + [-np.sum(residues, axis=0)]
    with mpmath.workprec(_precision_bits()):
        for M, A in zip(Ms, residues):
            want = mpmath.exp(2j * mpmath.pi * mpmath.mpc(complex(np.trace(A))))
            errs.append(float(abs(mpmath.det(_to_mp(M)) - want)))
    return max(errs)


def isomonodromy_verdict(F: FuchsFamily, samples: Sequence[Mapping[str, complex]], tol: float,
                         base_point: complex | None = None) -> MonodromyReport:
    """Compare word traces across parameter samples; consistent iff deviation < 100 tol."""
    if len(samples) < 2:
        raise ValueError("need at least two parameter samples")
    mats, traces, prods, dets = [], [], [], []
    for s in samples:
        plan = plan_loops(F, s, base_point)
        _, residues = numeric_family(F, s)
        Ms = integrate_monodromy(F, plan, tol, residues=residues)
        mats.append(Ms)
        traces.append(word_traces(Ms))
        prods.append(product_relation_check(Ms))
        dets.append(_det_error(Ms, residues))
    dev = 0.0
    for tr in traces[1:]:
        for k, v in tr.items():
            dev = max(dev, abs(v - traces[0][k]))
    threshold = 100.0 * tol
    return MonodromyReport(list(samples), mats, traces, prods, dets, dev, tol, threshold, dev < threshold)
