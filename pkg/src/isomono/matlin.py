"""Dense matrices over the rational-function field and exact linear algebra.

Elimination is fraction-free: each row is cleared of denominators and the
resulting polynomial matrix is reduced with Bareiss steps, choosing pivots
of smallest total degree. Only the final back substitution goes back to
rational functions.
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import NotFound, ShapeMismatch, Singular
from .exactnum import QuadScalar
from .ratfunc import (MPoly, RatFunc, _const, _divexact, _gcd, _is_const, _lead_grlex, _mul,
                      _reindex, _scale, _sub, _trydiv, as_ratfunc, merge_gens)

__all__ = [
    "MatRF",
    "mat_arith",
    "mat_kernel",
    "mat_rank",
    "mat_det",
    "mat_solve",
    "mat_charpoly",
    "mat_inverse",
    "mat_conjugacy_solve",
    "cayley_hamilton_residual",
    "EliminationAudit",
]


class MatRF:
    """A ``rows x cols`` matrix of ``RatFunc`` stored row-major."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, rows: int, cols: int, entries: Iterable):
        entries = [as_ratfunc(e) for e in entries]
        if len(entries) != rows * cols:
            raise ShapeMismatch(f"{len(entries)} entries for a {rows}x{cols} matrix")
        self.rows, self.cols, self.entries = rows, cols, entries

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence]) -> "MatRF":
        rows = [list(r) for r in rows]
        if not rows:
            return cls(0, 0, [])
        ncols = len(rows[0])
        if any(len(r) != ncols for r in rows):
            raise ShapeMismatch("ragged rows")
        return cls(len(rows), ncols, [e for r in rows for e in r])

    @classmethod
    def from_columns(cls, cols: Sequence[Sequence]) -> "MatRF":
        cols = [list(c) for c in cols]
        nrows = len(cols[0]) if cols else 0
        return cls(nrows, len(cols), [cols[j][i] for i in range(nrows) for j in range(len(cols))])

    @classmethod
    def zeros(cls, rows: int, cols: int | None = None, gens=()) -> "MatRF":
        cols = rows if cols is None else cols
        zero = RatFunc.const(0, gens)
        return cls(rows, cols, [zero] * (rows * cols))

    @classmethod
    def identity(cls, n: int, gens=()) -> "MatRF":
        return cls.scalar(n, 1, gens)

    @classmethod
    def scalar(cls, n: int, value, gens=()) -> "MatRF":
        value = as_ratfunc(value, gens)
        zero = RatFunc.const(0, value.gens)
        return cls(n, n, [value if i == j else zero for i in range(n) for j in range(n)])

    @classmethod
    def diag(cls, values: Sequence) -> "MatRF":
        values = [as_ratfunc(v) for v in values]
        n = len(values)
        zero = RatFunc.const(0)
        return cls(n, n, [values[i] if i == j else zero for i in range(n) for j in range(n)])

    # -- access -----------------------------------------------------------
    @property
    def shape(self):
        return (self.rows, self.cols)

    def is_square(self):
        return self.rows == self.cols

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> list:
        return self.entries[i * self.cols:(i + 1) * self.cols]

    def column(self, j: int) -> list:
        return self.entries[j::self.cols]

    def tolist(self) -> list:
        return [self.row(i) for i in range(self.rows)]

    def gens(self) -> tuple:
        g = ()
        for e in self.entries:
            g = merge_gens(g, e.gens)
        return g

    def free_vars(self) -> tuple:
        used = set()
        for e in self.entries:
            used.update(e.free_vars())
        return tuple(v for v in self.gens() if v in used)

    def depends_on(self, var: str) -> bool:
        return any(e.depends_on(var) for e in self.entries)

    def is_zero(self):
        return all(e.is_zero() for e in self.entries)

    def nonzero_entries(self):
        return [(i, j, self[i, j]) for i in range(self.rows) for j in range(self.cols) if self[i, j]]

    def is_scalar_matrix(self):
        if not self.is_square():
            return False
        d = self[0, 0] if self.rows else None
        return all((self[i, j] == d) if i == j else self[i, j].is_zero()
                   for i in range(self.rows) for j in range(self.cols))

    def __eq__(self, other):
        if not isinstance(other, MatRF):
            return NotImplemented
        return self.shape == other.shape and all(a == b for a, b in zip(self.entries, other.entries))

    __hash__ = None

    # -- arithmetic -------------------------------------------------------
    def map(self, fn) -> "MatRF":
        return MatRF(self.rows, self.cols, [fn(e) for e in self.entries])

    def __add__(self, other):
        if not isinstance(other, MatRF):
            return NotImplemented
        if self.shape != other.shape:
            raise ShapeMismatch(f"cannot add {self.shape} and {other.shape}")
        return MatRF(self.rows, self.cols, [a + b for a, b in zip(self.entries, other.entries)])

    def __sub__(self, other):
        if not isinstance(other, MatRF):
            return NotImplemented
        if self.shape != other.shape:
            raise ShapeMismatch(f"cannot subtract {other.shape} from {self.shape}")
        return MatRF(self.rows, self.cols, [a - b for a, b in zip(self.entries, other.entries)])

    def __neg__(self):
        return self.map(lambda e: -e)

    def __mul__(self, other):
        if isinstance(other, MatRF):
            return self.matmul(other)
        return self.map(lambda e: e * other)

    def __rmul__(self, other):
        return self.map(lambda e: e * other)

    def __matmul__(self, other):
        return self.matmul(other)

    def __truediv__(self, other):
        return self.map(lambda e: e / other)

    def matmul(self, other: "MatRF") -> "MatRF":
        if self.cols != other.rows:
            raise ShapeMismatch(f"cannot multiply {self.shape} by {other.shape}")
        n, m, k = self.rows, other.cols, self.cols
        out = []
        zero = RatFunc.const(0)
        for i in range(n):
            row = self.entries[i * k:(i + 1) * k]
            nz = [(t, a) for t, a in enumerate(row) if a]
            for j in range(m):
                acc = zero
                for t, a in nz:
                    b = other.entries[t * m + j]
                    if b:
                        acc = acc + a * b
                out.append(acc)
        return MatRF(n, m, out)

    def apply(self, vec: Sequence) -> list:
        if len(vec) != self.cols:
            raise ShapeMismatch("vector length does not match")
        return self.matmul(MatRF(self.cols, 1, vec)).entries

    def commutator(self, other: "MatRF") -> "MatRF":
        return self.matmul(other) - other.matmul(self)

    def transpose(self) -> "MatRF":
        return MatRF(self.cols, self.rows, [self[i, j] for j in range(self.cols) for i in range(self.rows)])

    T = property(transpose)

    def trace(self) -> RatFunc:
        if not self.is_square():
            raise ShapeMismatch("trace of a non-square matrix")
        acc = RatFunc.const(0)
        for i in range(self.rows):
            acc = acc + self[i, i]
        return acc

    def derive(self, var: str) -> "MatRF":
        return self.map(lambda e: e.derive(var))

    def subs(self, var: str, value) -> "MatRF":
        return self.map(lambda e: e.subs(var, value))

    def submatrix(self, r0: int, r1: int, c0: int, c1: int) -> "MatRF":
        return MatRF(r1 - r0, c1 - c0, [self[i, j] for i in range(r0, r1) for j in range(c0, c1)])

    def evaluate(self, assignment, precision: int = 53) -> np.ndarray:
        from .ratfunc import rf_eval
        return np.array([[complex(rf_eval(self[i, j], assignment, precision)) for j in range(self.cols)]
                         for i in range(self.rows)], dtype=complex)

    def __repr__(self):
        return f"MatRF({self.rows}x{self.cols}, {self.tolist()})"

    def __str__(self):
        return "[" + ",\n ".join("[" + ", ".join(str(e) for e in r) + "]" for r in self.tolist()) + "]"


# ---------------------------------------------------------------------------
# fraction-free elimination
# ---------------------------------------------------------------------------

class EliminationAudit:
    """Pivots used by an elimination; non-constant pivots are genericity assumptions."""

    def __init__(self, gens, pivots):
        self.gens = gens
        self.pivots = pivots  # list of (row, col, MPoly)

    def assumptions(self, variables: Iterable[str] | None = None) -> list:
        out = []
        for _, _, p in self.pivots:
            if p.is_constant():
                continue
            if variables is not None and not set(p.free_vars()) & set(variables):
                continue
            out.append(p)
        return out


def _row_cleared(row: list, gens: tuple, n: int):
    """Multiply a row of RatFuncs by the lcm of its denominators (dict polys)."""
    dens = [_reindex(e.den.terms, e.gens, gens) for e in row if e]
    L = _const(1, n)
    for d in dens:
        if _is_const(d):
            continue
        g = _gcd(L, d, n)
        L = _mul(L, _divexact(d, g)) if not _is_const(g) else _mul(L, d)
    out = []
    for e in row:
        if not e:
            out.append({})
            continue
        num = _reindex(e.num.terms, e.gens, gens)
        den = _reindex(e.den.terms, e.gens, gens)
        out.append(_mul(num, _divexact(L, den)))
    return out, L


def _row_content_free(row: list, n: int) -> list:
    nz = [e for e in row if e]
    if not nz:
        return row
    nz.sort(key=len)
    g = nz[0]
    for e in nz[1:]:
        if _is_const(g):
            break
        g = _gcd(g, e, n)
    if _is_const(g):
        lc = nz[0][_lead_grlex(nz[0])]
        return [_scale(e, lc.inverse()) for e in row]
    return [_divexact(e, g) if e else e for e in row]


def _tdeg(p):
    return max(sum(e) for e in p)


def _bareiss(rows: list, pivot_cols: int, n: int):
    """Fraction-free row echelon of polynomial rows (in place).

    Only the first ``pivot_cols`` columns are eligible for pivots; further
    columns (right-hand sides) are carried along. Returns the pivot list
    ``[(row, col, pivot_dict)]`` and the number of row swaps.
    """
    m = len(rows)
    width = len(rows[0]) if rows else 0
    prev = _const(1, n)
    r = 0
    pivots = []
    swaps = 0
    for c in range(pivot_cols):
        if r >= m:
            break
        cand = [i for i in range(r, m) if rows[i][c]]
        if not cand:
            continue
        best = min(cand, key=lambda i: (_tdeg(rows[i][c]), len(rows[i][c]), i))
        if best != r:
            rows[r], rows[best] = rows[best], rows[r]
            swaps += 1
        piv = rows[r][c]
        prow = rows[r]
        for i in range(r + 1, m):
            row = rows[i]
            a = row[c]
            for j in range(c + 1, width):
                t = _mul(piv, row[j]) if row[j] else {}
                if a and prow[j]:
                    t = _sub(t, _mul(a, prow[j]))
                row[j] = _divexact(t, prev) if t else {}
            row[c] = {}
        pivots.append((r, c, piv))
        prev = piv
        r += 1
    return pivots, swaps


def _common_gens(entries) -> tuple:
    g = ()
    for e in entries:
        if e:
            g = merge_gens(g, e.gens)
    return g


def _echelon(X: MatRF, extra: MatRF | None = None):
    ents = list(X.entries) + (list(extra.entries) if extra is not None else [])
    gens = _common_gens(ents)
    n = len(gens)
    rows = []
    for i in range(X.rows):
        row = X.row(i) + (extra.row(i) if extra is not None else [])
        cleared, _ = _row_cleared(row, gens, n)
        rows.append(_row_content_free(cleared, n))
    pivots, _ = _bareiss(rows, X.cols, n)
    return gens, rows, pivots


def _back_substitute(gens, rows, pivots, ncols, rhs_col=None, free=None):
    """Solve the echelon system for one column (rhs) or one free variable."""
    n = len(gens)
    sol = [None] * ncols
    pivcols = {c for _, c, _ in pivots}
    for j in range(ncols):
        if j not in pivcols:
            sol[j] = RatFunc.const(1 if j == free else 0, gens)
    for r, c, piv in reversed(pivots):
        row = rows[r]
        if rhs_col is not None:
            acc_num = row[rhs_col]
        else:
            acc_num = {}
        acc = RatFunc._from_dicts(gens, acc_num, _const(1, n), reduce=False)
        for j in range(c + 1, ncols):
            if row[j] and sol[j]:
                acc = acc - RatFunc._from_dicts(gens, row[j], _const(1, n), reduce=False) * sol[j]
        sol[c] = acc * RatFunc._from_dicts(gens, _const(1, n), dict(piv))
    return sol


def mat_kernel(X: MatRF, audit: list | None = None) -> list:
    """Basis of the right kernel, one leading 1 per pivot-free column.

    If ``audit`` is a list, an ``EliminationAudit`` is appended to it.
    """
    if X.rows == 0:
        gens = X.gens()
        return [[RatFunc.const(1 if i == j else 0, gens) for i in range(X.cols)] for j in range(X.cols)]
    gens, rows, pivots = _echelon(X)
    if audit is not None:
        audit.append(EliminationAudit(gens, [(r, c, MPoly._wrap(gens, p)) for r, c, p in pivots]))
    pivcols = {c for _, c, _ in pivots}
    basis = []
    for f in range(X.cols):
        if f in pivcols:
            continue
        basis.append(_back_substitute(gens, rows, pivots, X.cols, free=f))
    return basis


def mat_rank(X: MatRF) -> int:
    if X.rows == 0 or X.cols == 0:
        return 0
    _, _, pivots = _echelon(X)
    return len(pivots)


def mat_det(X: MatRF) -> RatFunc:
    if not X.is_square():
        raise ShapeMismatch("determinant of a non-square matrix")
    if X.rows == 0:
        return RatFunc.const(1)
    gens = _common_gens(X.entries)
    n = len(gens)
    rows = []
    scale = RatFunc.const(1, gens)
    for i in range(X.rows):
        cleared, L = _row_cleared(X.row(i), gens, n)
        rows.append(cleared)
        scale = scale * RatFunc._from_dicts(gens, L, _const(1, n), reduce=False)
    pivots, swaps = _bareiss(rows, X.cols, n)
    if len(pivots) < X.rows:
        return RatFunc.const(0, gens)
    det = RatFunc._from_dicts(gens, pivots[-1][2], _const(1, n), reduce=False)
    if swaps % 2:
        det = -det
    return det / scale


def mat_solve(X: MatRF, B: MatRF) -> MatRF:
    """The unique solution ``Y`` of ``X Y = B`` for square non-singular ``X``."""
    if not X.is_square() or X.rows != B.rows:
        raise ShapeMismatch(f"cannot solve {X.shape} system with {B.shape} right-hand side")
    gens, rows, pivots = _echelon(X, B)
    if len(pivots) < X.cols:
        raise Singular("matrix is singular")
    cols = []
    for k in range(B.cols):
        cols.append(_back_substitute(gens, rows, pivots, X.cols, rhs_col=X.cols + k))
    return MatRF.from_columns(cols)


def mat_inverse(X: MatRF) -> MatRF:
    if not X.is_square():
        raise ShapeMismatch("inverse of a non-square matrix")
    return mat_solve(X, MatRF.identity(X.rows, X.gens()))


def mat_charpoly(X: MatRF) -> list:
    """Coefficients ``[c_0, ..., c_n]`` of ``det(lambda I - X)``, ascending.

    Faddeev-LeVerrier recurrence; the result is monic (``c_n == 1``).
    """
    if not X.is_square():
        raise ShapeMismatch("characteristic polynomial of a non-square matrix")
    n = X.rows
    gens = X.gens()
    coeffs = [None] * (n + 1)
    coeffs[n] = RatFunc.const(1, gens)
    M = MatRF.zeros(n, n, gens)
    for k in range(1, n + 1):
        M = X.matmul(M) + MatRF.scalar(n, coeffs[n - k + 1], gens)
        coeffs[n - k] = -X.matmul(M).trace() / k
    return coeffs


def cayley_hamilton_residual(X: MatRF, coeffs: list | None = None) -> MatRF:
    coeffs = mat_charpoly(X) if coeffs is None else coeffs
    n = X.rows
    R = MatRF.scalar(n, coeffs[-1])
    for c in reversed(coeffs[:-1]):
        R = R.matmul(X) + MatRF.scalar(n, c)
    return R


_MAT_OPS = {"add", "sub", "mul", "scale", "commutator"}


def mat_arith(op: str, X: MatRF, Y) -> MatRF:
    if op not in _MAT_OPS:
        raise ValueError(f"unknown operation {op!r}")
    if op == "add":
        return X + Y
    if op == "sub":
        return X - Y
    if op == "mul":
        return X.matmul(Y)
    if op == "scale":
        return X * Y
    if not (X.is_square() and isinstance(Y, MatRF) and Y.shape == X.shape):
        raise ShapeMismatch("commutator needs square matrices of equal size")
    return X.commutator(Y)


def mat_conjugacy_solve(Xs: Sequence[MatRF], Ys: Sequence[MatRF], tries: int = 64,
                        seed: int = 20150313):
    """Invertible ``S`` with ``S X_i S^-1 = Y_i`` for all ``i``.

    Returns ``None`` when the intertwiner space ``{S : S X_i = Y_i S}`` is
    zero (provably no solution). Raises ``NotFound`` when the space is
    non-trivial but no invertible element turned up among the basis
    vectors and ``tries`` random rational combinations.
    """
    if len(Xs) != len(Ys) or not Xs:
        raise ShapeMismatch("need two non-empty lists of equal length")
    p = Xs[0].rows
    for M in list(Xs) + list(Ys):
        if M.shape != (p, p):
            raise ShapeMismatch("all matrices must be square of equal size")
    gens = _common_gens([e for M in list(Xs) + list(Ys) for e in M.entries])
    zero = RatFunc.const(0, gens)
    eqs = []
    for X, Y in zip(Xs, Ys):
        for i in range(p):
            for j in range(p):
                row = [zero] * (p * p)
                # (S X)_ij = sum_k s_ik X_kj ; (Y S)_ij = sum_k Y_ik s_kj
                for k in range(p):
                    row[i * p + k] = row[i * p + k] + X[k, j]
                    row[k * p + j] = row[k * p + j] - Y[i, k]
                eqs.append(row)
    basis = mat_kernel(MatRF.from_rows(eqs))
    if not basis:
        return None
    cands = [MatRF(p, p, v) for v in basis]
    rng = random.Random(seed)
    trials = list(cands)
    while len(trials) < max(tries, len(cands)):
        coeffs = [Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for _ in cands]
        S = MatRF.zeros(p, p, gens)
        for c, B in zip(coeffs, cands):
            if c:
                S = S + B * c
        trials.append(S)
    for S in trials[:max(tries, len(cands))]:
        if mat_det(S).is_zero():
            continue
        if all(S.matmul(X) == Y.matmul(S) for X, Y in zip(Xs, Ys)):
            return S
    raise NotFound("no invertible intertwiner found among the sampled combinations")
