"""Reader and writer for the FSD text format, plus the bundled corpus.

FSD documents are S-expressions with exact scalars::

    (system (field 21) (params a)
      (pole (- 0 a) (matrix 2 2 (1 0) ((/ (* -2 a) (- (* a a) 1)) 0)))
      ...)

A ``form`` document references its system with ``(sysref file.fsd)`` and
carries a ``dz`` matrix and one ``da`` matrix per parameter. A ``gauge``
document holds a single matrix, used as a transformation ``Gamma(z, a)``.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from typing import Callable

from .errors import (DimensionMismatch, DuplicatePole, FsdSyntaxError, IsomonoError, MixedDiscriminant,
                     UnknownName)
from .exactnum import QuadScalar, is_squarefree
from .fuchsys import Z, FuchsFamily, PoleLoc, residue_at_infinity
from .matlin import MatRF
from .ratfunc import MPoly, RatFunc, _grlex_key

__all__ = [
    "FsdDocument",
    "parse_fsd",
    "print_fsd",
    "load_fsd",
    "load_corpus",
    "corpus_names",
    "format_scalar",
    "parse_expr",
    "format_ratfunc",
    "CorpusIntegrityError",
]

KINDS = ("system", "form", "gauge")


class CorpusIntegrityError(IsomonoError):
    """A bundled corpus file violates its recorded side condition."""


@dataclass
class FsdDocument:
    kind: str
    field: int
    params: tuple
    family: FuchsFamily | None = None
    form: object = None  # MatOneForm
    sysref: str | None = None
    matrix: MatRF | None = None
    name: str | None = None
    consts: tuple = ()

    def __eq__(self, other):
        if not isinstance(other, FsdDocument):
            return NotImplemented
        return (self.kind == other.kind and self.field == other.field and self.params == other.params
                and self.consts == other.consts
                and self.name == other.name and self.sysref == other.sysref
                and _opt_eq(self.family if self.kind == "system" else None,
                            other.family if other.kind == "system" else None)
                and _opt_eq(self.form, other.form) and _opt_eq(self.matrix, other.matrix))

    __hash__ = None


def _opt_eq(x, y):
    if x is None or y is None:
        return x is None and y is None
    return x == y


# ---------------------------------------------------------------------------
# tokenizer and tree
# ---------------------------------------------------------------------------

class _Atom:
    __slots__ = ("text", "line", "col")

    def __init__(self, text, line, col):
        self.text, self.line, self.col = text, line, col

    def __repr__(self):
        return self.text


class _List(list):
    def __init__(self, items, line, col):
        super().__init__(items)
        self.line, self.col = line, col


_TOKEN = re.compile(r"\s+|;[^\n]*|\(|\)|[^\s();]+")


def _tokenize(text: str):
    line, col0 = 1, 0
    for mt in _TOKEN.finditer(text):
        tok = mt.group()
        start = mt.start()
        if tok[0].isspace() or tok[0] == ";":
            nl = tok.count("\n")
            if nl:
                line += nl
                col0 = start + tok.rfind("\n") + 1
            continue
        yield tok, line, start - col0 + 1
    # the regex matches every character, so nothing is skipped silently


def _read(text: str):
    stack = []
    top = None
    for tok, line, col in _tokenize(text):
        if tok == "(":
            stack.append(_List([], line, col))
        elif tok == ")":
            if not stack:
                raise FsdSyntaxError("unbalanced ')'", line, col)
            node = stack.pop()
            if stack:
                stack[-1].append(node)
            elif top is None:
                top = node
            else:
                raise FsdSyntaxError("more than one top-level expression", node.line, node.col)
        else:
            if not stack:
                raise FsdSyntaxError(f"atom {tok!r} outside a list", line, col)
            stack[-1].append(_Atom(tok, line, col))
    if stack:
        raise FsdSyntaxError("unclosed '('", stack[-1].line, stack[-1].col)
    if top is None:
        raise FsdSyntaxError("empty document", 1, 1)
    return top


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

_INT = re.compile(r"[+-]?\d+$")
_RAT = re.compile(r"([+-]?\d+)/(\d+)$")
_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")
_KEYWORDS = {"system", "form", "gauge", "field", "params", "consts", "pole", "matrix", "dz", "da", "sysref",
             "name", "sqrt", "z"}


def _pos(node):
    return node.line, node.col


def _head(node, what):
    if not isinstance(node, _List) or not node or not isinstance(node[0], _Atom):
        line, col = _pos(node)
        raise FsdSyntaxError(f"expected ({what} ...)", line, col)
    return node[0].text


def _expect(node, what):
    if _head(node, what) != what:
        raise FsdSyntaxError(f"expected ({what} ...), found ({node[0].text} ...)", *_pos(node))


def _integer(atom, what="integer"):
    if not isinstance(atom, _Atom) or not _INT.match(atom.text):
        raise FsdSyntaxError(f"expected {what}", *_pos(atom))
    return int(atom.text)


class _Ctx:
    def __init__(self, d, params, consts=()):
        self.d = d
        self.names = set(params) | set(consts) | {Z}
        self.params = tuple(params)
        self.consts = tuple(consts)


def _expr(node, ctx: _Ctx) -> RatFunc:
    if isinstance(node, _Atom):
        t = node.text
        if _INT.match(t):
            return RatFunc.const(int(t))
        m = _RAT.match(t)
        if m:
            if int(m.group(2)) == 0:
                raise FsdSyntaxError("zero denominator in literal", *_pos(node))
            return RatFunc.const(Fraction(int(m.group(1)), int(m.group(2))))
        if _NAME.match(t):
            if t not in ctx.names:
                raise FsdSyntaxError(f"undeclared name {t!r}", *_pos(node))
            return RatFunc.var(t)
        raise FsdSyntaxError(f"bad token {t!r}", *_pos(node))
    if not node or not isinstance(node[0], _Atom):
        raise FsdSyntaxError("expected an operator", *_pos(node))
    op = node[0].text
    args = node[1:]
    if op == "sqrt":
        if len(args) != 1:
            raise FsdSyntaxError("sqrt takes one integer", *_pos(node))
        k = _integer(args[0])
        if k == 1:
            return RatFunc.const(1)
        if k != ctx.d:
            raise MixedDiscriminant(f"(sqrt {k}) in a document over field {ctx.d} (line {node.line}, column {node.col})")
        return RatFunc.const(QuadScalar.sqrt(k))
    if op not in "+-*/" or len(op) != 1:
        raise FsdSyntaxError(f"unknown operator {op!r}", *_pos(node))
    if len(args) < 2:
        raise FsdSyntaxError(f"operator {op} needs at least two arguments", *_pos(node))
    vals = [_expr(a, ctx) for a in args]
    acc = vals[0]
    for v in vals[1:]:
        if op == "+":
            acc = acc + v
        elif op == "-":
            acc = acc - v
        elif op == "*":
            acc = acc * v
        else:
            if v.is_zero():
                raise FsdSyntaxError("division by zero", *_pos(node))
            acc = acc / v
    return acc


def parse_expr(text: str, field: int = 1, params=(), consts=()) -> RatFunc:
    """Parse a single FSD expression such as ``(/ (+ 1 (sqrt 21)) 2)``."""
    nodes = _read("(" + text + "\n)")
    if len(nodes) != 1:
        raise FsdSyntaxError("expected exactly one expression", 1, 1)
    return _expr(nodes[0], _Ctx(field, params, consts))


def _matrix(node, ctx: _Ctx) -> MatRF:
    _expect(node, "matrix")
    if len(node) < 3:
        raise FsdSyntaxError("matrix needs row and column counts", *_pos(node))
    r, c = _integer(node[1], "row count"), _integer(node[2], "column count")
    rows = node[3:]
    if len(rows) != r:
        raise DimensionMismatch(f"matrix declares {r} rows but has {len(rows)}", *_pos(node))
    ents = []
    for row in rows:
        if not isinstance(row, _List):
            raise FsdSyntaxError("expected a row list", *_pos(row))
        if len(row) != c:
            raise DimensionMismatch(f"row has {len(row)} entries, expected {c}", *_pos(row))
        ents.extend(_expr(e, ctx) for e in row)
    return MatRF(r, c, ents)


def parse_fsd(text, resolver: Callable[[str], "FsdDocument"] | None = None) -> FsdDocument:
    """Parse FSD text (``str`` or UTF-8 ``bytes``).

    ``resolver`` maps a form's ``sysref`` to the referenced system document;
    without one the form's ``family`` stays ``None``.
    """
    if isinstance(text, (bytes, bytearray)):
        text = bytes(text).decode("utf-8")
    root = _read(text)
    kind = _head(root, "system")
    if kind not in KINDS:
        raise FsdSyntaxError(f"unknown document kind {kind!r}", *_pos(root))
    items = list(root[1:])
    if len(items) < 2:
        raise FsdSyntaxError("document needs (field ...) and (params ...)", *_pos(root))
    fld, prm = items[0], items[1]
    _expect(fld, "field")
    if len(fld) != 2:
        raise FsdSyntaxError("field takes one integer", *_pos(fld))
    d = _integer(fld[1])
    if d != 1 and not is_squarefree(d):
        raise FsdSyntaxError(f"field discriminant {d} is not square-free", *_pos(fld))
    _expect(prm, "params")
    params = _names(prm, [])
    rest = items[2:]
    consts = []
    if rest and isinstance(rest[0], _List) and rest[0] and isinstance(rest[0][0], _Atom) \
            and rest[0][0].text == "consts":
        consts = _names(rest[0], params)
        rest = rest[1:]
    ctx = _Ctx(d, params, consts)
    name = None
    if rest and isinstance(rest[0], _List) and rest[0] and isinstance(rest[0][0], _Atom) \
            and rest[0][0].text == "name":
        if len(rest[0]) != 2 or not isinstance(rest[0][1], _Atom):
            raise FsdSyntaxError("name takes one atom", *_pos(rest[0]))
        name = rest[0][1].text
        rest = rest[1:]
    doc = FsdDocument(kind, d, tuple(params), name=name, consts=tuple(consts))
    if kind == "system":
        doc.family = _system_body(rest, ctx, root)
    elif kind == "form":
        _form_body(rest, ctx, root, doc, resolver)
    else:
        if len(rest) != 1:
            raise FsdSyntaxError("gauge document holds exactly one matrix", *_pos(root))
        doc.matrix = _matrix(rest[0], ctx)
        if not doc.matrix.is_square():
            raise DimensionMismatch("gauge matrix must be square", *_pos(rest[0]))
    return doc


def _names(node, taken):
    out = []
    for atom in node[1:]:
        if not isinstance(atom, _Atom) or not _NAME.match(atom.text) or atom.text in _KEYWORDS:
            raise FsdSyntaxError("bad parameter name", *_pos(atom))
        if atom.text in out or atom.text in taken:
            raise FsdSyntaxError(f"name {atom.text!r} declared twice", *_pos(atom))
        out.append(atom.text)
    return out


def _system_body(rest, ctx, root) -> FuchsFamily:
    if not rest:
        raise FsdSyntaxError("system needs at least one pole", *_pos(root))
    poles, residues = [], []
    size = None
    for node in rest:
        _expect(node, "pole")
        if len(node) != 3:
            raise FsdSyntaxError("pole takes a location and a matrix", *_pos(node))
        loc = _expr(node[1], ctx)
        if loc.depends_on(Z):
            raise FsdSyntaxError("pole location must not depend on z", *_pos(node[1]))
        try:
            pole = PoleLoc.from_ratfunc(loc)
        except IsomonoError as exc:
            raise FsdSyntaxError(str(exc), *_pos(node[1])) from None
        if pole in poles:
            raise DuplicatePole(f"pole {pole} listed twice", *_pos(node))
        A = _matrix(node[2], ctx)
        if not A.is_square():
            raise DimensionMismatch("residue matrix must be square", *_pos(node[2]))
        if size is None:
            size = A.rows
        elif A.rows != size:
            raise DimensionMismatch(f"residue of size {A.rows}, expected {size}", *_pos(node[2]))
        if A.depends_on(Z):
            raise FsdSyntaxError("residue matrix must not depend on z", *_pos(node[2]))
        poles.append(pole)
        residues.append(A)
    return FuchsFamily(poles, residues, ctx.params, ctx.consts)


def _form_body(rest, ctx, root, doc, resolver):
    from .isoform import MatOneForm
    if len(rest) < 2:
        raise FsdSyntaxError("form needs (sysref ...) and (dz ...)", *_pos(root))
    ref = rest[0]
    _expect(ref, "sysref")
    if len(ref) != 2 or not isinstance(ref[1], _Atom):
        raise FsdSyntaxError("sysref takes one path", *_pos(ref))
    doc.sysref = ref[1].text
    dz = rest[1]
    _expect(dz, "dz")
    if len(dz) != 2:
        raise FsdSyntaxError("dz takes one matrix", *_pos(dz))
    P = _matrix(dz[1], ctx)
    if not P.is_square():
        raise DimensionMismatch("dz matrix must be square", *_pos(dz[1]))
    Q = {}
    for node in rest[2:]:
        _expect(node, "da")
        if len(node) != 3 or not isinstance(node[1], _Atom):
            raise FsdSyntaxError("da takes a parameter name and a matrix", *_pos(node))
        j = node[1].text
        if j not in doc.params:
            raise FsdSyntaxError(f"da of undeclared parameter {j!r}", *_pos(node[1]))
        if j in Q:
            raise FsdSyntaxError(f"da {j} given twice", *_pos(node))
        M = _matrix(node[2], ctx)
        if M.shape != P.shape:
            raise DimensionMismatch(f"da {j} matrix has shape {M.shape}, expected {P.shape}", *_pos(node[2]))
        Q[j] = M
    doc.form = MatOneForm(P, Q, doc.params)
    if resolver is not None:
        sysdoc = resolver(doc.sysref)
        if sysdoc.kind != "system":
            raise FsdSyntaxError(f"sysref {doc.sysref} is not a system document", *_pos(ref))
        doc.family = sysdoc.family


# ---------------------------------------------------------------------------
# printer
# ---------------------------------------------------------------------------

def _frac(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def format_scalar(q: QuadScalar) -> str:
    r, s = q.rat_part, q.surd_part
    if not s:
        return _frac(r)
    surd = f"(* {_frac(s)} (sqrt {q.d}))"
    if not r:
        return surd
    return f"(+ {_frac(r)} {surd})"


def _format_poly(terms: dict, gens: tuple) -> str:
    if not terms:
        return "0"
    parts = []
    for e in sorted(terms, key=_grlex_key, reverse=True):
        c = terms[e]
        vars_ = [g for g, k in zip(gens, e) for _ in range(k)]
        if not vars_:
            parts.append(format_scalar(c))
        elif c == 1 and len(vars_) == 1:
            parts.append(vars_[0])
        elif c == 1:
            parts.append("(* " + " ".join(vars_) + ")")
        else:
            parts.append("(* " + format_scalar(c) + " " + " ".join(vars_) + ")")
    return parts[0] if len(parts) == 1 else "(+ " + " ".join(parts) + ")"


def format_ratfunc(f: RatFunc, gens: tuple) -> str:
    """Canonical text of ``f`` with variables ordered as in ``gens``."""
    from .ratfunc import _lead_grlex, _reindex
    num = _reindex(f.num.terms, f.gens, gens)
    den = _reindex(f.den.terms, f.gens, gens)
    lc = den[_lead_grlex(den)]
    if lc != 1:
        inv = lc.inverse()
        num = {e: v * inv for e, v in num.items()}
        den = {e: v * inv for e, v in den.items()}
    if len(den) == 1 and all(k == 0 for k in next(iter(den))):
        return _format_poly(num, gens)
    return f"(/ {_format_poly(num, gens)} {_format_poly(den, gens)})"


def _print_matrix(M: MatRF, gens, indent: str) -> list:
    lines = [f"{indent}(matrix {M.rows} {M.cols}"]
    for i in range(M.rows):
        lines.append(f"{indent}  (" + " ".join(format_ratfunc(e, gens) for e in M.row(i)) + ")")
    lines[-1] += ")"
    return lines


def print_fsd(doc: FsdDocument) -> bytes:
    """Canonical UTF-8 text: two-space indentation, one matrix row per line."""
    gens = (Z,) + tuple(doc.params) + tuple(doc.consts)
    out = [f"({doc.kind}", f"  (field {doc.field})",
           "  (params" + "".join(" " + p for p in doc.params) + ")"]
    if doc.consts:
        out.append("  (consts" + "".join(" " + p for p in doc.consts) + ")")
    if doc.name:
        out.append(f"  (name {doc.name})")
    if doc.kind == "system":
        for pole, A in zip(doc.family.poles, doc.family.residues):
            out.append(f"  (pole {format_ratfunc(pole.as_ratfunc(), gens)}")
            out.extend(_print_matrix(A, gens, "    "))
            out[-1] += ")"
    elif doc.kind == "form":
        out.append(f"  (sysref {doc.sysref})")
        out.append("  (dz")
        out.extend(_print_matrix(doc.form.P, gens, "    "))
        out[-1] += ")"
        for j in doc.form.params:
            out.append(f"  (da {j}")
            out.extend(_print_matrix(doc.form.Q[j], gens, "    "))
            out[-1] += ")"
    else:
        out.extend(_print_matrix(doc.matrix, gens, "  "))
    out[-1] += ")"
    return ("\n".join(out) + "\n").encode("utf-8")


# ---------------------------------------------------------------------------
# files and corpus
# ---------------------------------------------------------------------------

def load_fsd(path: str) -> FsdDocument:
    """Read a file; a form's ``sysref`` is resolved relative to the file's directory."""
    base = os.path.dirname(os.path.abspath(path))
    with open(path, "rb") as fh:
        data = fh.read()
    return parse_fsd(data, resolver=lambda ref: load_fsd(os.path.join(base, ref)))


_CORPUS = ("bolibruch", "bolibruch-form", "ex2", "ex2-form", "ex2-mc5", "ex2-mc5-form",
           "ex2-mc5-form-corrected", "ex3", "ex3-form", "ex3-mc3")


def corpus_names() -> tuple:
    return _CORPUS


def _corpus_text(name: str) -> bytes:
    return resources.files("isomono").joinpath("corpus", f"{name}.fsd").read_bytes()


def _mu_ex3():
    return (1 + QuadScalar.sqrt(21)) / 2


def _check_infinity(expected):
    def check(doc):
        R = residue_at_infinity(doc.family)
        want = expected(doc.family.size)
        return R == want
    return check


def _check_scalar_sum(doc):
    # the printed 3x3 residues sum to mu*I (so the implied infinity residue is -mu*I)
    acc = MatRF.zeros(doc.family.size)
    for A in doc.family.residues:
        acc = acc + A
    return acc == MatRF.scalar(doc.family.size, _mu_ex3())


def _check_form(doc):
    return doc.family is not None and doc.form.P == doc.family.dz_matrix()


_SIDE_CONDITIONS = {
    "bolibruch": _check_infinity(lambda p: MatRF.zeros(p)),
    "ex2": _check_infinity(lambda p: MatRF.zeros(p)),
    "ex3": _check_infinity(lambda p: MatRF.scalar(p, _mu_ex3())),
    "ex3-mc3": _check_scalar_sum,
    "ex2-mc5": lambda doc: doc.family.size == 5 and doc.family.n == 4,
}


def load_corpus(name: str, validate: bool = True) -> FsdDocument:
    if name not in _CORPUS:
        raise UnknownName(f"no corpus entry {name!r}; known: {', '.join(_CORPUS)}")

    def resolver(ref):
        stem = ref[:-4] if ref.endswith(".fsd") else ref
        return load_corpus(stem, validate)

    doc = parse_fsd(_corpus_text(name), resolver=resolver)
    if validate:
        check = _SIDE_CONDITIONS.get(name, _check_form if doc.kind == "form" else None)
        if check is not None and not check(doc):
            raise CorpusIntegrityError(f"corpus entry {name!r} fails its side condition")
    return doc
