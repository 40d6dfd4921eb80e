"""Command-line front end: ``isomono <subcommand> ...``.

Exit codes: 0 success (or a true verdict), 1 false verdict, 2 usage or
input error, 3 computation error. ``--json`` switches to one JSON record
per invocation (sorted keys); exact values are written in FSD syntax and
numbers as decimal strings.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .errors import FsdError, IsomonoError, UnknownName
from .fsdio import (FsdDocument, corpus_names, format_ratfunc, load_corpus, load_fsd, parse_expr,
                    print_fsd)
from .fuchsys import INFINITY, Z, family_from_dz, gauge_transform_form, residue_at_infinity, resonance_report
from .fuchsys import substitute_form
from .isoform import classify_form, flatness_residual, residual_breakdown, schlesinger_residual
from .matlin import MatRF
from .midconv import MU, middle_convolution

EXIT_OK, EXIT_FALSE, EXIT_USAGE, EXIT_COMPUTE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

class Output:
    def __init__(self, structured: bool, stream=None):
        self.structured = structured
        self.stream = stream or sys.stdout
        self.record = {}
        self.lines = []

    def say(self, text=""):
        self.lines.append(text)

    def put(self, **kw):
        self.record.update(kw)

    def flush(self):
        if self.structured:
            self.stream.write(json.dumps(self.record, sort_keys=True, separators=(",", ":")) + "\n")
        else:
            for line in self.lines:
                self.stream.write(line + "\n")
        self.stream.flush()


def _gens(doc: FsdDocument):
    return (Z,) + tuple(doc.params) + tuple(doc.consts)


def _mat_text(M: MatRF, gens) -> list:
    return [[format_ratfunc(M[i, j], gens) for j in range(M.cols)] for i in range(M.rows)]


def _mat_lines(M: MatRF, gens, indent="  ") -> list:
    return [indent + "(" + " ".join(row) + ")" for row in _mat_text(M, gens)]


def _num(x) -> str:
    if isinstance(x, complex):
        return repr(x.real) if x.imag == 0 else repr(x)
    return repr(float(x))


def _load(path: str) -> FsdDocument:
    if not os.path.exists(path):
        raise UsageError(f"no such file: {path}")
    return load_fsd(path)


def _family(doc: FsdDocument):
    if doc.family is None:
        raise UsageError(f"{doc.kind} document carries no system")
    return doc.family


def _form(doc: FsdDocument):
    if doc.kind != "form":
        raise UsageError("expected a form document")
    return doc.form


def _write(path: str | None, data: bytes, out: Output):
    if path:
        with open(path, "wb") as fh:
            fh.write(data)
        out.put(output=path)
        out.say(f"wrote {path}")
    else:
        out.put(fsd=data.decode("utf-8"))
        out.say(data.decode("utf-8").rstrip("\n"))


def _pole_label(F, i, gens):
    return "inf" if i == INFINITY else format_ratfunc(F.poles[i].as_ratfunc(), gens)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_check(args, out: Output) -> int:
    doc = _load(args.file)
    out.put(command="check", kind=doc.kind, field=doc.field, params=list(doc.params), consts=list(doc.consts))
    out.say(f"OK {doc.kind} over Q(sqrt {doc.field})" if doc.field != 1 else f"OK {doc.kind} over Q")
    if doc.family is not None:
        F = doc.family
        gens = _gens(doc)
        R = residue_at_infinity(F)
        out.put(poles=[_pole_label(F, i, gens) for i in range(F.n)], size=F.size,
                residue_at_infinity=_mat_text(R, gens))
        out.say(f"{F.n} poles, size {F.size}: " + " ".join(_pole_label(F, i, gens) for i in range(F.n)))
        out.say("residue at infinity:")
        out.say("\n".join(_mat_lines(R, gens)))
    if doc.kind == "form" and doc.family is not None:
        ok = doc.form.P == doc.family.dz_matrix()
        out.put(dz_matches_system=ok)
        out.say("dz part matches the referenced system" if ok else "dz part differs from the referenced system")
        return EXIT_OK if ok else EXIT_FALSE
    return EXIT_OK


def cmd_resonance(args, out: Output) -> int:
    doc = _load(args.file)
    F = _family(doc)
    gens = _gens(doc)
    rep = resonance_report(F)
    rows = []
    for e in rep.entries:
        label = _pole_label(F, e.pole, gens)
        rows.append({"pole": label, "index": "inf" if e.pole == INFINITY else e.pole + 1, "r": e.r,
                     "k_max": e.k_max, "witnesses": list(e.witnesses)})
        out.say(f"pole {label}: r={e.r}" + (f" (k = {', '.join(map(str, e.witnesses))})" if e.witnesses else ""))
    out.put(command="resonance", entries=rows)
    return EXIT_OK


def _parse_mu(text: str, doc: FsdDocument):
    if text.strip() == MU:
        return MU
    return parse_expr(text, doc.field, doc.params, doc.consts)


def cmd_mc(args, out: Output) -> int:
    doc = _load(args.file)
    F = _family(doc)
    try:
        mu = _parse_mu(args.mu, doc)
    except FsdError as exc:
        raise UsageError(f"bad --mu value: {exc}") from None
    hint = None
    if args.hint:
        from .midconv import parse_hints
        try:
            hint = parse_hints(args.hint, F.n * F.size)
        except ValueError as exc:
            raise UsageError(f"bad --hint: {exc}") from None
    res = middle_convolution(F, mu, hint)
    S = res.subspaces
    out.put(command="mc", m=res.m, dim_L=S.dim_L, dim_K=S.dim_K)
    out.say(f"m = {res.m} (dim L = {S.dim_L}, dim K = {S.dim_K})")
    consts = tuple(res.family.constants) if res.family else tuple(doc.consts)
    gens = (Z,) + tuple(doc.params) + consts
    out.put(assumptions=[format_ratfunc(_as_rf(a), gens) for a in S.assumptions])
    for a in S.assumptions:
        out.say(f"assumes {format_ratfunc(_as_rf(a), gens)} != 0")
    if res.family is None:
        out.say("middle convolution is zero-dimensional")
        return EXIT_OK
    new = FsdDocument("system", doc.field, tuple(doc.params), res.family, consts=consts)
    _write(args.output, print_fsd(new), out)
    return EXIT_OK


def _as_rf(p):
    from .ratfunc import RatFunc
    return p if isinstance(p, RatFunc) else RatFunc(p)


def cmd_flatness(args, out: Output) -> int:
    doc = _load(args.file)
    w = _form(doc)
    res = flatness_residual(w)
    flat = res.is_zero()
    gens = _gens(doc)
    out.put(command="flatness", flat=flat, verdict="FLAT" if flat else "NOT FLAT",
            components=[f"d{c[0]}^d{c[1]}" for c in res.nonzero_components()])
    out.say("FLAT" if flat else "NOT FLAT")
    if not flat:
        summary = []
        if doc.family is not None:
            for (comp, pole, power), C in residual_breakdown(res, doc.family).items():
                where = "polynomial part" if pole is None else f"pole {_pole_label(doc.family, pole, gens)}^{power}"
                summary.append({"component": f"d{comp[0]}^d{comp[1]}", "where": where, "matrix": _mat_text(C, gens)})
                out.say(f"  d{comp[0]}^d{comp[1]}, {where}:")
                out.say("\n".join(_mat_lines(C, gens, "    ")))
        else:
            for c in res.nonzero_components():
                out.say(f"  d{c[0]}^d{c[1]} is non-zero")
        out.put(breakdown=summary)
    return EXIT_OK if flat else EXIT_FALSE


def cmd_schlesinger(args, out: Output) -> int:
    doc = _load(args.file)
    F = _family(doc)
    gens = _gens(doc)
    table = schlesinger_residual(F)
    rows = []
    for (i, k), M in table.items():
        zero = M.is_zero()
        rows.append({"pole": _pole_label(F, i, gens), "param": k, "zero": zero,
                     "residual": None if zero else _mat_text(M, gens)})
        out.say(f"pole {_pole_label(F, i, gens)}, d{k}: " + ("0" if zero else "non-zero"))
    ok = all(r["zero"] for r in rows)
    out.put(command="schlesinger", schlesinger=ok, table=rows)
    out.say("SCHLESINGER" if ok else "NOT SCHLESINGER")
    return EXIT_OK if ok else EXIT_FALSE


def cmd_classify(args, out: Output) -> int:
    doc = _load(args.file)
    w = _form(doc)
    F = _family(doc)
    gens = _gens(doc)
    c = classify_form(w, F)
    terms = [{"pole": _pole_label(F, l, gens), "power": m, "param": k, "matrix": _mat_text(G, gens)}
             for l, m, k, G in c.nonschlesinger_terms]
    out.put(command="classify", flat=c.is_flat, normalized=c.is_normalized,
            schlesinger_shape=c.is_schlesinger_shape, nonschlesinger_terms=terms,
            holomorphic={k: _mat_text(G, gens) for k, G in c.holomorphic.items()})
    out.say(f"flat: {'yes' if c.is_flat else 'no'}")
    out.say(f"normalized: {'yes' if c.is_normalized else 'no'}")
    out.say(f"Schlesinger shape: {'yes' if c.is_schlesinger_shape else 'no'}")
    for t in terms:
        out.say(f"  term d{t['param']}/(z - {t['pole']})^{t['power']}:")
        out.say("\n".join("    (" + " ".join(r) + ")" for r in t["matrix"]))
    return EXIT_OK


def cmd_gauge(args, out: Output) -> int:
    doc = _load(args.file)
    w = _form(doc)
    gdoc = _load(args.gamma)
    if gdoc.kind != "gauge":
        raise UsageError("--gamma must be a gauge document")
    G = gdoc.matrix
    new = substitute_form(w, G) if args.substitute else gauge_transform_form(w, G)
    params = tuple(new.params)
    consts = tuple(doc.consts)
    stem = os.path.splitext(args.output)[0] if args.output else "gauged"
    sysref = os.path.basename(stem) + ".system.fsd"
    form_doc = FsdDocument("form", doc.field, params, None, new, sysref, consts=consts)
    fam = None
    if doc.family is not None:
        try:
            fam = family_from_dz(new.P, doc.family.poles, params, consts)
        except IsomonoError as exc:
            out.say(f"note: new dz part is not Fuchsian at the old poles ({exc})")
    out.put(command="gauge", direction="substitute" if args.substitute else "gauge")
    if fam is not None:
        gens = (Z,) + params + consts
        out.put(residues=[_mat_text(A, gens) for A in fam.residues],
                residue_at_infinity=_mat_text(residue_at_infinity(fam), gens))
        if args.output:
            sys_doc = FsdDocument("system", doc.field, params, fam, consts=consts)
            with open(stem + ".system.fsd", "wb") as fh:
                fh.write(print_fsd(sys_doc))
            out.say(f"wrote {stem}.system.fsd")
    _write(args.output, print_fsd(form_doc), out)
    return EXIT_OK


def _parse_samples(text: str) -> list:
    samples, cur = [], {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise UsageError(f"bad sample {item!r}, expected name=value")
        k, v = (s.strip() for s in item.split("=", 1))
        try:
            val = complex(v.replace("i", "j"))
        except ValueError:
            raise UsageError(f"bad sample value {v!r}") from None
        if k in cur:
            samples.append(cur)
            cur = {}
        cur[k] = val.real if val.imag == 0 else val
    if cur:
        samples.append(cur)
    return samples


def cmd_monodromy(args, out: Output) -> int:
    from .monodromy import BACKEND, isomonodromy_verdict
    doc = _load(args.file)
    F = _family(doc)
    samples = _parse_samples(args.samples)
    if len(samples) < 2:
        raise UsageError("need at least two samples")
    bp = None
    if args.base is not None:
        try:
            bp = complex(args.base.replace("i", "j"))
        except ValueError:
            raise UsageError(f"bad base point {args.base!r}") from None
    if not 1e-14 <= args.tol <= 1e-4:
        raise UsageError("--tol must lie in [1e-14, 1e-4]")
    rep = isomonodromy_verdict(F, samples, args.tol, bp)
    traces = {"".join(f"M{i}" for i in w): _num(v) for w, v in rep.traces[0].items()}
    out.put(command="monodromy", backend=BACKEND, verdict=rep.verdict, consistent=rep.consistent,
            max_deviation=_num(rep.max_deviation), threshold=_num(rep.threshold), tol=_num(rep.tol),
            product_residuals=[_num(x) for x in rep.product_residuals],
            det_errors=[_num(x) for x in rep.det_errors], traces=traces,
            samples=[{k: _num(v) for k, v in s.items()} for s in samples])
    out.say(rep.verdict)
    out.say(f"max word-trace deviation {rep.max_deviation:.3e} (threshold {rep.threshold:.1e})")
    out.say(f"product residual {max(rep.product_residuals):.3e}, det error {max(rep.det_errors):.3e}")
    for w, v in rep.traces[0].items():
        out.say(f"  tr {''.join(f'M{i}' for i in w)} = {_num(v)}")
    return EXIT_OK if rep.consistent else EXIT_FALSE


def cmd_corpus(args, out: Output) -> int:
    if not args.name:
        out.put(command="corpus", names=list(corpus_names()))
        out.say("\n".join(corpus_names()))
        return EXIT_OK
    try:
        doc = load_corpus(args.name)
    except UnknownName as exc:
        raise UsageError(str(exc.args[0])) from None
    out.put(command="corpus", name=args.name)
    _write(args.output, print_fsd(doc), out)
    return EXIT_OK


def cmd_verify(args, out: Output) -> int:
    from .acceptance import check_ids, run_checks
    keys = None
    if args.only:
        keys = [k.strip() for k in args.only.split(",") if k.strip()]
        unknown = [k for k in keys if k not in check_ids()]
        if unknown:
            raise UsageError(f"unknown check ids: {', '.join(unknown)}")
    results = run_checks(keys)
    rows = []
    for r in results:
        out.say(r.line())
        rows.append({"id": r.key, "title": r.title, "passed": r.passed, "seconds": _num(round(r.seconds, 3)),
                     "error": r.error})
    npass = sum(r.passed for r in results)
    out.say(f"{npass}/{len(results)} passed")
    out.put(command="verify-paper", results=rows, passed=npass, total=len(results))
    return EXIT_OK if npass == len(results) else EXIT_FALSE


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="isomono", description="Exact workbench for families of Fuchsian systems.")
    p.add_argument("--json", action="store_true", help="emit one JSON record instead of text")
    p.add_argument("--version", action="version", version=f"isomono {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("check", help="parse and validate a document")
    s.add_argument("file")
    s.set_defaults(fn=cmd_check)

    s = sub.add_parser("resonance", help="maximal resonance at every pole and at infinity")
    s.add_argument("file")
    s.set_defaults(fn=cmd_resonance)

    s = sub.add_parser("mc", help="middle convolution")
    s.add_argument("file")
    s.add_argument("--mu", required=True, help="FSD expression, or 'mu' for the symbolic parameter")
    s.add_argument("--hint", help="complement vectors, e.g. e1,e2,e1-e4")
    s.add_argument("-o", "--output")
    s.set_defaults(fn=cmd_mc)

    s = sub.add_parser("flatness", help="flatness verdict of a form")
    s.add_argument("file")
    s.set_defaults(fn=cmd_flatness)

    s = sub.add_parser("schlesinger", help="Schlesinger residual table")
    s.add_argument("file")
    s.set_defaults(fn=cmd_schlesinger)

    s = sub.add_parser("classify", help="split a form into Schlesinger and extra terms")
    s.add_argument("file")
    s.set_defaults(fn=cmd_classify)

    s = sub.add_parser("gauge", help="gauge transform of a form")
    s.add_argument("file")
    s.add_argument("--gamma", required=True, help="gauge document holding the matrix")
    s.add_argument("--substitute", action="store_true",
                   help="treat the matrix as a substitution y = G y1 (gauge by G^-1)")
    s.add_argument("-o", "--output")
    s.set_defaults(fn=cmd_gauge)

    s = sub.add_parser("monodromy", help="numerical isomonodromy check")
    s.add_argument("file")
    s.add_argument("--samples", required=True, help="e.g. a=0.3,a=0.45 (a repeated name starts a new sample)")
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--base", help="base point, e.g. -2 or 0.5+1.5j")
    s.set_defaults(fn=cmd_monodromy)

    s = sub.add_parser("corpus", help="emit a bundled example (no name: list them)")
    s.add_argument("name", nargs="?")
    s.add_argument("-o", "--output")
    s.set_defaults(fn=cmd_corpus)

    s = sub.add_parser("verify-paper", help="run the reproduction checks")
    s.add_argument("--only", help="comma-separated check ids")
    s.set_defaults(fn=cmd_verify)
    return p


def run(argv=None, stream=None, err=None) -> int:
    err = err or sys.stderr
    parser = build_parser()
    structured = False
    try:
        args = parser.parse_args(argv)
        structured = args.json
        if not args.command:
            raise UsageError("missing subcommand")
        out = Output(structured, stream)
        code = args.fn(args, out)
        out.flush()
        return code
    except UsageError as exc:
        return _fail(structured, stream, err, EXIT_USAGE, "usage", str(exc))
    except FsdError as exc:
        return _fail(structured, stream, err, EXIT_USAGE, "input", str(exc))
    except IsomonoError as exc:
        return _fail(structured, stream, err, EXIT_COMPUTE, type(exc).__name__, str(exc))
    except (ArithmeticError, ValueError) as exc:
        return _fail(structured, stream, err, EXIT_COMPUTE, type(exc).__name__, str(exc))


def _fail(structured, stream, err, code, kind, message):
    if structured:
        (stream or sys.stdout).write(json.dumps({"error": kind, "message": message, "exit": code},
                                                sort_keys=True, separators=(",", ":")) + "\n")
    else:
        err.write(f"isomono: {message}\n")
    return code


def main(argv=None) -> int:
    code = run(argv)
    raise SystemExit(code)


if __name__ == "__main__":
    main()
