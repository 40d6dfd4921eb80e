import io
import json
import subprocess
import sys

import pytest

from isomono.cli import run
from isomono.fsdio import corpus_names, load_corpus, load_fsd, print_fsd
from isomono.fuchsys import resonance_report
from isomono.isoform import flatness_residual
from isomono.midconv import middle_convolution


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stream=out, err=err)
    return code, out.getvalue(), err.getvalue()


def cli_json(*argv):
    code, out, _ = cli("--json", *argv)
    lines = out.splitlines()
    assert len(lines) == 1
    return code, json.loads(lines[0])


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    d = tmp_path_factory.mktemp("corpus")
    for name in corpus_names():
        (d / f"{name}.fsd").write_bytes(print_fsd(load_corpus(name)))
    return d


def test_flatness_verdicts(files):
    code, out, _ = cli("flatness", str(files / "bolibruch-form.fsd"))
    assert code == 0 and out.splitlines()[0] == "FLAT"
    code, out, _ = cli("flatness", str(files / "ex2-mc5-form.fsd"))
    assert code == 1 and out.splitlines()[0] == "NOT FLAT"
    assert "dz^da" in out


def test_resonance_reports_r4(files):
    code, out, _ = cli("resonance", str(files / "ex2.fsd"))
    assert code == 0
    assert "pole 1: r=4" in out
    code, rec = cli_json("resonance", str(files / "ex2.fsd"))
    assert {"pole": "1", "r": 4}.items() <= next(e for e in rec["entries"] if e["pole"] == "1").items()


def test_usage_errors(files, tmp_path):
    assert cli("mc", str(tmp_path / "nonexistent.fsd"), "--mu", "1")[0] == 2
    assert cli()[0] == 2
    assert cli("frobnicate")[0] == 2
    assert cli("mc", str(files / "ex2.fsd"))[0] == 2
    assert cli("mc", str(files / "ex2.fsd"), "--mu", "(+ 1")[0] == 2
    assert cli("flatness", str(files / "ex2.fsd"))[0] == 2
    assert cli("corpus", "nope")[0] == 2
    bad = tmp_path / "bad.fsd"
    bad.write_text("(system (field 1) (params) (pole 0 (matrix 1 1 (0)))")
    assert cli("check", str(bad))[0] == 2


def test_computation_error_exit_code(files):
    # sample a = 1 puts the pole -a onto -1
    assert cli("monodromy", str(files / "bolibruch.fsd"), "--samples", "a=1,a=0.5")[0] == 3


def test_check(files):
    code, out, _ = cli("check", str(files / "ex3.fsd"))
    assert code == 0 and out.startswith("OK system over Q(sqrt 21)")
    code, rec = cli_json("check", str(files / "bolibruch-form.fsd"))
    assert code == 0 and rec["dz_matches_system"] is True


def test_mc_matches_library_and_corpus(files, tmp_path):
    target = tmp_path / "mc5.fsd"
    code, out, _ = cli("mc", str(files / "ex2.fsd"), "--mu", "mu", "--hint", "e1,e2,e4,e6,e8", "-o", str(target))
    assert code == 0 and "m = 5" in out
    got = load_fsd(str(target)).family
    ref = middle_convolution(load_corpus("ex2").family, "mu", hint="e1,e2,e4,e6,e8").family
    assert got == ref == load_corpus("ex2-mc5").family
    code, rec = cli_json("mc", str(files / "ex3.fsd"), "--mu", "(+ 1/2 (* 1/2 (sqrt 21)))")
    assert code == 0 and rec["m"] == 3 and rec["dim_L"] == 3 and rec["dim_K"] == 2


def test_schlesinger_and_classify(files):
    code, out, _ = cli("schlesinger", str(files / "bolibruch.fsd"))
    assert code == 1 and "NOT SCHLESINGER" in out
    code, rec = cli_json("classify", str(files / "bolibruch-form.fsd"))
    assert code == 0
    assert rec["flat"] and rec["normalized"] and not rec["schlesinger_shape"]
    assert len(rec["nonschlesinger_terms"]) == 1 and rec["nonschlesinger_terms"][0]["pole"] == "(* -1 a)"


def test_gauge(files, tmp_path):
    g = tmp_path / "g.fsd"
    g.write_text("(gauge (field 1) (params a) (matrix 2 2 ((+ z a) 0) (0 1)))")
    out_path = tmp_path / "w1.fsd"
    code, rec = cli_json("gauge", str(files / "bolibruch-form.fsd"), "--gamma", str(g), "--substitute",
                         "-o", str(out_path))
    assert code == 0
    assert rec["residues"][0] == [["0", "0"], ["0", "0"]]
    doc = load_fsd(str(out_path))
    assert doc.family is not None and doc.family.residues[0].is_zero()
    assert flatness_residual(doc.form).is_zero()


def test_monodromy(files):
    code, out, _ = cli("monodromy", str(files / "bolibruch.fsd"), "--samples", "a=0.3,a=0.45,a=0.6")
    assert code == 0 and out.splitlines()[0] == "isomonodromic-consistent"
    code, rec = cli_json("monodromy", str(files / "bolibruch.fsd"), "--samples", "a=0.3,a=0.45", "--tol", "1e-9")
    assert code == 0 and rec["consistent"] and rec["tol"] == "1e-09"
    assert cli("monodromy", str(files / "bolibruch.fsd"), "--samples", "a=0.3")[0] == 2
    assert cli("monodromy", str(files / "bolibruch.fsd"), "--samples", "a=0.3,a=0.4", "--tol", "1")[0] == 2


def test_corpus_command(tmp_path):
    code, out, _ = cli("corpus")
    assert code == 0 and out.split() == list(corpus_names())
    code, out, _ = cli("corpus", "ex2-mc5")
    assert code == 0 and out.encode() == print_fsd(load_corpus("ex2-mc5"))
    dest = tmp_path / "x.fsd"
    assert cli("corpus", "ex3", "-o", str(dest))[0] == 0
    assert dest.read_bytes() == print_fsd(load_corpus("ex3"))


def test_verify_subcommand_subset():
    code, out, _ = cli("verify-paper", "--only", "3,10c")
    assert code == 0
    assert out.splitlines()[-1] == "2/2 passed"
    assert cli("verify-paper", "--only", "99")[0] == 2


def test_structured_output_is_byte_stable(files):
    a = cli("--json", "resonance", str(files / "ex3-mc3.fsd"))[1]
    b = cli("--json", "resonance", str(files / "ex3-mc3.fsd"))[1]
    assert a == b and a.endswith("\n") and a.count("\n") == 1


def test_resonance_is_thin_adapter(files):
    _, rec = cli_json("resonance", str(files / "bolibruch.fsd"))
    lib = resonance_report(load_corpus("bolibruch").family)
    assert [e["r"] for e in rec["entries"]] == [e.r for e in lib.entries]
    assert [e["witnesses"] for e in rec["entries"]] == [list(e.witnesses) for e in lib.entries]


def test_console_script(files):
    out = subprocess.run([sys.executable, "-m", "isomono.cli", "flatness", str(files / "bolibruch-form.fsd")],
                         capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip() == "FLAT"
