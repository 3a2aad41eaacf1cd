import json
import random
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import pytest

from coalgauto.cli_io import (REPORT_FIELDS, Document, main, parse, parse_value, read,
                              run, show)
from coalgauto.coalgebra import Coalgebra, PointedCoalgebra
from coalgauto.corpus import SMALL_FUNCTORS, random_automaton, random_coalgebra
from coalgauto.errors import ParseError, ValidationError
from coalgauto.functor_kernel import (Comp, Const, Dist, Exp, Id, Multi, Pow, Prod, Sum,
                                      atom, dist, enumerate_f, multi, show_functor,
                                      show_value)

SAMPLES = Path(__file__).resolve().parent.parent / "samples"
KIND_OF = {".coalg": "coalgebra", ".aut": "automaton", ".waut": "word-automaton",
           ".txt": "game"}


def sample(name):
    return str(SAMPLES / name)


# ------------------------------------------------------------- parsing

@pytest.mark.parametrize("text,expected", [
    ("functor: Pow(Id)", Pow(Id())),
    ("Pow", Pow(Id())),
    ("Const{c1,c2} * Id", Prod(Const(("c1", "c2")), Id())),
    ("Id + Id * Id", Sum(Id(), Prod(Id(), Id()))),
    ("Pow . Pow", Comp(Pow(Id()), Pow(Id()))),
    ("Id^{l,r}", Exp(("l", "r"), Id())),
    ("Dist", Dist()),
])
def test_parse_functor(text, expected):
    F = parse("functor", text).body
    assert F == expected
    assert parse("functor", show(Document("functor", F))).body == F


def test_value_literals():
    assert parse_value(Dist(), "dist{a:1/2,b:1/2}") == dist({"a": Fraction(1, 2),
                                                            "b": Fraction(1, 2)})
    assert parse_value(Multi(), "multi{a:2}") == multi({"a": 2})
    E = Exp(("l", "r"), Id())
    assert show_value(E, parse_value(E, "[l->x,r->y]")) == "[l->x,r->y]"
    F = Prod(Const(("c",)), Prod(Id(), Id()))
    assert show_value(F, parse_value(F, "(c,a,b)")) == "(c,a,b)"


FUNCTORS = [Id(), Pow(Id()), Prod(Const(("c1", "c2")), Id()), Sum(Id(), Const(("z",))),
            Exp(("l", "r"), Id()), Comp(Pow(Id()), Pow(Id())), Prod(Id(), Prod(Id(), Id()))]


@pytest.mark.parametrize("F", FUNCTORS, ids=show_functor)
def test_every_small_value_roundtrips(F):
    for v in enumerate_f(F, ["a", "b"]):
        assert parse_value(F, show_value(F, v)) == v


@pytest.mark.parametrize("name", sorted(p.name for p in SAMPLES.iterdir()))
def test_samples_roundtrip(name):
    kind = KIND_OF[Path(name).suffix]
    doc = read(kind, SAMPLES / name)
    text = show(doc)
    assert show(parse(kind, text)) == text


def test_random_documents_roundtrip():
    rng = random.Random(0)
    for name, F in SMALL_FUNCTORS.items():
        for _ in range(10):
            P = random_coalgebra(rng, F, rng.randint(1, 3))
            text = show(Document("coalgebra", P))
            assert parse("coalgebra", text).body == P
            A = random_automaton(rng, F, 2, nondet=rng.random() < 0.5)
            text = show(Document("automaton", A))
            B = parse("automaton", text).body
            assert B.delta == A.delta and B.omega == A.omega
            assert show(Document("automaton", B)) == text


def test_lasso_and_witness_roundtrip():
    lasso = parse("lasso", "u: a,b\nv: a\n").body
    assert lasso.prefix == ("a", "b") and lasso.cycle == ("a",)
    assert parse("lasso", show(Document("lasso", lasso))).body == lasso
    rep = parse("witness-report", "verdict: empty\n").body
    assert rep["witness"] is None
    P = PointedCoalgebra(Coalgebra(Pow(Id()), ["s"], {"s": ("P", (atom("s"),))}), "s")
    text = show(Document("witness-report", {"verdict": "nonempty", "witness": P}))
    assert parse("witness-report", text).body["witness"] == P


# -------------------------------------------------------------- errors

def test_parse_error_position():
    with pytest.raises(ParseError) as e:
        parse("coalgebra", "functor: Pow(Id)\nstate s -> {s\npoint: s\n")
    assert e.value.lineno == 2


@pytest.mark.parametrize("kind,text", [
    ("coalgebra", "functor: Pow(Id)\nstate s -> {t}\npoint: s\n"),
    ("automaton", "functor: Pow(Id)\nstates: a\ninitial: a\nnondeterministic\n"
                  "delta a = {{{a}, {}}}\nparity a=0\n"),
    ("automaton", "functor: Pow(Id)\nstates: a\ninitial: b\ndelta a = {}\nparity a=0\n"),
    ("coalgebra", "functor: Dist\nstate s -> dist{s:1/3}\npoint: s\n"),
])
def test_validation_errors(kind, text):
    with pytest.raises(ValidationError):
        parse(kind, text)


def test_lasso_needs_cycle():
    with pytest.raises((ValidationError, ParseError)):
        parse("lasso", "u: a\nv:\n")


# ----------------------------------------------------------------- CLI

def test_check_exit_codes():
    assert run(["check", sample("always_succ.aut"), sample("loop.coalg")])[0] == 0
    assert run(["check", sample("always_succ.aut"), sample("dead.coalg")])[0] == 1
    code, rep = run(["check", sample("never.aut"), sample("loop.coalg")])
    assert code == 1 and rep["verdict"] == "rejected"


def test_bisim():
    assert run(["bisim", sample("loop.coalg"), sample("cycle2.coalg")])[0] == 0
    assert run(["bisim", sample("loop.coalg"), sample("dead.coalg")])[0] == 1


def test_nonempty_writes_witness(tmp_path):
    out = tmp_path / "w.coalg"
    code, rep = run(["nonempty", sample("always_succ.aut"), "-o", str(out)])
    assert code == 0 and out.exists()
    W = read("coalgebra", out).body
    assert run(["check", sample("always_succ.aut"), str(out)])[0] == 0
    assert W.point == "a"


def test_nonempty_empty_language(tmp_path):
    out = tmp_path / "w.coalg"
    code, rep = run(["nonempty", sample("never.aut"), "-o", str(out)])
    assert code == 1 and rep["verdict"] == "empty"
    assert not out.exists()


def test_nondet_and_boolean_outputs(tmp_path):
    out = tmp_path / "n.aut"
    assert run(["nondet", sample("alt.aut"), "-o", str(out)])[0] == 0
    B = read("automaton", out).body
    assert B.nondeterministic
    for coalg in ("loop.coalg", "dead.coalg", "cycle2.coalg"):
        a = run(["check", sample("alt.aut"), sample(coalg)])[0]
        b = run(["check", str(out), sample(coalg)])[0]
        assert a == b
    for cmd in ("union", "intersect"):
        out = tmp_path / f"{cmd}.aut"
        code, rep = run([cmd, sample("always_succ.aut"), sample("never.aut"), "-o", str(out)])
        assert code == 0 and rep["sizes"][cmd + "_states"] == 3
    out = tmp_path / "p.aut"
    assert run(["project", sample("colored.aut"), "-o", str(out)])[0] == 0
    assert read("automaton", out).body.functor == Id()


def test_solve_game_and_lasso():
    code, rep = run(["solve-game", sample("game.txt")])
    assert code == 0
    assert set(rep["details"]["win_E"]) == {"v0", "v1", "v2"}
    assert set(rep["details"]["win_A"]) == {"v3"}
    assert run(["lasso", sample("inf_a.waut"), "v=a"])[0] == 0
    assert run(["lasso", sample("inf_a.waut"), "u=a", "v=b"])[0] == 1


def test_errors_exit_two(tmp_path, monkeypatch):
    assert run(["check", "missing.aut", sample("loop.coalg")])[0] == 2
    assert run(["frobnicate"])[0] == 2
    assert run(["check", sample("colored.aut"), sample("loop.coalg")])[0] == 2
    assert run(["nondet", sample("alt.aut"), "--cap", "3"])[0] == 2
    monkeypatch.setenv("COALGAUTO_CAP", "3")
    assert run(["nondet", sample("alt.aut")])[0] == 2


def test_json_report_fields(capsys):
    for argv in (["check", sample("always_succ.aut"), sample("loop.coalg")],
                 ["solve-game", sample("game.txt")],
                 ["lasso", sample("inf_a.waut"), "v=a"]):
        code = main(argv + ["--json"])
        rep = json.loads(capsys.readouterr().out)
        assert tuple(rep) == REPORT_FIELDS
        assert rep["exit_code"] == code
    assert tuple(run(["bogus"])[1]) == REPORT_FIELDS


def test_report_figures(tmp_path):
    code, rep = run(["solve-game", sample("game.txt"), "--report", str(tmp_path)])
    assert code == 0 and rep["figures"]
    assert all(Path(f).exists() and Path(f).stat().st_size > 0 for f in rep["figures"])
    code, rep = run(["check", sample("always_succ.aut"), sample("cycle2.coalg"),
                     "--report", str(tmp_path)])
    assert rep["figures"]


def test_selftest_command():
    code, rep = run(["selftest"])
    assert code == 0
    assert all(s["passed"] for s in rep["details"]["suites"])


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "coalgauto", "check",
                        sample("always_succ.aut"), sample("loop.coalg")],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "accepted" in r.stdout
