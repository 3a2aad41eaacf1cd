"""Text formats for every document kind, and the command line interface.

Every file is UTF-8, line based, with '#' comments. Printing is
deterministic (states sorted) so that parse followed by print is the
identity on printed documents. The grammars are documented in the README.
"""

import argparse
import json
import re
import sys
import time
from contextlib import nullcontext
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import selftest
from .automata_core import PARITY, REGULAR, Automaton, accepts
from .coalgebra import Coalgebra, PointedCoalgebra, are_bisimilar, largest_bisimulation
from .constructions import (check_nonempty, intersection_automaton, project,
                            to_nondeterministic, union_automaton, wreath)
from .errors import ArtifactError, MalformedValue, ParseError, ValidationError
from .functor_kernel import (Comp, Const, Dist, Exp, Id, Multi, Pow, Prod, Sum, base,
                             check_value, show_atom, show_functor, show_value)
from .guard import cap_override, check_size
from .report import draw_bars, draw_coalgebra, draw_game
from .parity_games import A as FORALL
from .parity_games import E as EXISTS
from .parity_games import ParityGame, solve
from .word_automata import BUCHI, LassoWord, StreamAutomaton, accepts_lasso

KINDS = ("functor", "coalgebra", "automaton", "word-automaton", "game", "lasso",
         "witness-report")


@dataclass
class Document:
    kind: str
    body: object


# --------------------------------------------------------------- tokens

_WORD = re.compile(r"[A-Za-z0-9_#'*@$]+")


class Tokens:
    def __init__(self, text, line=1, col=1, word=_WORD):
        self.items = []
        self.line = line
        pos = 0
        while pos < len(text):
            if text[pos].isspace():
                pos += 1
                continue
            m = word.match(text, pos)
            if m:
                self.items.append((m.group(), col + pos))
                pos = m.end()
                continue
            if text.startswith("->", pos):
                self.items.append(("->", col + pos))
                pos += 2
                continue
            if text[pos] in "{}()[],:<>^+*./=;":
                self.items.append((text[pos], col + pos))
                pos += 1
                continue
            raise ParseError(f"unexpected character {text[pos]!r}", line, col + pos)
        self.i = 0
        self.end_col = col + len(text)

    def peek(self):
        return self.items[self.i][0] if self.i < len(self.items) else None

    def col(self):
        return self.items[self.i][1] if self.i < len(self.items) else self.end_col

    def error(self, msg):
        return ParseError(msg, self.line, self.col())

    def next(self):
        if self.i >= len(self.items):
            raise self.error("unexpected end of input")
        tok = self.items[self.i][0]
        self.i += 1
        return tok

    def expect(self, tok):
        if self.peek() != tok:
            raise self.error(f"expected {tok!r}, found {self.peek()!r}")
        self.i += 1

    def word(self, what="a name"):
        tok = self.peek()
        if tok is None or not _WORD.fullmatch(tok):
            raise self.error(f"expected {what}, found {tok!r}")
        self.i += 1
        return tok

    def done(self):
        if self.i < len(self.items):
            raise self.error(f"unexpected {self.peek()!r}")


# -------------------------------------------------------------- functors

_FWORD = re.compile(r"[A-Za-z0-9_']+")


def parse_functor(text, line=1, col=1):
    toks = Tokens(text, line, col, word=_FWORD)
    F = _functor_sum(toks)
    toks.done()
    return F


def _functor_sum(t):
    left = _functor_prod(t)
    if t.peek() == "+":
        t.next()
        return Sum(left, _functor_sum(t))
    return left


def _functor_prod(t):
    left = _functor_comp(t)
    if t.peek() == "*":
        t.next()
        return Prod(left, _functor_prod(t))
    return left


def _functor_comp(t):
    left = _functor_post(t)
    if t.peek() == ".":
        t.next()
        return Comp(left, _functor_comp(t))
    return left


def _functor_post(t):
    F = _functor_atom(t)
    while t.peek() == "^":
        t.next()
        F = Exp(_label_set(t), F)
    return F


def _label_set(t):
    t.expect("{")
    labels = [t.word("a label")]
    while t.peek() == ",":
        t.next()
        labels.append(t.word("a label"))
    t.expect("}")
    if len(set(labels)) != len(labels):
        raise t.error("duplicate label")
    return tuple(labels)


def _functor_atom(t):
    tok = t.peek()
    if tok == "(":
        t.next()
        F = _functor_sum(t)
        t.expect(")")
        return F
    word = t.word("a functor")
    if word == "Id":
        return Id()
    if word == "Dist":
        return Dist()
    if word == "Multi":
        return Multi()
    if word == "Const":
        return Const(_label_set(t))
    if word == "Pow":
        if t.peek() == "(":
            t.next()
            body = _functor_sum(t)
            t.expect(")")
            return Pow(body)
        return Pow(Id())
    t.i -= 1
    raise t.error(f"unknown functor {word!r}")


# ----------------------------------------------------------------- values

def parse_atom(t):
    if t.peek() == "<":
        t.next()
        items = [parse_atom(t)]
        while t.peek() == ",":
            t.next()
            items.append(parse_atom(t))
        t.expect(">")
        return tuple(items)
    if t.peek() == ">" or t.peek() == "<":
        raise t.error("expected an atom")
    return t.word("an atom")


def parse_value(F, text, line=1, col=1):
    t = Tokens(text, line, col)
    v = _value(F, t, lambda: ("I", parse_atom(t)))
    t.done()
    _checked(F, v, t)
    return v


def _checked(F, v, t):
    try:
        check_value(F, v)
    except MalformedValue as e:
        raise ValidationError(f"line {t.line}: {e}") from None


def _value(F, t, leaf):
    if isinstance(F, Const):
        c = t.word("a label")
        if c not in F.labels:
            raise t.error(f"{c!r} is not one of the labels {list(F.labels)}")
        return ("K", c)
    if isinstance(F, Id):
        return leaf()
    if isinstance(F, Pow):
        t.expect("{")
        items = []
        if t.peek() != "}":
            items.append(_value(F.body, t, leaf))
            while t.peek() == ",":
                t.next()
                items.append(_value(F.body, t, leaf))
        t.expect("}")
        return ("P", tuple(sorted(set(items))))
    if isinstance(F, Prod):
        t.expect("(")
        v = _prod_tail(F, t, leaf)
        t.expect(")")
        return v
    if isinstance(F, Sum):
        side = t.word("inl or inr")
        if side not in ("inl", "inr"):
            raise t.error(f"expected inl or inr, found {side!r}")
        k = 0 if side == "inl" else 1
        return ("S", k, _value(F.left if k == 0 else F.right, t, leaf))
    if isinstance(F, Exp):
        t.expect("[")
        got = {}
        while True:
            d = t.word("an exponent")
            if d not in F.exps:
                raise t.error(f"{d!r} is not in the exponent {list(F.exps)}")
            t.expect("->")
            got[d] = _value(F.body, t, leaf)
            if t.peek() != ",":
                break
            t.next()
        t.expect("]")
        missing = [d for d in F.exps if d not in got]
        if missing:
            raise ValidationError(f"line {t.line}: map misses exponents {missing}")
        return ("E", tuple(got[d] for d in F.exps))
    if isinstance(F, Comp):
        return ("C", _value(F.outer, t, lambda: ("I", _value(F.inner, t, leaf))))
    if isinstance(F, (Dist, Multi)):
        kw = "dist" if isinstance(F, Dist) else "multi"
        if t.word(kw) != kw:
            raise t.error(f"expected {kw}")
        t.expect("{")
        items = {}
        if t.peek() != "}":
            while True:
                x = leaf()[1]
                t.expect(":")
                items[x] = _number(t, isinstance(F, Dist))
                if t.peek() != ",":
                    break
                t.next()
        t.expect("}")
        if isinstance(F, Dist):
            return ("D", tuple(sorted(items.items())))
        return ("M", tuple(sorted(items.items())))
    raise TypeError(f"not a functor expression: {F!r}")


def _prod_tail(F, t, leaf):
    # (a,b,c) abbreviates (a,(b,c)) for right-nested products
    left = _value(F.left, t, leaf)
    t.expect(",")
    if isinstance(F.right, Prod):
        save = t.i
        try:
            return ("X", left, _prod_tail(F.right, t, leaf))
        except ParseError:
            t.i = save
    return ("X", left, _value(F.right, t, leaf))


def _number(t, rational):
    num = t.word("a number")
    try:
        if rational and t.peek() == "/":
            t.next()
            return Fraction(int(num), int(t.word("a number")))
        return Fraction(num) if rational else int(num)
    except ValueError:
        raise t.error(f"bad number {num!r}") from None


# ---------------------------------------------------------- line handling

def _lines(text):
    """(line number, stripped content) for non-blank, non-comment lines."""
    for i, raw in enumerate(text.splitlines(), 1):
        content = raw.split("#", 1)[0] if not raw.lstrip().startswith("#") else ""
        if content.strip():
            yield i, content.rstrip(), len(content) - len(content.lstrip()) + 1


def _keyword(line, word):
    return line.lstrip().startswith(word)


def _after(line, sep):
    k = line.index(sep)
    return line[k + len(sep):], k + len(sep) + 1


def _names(text, n, col):
    t = Tokens(text, n, col)
    out = []
    if t.peek() is None:
        return out
    out.append(parse_atom(t))
    while t.peek() == ",":
        t.next()
        out.append(parse_atom(t))
    t.done()
    return out


def _header(lines, key):
    for n, line, _ in lines:
        if line.strip().startswith(key + ":"):
            rest, c = _after(line, ":")
            return n, rest, c
    raise ParseError(f"missing '{key}:' line", 1, 1)


# --------------------------------------------------------------- coalgebra

def parse_coalgebra(text):
    lines = list(_lines(text))
    n, rest, c = _header(lines, "functor")
    F = parse_functor(rest, n, c)
    sigma, point = {}, None
    for n, line, c0 in lines:
        s = line.strip()
        if s.startswith("functor:"):
            continue
        if s.startswith("point:"):
            rest, c = _after(line, ":")
            t = Tokens(rest, n, c)
            point = parse_atom(t)
            t.done()
        elif s.startswith("state "):
            k = line.index("state ") + 6
            head, c = line[k:], k + 1
            if "->" not in head:
                raise ParseError("expected '->'", n, c + len(head))
            j = head.index("->")
            t = Tokens(head[:j], n, c)
            name = parse_atom(t)
            t.done()
            if name in sigma:
                raise ValidationError(f"line {n}: state {show_atom(name)} defined twice")
            sigma[name] = parse_value(F, head[j + 2:], n, c + j + 2)
        else:
            raise ParseError(f"unexpected line {s!r}", n, c0)
    if point is None:
        raise ParseError("missing 'point:' line", len(text.splitlines()) or 1, 1)
    return PointedCoalgebra(Coalgebra(F, list(sigma), sigma), point)


def show_coalgebra(P):
    S = P.coalgebra
    out = [f"functor: {show_functor(S.functor)}"]
    for s in S.states:
        out.append(f"state {show_atom(s)} -> {show_value(S.functor, S.sigma[s])}")
    out.append(f"point: {show_atom(P.point)}")
    return "\n".join(out) + "\n"


# --------------------------------------------------------------- automaton

def parse_automaton(text, base_dir=None):
    lines = list(_lines(text))
    n, rest, c = _header(lines, "functor")
    F = parse_functor(rest, n, c)
    n, rest, c = _header(lines, "states")
    states = _names(rest, n, c)
    n, rest, c = _header(lines, "initial")
    t = Tokens(rest, n, c)
    initial = parse_atom(t)
    t.done()
    if len(set(states)) != len(states):
        raise ValidationError("duplicate state names")
    delta, omega, dpw, declared = {}, {}, None, None
    for n, line, c0 in lines:
        s = line.strip()
        if s.split(":")[0] in ("functor", "states", "initial"):
            continue
        if s == "nondeterministic":
            declared = True
        elif s.startswith("delta "):
            head, c = _after(line, "delta ")
            if "=" not in head:
                raise ParseError("expected '='", n, c + len(head))
            j = head.index("=")
            t = Tokens(head[:j], n, c)
            a = parse_atom(t)
            t.done()
            if a in delta:
                raise ValidationError(f"line {n}: delta of {show_atom(a)} given twice")
            delta[a] = _moves(F, head[j + 1:], n, c + j + 1)
        elif s.startswith("parity"):
            rest, c = _after(line, "parity")
            t = Tokens(rest, n, c)
            while t.peek() is not None:
                a = parse_atom(t)
                t.expect("=")
                num = t.word("a priority")
                if not num.isdigit():
                    raise t.error(f"bad priority {num!r}")
                omega[a] = int(num)
        elif s.startswith("regular"):
            path = s[len("regular"):].strip()
            if not path:
                raise ParseError("expected a file name", n, c0 + len("regular"))
            p = Path(path)
            if base_dir is not None and not p.is_absolute():
                p = Path(base_dir) / p
            try:
                dpw = parse_word_automaton(p.read_text(encoding="utf-8"))
            except OSError as e:
                raise ValidationError(f"line {n}: cannot read {path}: {e}") from None
            dpw.source = path
        else:
            raise ParseError(f"unexpected line {s!r}", n, c0)
    unknown = (set(delta) | set(omega)) - set(states)
    if unknown:
        raise ValidationError(f"unknown states {sorted(map(show_atom, unknown))}")
    if dpw is not None and omega:
        raise ValidationError("an automaton has either parity or regular acceptance")
    if dpw is not None:
        return Automaton(F, states, initial, delta, acceptance=REGULAR, dpw=dpw,
                         nondeterministic=declared)
    return Automaton(F, states, initial, delta, omega=omega, nondeterministic=declared)


def _moves(F, text, n, col):
    t = Tokens(text, n, col)
    t.expect("{")
    moves = []
    if t.peek() != "}":
        while True:
            t.expect("{")
            m = []
            if t.peek() != "}":
                m.append(_value(F, t, lambda: ("I", parse_atom(t))))
                while t.peek() == ",":
                    t.next()
                    m.append(_value(F, t, lambda: ("I", parse_atom(t))))
            t.expect("}")
            for phi in m:
                _checked(F, phi, t)
            moves.append(m)
            if t.peek() != ",":
                break
            t.next()
    t.expect("}")
    t.done()
    return moves


def show_automaton(A, dpw_name=None):
    F = A.functor
    states = sorted(A.states)
    out = [f"functor: {show_functor(F)}",
           "states: " + ", ".join(show_atom(a) for a in states),
           f"initial: {show_atom(A.initial)}"]
    if A.nondeterministic:
        out.append("nondeterministic")
    for a in states:
        moves = ", ".join("{" + ",".join(show_value(F, phi) for phi in m) + "}"
                          for m in A.delta[a])
        out.append(f"delta {show_atom(a)} = {{{moves}}}")
    if A.acceptance == PARITY:
        for a in states:
            out.append(f"parity {show_atom(a)}={A.omega[a]}")
    else:
        out.append(f"regular {dpw_name or getattr(A.dpw, 'source', 'dpw.txt')}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------- word automata

def parse_word_automaton(text):
    lines = list(_lines(text))
    n, rest, c = _header(lines, "alphabet")
    alphabet = _names(rest, n, c)
    n, rest, c = _header(lines, "initial")
    t = Tokens(rest, n, c)
    initial = parse_atom(t)
    t.done()
    n, rest, c = _header(lines, "acceptance")
    kind = rest.strip()
    if kind not in ("parity", "buchi"):
        raise ParseError(f"unknown acceptance {kind!r}", n, c)
    states, prio, acc, delta, det = [], {}, set(), {}, False
    for n, line, c0 in lines:
        s = line.strip()
        if s.split(":")[0] in ("alphabet", "initial", "acceptance"):
            continue
        if s == "deterministic":
            det = True
        elif s.startswith("state "):
            rest, c = _after(line, "state ")
            t = Tokens(rest, n, c)
            q = parse_atom(t)
            states.append(q)
            while t.peek() is not None:
                key = t.word("prio or accepting")
                if key == "prio":
                    t.expect("=")
                    num = t.word("a priority")
                    if not num.isdigit():
                        raise t.error(f"bad priority {num!r}")
                    prio[q] = int(num)
                elif key == "accepting":
                    acc.add(q)
                else:
                    raise t.error(f"unexpected {key!r}")
        elif s.startswith("edge "):
            rest, c = _after(line, "edge ")
            t = Tokens(rest, n, c)
            q = parse_atom(t)
            letter = parse_atom(t)
            t.expect("->")
            targets = []
            if t.peek() is not None:
                targets.append(parse_atom(t))
                while t.peek() == ",":
                    t.next()
                    targets.append(parse_atom(t))
            t.done()
            delta.setdefault((q, letter), set()).update(targets)
        else:
            raise ParseError(f"unexpected line {s!r}", n, c0)
    try:
        if kind == "parity":
            return StreamAutomaton(alphabet, states, initial, delta, PARITY,
                                   priority=prio, deterministic=det)
        return StreamAutomaton(alphabet, states, initial, delta, BUCHI,
                               accepting=acc, deterministic=det)
    except ValueError as e:
        raise ValidationError(str(e)) from None


def show_word_automaton(w):
    kind = "parity" if w.acceptance == PARITY else "buchi"
    out = ["alphabet: " + ", ".join(show_atom(c) for c in w.alphabet),
           f"initial: {show_atom(w.initial)}", f"acceptance: {kind}"]
    if w.deterministic:
        out.append("deterministic")
    for q in w.states:
        if kind == "parity":
            out.append(f"state {show_atom(q)} prio={w.priority[q]}")
        else:
            out.append(f"state {show_atom(q)}" + (" accepting" if q in w.accepting else ""))
    for q in w.states:
        for c in w.alphabet:
            tgt = w.step(q, c)
            if tgt:
                out.append(f"edge {show_atom(q)} {show_atom(c)} -> "
                           + ",".join(show_atom(r) for r in sorted(tgt, key=repr)))
    return "\n".join(out) + "\n"


# ------------------------------------------------------------------ games

def parse_game(text):
    owner, prio, edges = {}, {}, {}
    for n, line, c0 in _lines(text):
        if not line.strip().startswith("pos "):
            raise ParseError(f"unexpected line {line.strip()!r}", n, c0)
        rest, c = _after(line, "pos ")
        t = Tokens(rest, n, c)
        v = parse_atom(t)
        if v in owner:
            raise ValidationError(f"line {n}: position {show_atom(v)} defined twice")
        for key in ("owner", "prio"):
            if t.word(key) != key:
                t.i -= 1
                raise t.error(f"expected {key}=")
            t.expect("=")
            val = t.word()
            if key == "owner":
                if val not in (EXISTS, FORALL):
                    raise t.error(f"owner must be E or A, found {val!r}")
                owner[v] = val
            else:
                if not val.isdigit():
                    raise t.error(f"bad priority {val!r}")
                prio[v] = int(val)
        t.expect("->")
        succ = []
        if t.peek() is not None:
            succ.append(parse_atom(t))
            while t.peek() == ",":
                t.next()
                succ.append(parse_atom(t))
        t.done()
        edges[v] = succ
    try:
        return ParityGame(owner, prio, edges)
    except ValueError as e:
        raise ValidationError(str(e)) from None


def show_game(g):
    out = []
    for v in g.positions:
        succ = ",".join(show_atom(w) for w in g.edges[v])
        out.append(f"pos {show_atom(v)} owner={g.owner[v]} prio={g.priority[v]} -> {succ}"
                   .rstrip())
    return "\n".join(out) + "\n"


# ------------------------------------------------------------------ lassos

def parse_letters(text, n=1, col=1):
    return _names(text, n, col)


def parse_lasso(text):
    lines = list(_lines(text))
    n, rest, c = _header(lines, "u")
    u = parse_letters(rest, n, c)
    n, rest, c = _header(lines, "v")
    v = parse_letters(rest, n, c)
    if not v:
        raise ValidationError("the cycle of a lasso must be non-empty")
    return LassoWord(u, v)


def show_lasso(lasso):
    return (f"u: {','.join(show_atom(x) for x in lasso.prefix)}\n"
            f"v: {','.join(show_atom(x) for x in lasso.cycle)}\n")


# --------------------------------------------------------- witness report

def parse_witness_report(text):
    """A verdict line, followed by a coalgebra when the language is nonempty."""
    lines = text.splitlines()
    first = next(((i, ln) for i, ln in enumerate(lines, 1)
                  if ln.strip() and not ln.strip().startswith("#")), None)
    if first is None or not first[1].strip().startswith("verdict:"):
        raise ParseError("missing 'verdict:' line", first[0] if first else 1, 1)
    i, line = first
    verdict = line.split(":", 1)[1].strip()
    if verdict == "empty":
        return {"verdict": "empty", "witness": None}
    if verdict != "nonempty":
        raise ParseError(f"unknown verdict {verdict!r}", i, line.index(":") + 2)
    body = "\n" * i + "\n".join(lines[i:])
    return {"verdict": "nonempty", "witness": parse_coalgebra(body)}


def show_witness_report(rep):
    if rep["witness"] is None:
        return "verdict: empty\n"
    return "verdict: nonempty\n" + show_coalgebra(rep["witness"])


_PARSERS = {"functor": lambda s: parse_functor(_strip_functor(s)),
            "coalgebra": parse_coalgebra, "automaton": parse_automaton,
            "word-automaton": parse_word_automaton, "game": parse_game,
            "lasso": parse_lasso, "witness-report": parse_witness_report}

_PRINTERS = {"functor": lambda F: f"functor: {show_functor(F)}\n",
             "coalgebra": show_coalgebra, "automaton": show_automaton,
             "word-automaton": show_word_automaton, "game": show_game,
             "lasso": show_lasso, "witness-report": show_witness_report}


def _strip_functor(text):
    body = [ln for _, ln, _ in _lines(text)]
    if len(body) != 1:
        raise ParseError("a functor document has exactly one line", 1, 1)
    s = body[0].strip()
    return s[len("functor:"):] if s.startswith("functor:") else s


def parse(kind, text):
    if kind not in _PARSERS:
        raise ValueError(f"unknown document kind {kind!r}")
    try:
        return Document(kind, _PARSERS[kind](text))
    except (ValueError, TypeError) as e:
        if isinstance(e, (ParseError, ArtifactError)):
            raise
        raise ValidationError(str(e)) from None


def show(doc):
    return _PRINTERS[doc.kind](doc.body)


def read(kind, path):
    text = Path(path).read_text(encoding="utf-8")
    if kind == "automaton":
        try:
            return Document(kind, parse_automaton(text, Path(path).parent))
        except (ValueError, TypeError) as e:
            if isinstance(e, (ParseError, ArtifactError)):
                raise
            raise ValidationError(str(e)) from None
    return parse(kind, text)


# -------------------------------------------------------------------- CLI

REPORT_FIELDS = ("command", "verdict", "exit_code", "sizes", "timings", "witness",
                 "output", "figures", "details")


def _materialize(A):
    """An explicit automaton on the states reachable from the initial one."""
    F = A.functor
    seen, stack, delta = {A.initial}, [A.initial], {}
    total = 0
    while stack:
        q = stack.pop()
        delta[q] = A.delta[q]
        total += sum(len(m) for m in delta[q])
        check_size(total, "transition values of the materialized automaton")
        for m in delta[q]:
            for phi in m:
                for x in base(F, phi):
                    if x not in seen:
                        seen.add(x)
                        stack.append(x)
    omega = {q: A.omega[q] for q in seen}
    return Automaton(F, sorted(seen, key=show_atom), A.initial, delta, omega=omega,
                     nondeterministic=A.nondeterministic or None)


def _write(path, text):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text, encoding="utf-8")
    return str(path)


def _emit_automaton(args, rep, A, name):
    text = show_automaton(A)
    rep["sizes"][name + "_states"] = len(A.states)
    rep["sizes"][name + "_index"] = A.index()
    if args.output:
        rep["output"] = _write(args.output, text)
    else:
        rep["details"]["document"] = text


def _cmd_check(args, rep):
    A = read("automaton", args.automaton).body
    P = read("coalgebra", args.coalgebra).body
    rep["sizes"].update(automaton_states=len(A.states), coalgebra_states=len(P.coalgebra.states))
    ok = accepts(A, P, args.method)
    rep["verdict"] = "accepted" if ok else "rejected"
    if args.report:
        rep["figures"].append(draw_coalgebra(P, Path(args.report) / "check_coalgebra.png",
                                             f"coalgebra ({rep['verdict']})"))
    return 0 if ok else 1


def _cmd_bisim(args, rep):
    P1 = read("coalgebra", args.first).body
    P2 = read("coalgebra", args.second).body
    ok = are_bisimilar(P1, P2)
    Z = largest_bisimulation(P1.coalgebra, P2.coalgebra)
    rep["verdict"] = "bisimilar" if ok else "not bisimilar"
    rep["sizes"].update(first_states=len(P1.coalgebra.states),
                        second_states=len(P2.coalgebra.states), bisimulation_pairs=len(Z))
    rep["details"]["largest_bisimulation"] = [[show_atom(s), show_atom(t)] for s, t in Z]
    if args.report:
        rep["figures"].append(draw_coalgebra(P1, Path(args.report) / "bisim_first.png", "first"))
        rep["figures"].append(draw_coalgebra(P2, Path(args.report) / "bisim_second.png", "second"))
    return 0 if ok else 1


def _cmd_nondet(args, rep):
    A = read("automaton", args.automaton).body
    if A.acceptance == REGULAR:
        B = wreath(A, A.dpw)
    else:
        B = to_nondeterministic(A, args.beta)
    B = _materialize(B)
    rep["sizes"].update(input_states=len(A.states), input_index=A.index())
    _emit_automaton(args, rep, B, "nondet")
    rep["verdict"] = "constructed"
    if args.report:
        rep["figures"].append(draw_bars(
            {"input": len(A.states), "nondet": len(B.states)},
            Path(args.report) / "nondet_sizes.png", "automaton sizes", "states"))
    return 0


def _cmd_boolean(args, rep):
    A1 = read("automaton", args.first).body
    A2 = read("automaton", args.second).body
    build = union_automaton if args.command == "union" else intersection_automaton
    C = build(A1, A2)
    rep["sizes"].update(first_states=len(A1.states), second_states=len(A2.states))
    _emit_automaton(args, rep, C, args.command)
    rep["verdict"] = "constructed"
    return 0


def _cmd_project(args, rep):
    A = read("automaton", args.automaton).body
    _emit_automaton(args, rep, project(A), "projection")
    rep["verdict"] = "constructed"
    return 0


def _cmd_nonempty(args, rep):
    A = read("automaton", args.automaton).body
    W = check_nonempty(A, args.beta)
    rep["sizes"]["automaton_states"] = len(A.states)
    if W is None:
        rep["verdict"] = "empty"
        return 1
    rep["verdict"] = "nonempty"
    rep["sizes"]["witness_states"] = len(W.coalgebra.states)
    text = show_coalgebra(W)
    if args.output:
        rep["witness"] = _write(args.output, text)
    else:
        rep["details"]["document"] = text
    if args.report:
        rep["figures"].append(draw_coalgebra(W, Path(args.report) / "witness.png", "witness"))
    return 0


def _cmd_solve_game(args, rep):
    g = read("game", args.game).body
    sol = solve(g)
    rep["verdict"] = "solved"
    rep["sizes"].update(positions=len(g), priorities=g.max_priority() + 1)
    rep["details"]["win_E"] = sorted(show_atom(v) for v in sol.win_exists)
    rep["details"]["win_A"] = sorted(show_atom(v) for v in sol.win_forall)
    for p in (EXISTS, FORALL):
        rep["details"][f"strategy_{p}"] = {show_atom(v): show_atom(w) for v, w in
                                           sorted(sol.strategy[p].moves.items(),
                                                  key=lambda kv: show_atom(kv[0]))}
    if args.report:
        rep["figures"].append(draw_game(g, sol, Path(args.report) / "game.png",
                                        "winning regions (green: E, red: A)"))
    return 0


def _cmd_lasso(args, rep):
    w = read("word-automaton", args.automaton).body
    parts = {}
    for item in args.lasso:
        if "=" not in item or item.split("=", 1)[0] not in ("u", "v"):
            raise ValidationError(f"expected u=... or v=..., found {item!r}")
        k, text = item.split("=", 1)
        parts[k] = parse_letters(text, 1, 3)
    if args.file:
        lasso = read("lasso", args.file).body
    else:
        if not parts.get("v"):
            raise ValidationError("the cycle v=... must be non-empty")
        lasso = LassoWord(parts.get("u", []), parts["v"])
    ok = accepts_lasso(w, lasso)
    rep["verdict"] = "accepted" if ok else "rejected"
    rep["sizes"].update(states=len(w.states), prefix=len(lasso.prefix), cycle=len(lasso.cycle))
    return 0 if ok else 1


def _cmd_selftest(args, rep):
    results = selftest.run(args.seed)
    rep["details"]["suites"] = [{"name": n, "passed": ok, "seconds": round(t, 3)}
                                for n, ok, t in results]
    for n, ok, t in results:
        rep["timings"][n] = round(t, 3)
    ok = all(r[1] for r in results)
    rep["verdict"] = "pass" if ok else "fail"
    if args.report:
        rep["figures"].append(draw_bars({n: t for n, _, t in results},
                                        Path(args.report) / "selftest_timings.png",
                                        "selftest suites", "seconds"))
    return 0 if ok else 1


def _text_report(rep):
    lines = [f"{rep['command']}: {rep['verdict']}"]
    for k, v in rep["sizes"].items():
        lines.append(f"  {k}: {v}")
    for key in ("output", "witness"):
        if rep[key]:
            lines.append(f"  {key}: {rep[key]}")
    d = rep["details"]
    if "suites" in d:
        for s in d["suites"]:
            lines.append(f"  [{'PASS' if s['passed'] else 'FAIL'}] {s['name']} ({s['seconds']}s)")
    for key in ("win_E", "win_A"):
        if key in d:
            lines.append(f"  {key}: {', '.join(d[key])}")
    for key in ("strategy_E", "strategy_A"):
        if key in d:
            lines.append(f"  {key}: " + ", ".join(f"{v}->{w}" for v, w in d[key].items()))
    if "largest_bisimulation" in d:
        lines.append("  largest_bisimulation: "
                     + ", ".join(f"({s},{t})" for s, t in d["largest_bisimulation"]))
    for f in rep["figures"]:
        lines.append(f"  figure: {f}")
    text = "\n".join(lines)
    if "document" in d:
        text = d["document"].rstrip("\n") + "\n# " + text.replace("\n", "\n# ")
    return text


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print a JSON report")
    common.add_argument("--cap", type=int, help="override the enumeration size cap")
    common.add_argument("--report", metavar="DIR", help="also render figures into DIR")
    p = argparse.ArgumentParser(prog="coalgauto", description="Coalgebra automata toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("check", parents=[common], help="does an automaton accept a coalgebra")
    s.add_argument("automaton")
    s.add_argument("coalgebra")
    s.add_argument("--method", choices=("auto", "explicit", "symbolic"), default="auto")
    s.set_defaults(func=_cmd_check)

    s = sub.add_parser("bisim", parents=[common], help="are two pointed coalgebras bisimilar")
    s.add_argument("first")
    s.add_argument("second")
    s.set_defaults(func=_cmd_bisim)

    s = sub.add_parser("nondet", parents=[common], help="remove alternation")
    s.add_argument("automaton")
    s.add_argument("-o", "--output")
    s.add_argument("--beta", type=int, help="bound on relation atoms per transition value")
    s.set_defaults(func=_cmd_nondet)

    for name, noun in (("union", "union"), ("intersect", "intersection")):
        s = sub.add_parser(name, parents=[common], help=f"{noun} of two automata")
        s.add_argument("first")
        s.add_argument("second")
        s.add_argument("-o", "--output")
        s.set_defaults(func=_cmd_boolean)

    s = sub.add_parser("project", parents=[common], help="existential projection")
    s.add_argument("automaton")
    s.add_argument("-o", "--output")
    s.set_defaults(func=_cmd_project)

    s = sub.add_parser("nonempty", parents=[common], help="nonemptiness with a witness")
    s.add_argument("automaton")
    s.add_argument("-o", "--output", help="write the witness coalgebra here")
    s.add_argument("--beta", type=int)
    s.set_defaults(func=_cmd_nonempty)

    s = sub.add_parser("solve-game", parents=[common], help="solve a parity game")
    s.add_argument("game")
    s.set_defaults(func=_cmd_solve_game)

    s = sub.add_parser("lasso", parents=[common], help="run a word automaton on a lasso")
    s.add_argument("automaton")
    s.add_argument("lasso", nargs="*", help="u=a,b v=c")
    s.add_argument("--file", help="read the lasso from a file instead")
    s.set_defaults(func=_cmd_lasso)

    s = sub.add_parser("selftest", parents=[common], help="run the quick invariant suites")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=_cmd_selftest)
    return p


def run(argv=None):
    """Parse argv, run the command; returns (exit status, report dict)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        code = 0 if e.code == 0 else 2
        rep = {k: None for k in REPORT_FIELDS}
        rep.update(verdict="usage", exit_code=code)
        return code, rep
    rep = {k: None for k in REPORT_FIELDS}
    rep.update(command=args.command, sizes={}, timings={}, figures=[], details={})
    t0 = time.perf_counter()
    try:
        with cap_override(args.cap) if args.cap else nullcontext():
            code = args.func(args, rep)
    except (ArtifactError, OSError) as e:
        code = 2
        rep["verdict"] = "error"
        rep["details"]["error"] = f"{type(e).__name__}: {e}"
    rep["timings"]["total"] = round(time.perf_counter() - t0, 4)
    rep["exit_code"] = code
    return code, rep


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    code, rep = run(argv)
    if rep.get("command") is None:
        return code
    if "--json" in argv:
        print(json.dumps(rep, indent=2, sort_keys=False, default=str))
    elif code == 2:
        print(f"error: {rep['details']['error']}", file=sys.stderr)
    else:
        print(_text_report(rep))
    return code


if __name__ == "__main__":
    sys.exit(main())
