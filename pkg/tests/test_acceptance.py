"""The ten acceptance criteria, one test each.

Every test records a PASS/FAIL line in RESULTS; the lines are printed in
the terminal summary by conftest.py, or directly when this file is run
as a script.
"""

import random
import sys
import time
from itertools import combinations, product

import numpy as np

from coalgauto.automata_core import accepts, erase_colors
from coalgauto.coalgebra import are_bisimilar
from coalgauto.constructions import (check_nonempty, exhaustive_nonempty,
                                     intersection_automaton, project, project_roundtrip,
                                     to_nondeterministic, union_automaton, witness_ok)
from coalgauto.corpus import (SMALL_FUNCTORS, coalgebra_corpus, random_automaton,
                              random_word_automaton)
from coalgauto.functor_kernel import (Comp, Const, Id, Pow, Prod, Sum, all_relations,
                                      atom, base, enumerate_f, f_map, lift_member,
                                      lift_member_oracle, show_functor)
from coalgauto.parity_games import A, E, ParityGame, solve, verify_strategy
from coalgauto.word_automata import (BUCHI, PARITY, accepts_lasso, all_lassos,
                                     has_bad_trace_oracle, nbt_dpw, parity_to_buchi,
                                     determinize_buchi, relation_letters, shift_priorities)

RESULTS = []

C2 = Const(("c1", "c2"))
K = Pow(Id())
FLAT = [Id(), C2, K, Prod(Id(), Id()), Prod(C2, Id()), Sum(Id(), Id())]
DEEP = [Comp(K, G) for G in (K, Prod(Id(), Id()), Prod(C2, Id()), Sum(Id(), Id()))]
SETS = ["", "x", "xy", "xyz"]
TARGETS = ["", "a", "ab", "abc"]


def record(n, title, ok, detail, t0):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {title} ({detail}; {time.perf_counter() - t0:.1f}s)"
    RESULTS.append(line)
    print(line)
    assert ok, line


# ------------------------------------------------------- 1. lifting oracle

def _oracle_mismatches(F, U, V):
    vu, vv = enumerate_f(F, U), enumerate_f(F, V)
    bad = n = 0
    for Z in all_relations(U, V):
        for phi, psi in product(vu, vv):
            n += 1
            bad += lift_member(F, Z, phi, psi) != lift_member_oracle(F, Z, phi, psi)
    return bad, n


def test_criterion_1_lifting_oracle():
    t0 = time.perf_counter()
    bad = n = 0
    for F in FLAT:
        for U, V in product(SETS, TARGETS):
            b, k = _oracle_mismatches(F, U, V)
            bad, n = bad + b, n + k
    for F in DEEP:
        for U, V in product(SETS[:3], TARGETS[:3]):
            b, k = _oracle_mismatches(F, U, V)
            bad, n = bad + b, n + k
    # depth-2 composites at size 3: random relations, and value pairs drawn
    # both uniformly and as projections of a value over a small part of Z
    # (positive cases)
    rng = random.Random(1)
    sampled = 0
    for F in DEEP:
        vu, vv = enumerate_f(F, SETS[3]), enumerate_f(F, TARGETS[3])
        rels = list(all_relations(SETS[3], TARGETS[3]))
        for _ in range(400):
            Z = rng.choice(rels)
            phi, psi = rng.choice(vu), rng.choice(vv)
            if Z and rng.random() < 0.5:
                part = rng.sample(sorted(Z), min(2, len(Z)))
                w = rng.choice(enumerate_f(F, part))
                phi, psi = f_map(F, lambda p: p[0], w), f_map(F, lambda p: p[1], w)
            sampled += 1
            bad += lift_member(F, Z, phi, psi) != lift_member_oracle(F, Z, phi, psi)
    record(1, "lifting oracle equivalence", bad == 0,
           f"{n} exhaustive + {sampled} sampled checks, {bad} mismatches", t0)


# --------------------------------------------------------- 2. lifting laws

class Lifted:
    """Boolean matrices of the lifting of every relation between U and V."""

    def __init__(self, F, U, V):
        self.F, self.U, self.V = F, list(U), list(V)
        self.vu, self.vv = enumerate_f(F, U), enumerate_f(F, V)
        self.cells = [(u, v) for u in U for v in V]
        self.mats = np.zeros((2 ** len(self.cells), len(self.vu), len(self.vv)), bool)
        for m in range(2 ** len(self.cells)):
            Z = self.rel(m)
            for i, phi in enumerate(self.vu):
                for j, psi in enumerate(self.vv):
                    self.mats[m, i, j] = lift_member(F, Z, phi, psi)

    def rel(self, m):
        return {c for k, c in enumerate(self.cells) if m >> k & 1}

    def mask(self, Z):
        return sum(1 << k for k, c in enumerate(self.cells) if c in Z)


def _laws_for(F, U, V, W, tables, pairwise=True):
    def table(X, Y):
        if (X, Y) not in tables:
            tables[(X, Y)] = Lifted(F, X, Y)
        return tables[(X, Y)]

    failures = []
    L = table(U, V)
    if pairwise:
        failures += _pairwise_laws(F, U, V, L, table)
    # composition
    R2 = table(V, W)
    RC = table(U, W)
    comp = np.einsum("rij,qjk->rqik", L.mats.astype(np.uint8),
                     R2.mats.astype(np.uint8)) > 0
    for m in range(len(L.mats)):
        Rm = L.rel(m)
        for q in range(len(R2.mats)):
            Qm = R2.rel(q)
            RQ = {(a, c) for a, b in Rm for b2, c in Qm if b == b2}
            if not (RC.mats[RC.mask(RQ)] == comp[m, q]).all():
                failures.append("composition")
                break
        else:
            continue
        break
    return failures


def _pairwise_laws(F, U, V, L, table):
    """Graph, diagonal, converse, monotonicity and restriction laws."""
    failures = []
    # graphs of functions
    for image in product(V, repeat=len(U)):
        f = dict(zip(U, image))
        M = L.mats[L.mask(set(f.items()))]
        G = np.array([[f_map(F, f, x) == y for y in L.vv] for x in L.vu], bool).reshape(M.shape)
        if not (M == G).all():
            failures.append("graph")
    # diagonal
    if U == V:
        if not (L.mats[L.mask({(u, u) for u in U})] == np.eye(len(L.vu), dtype=bool)).all():
            failures.append("diagonal")
    # converse
    T = table(V, U)
    for m in range(len(L.mats)):
        conv = {(b, a) for a, b in L.rel(m)}
        if not (T.mats[T.mask(conv)] == L.mats[m].T).all():
            failures.append("converse")
            break
    # monotone, along single-cell extensions
    for m in range(len(L.mats)):
        for k in range(len(L.cells)):
            if (L.mats[m] & ~L.mats[m | 1 << k]).any():
                failures.append("monotone")
                break
    # restrictions
    in_sub_u = {X: np.array([set(base(F, x)) <= set(X) for x in L.vu]) for X in _subsets(U)}
    in_sub_v = {Y: np.array([set(base(F, y)) <= set(Y) for y in L.vv]) for Y in _subsets(V)}
    for m in range(len(L.mats)):
        R = L.rel(m)
        for X, Y in product(in_sub_u, in_sub_v):
            restricted = L.mats[L.mask({(a, b) for a, b in R if a in X and b in Y})]
            expect = L.mats[m] & np.outer(in_sub_u[X], in_sub_v[Y])
            if not (restricted == expect).all():
                failures.append("restriction")
                break
        else:
            continue
        break
    return failures


def _subsets(U):
    return [tuple(c) for r in range(len(U) + 1) for c in combinations(U, r)]


def test_criterion_2_lifting_laws():
    t0 = time.perf_counter()
    failures, checked = [], 0
    for F in FLAT + DEEP:
        top = 4 if F in FLAT else 3
        tables = {}
        for U, V, W in product(SETS[1:top], repeat=3):
            for name in _laws_for(F, U, V, W, tables, pairwise=W == SETS[1]):
                failures.append(f"{show_functor(F)}:{name}")
            checked += 1
        # intersections: F(S cap T) = F S cap F T
        for S, T in product(_subsets(SETS[top - 1]), repeat=2):
            meet = set(enumerate_f(F, set(S) & set(T)))
            if meet != set(enumerate_f(F, S)) & set(enumerate_f(F, T)):
                failures.append(f"{show_functor(F)}:intersection")
    record(2, "lifting laws", not failures,
           f"{checked} carrier triples, failures: {sorted(set(failures)) or 'none'}", t0)


# ------------------------------------------------------- 3. base minimality

def test_criterion_3_base_minimality():
    t0 = time.perf_counter()
    bad = n = 0
    for F in FLAT + DEEP:
        for U in SETS:
            subs = _subsets(U)
            over = {X: set(enumerate_f(F, X)) for X in subs}
            for phi in enumerate_f(F, U):
                n += 1
                holders = [set(X) for X in subs if phi in over[X]]
                minimal = [X for X in holders if not any(Y < X for Y in holders)]
                bad += minimal != [set(base(F, phi))]
    record(3, "base minimality", bad == 0, f"{n} values, {bad} failures", t0)


# -------------------------------------------------------- 4. word pipeline

def _lassos(letters):
    return list(all_lassos(letters, 3, 3))


def test_criterion_4_word_pipeline():
    t0 = time.perf_counter()
    rng = random.Random(4)
    bad = 0
    count = 0
    for i in range(200):
        letters = ("a", "b", "c")[:2 + i % 2]
        kind = PARITY if i % 2 else BUCHI
        w = random_word_automaton(rng, rng.randint(1, 3), letters, kind)
        lassos = _lassos(letters)
        b = parity_to_buchi(w) if kind == PARITY else w
        d = determinize_buchi(b)
        c = shift_priorities(d)
        for l in lassos:
            x = accepts_lasso(w, l)
            bad += accepts_lasso(b, l) != x or accepts_lasso(d, l) != x
            bad += accepts_lasso(c, l) == x
        count += 1
    # the bad-trace pipeline against the independent oracle
    for i in range(200):
        states = ["a", "b", "c"][:1 + i % 3]
        omega = {a: rng.randint(0, 3) for a in states}
        letters = rng.sample(relation_letters(states), min(3 if i % 2 else 2,
                                                           2 ** len(states) ** 2))
        final, stages = nbt_dpw(states, "a", omega, alphabet=letters, stages=True)
        for l in _lassos(letters):
            bad_trace = has_bad_trace_oracle(l, omega, "a")
            seen = [accepts_lasso(s, l) for s in stages]
            bad += seen[0] != bad_trace or seen[1] != bad_trace or seen[2] != bad_trace
            bad += seen[3] == bad_trace
        count += 1
    record(4, "word pipeline", bad == 0, f"{count} automata, {bad} disagreements", t0)


# ------------------------------------------------ 5. alternation removal

def _one_state_automata(F):
    """Every alternating one-state automaton with priorities 0 and 1."""
    from coalgauto.automata_core import Automaton
    vals = enumerate_f(F, ["a"])
    moves = [list(c) for r in range(len(vals) + 1) for c in combinations(vals, r)]
    out = []
    for r in range(len(moves) + 1):
        for delta in combinations(moves, r):
            for p in (0, 1):
                out.append(Automaton(F, ["a"], "a", {"a": list(delta)}, omega={"a": p}))
    return out


SAMPLED_TWO_STATE = {"Id": 40, "Const*Id": 40, "Id*Id": 40, "Pow": 12}


def test_criterion_5_alternation_removal():
    t0 = time.perf_counter()
    rng = random.Random(5)
    bad = n_aut = n_pairs = 0
    for name, F in SMALL_FUNCTORS.items():
        corpus = coalgebra_corpus(F, 50, 3, seed=50)
        autos = _one_state_automata(F)
        autos += [random_automaton(rng, F, 2, max_moves=3, p_empty=0.15)
                  for _ in range(SAMPLED_TWO_STATE[name])]
        for Aut in autos:
            B = to_nondeterministic(Aut)
            for P in corpus:
                bad += accepts(Aut, P) != accepts(B, P)
                n_pairs += 1
            n_aut += 1
    record(5, "alternation removal", bad == 0,
           f"{n_aut} automata x corpus = {n_pairs} pairs, {bad} disagreements", t0)


# --------------------------------------------------- 6. union/intersection

def test_criterion_6_union_intersection():
    t0 = time.perf_counter()
    rng = random.Random(6)
    bad = n = 0
    for name, F in SMALL_FUNCTORS.items():
        corpus = coalgebra_corpus(F, 30, 3, seed=60)
        for _ in range(10):
            n1, n2 = rng.randint(1, 3), rng.randint(1, 3)
            A1 = random_automaton(rng, F, n1, max_prio=rng.randint(0, 4))
            A2 = random_automaton(rng, F, n2, prefix="b", max_prio=rng.randint(0, 4))
            U, I = union_automaton(A1, A2), intersection_automaton(A1, A2)
            k = max(A1.index(), A2.index())
            bad += len(U.states) != n1 + n2 + 1 or len(I.states) != n1 + n2 + 1
            bad += U.index() != k or I.index() != k
            for P in corpus:
                x, y = accepts(A1, P), accepts(A2, P)
                bad += accepts(U, P) != (x or y)
                bad += accepts(I, P) != (x and y)
            n += 1
    record(6, "union and intersection", bad == 0, f"{n} automaton pairs, {bad} failures", t0)


# ----------------------------------------------------------- 7. projection

def test_criterion_7_projection():
    t0 = time.perf_counter()
    rng = random.Random(7)
    bad = forward = backward = n = 0
    for F in (Id(), K, Prod(Id(), Id())):
        G = Prod(C2, F)
        plain = coalgebra_corpus(F, 15, 3, seed=70)
        colored = coalgebra_corpus(G, 15, 3, seed=71)
        for _ in range(12):
            Aut = random_automaton(rng, G, rng.randint(1, 2), nondet=True, max_moves=4)
            pA = project(Aut)
            for P in plain:
                if accepts(pA, P):
                    Q = project_roundtrip(Aut, P)
                    bad += not accepts(Aut, Q) or not are_bisimilar(erase_colors(Q), P)
                    forward += 1
            for P in colored:
                if accepts(Aut, P):
                    bad += not accepts(pA, erase_colors(P))
                    backward += 1
            n += 1
    ok = bad == 0 and forward > 0 and backward > 0
    record(7, "projection round trip", ok,
           f"{n} automata, {forward} forward + {backward} backward cases, {bad} failures", t0)


# --------------------------------------------------------- 8. nonemptiness

def test_criterion_8_nonemptiness():
    t0 = time.perf_counter()
    rng = random.Random(8)
    bad = n = nonempty = 0
    for name, F in SMALL_FUNCTORS.items():
        for _ in range(20):
            Aut = random_automaton(rng, F, rng.randint(1, 3), nondet=True, max_moves=3)
            W = check_nonempty(Aut)
            X = exhaustive_nonempty(Aut)
            bad += (W is None) != (X is None)
            if W is not None:
                nonempty += 1
                bad += not witness_ok(Aut, W) or not accepts(Aut, W)
                bad += W.point != Aut.initial or not set(W.coalgebra.states) <= set(Aut.states)
            n += 1
    record(8, "nonemptiness", bad == 0, f"{n} automata ({nonempty} nonempty), {bad} failures", t0)


# --------------------------------------------------------- 9. parity games

def test_criterion_9_parity_solver():
    t0 = time.perf_counter()
    rng = random.Random(9)
    bad = 0
    for _ in range(1000):
        n = rng.randint(1, 12)
        g = ParityGame({v: rng.choice((E, A)) for v in range(n)},
                       {v: rng.randint(0, 3) for v in range(n)},
                       {v: rng.sample(range(n), rng.randint(0, min(3, n))) for v in range(n)})
        sol = solve(g)
        bad += bool(sol.win[E] & sol.win[A]) or sol.win[E] | sol.win[A] != set(range(n))
        bad += not all(verify_strategy(g, sol.win[p], sol.strategy[p]) for p in (E, A))
        d = solve(g.dual())
        bad += d.win[E] != sol.win[A] or d.win[A] != sol.win[E]
    record(9, "parity solver", bad == 0, f"1000 games, {bad} failures", t0)


# ------------------------------------------------ 10. bisimulation invariance

def test_criterion_10_bisimulation_invariance():
    t0 = time.perf_counter()
    rng = random.Random(10)
    bad = pairs = 0
    for name, F in SMALL_FUNCTORS.items():
        corpus = coalgebra_corpus(F, 30, 3, seed=100)
        autos = [random_automaton(rng, F, rng.randint(1, 3)) for _ in range(10)]
        verdict = {(i, j): accepts(a, P) for i, a in enumerate(autos)
                   for j, P in enumerate(corpus)}
        for j, k in combinations(range(len(corpus)), 2):
            if are_bisimilar(corpus[j], corpus[k]):
                pairs += 1
                bad += any(verdict[(i, j)] != verdict[(i, k)] for i in range(len(autos)))
    record(10, "bisimulation invariance", bad == 0 and pairs > 0,
           f"{pairs} bisimilar pairs x 10 automata per functor, {bad} failures", t0)


if __name__ == "__main__":
    failed = 0
    for fn in [v for k, v in sorted(globals().items()) if k.startswith("test_criterion_")]:
        try:
            fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
