"""Quick invariant suites run by the `selftest` command.

Each suite is a small, seeded version of the corresponding property
test; the full-scale checks live in the test suite.
"""

import random
import time
from itertools import product

from .automata_core import accepts, erase_colors
from .coalgebra import are_bisimilar, bisimilar_by_game, largest_bisimulation
from .constructions import (check_nonempty, exhaustive_nonempty,
                            intersection_automaton, project, project_roundtrip,
                            to_nondeterministic, union_automaton, witness_ok)
from .corpus import (SMALL_FUNCTORS, coalgebra_corpus, random_automaton,
                     random_word_automaton)
from .functor_kernel import (Const, Id, Pow, Prod, Sum, all_relations, base,
                             enumerate_f, lift_member, lift_member_oracle)
from .parity_games import A, E, ParityGame, solve, verify_strategy
from .word_automata import (BUCHI, PARITY, accepts_lasso, all_lassos,
                            determinize_buchi, has_bad_trace_oracle, lasso_equivalent,
                            nbt_dpw, parity_to_buchi, relation_letters)


def _lifting_oracle():
    for F in (Pow(Id()), Prod(Const(("c1", "c2")), Id()), Sum(Id(), Id())):
        for U, V in (("x", "a"), ("xy", "ab")):
            vals_u, vals_v = enumerate_f(F, U), enumerate_f(F, V)
            for Z in all_relations(U, V):
                for phi, psi in product(vals_u, vals_v):
                    if lift_member(F, Z, phi, psi) != lift_member_oracle(F, Z, phi, psi):
                        return False
    return True


def _lifting_laws():
    F, U = Pow(Id()), "xy"
    vals = enumerate_f(F, U)
    for Z in all_relations(U, U):
        conv = {(b, a) for a, b in Z}
        for phi, psi in product(vals, vals):
            if lift_member(F, Z, phi, psi) != lift_member(F, conv, psi, phi):
                return False
    diag = {(u, u) for u in U}
    return all(lift_member(F, diag, p, q) == (p == q) for p, q in product(vals, vals))


def _base_minimality():
    for F in (Pow(Id()), Prod(Id(), Id())):
        for phi in enumerate_f(F, "abc"):
            X = base(F, phi)
            if phi not in enumerate_f(F, X):
                return False
            if any(phi in enumerate_f(F, X - {x}) for x in X):
                return False
    return True


def _parity_games(rng):
    for _ in range(100):
        n = rng.randint(1, 10)
        owner = {v: rng.choice((E, A)) for v in range(n)}
        prio = {v: rng.randint(0, 3) for v in range(n)}
        edges = {v: rng.sample(range(n), rng.randint(0, min(3, n))) for v in range(n)}
        g = ParityGame(owner, prio, edges)
        sol = solve(g)
        if sol.win[E] & sol.win[A] or sol.win[E] | sol.win[A] != set(range(n)):
            return False
        if not all(verify_strategy(g, sol.win[p], sol.strategy[p]) for p in (E, A)):
            return False
        if solve(g.dual()).win[E] != sol.win[A]:
            return False
    return True


def _word_pipeline(rng):
    for i in range(6):
        w = random_word_automaton(rng, 2, ("a", "b"), PARITY if i % 2 else BUCHI)
        if w.acceptance == PARITY:
            w = parity_to_buchi(w)
        if lasso_equivalent(w, determinize_buchi(w), 2, 2) is not None:
            return False
    states = ["a", "b"]
    letters = relation_letters(states)
    for _ in range(3):
        omega = {a: rng.randint(0, 3) for a in states}
        dpw = nbt_dpw(states, "a", omega)
        sample = rng.sample(letters, 3)
        for lasso in all_lassos(sample, 2, 2):
            if accepts_lasso(dpw, lasso) == has_bad_trace_oracle(lasso, omega, "a"):
                return False
    return True


def _alternation_removal(rng):
    for name in ("Const*Id", "Pow"):
        F = SMALL_FUNCTORS[name]
        corpus = coalgebra_corpus(F, 12, 3, seed=1)
        for _ in range(3):
            A_ = random_automaton(rng, F, 2)
            B = to_nondeterministic(A_)
            if any(accepts(A_, P) != accepts(B, P) for P in corpus):
                return False
    return True


def _union_intersection(rng):
    F = SMALL_FUNCTORS["Pow"]
    corpus = coalgebra_corpus(F, 12, 3, seed=2)
    for _ in range(5):
        A1, A2 = random_automaton(rng, F, 2), random_automaton(rng, F, 2, prefix="b")
        U, I = union_automaton(A1, A2), intersection_automaton(A1, A2)
        if len(U.states) != 5 or U.index() != max(A1.index(), A2.index()):
            return False
        for P in corpus:
            x, y = accepts(A1, P), accepts(A2, P)
            if accepts(U, P) != (x or y) or accepts(I, P) != (x and y):
                return False
    return True


def _projection(rng):
    F = SMALL_FUNCTORS["Const*Id"]
    plain = coalgebra_corpus(F.right, 8, 3, seed=3)
    colored = coalgebra_corpus(F, 8, 3, seed=4)
    for _ in range(5):
        A_ = random_automaton(rng, F, 2, nondet=True, max_moves=3)
        pA = project(A_)
        for P in plain:
            if accepts(pA, P) and not accepts(A_, project_roundtrip(A_, P)):
                return False
        for P in colored:
            if accepts(A_, P) and not accepts(pA, erase_colors(P)):
                return False
    return True


def _nonemptiness(rng):
    for name in ("Pow", "Id*Id"):
        F = SMALL_FUNCTORS[name]
        for _ in range(8):
            A_ = random_automaton(rng, F, 3, nondet=True, max_moves=3)
            W = check_nonempty(A_)
            if (W is None) != (exhaustive_nonempty(A_) is None):
                return False
            if W is not None and not (witness_ok(A_, W) and accepts(A_, W)):
                return False
    return True


def _bisimulation(rng):
    F = SMALL_FUNCTORS["Pow"]
    corpus = coalgebra_corpus(F, 10, 3, seed=5)
    for P in corpus:
        S = P.coalgebra
        if set(largest_bisimulation(S, S).pairs) != set(bisimilar_by_game(S, S).pairs):
            return False
    autos = [random_automaton(rng, F, 2) for _ in range(4)]
    for P, Q in product(corpus, corpus):
        if are_bisimilar(P, Q):
            if any(accepts(A_, P) != accepts(A_, Q) for A_ in autos):
                return False
    return True


SUITES = [
    ("lifting-oracle", _lifting_oracle, False),
    ("lifting-laws", _lifting_laws, False),
    ("base-minimality", _base_minimality, False),
    ("parity-games", _parity_games, True),
    ("word-pipeline", _word_pipeline, True),
    ("alternation-removal", _alternation_removal, True),
    ("union-intersection", _union_intersection, True),
    ("projection", _projection, True),
    ("nonemptiness", _nonemptiness, True),
    ("bisimulation", _bisimulation, True),
]


def run(seed=0):
    """Run every suite; returns a list of (name, passed, seconds)."""
    out = []
    for name, fn, seeded in SUITES:
        t0 = time.perf_counter()
        try:
            ok = fn(random.Random(seed)) if seeded else fn()
        except Exception as e:  # a crash is a failure of that suite
            ok = False
            name = f"{name} ({type(e).__name__}: {e})"
        out.append((name, bool(ok), time.perf_counter() - t0))
    return out
