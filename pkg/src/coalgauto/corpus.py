"""Random small instances for property tests and the selftest command."""

import random
from itertools import product

from .automata_core import Automaton
from .coalgebra import Coalgebra, PointedCoalgebra
from .functor_kernel import Const, Id, Pow, Prod, enumerate_f
from .word_automata import BUCHI, PARITY, StreamAutomaton

C2 = ("c1", "c2")

SMALL_FUNCTORS = {
    "Id": Id(),
    "Const*Id": Prod(Const(C2), Id()),
    "Id*Id": Prod(Id(), Id()),
    "Pow": Pow(Id()),
}


def random_coalgebra(rng, F, n, prefix="s"):
    states = [f"{prefix}{i}" for i in range(n)]
    vals = enumerate_f(F, states)
    sigma = {s: rng.choice(vals) for s in states}
    return PointedCoalgebra(Coalgebra(F, states, sigma), rng.choice(states))


def coalgebra_corpus(F, count, max_states=3, seed=0):
    """Distinct pointed coalgebras with 1..max_states states."""
    rng = random.Random(seed)
    seen, out = set(), []
    tries = 0
    while len(out) < count and tries < 50 * count:
        tries += 1
        P = random_coalgebra(rng, F, rng.randint(1, max_states))
        key = (P.coalgebra, P.point)
        if key not in seen:
            seen.add(key)
            out.append(P)
    return out


def all_coalgebras(F, states):
    """Every coalgebra on the given carrier."""
    states = sorted(states)
    vals = enumerate_f(F, states)
    for choice in product(vals, repeat=len(states)):
        yield Coalgebra(F, states, dict(zip(states, choice)))


def random_automaton(rng, F, n, max_moves=2, max_width=2, max_prio=3,
                     nondet=False, prefix="a", p_empty=0.05):
    """Random automaton; empty moves and empty transition sets have
    probability p_empty so that most instances have mixed verdicts."""
    states = [f"{prefix}{i}" for i in range(n)]
    vals = enumerate_f(F, states)
    delta = {}
    for a in states:
        moves = []
        k = 0 if rng.random() < p_empty else rng.randint(1, max_moves)
        for _ in range(k):
            if nondet:
                width = 1
            else:
                width = 0 if rng.random() < p_empty else rng.randint(1, max_width)
            moves.append(rng.sample(vals, min(width, len(vals))))
        delta[a] = moves
    omega = {a: rng.randint(0, max_prio) for a in states}
    return Automaton(F, states, states[0], delta, omega=omega)


def random_word_automaton(rng, n, letters, kind, deterministic=False):
    states = list(range(n))
    delta = {}
    for q in states:
        for c in letters:
            if deterministic:
                delta[(q, c)] = (rng.choice(states),)
            else:
                delta[(q, c)] = tuple(sorted(rng.sample(states, rng.randint(0, n))))
    if kind == PARITY:
        return StreamAutomaton(letters, states, 0, delta, PARITY,
                               priority={q: rng.randint(0, 3) for q in states},
                               deterministic=deterministic)
    acc = {q for q in states if rng.random() < 0.5}
    return StreamAutomaton(letters, states, 0, delta, BUCHI, accepting=acc,
                           deterministic=deterministic)
