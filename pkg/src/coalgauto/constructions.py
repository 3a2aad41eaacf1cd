"""Automata constructions: alternation removal, boolean closure, projection,
scattering and nonemptiness.

Alternation removal goes through the relation automaton A# (states are
binary relations over A, acceptance "no bad trace") and then the wreath
product with a deterministic parity automaton for that condition.
Both are built lazily: transitions are computed per state on demand and
shared between states that provably have the same moves up to renaming.
"""

from collections.abc import Mapping
from dataclasses import dataclass
from itertools import count, product

import numpy as np

from .automata_core import (PARITY, REGULAR, Automaton, EloiseStrategy, StepTable,
                            accepts, as_pointed, chromatic_companion,
                            colored_coalgebra, winning_strategy)
from .coalgebra import Coalgebra, PointedCoalgebra
from .errors import (AlphabetMismatch, FunctorMismatch, NotAccepted,
                     NotStronglyAccepted, ShapeMismatch, ValidationError)
from .functor_kernel import (Id, Pow, _in, base, color_split, enumerate_f, f_map, f_size,
                             lift, lift_witness, set_atoms, show_functor)
from .guard import check_size
from .parity_games import A as FORALL
from .parity_games import E as EXISTS
from .parity_games import ParityGame, solve
from .word_automata import nbt_dpw, relation_letters

_tokens = count()


class LazyMap(Mapping):
    """A read-only mapping computed and cached on first access."""

    def __init__(self, keys, func):
        self._keys = keys
        self._func = func
        self._cache = {}

    def __getitem__(self, k):
        if k not in self._cache:
            if k not in self._keys:
                raise KeyError(k)
            self._cache[k] = self._func(k)
        return self._cache[k]

    def __iter__(self):
        return iter(self._keys)

    def __len__(self):
        return len(self._keys)


def _require_parity(A):
    if A.acceptance != PARITY:
        raise ValidationError("parity acceptance expected")


# ------------------------------------------------------------------ sharp

def image(R, a):
    """R[a] as a set-atom (sorted tuple)."""
    return tuple(sorted(b for x, b in R if x == a))


def relation_range(R):
    return tuple(sorted({b for _, b in R}))


class _SharpMoves:
    """Transitions of A#, which depend on a state R only through rng(R)."""

    def __init__(self, A, beta):
        self.A, self.F = A, A.functor
        self.rels = relation_letters(A.states)
        self.beta = len(self.rels) if beta is None else beta
        self.token = next(_tokens)
        self.tables = {}
        self.fast = self.F == Pow(Id()) and len(self.rels) <= 62
        if not self.fast:
            check_size(f_size(self.F, len(self.rels)),
                       f"candidate transitions of A# over {show_functor(self.F)}")
        self._redist = {}

    def _ok(self, a, xi):
        key = (a, xi)
        if key not in self._redist:
            self._redist[key] = any(all(lift(self.F, _in, phi, xi) for phi in m)
                                    for m in self.A.delta[a])
        return self._redist[key]

    def table(self, R):
        rng = relation_range(R)
        if rng not in self.tables:
            self.tables[rng] = self._fast_table(rng) if self.fast else self._table(rng)
        return self.tables[rng]

    def _table(self, rng):
        F, idx = self.F, {r: i for i, r in enumerate(self.rels)}
        keep = []
        for pi in enumerate_f(F, self.rels):
            if len(base(F, pi)) > self.beta:
                continue
            if all(self._ok(a, f_map(F, lambda r, a=a: image(r, a), pi)) for a in rng):
                keep.append((f_map(F, idx, pi),))
        return StepTable(self.rels, tuple(keep), key=(self.token, rng))

    def _fast_table(self, rng):
        # Pi is a set of relations, i.e. a bitmask over self.rels
        n = len(self.rels)
        check_size(2 ** n, "candidate transitions of A# over Pow(Id)")
        masks = np.arange(2 ** n, dtype=np.uint64)
        sizes = np.zeros(len(masks), dtype=np.int64)
        for j in range(n):
            sizes += ((masks >> np.uint64(j)) & np.uint64(1)).astype(np.int64)
        ok = sizes <= self.beta
        subsets = set_atoms(self.A.states)
        for a in rng:
            sub = [subsets.index(image(r, a)) for r in self.rels]
            ev = np.zeros(len(masks), dtype=np.uint64)
            for j in range(n):
                bit = (masks >> np.uint64(j)) & np.uint64(1)
                ev |= bit << np.uint64(sub[j])
            good = {}
            for e in np.unique(ev):
                xi = ("P", tuple(("I", subsets[k]) for k in range(len(subsets))
                                 if int(e) >> k & 1))
                good[int(e)] = self._ok(a, xi)
            ok &= np.isin(ev, np.array([e for e, g in good.items() if g], dtype=np.uint64))
        chosen = masks[ok]

        def make():
            return tuple((("P", tuple(("I", j) for j in range(n) if int(m) >> j & 1)),)
                         for m in chosen)

        return StepTable(self.rels, key=(self.token, rng), masks=chosen, make=make)


def sharp(A, beta=None):
    """The nondeterministic relation automaton A# with no-bad-trace acceptance.

    beta bounds the number of relation atoms in a transition value; the
    default (all relations) is exhaustive.
    """
    _require_parity(A)
    moves = _SharpMoves(A, beta)
    states = tuple(moves.rels)
    initial = ((A.initial, A.initial),)
    delta = LazyMap(frozenset(states), lambda R: moves.table(R).moves(A.functor))
    dpw = nbt_dpw(A.states, A.initial, A.omega, alphabet=moves.rels)
    return Automaton(A.functor, states, initial, delta, acceptance=REGULAR, dpw=dpw,
                     nondeterministic=True, table=moves.table, validate=False)


# ----------------------------------------------------------------- wreath

def wreath(B, W):
    """The wreath product of a nondeterministic B with a deterministic W.

    W reads the stream of states of B; the product has parity acceptance
    taken from W.
    """
    if not B.nondeterministic:
        raise ValidationError("the wreath product needs a nondeterministic automaton")
    if set(W.alphabet) != set(B.states):
        raise AlphabetMismatch("the word automaton must read the states of B")
    F = B.functor
    states = tuple((b, w) for b in B.states for w in W.states)
    initial = (B.initial, W.next_state(W.initial, B.initial))

    def table(q):
        b, w = q
        tb = B.step_table(b)
        atoms = tuple((x, W.next_state(w, x)) for x in tb.atoms)
        return StepTable(atoms, key=tb.key if tb.key is not None else tb.templates,
                         masks=tb.masks, make=lambda: tb.templates)

    keys = frozenset(states)
    delta = LazyMap(keys, lambda q: table(q).moves(F))
    omega = LazyMap(keys, lambda q: W.priority[q[1]])
    return Automaton(F, states, initial, delta, omega=omega, nondeterministic=True,
                     table=table, validate=False)


def to_nondeterministic(A, beta=None):
    """An equivalent nondeterministic parity automaton."""
    S = sharp(A, beta)
    return wreath(S, S.dpw)


def size_report(A, Abullet):
    """Sizes and indices, for diagnostics only."""
    return {"states": len(A.states), "index": A.index(),
            "nondet_states": len(Abullet.states),
            "nondet_index": max(Abullet.omega[q] for q in Abullet.states) + 1}


# ------------------------------------------------------- union, intersect

def _tagged(F, tag, v):
    return f_map(F, lambda x: (tag, x), v)


def _tag_moves(F, tag, moves):
    return [[_tagged(F, tag, phi) for phi in m] for m in moves]


def _combine(A1, A2, star):
    for A in (A1, A2):
        _require_parity(A)
    if A1.functor != A2.functor:
        raise FunctorMismatch(f"{show_functor(A1.functor)} vs {show_functor(A2.functor)}")
    F = A1.functor
    top = (0, "*")
    states = [top] + [(1, a) for a in A1.states] + [(2, a) for a in A2.states]
    delta, omega = {top: star(_tag_moves(F, 1, A1.delta[A1.initial]),
                              _tag_moves(F, 2, A2.delta[A2.initial]))}, {top: 0}
    for tag, A in ((1, A1), (2, A2)):
        for a in A.states:
            delta[(tag, a)] = _tag_moves(F, tag, A.delta[a])
            omega[(tag, a)] = A.omega[a]
    return Automaton(F, states, top, delta, omega=omega)


def union_automaton(A1, A2):
    return _combine(A1, A2, lambda d1, d2: d1 + d2)


def intersection_automaton(A1, A2):
    return _combine(A1, A2, lambda d1, d2: [m1 + m2 for m1 in d1 for m2 in d2])


# ------------------------------------------------------------- projection

def project(A):
    """Existential projection of a nondeterministic C x F automaton onto F."""
    _require_parity(A)
    if color_split(A.functor) is None:
        raise ShapeMismatch(f"{show_functor(A.functor)} is not of the form Const * F")
    comp = chromatic_companion(A)
    delta = {a: [m for c in comp.colors for m in comp.delta[(a, c)]] for a in A.states}
    return Automaton(comp.functor, A.states, A.initial, delta, omega=dict(A.omega))


@dataclass
class ScatterResult:
    pointed: PointedCoalgebra
    strategy: EloiseStrategy
    win: set


def scatter(A, P):
    """A bisimilar copy of P on S x A that A accepts with a scattered strategy.

    The returned strategy is defined on the diagonal positions ((s, a), a)
    and relates every state of the copy to at most one automaton state.
    """
    P = as_pointed(P)
    _require_parity(A)
    if not A.nondeterministic:
        raise ValidationError("scatter needs a nondeterministic automaton")
    S, F = P.coalgebra, A.functor
    win, strat = winning_strategy(A, P)
    if (P.point, A.initial) not in win:
        raise NotAccepted("the automaton does not accept the pointed coalgebra")
    sigma = {}
    out = EloiseStrategy()
    new_win = set()
    for s in S.states:
        for a in A.states:
            if (s, a) in win:
                (phi,) = strat.Phi[(s, a)]
                Y = strat.Y[(s, phi)]
                sigma[(s, a)] = lift_witness(F, Y, S.sigma[s], phi)
                out.Phi[((s, a), a)] = (phi,)
                out.Y[((s, a), phi)] = frozenset(((t, b), b) for t, b in Y)
                new_win.add(((s, a), a))
            else:
                sigma[(s, a)] = f_map(F, lambda t, a=a: (t, a), S.sigma[s])
    C = Coalgebra(F, list(sigma), sigma)
    return ScatterResult(PointedCoalgebra(C, (P.point, A.initial)), out, new_win)


def strategy_relation(A, strat, start):
    """Basic positions reachable under a positional strategy, and their union."""
    seen, stack = {start}, [start]
    while stack:
        s, a = stack.pop()
        for phi in strat.Phi[(s, a)]:
            for w in strat.Y[(s, phi)]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
    return seen


def is_scattered(positions):
    owner = {}
    for s, a in positions:
        if owner.setdefault(s, a) != a:
            return False
    return True


def extract_coloring(A, P, strategy=None):
    """A coloring of P under which A accepts it.

    P must be accepted by project(A) with a scattered strategy; pass the
    strategy from scatter, or let it be computed (and checked) here.
    """
    P = as_pointed(P)
    split = color_split(A.functor)
    if split is None:
        raise ShapeMismatch(f"{show_functor(A.functor)} is not of the form Const * F")
    colors = split[0]
    start = (P.point, A.initial)
    if strategy is None:
        win, strategy = winning_strategy(project(A), P)
        if start not in win:
            raise NotStronglyAccepted("the projection does not accept the coalgebra")
    elif start not in {k for k in strategy.Phi}:
        raise NotStronglyAccepted("the strategy is not defined at the start")
    reach = strategy_relation(A, strategy, start)
    if not is_scattered(reach):
        raise NotStronglyAccepted("the winning strategy is not scattered")
    comp = chromatic_companion(A)
    gamma = {s: colors[0] for s in P.coalgebra.states}
    for s, a in reach:
        move = strategy.Phi[(s, a)]
        for c in colors:
            if move in comp.delta[(a, c)]:
                gamma[s] = c
                break
    return gamma


def project_roundtrip(A, P):
    """Forward direction of projection: a colored coalgebra accepted by A."""
    res = scatter(project(A), P)
    gamma = extract_coloring(A, res.pointed, res.strategy)
    return colored_coalgebra(res.pointed, gamma, color_split(A.functor)[0])


# ------------------------------------------------------------ nonemptiness

def nonemptiness_game(A):
    """Positions ('a', a), ('v', phi) owned by E and ('B', base) owned by A."""
    _require_parity(A)
    if not A.nondeterministic:
        raise ValidationError("the nonemptiness game needs a nondeterministic automaton")
    F = A.functor
    owner, prio, edges = {}, {}, {}
    for a in A.states:
        v = ("a", a)
        owner[v], prio[v] = EXISTS, A.omega[a]
        edges[v] = tuple(("v", phi) for (phi,) in A.delta[a])
        for (phi,) in A.delta[a]:
            w = ("v", phi)
            if w not in owner:
                B = ("B", tuple(sorted(base(F, phi))))
                owner[w], prio[w], edges[w] = EXISTS, 0, (B,)
                if B not in owner:
                    owner[B], prio[B] = FORALL, 0
                    edges[B] = tuple(("a", b) for b in B[1])
    return ParityGame(owner, prio, edges)


def _minimal_bases(F, table):
    """First template for each inclusion-minimal base, in template order."""
    if table.masks is not None:
        ms = sorted({int(m) for m in table.masks}, key=lambda m: (bin(m).count("1"), m))
        keep = []
        for m in ms:
            if not any(k & ~m == 0 for k in keep):
                keep.append(m)
        return [(tuple(j for j in range(len(table.atoms)) if m >> j & 1),
                 ("P", tuple(("I", j) for j in range(len(table.atoms)) if m >> j & 1)))
                for m in keep]
    first = {}
    for (phi,) in table.templates:
        first.setdefault(tuple(sorted(base(F, phi))), phi)
    bases = sorted(first, key=len)
    keep = []
    for b in bases:
        if not any(set(k) <= set(b) for k in keep):
            keep.append(b)
    return [(b, first[b]) for b in keep]


def check_nonempty(A, beta=None):
    """A witness pointed coalgebra on states of the automaton, or None.

    Alternating or regular automata are first made nondeterministic with
    parity acceptance. The game is the nonemptiness game with each move
    phi replaced by its base; only inclusion-minimal bases are offered,
    which cannot hurt E since A then has fewer choices.
    """
    if A.acceptance == REGULAR:
        A = wreath(A, A.dpw)
    elif not A.nondeterministic:
        A = to_nondeterministic(A, beta)
    F = A.functor
    owner, prio, edges, choice = {}, {}, {}, {}
    start = ("a", A.initial)
    owner[start], prio[start] = EXISTS, A.omega[A.initial]
    stack = [start]
    while stack:
        v = stack.pop()
        if v[0] == "a":
            q = v[1]
            tab = A.step_table(q)
            succ = []
            for b, phi in _minimal_bases(F, tab):
                B = ("B", frozenset(tab.atoms[i] for i in b))
                choice[(q, B)] = (tab, phi)
                succ.append(B)
            for B in succ:
                if B not in owner:
                    owner[B], prio[B] = FORALL, 0
                    stack.append(B)
        else:
            succ = [("a", b) for b in sorted(v[1], key=repr)]
            for w in succ:
                if w not in owner:
                    owner[w], prio[w] = EXISTS, A.omega[w[1]]
                    stack.append(w)
        edges[v] = tuple(succ)
        check_size(len(owner), "nonemptiness game")
    sol = solve(ParityGame(owner, prio, edges))
    if start not in sol.win_exists:
        return None
    moves = sol.strategy[EXISTS].moves
    sigma, stack = {}, [A.initial]
    while stack:
        q = stack.pop()
        if q in sigma:
            continue
        tab, phi = choice[(q, moves[("a", q)])]
        sigma[q] = f_map(F, lambda i: tab.atoms[i], phi)
        stack.extend(base(F, sigma[q]))
    return PointedCoalgebra(Coalgebra(F, list(sigma), sigma), A.initial)


def witness_ok(A, W):
    """sigma(s) is a transition value of s for every state of the witness."""
    S = W.coalgebra
    return all(((S.sigma[s],) in A.delta[s]) for s in S.states)


def exhaustive_nonempty(A):
    """Search all coalgebras on subsets of A built from transition values."""
    _require_parity(A)
    F = A.functor
    vals = {a: [m[0] for m in A.delta[a] if len(m) == 1] for a in A.states}
    others = [a for a in A.states if a != A.initial]
    for mask in range(2 ** len(others)):
        carrier = [A.initial] + [a for i, a in enumerate(others) if mask >> i & 1]
        cset = set(carrier)
        opts = [[v for v in vals[a] if base(F, v) <= cset] for a in carrier]
        for choice in product(*opts):
            C = Coalgebra(F, carrier, dict(zip(carrier, choice)))
            P = PointedCoalgebra(C, A.initial)
            if accepts(A, P, "explicit"):
                return P
    return None

