"""Alternating and nondeterministic F-automata and their acceptance games.

Delta maps a state to a tuple of moves; a move is a sorted tuple of
functor values over the states. The automaton is nondeterministic when
every move is a singleton.

Two solvers decide acceptance. The explicit one builds the four-layer
game graph and runs Zielonka. The symbolic one keeps only the basic
positions and evaluates the one-round condition "E can pick a move and
relations landing inside X" directly; it is what makes large automata
(the output of alternation removal) tractable.
"""

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .coalgebra import Coalgebra, PointedCoalgebra
from .errors import (AlternatingUnsupported, ColorMismatch, FunctorMismatch,
                     NotWinning, ShapeMismatch, ValidationError)
from .functor_kernel import (Id, Pow, base, check_value, color_split, f_map,
                             lift, min_lift_relations, require_finitary,
                             show_functor)
from .guard import check_size
from .parity_games import A as FORALL
from .parity_games import E as EXISTS
from .parity_games import ParityGame, good_cycles, solve
from .word_automata import StreamAutomaton

PARITY, REGULAR = "parity", "regular"


class StepTable:
    """The moves of one state with atoms replaced by their indices.

    States whose tables share a key have identical templates, so the
    one-round analysis is compiled once per key. masks, when given, are
    the templates of a nondeterministic Pow(Id) automaton as bitmasks.
    """

    def __init__(self, atoms, templates=None, key=None, masks=None, make=None):
        self.atoms = tuple(atoms)
        self._templates = templates
        self._make = make
        self.key = key if key is not None else templates
        self.masks = masks

    @property
    def templates(self):
        if self._templates is None:
            self._templates = self._make()
        return self._templates

    def moves(self, F):
        """The moves over the actual atoms."""
        return tuple(tuple(sorted({f_map(F, lambda i: self.atoms[i], phi) for phi in m}))
                     for m in self.templates)


def canonical_moves(moves):
    return tuple(sorted({tuple(sorted(set(m))) for m in moves}))


@dataclass
class Automaton:
    """An F-automaton with parity (omega) or regular (dpw) acceptance.

    delta may be any mapping; lazily computed automata also pass a
    table function returning the moves of a state up to renaming of
    atoms (see StepTable), and the explicit flag nondeterministic.
    """
    functor: object
    states: tuple
    initial: object
    delta: object
    acceptance: str = PARITY
    omega: object = None
    dpw: StreamAutomaton = None
    nondeterministic: bool = None
    table: object = None
    validate: bool = True

    def __post_init__(self):
        require_finitary(self.functor)
        self.states = tuple(self.states)
        if self.validate:
            self.delta = {a: canonical_moves(self.delta.get(a, ())) for a in self.states}
            S = set(self.states)
            if self.initial not in S:
                raise ValidationError("initial state is not a state")
            for a, moves in self.delta.items():
                for m in moves:
                    for phi in m:
                        check_value(self.functor, phi)
                        if not base(self.functor, phi) <= S:
                            raise ValidationError(f"transition of {a!r} uses unknown states")
            if self.nondeterministic is None:
                self.nondeterministic = all(len(m) == 1 for ms in self.delta.values()
                                            for m in ms)
            elif self.nondeterministic and not all(
                    len(m) == 1 for ms in self.delta.values() for m in ms):
                raise ValidationError("declared nondeterministic but a move is not a singleton")
        if self.acceptance == PARITY:
            if self.omega is None:
                raise ValidationError("parity acceptance needs a priority map")
            if self.validate and set(self.omega) != set(self.states):
                raise ValidationError("priority map must be total on the states")
        elif self.acceptance == REGULAR:
            if self.dpw is None or not self.dpw.deterministic:
                raise ValidationError("regular acceptance needs a deterministic parity automaton")
            if self.validate and not self.nondeterministic:
                raise ValidationError("regular acceptance is only supported for "
                                      "nondeterministic automata")
        else:
            raise ValidationError(f"unknown acceptance {self.acceptance!r}")

    def __hash__(self):
        return id(self)

    def step_table(self, q):
        if self.table is not None:
            return self.table(q)
        return default_table(self.functor, self.delta[q])

    def size(self):
        return len(self.states)

    def index(self):
        if self.acceptance == PARITY:
            return max((self.omega[a] for a in self.states), default=0) + 1
        return self.dpw.index()


def default_table(F, moves):
    atoms = sorted({x for m in moves for phi in m for x in base(F, phi)})
    idx = {x: i for i, x in enumerate(atoms)}
    templates = tuple(tuple(sorted({f_map(F, idx, phi) for phi in m})) for m in moves)
    return StepTable(atoms, templates)


def as_pointed(P):
    if isinstance(P, PointedCoalgebra):
        return P
    raise TypeError("a pointed coalgebra is required")


def _check_functor(A, S):
    if A.functor != S.functor:
        raise FunctorMismatch(f"automaton over {show_functor(A.functor)}, "
                              f"coalgebra over {show_functor(S.functor)}")


# --------------------------------------------------------- explicit game

def _relation_moves(F, sig, phi):
    """Relations Z within base(sig) x base(phi) with (sig, phi) lifting via Z."""
    cells = [(t, b) for t in sorted(base(F, sig)) for b in sorted(base(F, phi))]
    check_size(2 ** len(cells), "relation moves at one position")
    out = []
    for r in range(len(cells) + 1):
        for Z in combinations(cells, r):
            zs = set(Z)
            if lift(F, lambda x, y: (x, y) in zs, sig, phi):
                out.append(Z)
    return out


def table_game(F, sigma, moves_at, prio_at, starts):
    """The acceptance game built from the basic positions reachable from starts.

    moves_at(s, a) gives E's static moves, prio_at(a) the priority.
    Relation moves range over the subsets of base(sigma(s)) x base(phi);
    smaller relations only restrict A, and the lifting of a relation
    equals the lifting of its restriction to the bases, so this loses
    nothing for E.
    """
    owner, prio, edges = {}, {}, {}
    stack = []

    def add(v, who, p):
        if v not in owner:
            owner[v], prio[v] = who, p
            stack.append(v)

    for s, a in starts:
        add(("b", s, a), EXISTS, prio_at(a))
    zcache = {}
    while stack:
        v = stack.pop()
        kind = v[0]
        if kind == "b":
            _, s, a = v
            succ = [("m", s, m) for m in moves_at(s, a)]
            for w in succ:
                add(w, FORALL, 0)
        elif kind == "m":
            _, s, m = v
            succ = [("f", s, phi) for phi in m]
            for w in succ:
                add(w, EXISTS, 0)
        elif kind == "f":
            _, s, phi = v
            key = (sigma[s], phi)
            if key not in zcache:
                zcache[key] = _relation_moves(F, sigma[s], phi)
            succ = [("z", Z) for Z in zcache[key]]
            for w in succ:
                add(w, FORALL, 0)
        else:
            succ = [("b", t, b) for t, b in v[1]]
            for w in succ:
                add(w, EXISTS, prio_at(w[2]))
        edges[v] = tuple(succ)
    return ParityGame(owner, prio, edges)


def acceptance_game(A, S, start=None):
    """The acceptance game of a parity automaton on a coalgebra.

    Positions are ('b', s, a), ('m', s, move), ('f', s, phi) and
    ('z', Z). Only positions reachable from start (default: every basic
    position) are built.
    """
    if isinstance(S, PointedCoalgebra):
        start = (S.point, A.initial) if start is None else start
        S = S.coalgebra
    _check_functor(A, S)
    if A.acceptance != PARITY:
        raise ValidationError("acceptance games need parity acceptance")
    starts = [start] if start is not None else [(s, a) for s in S.states for a in A.states]
    return table_game(A.functor, S.sigma, lambda s, a: A.delta[a],
                      lambda a: A.omega[a], starts)


# --------------------------------------------------------- symbolic game

class _OneStep:
    """Decides, for one basic position (s, q), whether E has a move and
    relations landing inside a set X of basic positions."""

    def __init__(self, F, sig, table, nondet, cache):
        self.atoms = table.atoms
        self.targets = sorted(base(F, sig))
        self.empty_sig = not self.targets
        key = (sig, table.key)
        comp = cache.get(key)
        if comp is None:
            comp = cache[key] = self._compile(F, sig, table, nondet)
        self.mode, self.data = comp

    def _compile(self, F, sig, table, nondet):
        n = len(table.atoms)
        if nondet and F == Pow(Id()) and table.masks is not None:
            return "pow", table.masks
        if nondet and F == Pow(Id()) and len(table.templates) > 64 and n <= 62:
            masks = np.array([sum(1 << i for i in _leaf_ids(phi)) for (phi,) in table.templates],
                             dtype=np.uint64)
            return "pow", masks
        tpos = {t: k for k, t in enumerate(self.targets)}

        def bits(rel):
            return sum(1 << (tpos[t] * n + i) for t, i in rel)

        cache = {}

        def mins(phi):
            if phi not in cache:
                cache[phi] = [bits(r) for r in min_lift_relations(F, sig, phi)]
            return cache[phi]

        if nondet:
            flat = set()
            for (phi,) in table.templates:
                flat.update(mins(phi))
            return "flat", _minimal_masks(flat)
        moves = [[mins(phi) for phi in m] for m in table.templates]
        return "alt", moves

    def holds(self, inX):
        atoms, n = self.atoms, len(self.atoms)
        if self.mode == "pow":
            masks = self.data
            if self.empty_sig:
                return bool((masks == 0).any())
            ok = np.ones(len(masks), dtype=bool)
            union = 0
            for t in self.targets:
                c = sum(1 << i for i, x in enumerate(atoms) if inX((t, x)))
                if c == 0:
                    return False
                union |= c
                ok &= (masks & np.uint64(c)) != 0
            ok &= (masks & np.uint64(~union & ((1 << 63) - 1))) == 0
            return bool(ok.any())
        X = 0
        for k, t in enumerate(self.targets):
            for i, x in enumerate(atoms):
                if inX((t, x)):
                    X |= 1 << (k * n + i)
        if self.mode == "flat":
            return any(m & ~X == 0 for m in self.data)
        return any(all(any(m & ~X == 0 for m in ms) for ms in move)
                   for move in self.data)


def _leaf_ids(phi):
    return [x[1] for x in phi[1]]


def _minimal_masks(masks):
    out = []
    for m in sorted(masks, key=lambda x: bin(x).count("1")):
        if not any(o & ~m == 0 for o in out):
            out.append(m)
    return out


class SymbolicGame:
    """Basic positions of an acceptance game with one-round conditions."""

    def __init__(self, A, P, starts=None):
        S = P.coalgebra if isinstance(P, PointedCoalgebra) else P
        F = A.functor
        if starts is None:
            starts = [(P.point, A.initial)]
        self.prio, self.step, self.succ = {}, {}, {}
        tables, cache = {}, {}
        stack = list(starts)
        seen = set(starts)
        limit = 0
        while stack:
            v = stack.pop()
            s, q = v
            if q not in tables:
                tables[q] = A.step_table(q)
            tab = tables[q]
            self.prio[v] = A.omega[q]
            self.step[v] = _OneStep(F, S.sigma[s], tab, A.nondeterministic, cache)
            out = [(t, x) for t in self.step[v].targets for x in tab.atoms]
            self.succ[v] = out
            for w in out:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
            limit += 1
            if limit % 4096 == 0:
                check_size(limit, "symbolic acceptance game")
        self.positions = set(self.prio)
        self.pred = {v: [] for v in self.positions}
        for v, out in self.succ.items():
            for w in out:
                self.pred[w].append(v)

    def solve(self):
        """Winning region of E, by Zielonka over (domain, escape) subgames."""
        return self._zielonka(frozenset(self.positions), frozenset())

    def _cpre(self, player, v, region, domain, escape):
        if player == EXISTS:
            return self.step[v].holds(lambda w: w in region or w in escape)
        # A forces into region unless E can answer inside the rest
        return not self.step[v].holds(
            lambda w: (w in domain and w not in region) or w in escape)

    def _attractor(self, player, target, domain, escape):
        region = set(target)
        pending = set()
        for v in domain:
            if v not in region and self._cpre(player, v, region, domain, escape):
                pending.add(v)
        queue = list(pending)
        region |= pending
        while queue:
            w = queue.pop()
            for v in self.pred[w]:
                if v in domain and v not in region and self._cpre(player, v, region, domain, escape):
                    region.add(v)
                    queue.append(v)
        return frozenset(region)

    def _zielonka(self, domain, escape):
        if not domain:
            return frozenset()
        # positions decided in one round, so that both players can stay in domain
        lost = self._attractor(FORALL, (), domain, escape)
        if lost:
            return self._zielonka(domain - lost, escape)
        won = self._attractor(EXISTS, (), domain, escape)
        if won:
            return won | self._zielonka(domain - won, escape | won)
        d = max(self.prio[v] for v in domain)
        p = EXISTS if d % 2 == 0 else FORALL
        q = FORALL if p == EXISTS else EXISTS
        top = {v for v in domain if self.prio[v] == d}
        attr = self._attractor(p, top, domain, escape)
        sub = domain - attr
        sub_escape = escape | attr if p == EXISTS else escape
        sub_e = self._zielonka(sub, sub_escape)
        sub_q = sub_e if q == EXISTS else sub - sub_e
        if not sub_q:
            return domain if p == EXISTS else frozenset()
        battr = self._attractor(q, sub_q, domain, escape)
        rest = domain - battr
        rest_escape = escape | battr if q == EXISTS else escape
        rest_e = self._zielonka(rest, rest_escape)
        return rest_e | battr if q == EXISTS else rest_e


def solve_symbolic(A, P, starts=None):
    g = SymbolicGame(A, P, starts)
    return g.solve()


# ------------------------------------------------------------ acceptance

def accepts(A, P, method="auto"):
    """Does A accept the pointed coalgebra P?"""
    P = as_pointed(P)
    _check_functor(A, P.coalgebra)
    if A.acceptance == REGULAR:
        from .constructions import wreath
        return accepts(wreath(A, A.dpw), P, method)
    if method == "auto":
        method = "symbolic" if (A.table is not None or len(A.states) > 6) else "explicit"
    if method == "explicit":
        sol = solve(acceptance_game(A, P))
        return ("b", P.point, A.initial) in sol.win_exists
    if method == "symbolic":
        return (P.point, A.initial) in solve_symbolic(A, P)
    raise ValueError(f"unknown method {method!r}")


def accepts_regular_product(A, P):
    """Acceptance for a regular automaton by a product game.

    The acceptance game of A is run with the state of the deterministic
    word automaton attached to every basic position, which then carries
    the priority. Independent of the wreath product construction.
    """
    P = as_pointed(P)
    _check_functor(A, P.coalgebra)
    if A.acceptance != REGULAR:
        raise ValidationError("regular acceptance expected")
    W = A.dpw
    F = A.functor
    sigma = P.coalgebra.sigma
    owner, prio, edges = {}, {}, {}
    start = ("b", P.point, A.initial, W.next_state(W.initial, A.initial))
    stack = [start]
    owner[start], prio[start] = EXISTS, W.priority[start[3]]
    zcache = {}
    while stack:
        v = stack.pop()
        kind = v[0]
        if kind == "b":
            _, s, a, w = v
            succ = [("m", s, m, w) for m in A.delta[a]]
            who = FORALL
        elif kind == "m":
            _, s, m, w = v
            succ = [("f", s, phi, w) for phi in m]
            who = EXISTS
        elif kind == "f":
            _, s, phi, w = v
            key = (sigma[s], phi)
            if key not in zcache:
                zcache[key] = _relation_moves(F, sigma[s], phi)
            succ = [("z", Z, w) for Z in zcache[key]]
            who = FORALL
        else:
            _, Z, w = v
            succ = [("b", t, b, W.next_state(w, b)) for t, b in Z]
            who = EXISTS
        edges[v] = tuple(succ)
        for x in succ:
            if x not in owner:
                owner[x] = who
                prio[x] = W.priority[x[3]] if x[0] == "b" else 0
                stack.append(x)
    sol = solve(ParityGame(owner, prio, edges))
    return start in sol.win_exists


# -------------------------------------------------------------- chromatic

@dataclass
class ChromaticAutomaton:
    functor: object
    states: tuple
    initial: object
    colors: tuple
    delta: dict
    omega: dict


def chromatic_companion(A):
    """Split the moves of a nondeterministic C x F automaton by color."""
    split = color_split(A.functor)
    if split is None:
        raise ShapeMismatch(f"{show_functor(A.functor)} is not of the form Const * F")
    if not A.nondeterministic:
        raise AlternatingUnsupported("companions are built for nondeterministic automata")
    C, F = split
    delta = {(a, c): [] for a in A.states for c in C}
    for a in A.states:
        for (phi,) in A.delta[a]:
            delta[(a, phi[1][1])].append((phi[2],))
    return ChromaticAutomaton(F, A.states, A.initial, tuple(C),
                              {k: canonical_moves(v) for k, v in delta.items()},
                              dict(A.omega))


def chromatic_accepts(Ac, P):
    """Acceptance of a colored pointed coalgebra by a chromatic automaton."""
    P = as_pointed(P)
    split = color_split(P.functor)
    if split is None:
        raise ColorMismatch("the coalgebra is not colored")
    C, F = split
    if tuple(C) != tuple(Ac.colors) or F != Ac.functor:
        raise ColorMismatch(f"colors {C} over {show_functor(F)} do not match the automaton")
    S = P.coalgebra
    inner = {s: S.sigma[s][2] for s in S.states}
    color = {s: S.sigma[s][1][1] for s in S.states}
    g = table_game(F, inner, lambda s, a: Ac.delta[(a, color[s])],
                   lambda a: Ac.omega[a], [(P.point, Ac.initial)])
    return ("b", P.point, Ac.initial) in solve(g).win_exists


# -------------------------------------------------------------- strategies

@dataclass
class EloiseStrategy:
    """Static part Phi[(s, a)] = move, dynamic part Y[(s, phi)] = relation."""
    Phi: dict = field(default_factory=dict)
    Y: dict = field(default_factory=dict)


@dataclass
class NormalizedStrategy:
    Psi: dict
    Z: dict


def winning_strategy(A, P):
    """Solve the explicit game; return (winning basic positions, strategy)."""
    P = as_pointed(P)
    g = acceptance_game(A, P.coalgebra)
    sol = solve(g)
    strat = sol.strategy[EXISTS].moves
    win = {(v[1], v[2]) for v in sol.win_exists if v[0] == "b"}
    out = EloiseStrategy()
    for v in sol.win_exists:
        if v[0] == "b":
            out.Phi[(v[1], v[2])] = strat[v][2]
        elif v[0] == "f":
            out.Y[(v[1], v[2])] = frozenset(strat[v][1])
    return win, out


def _induced_ok(A, S, win, edges_of):
    """All plays along edges_of stay in win and are won by E."""
    for v in win:
        for w in edges_of(v):
            if w not in win:
                return False
    return good_cycles(win, edges_of, {v: A.omega[v[1]] for v in win}, EXISTS)


def normalize_strategy(A, S, strat, win):
    """Normalize a winning strategy: one relation per basic position."""
    S = S.coalgebra if isinstance(S, PointedCoalgebra) else S
    F = A.functor
    win = set(win)
    for s, a in win:
        m = strat.Phi.get((s, a))
        if m is None or m not in A.delta[a]:
            raise NotWinning(f"no legal move at {(s, a)!r}")
        for phi in m:
            Y = strat.Y.get((s, phi))
            if Y is None or not lift(F, lambda x, y: (x, y) in Y, S.sigma[s], phi):
                raise NotWinning(f"no legal relation at {(s, phi)!r}")

    def old_edges(v):
        s, _ = v
        return [w for phi in strat.Phi[v] for w in strat.Y[(s, phi)]]

    if not _induced_ok(A, S, win, old_edges):
        raise NotWinning("the strategy does not win from every given position")
    Psi, Z = {}, {}
    for s, a in win:
        if () in A.delta[a]:
            Psi[(s, a)] = ()
        else:
            Psi[(s, a)] = strat.Phi[(s, a)]
        Z[(s, a)] = frozenset().union(*[strat.Y[(s, phi)] for phi in Psi[(s, a)]])
    return NormalizedStrategy(Psi, Z)


def verify_normalized(A, S, norm, win):
    S = S.coalgebra if isinstance(S, PointedCoalgebra) else S
    F = A.functor
    for (s, a), m in norm.Psi.items():
        if m not in A.delta[a]:
            return False
        Zs = norm.Z[(s, a)]
        if not all(lift(F, lambda x, y: (x, y) in Zs, S.sigma[s], phi) for phi in m):
            return False
    return _induced_ok(A, S, set(win), lambda v: norm.Z[v])


def strategy_transpose(Z, S_states, A_states):
    """(t, b) in Z[(s, a)] iff (a, b) in zeta[s][t]."""
    zeta = {s: {t: set() for t in S_states} for s in S_states}
    for (s, a), rel in Z.items():
        for t, b in rel:
            zeta[s][t].add((a, b))
    return {s: {t: frozenset(r) for t, r in row.items()} for s, row in zeta.items()}


def strategy_untranspose(zeta, S_states, A_states):
    Z = {(s, a): set() for s in S_states for a in A_states}
    for s, row in zeta.items():
        for t, rel in row.items():
            for a, b in rel:
                Z[(s, a)].add((t, b))
    return {k: frozenset(v) for k, v in Z.items()}


# ------------------------------------------------------------------ misc

def colored_coalgebra(P, gamma, colors):
    """Attach the coloring gamma to an F-coalgebra, giving a C x F one."""
    from .functor_kernel import colored
    S = P.coalgebra
    G = colored(colors, S.functor)
    sigma = {s: ("X", ("K", gamma[s]), S.sigma[s]) for s in S.states}
    return PointedCoalgebra(Coalgebra(G, S.states, sigma), P.point)


def erase_colors(P):
    split = color_split(P.functor)
    if split is None:
        raise ShapeMismatch("the coalgebra is not colored")
    S = P.coalgebra
    sigma = {s: S.sigma[s][2] for s in S.states}
    return PointedCoalgebra(Coalgebra(split[1], S.states, sigma), P.point)
