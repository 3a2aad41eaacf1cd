"""Finite pointed coalgebras and bisimilarity."""

from dataclasses import dataclass

from .errors import FunctorMismatch, ValidationError
from .functor_kernel import (Relation, all_relations, base, check_value, f_map,
                             lift, require_finitary, show_functor, show_value)
from .guard import check_size
from .parity_games import A, E, ParityGame, solve


@dataclass(frozen=True)
class Coalgebra:
    functor: object
    states: tuple
    sigma: dict

    def __post_init__(self):
        require_finitary(self.functor)
        object.__setattr__(self, "states", tuple(sorted(set(self.states))))
        sigma = dict(self.sigma)
        object.__setattr__(self, "sigma", sigma)
        S = set(self.states)
        if set(sigma) != S:
            raise ValidationError("the transition map must be total on the states")
        for s in self.states:
            check_value(self.functor, sigma[s])
            extra = base(self.functor, sigma[s]) - S
            if extra:
                raise ValidationError(f"state {s!r} points outside the carrier: "
                                      f"{sorted(map(str, extra))}")

    def __hash__(self):
        return hash((self.functor, self.states, tuple(self.sigma[s] for s in self.states)))

    def reachable(self, s):
        seen, stack = {s}, [s]
        while stack:
            x = stack.pop()
            for y in base(self.functor, self.sigma[x]):
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return seen

    def describe(self):
        return "\n".join(f"{s} -> {show_value(self.functor, self.sigma[s])}"
                         for s in self.states)


@dataclass(frozen=True)
class PointedCoalgebra:
    coalgebra: Coalgebra
    point: object

    def __post_init__(self):
        if self.point not in set(self.coalgebra.states):
            raise ValidationError(f"point {self.point!r} is not a state")

    @property
    def functor(self):
        return self.coalgebra.functor

    def trimmed(self):
        """The sub-coalgebra reachable from the point."""
        keep = self.coalgebra.reachable(self.point)
        c = Coalgebra(self.functor, keep, {s: self.coalgebra.sigma[s] for s in keep})
        return PointedCoalgebra(c, self.point)


def _same_functor(S1, S2):
    if S1.functor != S2.functor:
        raise FunctorMismatch(f"{show_functor(S1.functor)} vs {show_functor(S2.functor)}")


def largest_bisimulation(S1, S2):
    """Greatest fixpoint of Z -> {(s, a) : (sigma(s), alpha(a)) lifts through Z}."""
    _same_functor(S1, S2)
    F = S1.functor
    Z = {(s, a) for s in S1.states for a in S2.states}
    while True:
        keep = {(s, a) for s, a in Z
                if lift(F, lambda x, y: (x, y) in Z, S1.sigma[s], S2.sigma[a])}
        if keep == Z:
            return Relation(Z, S1.states, S2.states)
        Z = keep


def is_bisimulation(S1, S2, Z):
    F = S1.functor
    pairs = Z.pairs if isinstance(Z, Relation) else frozenset(Z)
    return all(lift(F, lambda x, y: (x, y) in pairs, S1.sigma[s], S2.sigma[a])
               for s, a in pairs)


def are_bisimilar(P1, P2):
    Z = largest_bisimulation(P1.coalgebra, P2.coalgebra)
    return (P1.point, P2.point) in Z


def bisimilarity_game(S1, S2):
    """The bisimilarity game, restricted to positions reachable from basic ones.

    Basic positions ('b', s, a) belong to E; she picks a relation
    Z within S1 x S2 lifting the pair of transitions, reaching ('z', Z),
    where A picks a pair.
    """
    _same_functor(S1, S2)
    F = S1.functor
    cells = len(S1.states) * len(S2.states)
    check_size(2 ** cells, "relations between the carriers")
    rels = list(all_relations(S1.states, S2.states))
    owner, prio, edges = {}, {}, {}
    for s in S1.states:
        for a in S2.states:
            v = ("b", s, a)
            owner[v], prio[v] = E, 0
            moves = []
            for Z in rels:
                if lift(F, lambda x, y: (x, y) in Z, S1.sigma[s], S2.sigma[a]):
                    z = ("z", tuple(sorted(Z)))
                    moves.append(z)
                    if z not in owner:
                        owner[z], prio[z] = A, 0
                        edges[z] = tuple(("b",) + p for p in z[1])
            edges[v] = tuple(moves)
    return ParityGame(owner, prio, edges)


def bisimilar_by_game(S1, S2):
    """The relation read off the winning basic positions of the game."""
    sol = solve(bisimilarity_game(S1, S2))
    return Relation({(v[1], v[2]) for v in sol.win_exists if v[0] == "b"},
                    S1.states, S2.states)


def disjoint_union(S1, S2):
    """Coproduct of two coalgebras with states tagged 0 and 1."""
    _same_functor(S1, S2)
    F = S1.functor
    sigma = {}
    for tag, S in ((0, S1), (1, S2)):
        for s in S.states:
            sigma[(tag, s)] = f_map(F, lambda x, t=tag: (t, x), S.sigma[s])
    return Coalgebra(F, list(sigma), sigma)
