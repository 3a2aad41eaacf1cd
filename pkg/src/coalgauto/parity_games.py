"""Parity graph games solved with Zielonka's recursive algorithm.

Convention: player 'E' wins an infinite play iff the largest priority seen
infinitely often is even; a player who cannot move loses.
"""

from dataclasses import dataclass, field

import networkx as nx

from .errors import EmptyCycle, UndefinedMove

E, A = "E", "A"


def opponent(p):
    return A if p == E else E


def parity_of(p):
    """The priority parity that is good for player p."""
    return 0 if p == E else 1


@dataclass
class ParityGame:
    """Positions are arbitrary hashable keys; edges keep declared order."""
    owner: dict
    priority: dict
    edges: dict

    def __post_init__(self):
        for v in self.owner:
            self.edges.setdefault(v, ())
            if self.owner[v] not in (E, A):
                raise ValueError(f"bad owner for {v!r}: {self.owner[v]!r}")
            if v not in self.priority:
                raise ValueError(f"position {v!r} has no priority")
        for v, succ in self.edges.items():
            if v not in self.owner:
                raise ValueError(f"edges given for unknown position {v!r}")
            for w in succ:
                if w not in self.owner:
                    raise ValueError(f"edge {v!r} -> {w!r} leaves the game")
        self.edges = {v: tuple(s) for v, s in self.edges.items()}

    @property
    def positions(self):
        return list(self.owner)

    def __len__(self):
        return len(self.owner)

    def max_priority(self):
        return max(self.priority.values(), default=0)

    def predecessors(self):
        pred = {v: [] for v in self.owner}
        for v, succ in self.edges.items():
            for w in succ:
                pred[w].append(v)
        return pred

    def dual(self):
        """Swap the players and shift every priority by one."""
        return ParityGame({v: opponent(o) for v, o in self.owner.items()},
                          {v: p + 1 for v, p in self.priority.items()},
                          dict(self.edges))


@dataclass
class PositionalStrategy:
    player: str
    moves: dict = field(default_factory=dict)


@dataclass
class Solution:
    win: dict
    strategy: dict

    @property
    def win_exists(self):
        return self.win[E]

    @property
    def win_forall(self):
        return self.win[A]

    def winner(self, v):
        return E if v in self.win[E] else A


def attractor(game, domain, target, player, pred=None):
    """Positions of domain from which player can force a visit to target.

    Returns (region, moves) where moves gives the player's attracting edges.
    Opponent positions without edges inside the domain are attracted.
    """
    pred = pred or game.predecessors()
    region = set(target) & domain
    moves = {}
    count = {}
    for v in domain:
        if game.owner[v] != player:
            count[v] = sum(1 for w in game.edges[v] if w in domain)
    queue = list(region)
    for v in domain:
        if v not in region and game.owner[v] != player and count[v] == 0:
            region.add(v)
            queue.append(v)
    while queue:
        w = queue.pop()
        for v in pred[w]:
            if v not in domain or v in region:
                continue
            if game.owner[v] == player:
                moves[v] = _first_edge_into(game, v, region, domain)
                region.add(v)
                queue.append(v)
            else:
                count[v] -= 1
                if count[v] == 0:
                    region.add(v)
                    queue.append(v)
    return region, moves


def _first_edge_into(game, v, region, domain):
    for w in game.edges[v]:
        if w in region and w in domain:
            return w
    raise AssertionError("attracted position without an edge into the region")


def solve(game):
    """Winning regions and positional winning strategies of both players."""
    pred = game.predecessors()
    domain = set(game.owner)
    stuck = {p: {v for v in domain if game.owner[v] == p and not game.edges[v]}
             for p in (E, A)}
    win = {E: set(), A: set()}
    strat = {E: {}, A: {}}
    # dead ends first: the player who is stuck loses
    r, m = attractor(game, domain, stuck[E], A, pred)
    win[A] |= r
    strat[A].update(m)
    domain -= r
    r, m = attractor(game, domain, stuck[A], E, pred)
    win[E] |= r
    strat[E].update(m)
    domain -= r
    w, s = _zielonka(game, domain, pred)
    for p in (E, A):
        win[p] |= w[p]
        strat[p].update(s[p])
    strategies = {p: PositionalStrategy(p, {v: strat[p][v] for v in win[p]
                                           if game.owner[v] == p and v in strat[p]})
                  for p in (E, A)}
    return Solution(win, strategies)


def _zielonka(game, domain, pred):
    win = {E: set(), A: set()}
    strat = {E: {}, A: {}}
    if not domain:
        return win, strat
    d = max(game.priority[v] for v in domain)
    p = E if d % 2 == 0 else A
    q = opponent(p)
    top = {v for v in domain if game.priority[v] == d}
    attr, attr_moves = attractor(game, domain, top, p, pred)
    sub_win, sub_strat = _zielonka(game, domain - attr, pred)
    if not sub_win[q]:
        win[p] = set(domain)
        strat[p].update(sub_strat[p])
        strat[p].update(attr_moves)
        for v in top:
            if game.owner[v] == p:
                strat[p][v] = next(w for w in game.edges[v] if w in domain)
        return win, strat
    battr, battr_moves = attractor(game, domain, sub_win[q], q, pred)
    rest_win, rest_strat = _zielonka(game, domain - battr, pred)
    win[p] = rest_win[p]
    strat[p].update(rest_strat[p])
    win[q] = rest_win[q] | battr
    strat[q].update(rest_strat[q])
    strat[q].update(sub_strat[q])
    strat[q].update(battr_moves)
    return win, strat


def good_cycles(nodes, succ, priority, player):
    """True iff every cycle of the graph has a max priority good for player.

    nodes: iterable of graph nodes; succ: node -> iterable of successors
    (restricted to nodes); priority: node -> int.
    """
    nodes = set(nodes)
    bad = 1 - parity_of(player)
    levels = sorted({priority[v] for v in nodes if priority[v] % 2 == bad})
    for q in levels:
        keep = {v for v in nodes if priority[v] <= q}
        g = nx.DiGraph()
        g.add_nodes_from(keep)
        g.add_edges_from((v, w) for v in keep for w in succ(v) if w in keep)
        for comp in nx.strongly_connected_components(g):
            if not any(priority[v] == q for v in comp):
                continue
            if len(comp) > 1:
                return False
            (v,) = comp
            if g.has_edge(v, v):
                return False
    return True


def verify_strategy(game, region, strat):
    """Check that strat wins for its player from every position of region."""
    region = set(region)
    player = strat.player
    if not region:
        return True
    for v in region:
        if game.owner[v] == player:
            if v not in strat.moves:
                raise UndefinedMove(f"no move given at {v!r}")
            if strat.moves[v] not in game.edges[v]:
                raise UndefinedMove(f"illegal move {v!r} -> {strat.moves[v]!r}")
    reach, stack = set(region), list(region)
    while stack:
        v = stack.pop()
        if game.owner[v] == player:
            nxt = [strat.moves.get(v)] if v in strat.moves else []
        else:
            nxt = game.edges[v]
        for w in nxt:
            if w not in reach:
                reach.add(w)
                stack.append(w)
    if not reach <= region:
        return False

    def succ(v):
        if game.owner[v] == player:
            return (strat.moves[v],)
        return game.edges[v]

    return good_cycles(region, succ, game.priority, player)


def lasso_winner(u, v):
    """Winner of the play with priority sequence u v v v ..."""
    if not v:
        raise EmptyCycle("the cycle of a lasso must be non-empty")
    return E if max(v) % 2 == 0 else A
