"""Automata on infinite words, tested through lasso words.

Determinization follows Piterman's compact Safra trees, which yield a
parity condition directly.
"""

from dataclasses import dataclass
from itertools import product

import networkx as nx

from .errors import AlphabetMismatch, EmptyCycle, NondeterministicInput
from .guard import check_size

PARITY, BUCHI = "parity", "buchi"


@dataclass(frozen=True)
class LassoWord:
    prefix: tuple
    cycle: tuple

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(self.prefix))
        object.__setattr__(self, "cycle", tuple(self.cycle))
        if not self.cycle:
            raise EmptyCycle("the cycle of a lasso must be non-empty")

    def letters(self):
        return set(self.prefix) | set(self.cycle)


@dataclass
class StreamAutomaton:
    """A word automaton; delta maps (state, letter) to a set of states.

    acceptance is PARITY with priority a dict on states, or BUCHI with
    accepting a set of states.
    """
    alphabet: tuple
    states: tuple
    initial: object
    delta: dict
    acceptance: str = PARITY
    priority: dict = None
    accepting: frozenset = None
    deterministic: bool = False

    def __post_init__(self):
        self.alphabet = tuple(self.alphabet)
        self.states = tuple(self.states)
        self.delta = {k: frozenset(v) for k, v in self.delta.items()}
        if self.initial not in set(self.states):
            raise ValueError("initial state is not a state")
        if self.acceptance == PARITY:
            if self.priority is None or set(self.priority) != set(self.states):
                raise ValueError("parity acceptance needs a priority for every state")
        elif self.acceptance == BUCHI:
            self.accepting = frozenset(self.accepting or ())
        else:
            raise ValueError(f"unknown acceptance {self.acceptance!r}")
        if self.deterministic:
            for q in self.states:
                for c in self.alphabet:
                    if len(self.delta.get((q, c), ())) != 1:
                        raise NondeterministicInput(
                            f"deterministic automaton has cell ({q!r}, {c!r}) "
                            f"of size {len(self.delta.get((q, c), ()))}")

    def step(self, q, c):
        return self.delta.get((q, c), frozenset())

    def next_state(self, q, c):
        (r,) = self.delta[(q, c)]
        return r

    def index(self):
        if self.acceptance != PARITY:
            return 2
        return max(self.priority.values(), default=0) + 1


def accepts_lasso(w, lasso):
    """Does some run of w on prefix . cycle^omega satisfy the acceptance?"""
    if not lasso.letters() <= set(w.alphabet):
        raise AlphabetMismatch(f"letters {sorted(map(str, lasso.letters() - set(w.alphabet)))} "
                               "are not in the alphabet")
    word = lasso.prefix + lasso.cycle
    n, loop = len(word), len(lasso.prefix)

    def nxt(i):
        return i + 1 if i + 1 < n else loop

    start = (w.initial, 0)
    seen, stack = {start}, [start]
    succ = {}
    while stack:
        q, i = stack.pop()
        out = [(r, nxt(i)) for r in w.step(q, word[i])]
        succ[(q, i)] = out
        for x in out:
            if x not in seen:
                seen.add(x)
                stack.append(x)
    if w.acceptance == BUCHI:
        rank = {x: (1 if x[0] in w.accepting else 0) for x in seen}
        wanted = [1]
    else:
        rank = {x: w.priority[x[0]] for x in seen}
        wanted = sorted({r for r in rank.values() if r % 2 == 0})
    for p in wanted:
        keep = {x for x in seen if rank[x] <= p} if w.acceptance == PARITY else seen
        if _on_cycle(keep, succ, lambda x: rank[x] == p):
            return True
    return False


def _on_cycle(nodes, succ, mark):
    """Is some marked node on a cycle inside nodes? Iterative Tarjan."""
    index, low, onstack, stack = {}, {}, set(), []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(succ.get(root, ())))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        onstack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for u in it:
                if u not in nodes:
                    continue
                if u not in index:
                    index[u] = low[u] = counter
                    counter += 1
                    stack.append(u)
                    onstack.add(u)
                    work.append((u, iter(succ.get(u, ()))))
                    advanced = True
                    break
                if u in onstack:
                    low[v] = min(low[v], index[u])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    u = stack.pop()
                    onstack.discard(u)
                    comp.append(u)
                    if u == v:
                        break
                if len(comp) > 1:
                    if any(mark(u) for u in comp):
                        return True
                elif mark(v) and v in succ.get(v, ()):
                    return True
    return False


def all_lassos(alphabet, max_prefix, max_cycle):
    alphabet = sorted(alphabet)
    for lu in range(max_prefix + 1):
        for u in product(alphabet, repeat=lu):
            for lv in range(1, max_cycle + 1):
                for v in product(alphabet, repeat=lv):
                    yield LassoWord(u, v)


def lasso_equivalent(w1, w2, max_prefix=3, max_cycle=3, alphabet=None):
    """First lasso (up to the given sizes) on which w1 and w2 disagree."""
    for l in all_lassos(alphabet or w1.alphabet, max_prefix, max_cycle):
        if accepts_lasso(w1, l) != accepts_lasso(w2, l):
            return l
    return None


# ----------------------------------------------------------- conversions

def parity_to_buchi(w):
    """Nondeterministic Buchi automaton for the language of a parity one.

    States (q, None) follow the run freely; (q, k) for even k commit to
    priorities at most k from now on and accept when k is seen.
    """
    if w.acceptance != PARITY:
        raise ValueError("parity automaton expected")
    evens = sorted({p for p in w.priority.values() if p % 2 == 0})
    states = [(q, None) for q in w.states]
    states += [(q, k) for k in evens for q in w.states if w.priority[q] <= k]
    delta = {}
    for q in w.states:
        for c in w.alphabet:
            targets = w.step(q, c)
            out = {(r, None) for r in targets}
            out |= {(r, k) for r in targets for k in evens if w.priority[r] <= k}
            delta[((q, None), c)] = out
            for k in evens:
                if w.priority[q] <= k:
                    delta[((q, k), c)] = {(r, k) for r in targets if w.priority[r] <= k}
    accepting = {(q, k) for q, k in states if k is not None and w.priority[q] == k}
    return StreamAutomaton(w.alphabet, states, (w.initial, None), delta,
                           BUCHI, accepting=accepting)


def determinize_buchi(w):
    """Deterministic parity automaton equivalent to a Buchi automaton.

    A state is a compact Safra tree together with the priority of the
    step that produced it. Trees are nested tuples
    (name, label, children) with names compacted to 1..k after each step.
    """
    if w.acceptance != BUCHI:
        raise ValueError("Buchi automaton expected")
    n = max(len(w.states), 1)
    top = 4 * n + 2    # min-parity p becomes max-parity top - p
    init_tree = (1, frozenset({w.initial}), ())
    init = (init_tree, 0)
    states, delta, priority = [init], {}, {init: 0}
    index = {init: 0}
    queue = [init]
    while queue:
        st = queue.pop()
        tree = st[0]
        for c in w.alphabet:
            new_tree, pmin = _safra_step(w, tree, c)
            target = (new_tree, top - pmin)
            if target not in index:
                index[target] = len(states)
                states.append(target)
                priority[target] = target[1]
                check_size(len(states), "determinized state space")
                queue.append(target)
            delta[(st, c)] = {target}
    names = {s: i for i, s in enumerate(states)}
    return StreamAutomaton(w.alphabet, [names[s] for s in states], names[init],
                           {(names[s], c): {names[t] for t in ts}
                            for (s, c), ts in delta.items()},
                           PARITY, priority={names[s]: priority[s] for s in states},
                           deterministic=True)


def _safra_step(w, tree, c):
    """One Safra step. Returns (tree, min-parity priority)."""
    n = max(len(w.states), 1)
    acc = w.accepting
    if tree is None:
        return None, 2 * (2 * n) + 1
    used = _names(tree)
    fresh = iter(range(max(used) + 1, max(used) + 2 + 2 * n))

    def mutable(t):
        name, label, kids = t
        return [name, set(label), [mutable(k) for k in kids], False]

    root = mutable(tree)

    # 1. spawn children for accepting states
    def spawn(node):
        for k in node[2]:
            spawn(k)
        hit = node[1] & acc
        if hit:
            node[2].append([next(fresh), set(hit), [], False])
    spawn(root)

    # 2. move every label
    def move(node):
        node[1] = {r for q in node[1] for r in w.step(q, c)}
        for k in node[2]:
            move(k)
    move(root)

    # 3. horizontal merge: older siblings keep shared states
    def horizontal(node):
        seen = set()
        for k in node[2]:
            _remove_states(k, seen)
            seen |= k[1]
        for k in node[2]:
            horizontal(k)
    horizontal(root)

    removed = []

    # 4. drop empty nodes
    def prune(node):
        keep = []
        for k in node[2]:
            if k[1]:
                keep.append(k)
                prune(k)
            else:
                removed.extend(_all_names(k))
        node[2] = keep
    if not root[1]:
        removed.extend(_all_names(root))
        return None, 2 * min(removed) - 1
    prune(root)

    # 5. vertical merge: a node covered by its children turns green
    green = []

    def vertical(node):
        union = set()
        for k in node[2]:
            union |= k[1]
        if node[2] and union == node[1]:
            for k in node[2]:
                removed.extend(_all_names(k))
            node[2] = []
            green.append(node[0])
        else:
            for k in node[2]:
                vertical(k)
    vertical(root)

    r = min(removed, default=None)
    g = min(green, default=None)
    if g is not None and (r is None or g < r):
        pmin = 2 * g
    elif r is not None:
        pmin = 2 * r - 1
    else:
        pmin = 2 * (2 * n) + 1

    # compact names preserving their order
    live = sorted(_all_names(root))
    rename = {old: i + 1 for i, old in enumerate(live)}

    def freeze(node):
        return (rename[node[0]], frozenset(node[1]), tuple(freeze(k) for k in node[2]))
    return freeze(root), pmin


def _remove_states(node, states):
    node[1] -= states
    for k in node[2]:
        _remove_states(k, states)


def _all_names(node):
    out = [node[0]]
    for k in node[2]:
        out.extend(_all_names(k))
    return out


def _names(tree):
    name, _, kids = tree
    out = [name]
    for k in kids:
        out.extend(_names(k))
    return out


def shift_priorities(w, by=1):
    """Complement a deterministic parity automaton."""
    if not w.deterministic:
        raise NondeterministicInput("complementation by shifting needs a deterministic automaton")
    if w.acceptance != PARITY:
        raise ValueError("parity automaton expected")
    return StreamAutomaton(w.alphabet, w.states, w.initial, dict(w.delta), PARITY,
                           priority={q: p + by for q, p in w.priority.items()},
                           deterministic=True)


def normalize_priorities(w):
    """Compress priorities to a contiguous range starting at 0 or 1.

    Keeps parity and relative order, so the language is unchanged.
    """
    used = sorted(set(w.priority.values()))
    out, cur, prev = {}, None, None
    for p in used:
        if cur is None:
            cur = p % 2
        elif p % 2 != prev % 2:
            cur += 1
        out[p] = cur
        prev = p
    return StreamAutomaton(w.alphabet, w.states, w.initial, dict(w.delta), PARITY,
                           priority={q: out[p] for q, p in w.priority.items()},
                           deterministic=w.deterministic)


# ------------------------------------------------------------- bad traces

def relation_letters(A):
    """All binary relations over A as canonical sorted tuples of pairs."""
    cells = [(a, b) for a in sorted(A) for b in sorted(A)]
    out = []
    for mask in range(2 ** len(cells)):
        out.append(tuple(c for i, c in enumerate(cells) if mask >> i & 1))
    return sorted(out)


def bad_trace_automaton(A_states, omega, initial, alphabet=None):
    """Nondeterministic parity automaton for words with a bad trace from initial."""
    A_states = sorted(A_states)
    alphabet = relation_letters(A_states) if alphabet is None else list(alphabet)
    delta = {}
    for R in alphabet:
        for a in A_states:
            delta[(a, R)] = {b for x, b in R if x == a}
    return StreamAutomaton(alphabet, A_states, initial, delta, PARITY,
                           priority={a: omega[a] + 1 for a in A_states})


def nbt_dpw(A_states, initial, omega, alphabet=None, stages=False):
    """Deterministic parity automaton for words without a bad trace.

    With stages=True also returns the intermediate automata.
    """
    b1 = bad_trace_automaton(A_states, omega, initial, alphabet)
    b2 = parity_to_buchi(b1)
    b3 = determinize_buchi(b2)
    b4 = shift_priorities(b3)
    if stages:
        return b4, [b1, b2, b3, b4]
    return b4


def has_bad_trace_oracle(lasso, omega, initial=None):
    """Does the relation lasso contain an infinite trace with odd max priority?

    Traces start at initial (or anywhere when initial is None) and follow
    a_i R_i a_(i+1) through the letters. Decided on the layered trace graph
    of the lasso with networkx.
    """
    word = list(lasso.prefix) + list(lasso.cycle)
    n, loop = len(word), len(lasso.prefix)
    g = nx.DiGraph()
    for i, R in enumerate(word):
        j = i + 1 if i + 1 < n else loop
        for a, b in R:
            g.add_edge((a, i), (b, j))
    starts = ([(initial, 0)] if initial is not None
              else [(a, 0) for a in omega])
    reach = set()
    for s in starts:
        if s in g:
            reach |= {s} | nx.descendants(g, s)
    h = g.subgraph(reach)
    for comp in nx.strongly_connected_components(h):
        sub = h.subgraph(comp)
        if len(comp) == 1 and not sub.number_of_edges():
            continue
        # a cycle inside comp through the top odd priority must stay below it
        for p in sorted({omega[a] for a, _ in comp if omega[a] % 2 == 1}):
            low = sub.subgraph([x for x in comp if omega[x[0]] <= p])
            for c2 in nx.strongly_connected_components(low):
                if any(omega[x[0]] == p for x in c2):
                    if len(c2) > 1 or low.has_edge(next(iter(c2)), next(iter(c2))):
                        return True
    return False
