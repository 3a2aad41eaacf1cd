"""Functor expressions, functor values, relation lifting and bases.

Functor values are tagged tuples so that they hash, compare and sort
structurally:

    ('K', label)               constant
    ('I', atom)                identity leaf
    ('P', (v1, v2, ...))       finite set, sorted and duplicate free
    ('X', left, right)         pair
    ('S', side, v)             injection, side 0 (inl) or 1 (inr)
    ('E', (v_d1, v_d2, ...))   map over the exponent, in exponent order
    ('C', outer)               composite; the outer value has inner values
                               at its identity leaves
    ('D', ((x, p), ...))       finite distribution, rational weights
    ('M', ((x, n), ...))       finite multiset, positive multiplicities

Atoms are arbitrary hashable, mutually comparable Python values; in files
they are plain names.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from itertools import combinations, product
from math import lcm

import networkx as nx

from .errors import (MalformedValue, NonFinitaryFunctor, PartialMap,
                     UniverseMismatch)
from .guard import check_size


# ---------------------------------------------------------------- functors

def _labels(xs, what):
    xs = tuple(xs)
    if not xs:
        raise ValueError(f"{what} must be non-empty")
    if len(set(xs)) != len(xs):
        raise ValueError(f"{what} must be duplicate free")
    return xs


@dataclass(frozen=True)
class Const:
    labels: tuple

    def __post_init__(self):
        object.__setattr__(self, "labels", _labels(self.labels, "Const labels"))

    def __str__(self):
        return show_functor(self)


@dataclass(frozen=True)
class Id:
    def __str__(self):
        return "Id"


@dataclass(frozen=True)
class Pow:
    body: object = Id()

    def __str__(self):
        return show_functor(self)


@dataclass(frozen=True)
class Prod:
    left: object
    right: object

    def __str__(self):
        return show_functor(self)


@dataclass(frozen=True)
class Sum:
    left: object
    right: object

    def __str__(self):
        return show_functor(self)


@dataclass(frozen=True)
class Exp:
    exps: tuple
    body: object

    def __post_init__(self):
        object.__setattr__(self, "exps", _labels(self.exps, "Exp exponents"))

    def __str__(self):
        return show_functor(self)


@dataclass(frozen=True)
class Comp:
    outer: object
    inner: object

    def __str__(self):
        return show_functor(self)


@dataclass(frozen=True)
class Dist:
    def __str__(self):
        return "Dist"


@dataclass(frozen=True)
class Multi:
    def __str__(self):
        return "Multi"


FUNCTOR_TYPES = (Const, Id, Pow, Prod, Sum, Exp, Comp, Dist, Multi)


def is_finitary(F):
    if isinstance(F, (Dist, Multi)):
        return False
    if isinstance(F, (Const, Id)):
        return True
    if isinstance(F, Pow):
        return is_finitary(F.body)
    if isinstance(F, Exp):
        return is_finitary(F.body)
    if isinstance(F, (Prod, Sum)):
        return is_finitary(F.left) and is_finitary(F.right)
    if isinstance(F, Comp):
        return is_finitary(F.outer) and is_finitary(F.inner)
    raise TypeError(f"not a functor expression: {F!r}")


def require_finitary(F):
    if not is_finitary(F):
        raise NonFinitaryFunctor(f"{show_functor(F)} contains Dist or Multi")


def colored(C, F):
    """The functor C x F used for colored coalgebras."""
    return Prod(Const(tuple(C)), F)


def color_split(F):
    """Return (colors, F') if F has the shape Prod(Const C, F'), else None."""
    if isinstance(F, Prod) and isinstance(F.left, Const):
        return F.left.labels, F.right
    return None


def show_functor(F, prec=0):
    # prec: 0 top, 1 inside +, 2 inside *, 3 inside ., 4 before ^
    if isinstance(F, Const):
        return "Const{" + ",".join(map(str, F.labels)) + "}"
    if isinstance(F, (Id, Dist, Multi)):
        return type(F).__name__
    if isinstance(F, Pow):
        return f"Pow({show_functor(F.body)})"
    if isinstance(F, Sum):
        s = f"{show_functor(F.left, 2)} + {show_functor(F.right, 1)}"
        return f"({s})" if prec > 1 else s
    if isinstance(F, Prod):
        s = f"{show_functor(F.left, 3)} * {show_functor(F.right, 2)}"
        return f"({s})" if prec > 2 else s
    if isinstance(F, Comp):
        s = f"{show_functor(F.outer, 4)} . {show_functor(F.inner, 3)}"
        return f"({s})" if prec > 3 else s
    if isinstance(F, Exp):
        return show_functor(F.body, 4) + "^{" + ",".join(map(str, F.exps)) + "}"
    raise TypeError(f"not a functor expression: {F!r}")


# ------------------------------------------------------------------ values

def const(c):
    return ("K", c)


def atom(x):
    return ("I", x)


def pset(vals):
    return ("P", tuple(sorted(set(vals))))


def pair(left, right):
    return ("X", left, right)


def inl(v):
    return ("S", 0, v)


def inr(v):
    return ("S", 1, v)


def expval(F, mapping):
    """Exponent value from a dict keyed by the exponents of F."""
    return ("E", tuple(mapping[d] for d in F.exps))


def comp(v):
    return ("C", v)


def dist(weights):
    items = {}
    for x, p in dict(weights).items():
        p = Fraction(p)
        if p:
            items[x] = p
    return ("D", tuple(sorted(items.items())))


def multi(counts):
    return ("M", tuple(sorted((x, int(n)) for x, n in dict(counts).items() if n)))


def check_value(F, v):
    """Raise MalformedValue unless v is a canonical value of shape F."""
    def bad(msg):
        raise MalformedValue(f"{msg} for functor {show_functor(F)}: {v!r}")

    if not isinstance(v, tuple) or not v:
        bad("not a functor value")
    tag = v[0]
    if isinstance(F, Const):
        if tag != "K" or len(v) != 2 or v[1] not in F.labels:
            bad("expected a constant")
    elif isinstance(F, Id):
        if tag != "I" or len(v) != 2:
            bad("expected an atom")
    elif isinstance(F, Pow):
        if tag != "P" or len(v) != 2 or not isinstance(v[1], tuple):
            bad("expected a set")
        for x in v[1]:
            check_value(F.body, x)
        if any(a >= b for a, b in zip(v[1], v[1][1:])):
            bad("set not in canonical order")
    elif isinstance(F, Prod):
        if tag != "X" or len(v) != 3:
            bad("expected a pair")
        check_value(F.left, v[1])
        check_value(F.right, v[2])
    elif isinstance(F, Sum):
        if tag != "S" or len(v) != 3 or v[1] not in (0, 1):
            bad("expected an injection")
        check_value(F.left if v[1] == 0 else F.right, v[2])
    elif isinstance(F, Exp):
        if tag != "E" or len(v) != 2 or len(v[1]) != len(F.exps):
            bad("expected a total map over the exponent")
        for x in v[1]:
            check_value(F.body, x)
    elif isinstance(F, Comp):
        if tag != "C" or len(v) != 2:
            bad("expected a composite value")
        check_value(F.outer, v[1])
        for x in _leaves(F.outer, v[1]):
            check_value(F.inner, x)
    elif isinstance(F, Dist):
        if tag != "D" or len(v) != 2:
            bad("expected a distribution")
        ws = [p for _, p in v[1]]
        if any(not isinstance(p, Fraction) or p <= 0 for p in ws):
            bad("weights must be positive rationals")
        if sum(ws) != 1:
            bad("weights must sum to 1")
        _check_sorted_support(v, bad)
    elif isinstance(F, Multi):
        if tag != "M" or len(v) != 2:
            bad("expected a multiset")
        if any(not isinstance(n, int) or n <= 0 for _, n in v[1]):
            bad("multiplicities must be positive")
        _check_sorted_support(v, bad)
    else:
        raise TypeError(f"not a functor expression: {F!r}")


def _check_sorted_support(v, bad):
    xs = [x for x, _ in v[1]]
    if any(a >= b for a, b in zip(xs, xs[1:])):
        bad("support not in canonical order")


def _leaves(F, v):
    """Atoms at the identity leaves (or support) of v, with repetition."""
    tag = v[0]
    if tag == "K":
        return []
    if tag == "I":
        return [v[1]]
    if tag == "P":
        return [x for w in v[1] for x in _leaves(F.body, w)]
    if tag == "X":
        return _leaves(F.left, v[1]) + _leaves(F.right, v[2])
    if tag == "S":
        return _leaves(F.left if v[1] == 0 else F.right, v[2])
    if tag == "E":
        return [x for w in v[1] for x in _leaves(F.body, w)]
    if tag == "C":
        return [x for w in _leaves(F.outer, v[1]) for x in _leaves(F.inner, w)]
    if tag in ("D", "M"):
        return [x for x, _ in v[1]]
    raise MalformedValue(f"unknown value tag {tag!r}")


def base(F, v):
    """The atoms occurring in v: the least X with v in F X."""
    if not isinstance(v, tuple) or not v:
        raise MalformedValue(f"not a functor value: {v!r}")
    return frozenset(_leaves(F, v))


def f_map(F, f, v):
    """Apply F to f (a dict or a callable on atoms) at the value v."""
    require_finitary(F)
    if isinstance(f, dict):
        table = f

        def f(x):
            try:
                return table[x]
            except KeyError:
                raise PartialMap(f"map undefined on atom {x!r}") from None
    return _fmap(F, f, v)


_TAGS = {Const: "K", Id: "I", Pow: "P", Prod: "X", Sum: "S", Exp: "E", Comp: "C"}


def _fmap(F, f, v):
    tag = v[0]
    if _TAGS.get(type(F)) != tag:
        raise MalformedValue(f"value {v!r} does not have shape {show_functor(F)}")
    if tag == "K":
        return v
    if tag == "I":
        return ("I", f(v[1]))
    if tag == "P":
        return ("P", tuple(sorted({_fmap(F.body, f, w) for w in v[1]})))
    if tag == "X":
        return ("X", _fmap(F.left, f, v[1]), _fmap(F.right, f, v[2]))
    if tag == "S":
        return ("S", v[1], _fmap(F.left if v[1] == 0 else F.right, f, v[2]))
    if tag == "E":
        return ("E", tuple(_fmap(F.body, f, w) for w in v[1]))
    if tag == "C":
        return ("C", _fmap(F.outer, lambda w: _fmap(F.inner, f, w), v[1]))
    raise MalformedValue(f"cannot map value {v!r}")


# -------------------------------------------------------------- relations

@dataclass(frozen=True)
class Relation:
    """A finite binary relation with optional declared universes."""
    pairs: frozenset
    source: frozenset = None
    target: frozenset = None

    def __post_init__(self):
        object.__setattr__(self, "pairs", frozenset(self.pairs))
        for name in ("source", "target"):
            u = getattr(self, name)
            if u is not None:
                object.__setattr__(self, name, frozenset(u))
        if self.source is not None:
            for x, _ in self.pairs:
                if x not in self.source:
                    raise UniverseMismatch(f"{x!r} is not in the source universe")
        if self.target is not None:
            for _, y in self.pairs:
                if y not in self.target:
                    raise UniverseMismatch(f"{y!r} is not in the target universe")

    def __contains__(self, p):
        return p in self.pairs

    def __iter__(self):
        return iter(sorted(self.pairs))

    def __len__(self):
        return len(self.pairs)

    def image(self, x):
        return frozenset(y for a, y in self.pairs if a == x)

    def domain(self):
        return frozenset(x for x, _ in self.pairs)

    def range(self):
        return frozenset(y for _, y in self.pairs)

    def converse(self):
        return Relation({(y, x) for x, y in self.pairs}, self.target, self.source)

    def compose(self, other):
        """self ; other, i.e. {(x, z) : x self y, y other z}."""
        out = {(x, z) for x, y in self.pairs for y2, z in other.pairs if y == y2}
        return Relation(out, self.source, other.target)

    def restrict(self, src, tgt):
        src, tgt = frozenset(src), frozenset(tgt)
        return Relation({(x, y) for x, y in self.pairs if x in src and y in tgt},
                        src, tgt)


def as_pairs(Z):
    if isinstance(Z, Relation):
        return Z.pairs
    return frozenset(Z)


def all_relations(S, T):
    """Every relation between the finite sets S and T."""
    cells = [(s, t) for s in sorted(S) for t in sorted(T)]
    for r in range(len(cells) + 1):
        for chosen in combinations(cells, r):
            yield frozenset(chosen)


# ---------------------------------------------------------------- lifting

def lift_member(F, Z, phi, psi):
    """Is (phi, psi) in the lifting of Z along F? Compositional rules."""
    check_value(F, phi)
    check_value(F, psi)
    if isinstance(Z, Relation):
        if Z.source is not None and not base(F, phi) <= Z.source:
            raise UniverseMismatch("left value uses atoms outside the source")
        if Z.target is not None and not base(F, psi) <= Z.target:
            raise UniverseMismatch("right value uses atoms outside the target")
    pairs = as_pairs(Z)
    return lift(F, lambda x, y: (x, y) in pairs, phi, psi)


def lift(F, rel, phi, psi):
    """Unchecked lifting of the predicate rel(x, y) on atoms."""
    tag = phi[0]
    if tag != psi[0]:
        return False
    if tag == "K":
        return phi[1] == psi[1]
    if tag == "I":
        return rel(phi[1], psi[1])
    if tag == "P":
        xs, ys = phi[1], psi[1]
        if not xs or not ys:
            return not xs and not ys
        ok = [[lift(F.body, rel, x, y) for y in ys] for x in xs]
        return (all(any(row) for row in ok)
                and all(any(row[j] for row in ok) for j in range(len(ys))))
    if tag == "X":
        return lift(F.left, rel, phi[1], psi[1]) and lift(F.right, rel, phi[2], psi[2])
    if tag == "S":
        return phi[1] == psi[1] and lift(F.left if phi[1] == 0 else F.right,
                                         rel, phi[2], psi[2])
    if tag == "E":
        return all(lift(F.body, rel, x, y) for x, y in zip(phi[1], psi[1]))
    if tag == "C":
        return lift(F.outer, lambda x, y: lift(F.inner, rel, x, y), phi[1], psi[1])
    if tag in ("D", "M"):
        return _coupling(phi[1], psi[1], rel) is not None
    raise MalformedValue(f"unknown value tag {tag!r}")


def _coupling(left, right, rel):
    """A coupling of two weighted supports carried by rel, or None.

    Works for rational weights (distributions) and natural weights
    (multisets); in the latter case integrality of max-flow makes the
    coupling integral.
    """
    total_l = sum(w for _, w in left)
    total_r = sum(w for _, w in right)
    if total_l != total_r:
        return None
    if total_l == 0:
        return []
    scale = reduce(lcm, (Fraction(w).denominator for _, w in left + right), 1)
    g = nx.DiGraph()
    for i, (x, w) in enumerate(left):
        g.add_edge("src", ("l", i), capacity=int(w * scale))
    for j, (y, w) in enumerate(right):
        g.add_edge(("r", j), "snk", capacity=int(w * scale))
    for i, (x, _) in enumerate(left):
        for j, (y, _) in enumerate(right):
            if rel(x, y):
                g.add_edge(("l", i), ("r", j))
    if "src" not in g or "snk" not in g:
        return None
    value, flow = nx.maximum_flow(g, "src", "snk")
    if value != total_l * scale:
        return None
    out = []
    for i, (x, _) in enumerate(left):
        for node, amount in flow[("l", i)].items():
            if amount:
                out.append((i, node[1], Fraction(amount, scale)))
    return out


def lift_witness(F, Z, phi, psi):
    """A value w in F(Z) projecting to phi and psi, or None.

    Atoms of w are the pairs of Z. Used to build coalgebra structure on
    relations (e.g. when scattering a strategy).
    """
    pairs = as_pairs(Z)
    return _witness(F, lambda x, y: ((x, y) if (x, y) in pairs else None), phi, psi)


def _witness(F, leaf, phi, psi):
    tag = phi[0]
    if tag != psi[0]:
        return None
    if tag == "K":
        return phi if phi == psi else None
    if tag == "I":
        w = leaf(phi[1], psi[1])
        return None if w is None else ("I", w)
    if tag == "P":
        xs, ys = phi[1], psi[1]
        found, hit_x, hit_y = [], set(), set()
        for i, x in enumerate(xs):
            for j, y in enumerate(ys):
                w = _witness(F.body, leaf, x, y)
                if w is not None:
                    found.append(w)
                    hit_x.add(i)
                    hit_y.add(j)
        if len(hit_x) != len(xs) or len(hit_y) != len(ys):
            return None
        return ("P", tuple(sorted(set(found))))
    if tag == "X":
        a = _witness(F.left, leaf, phi[1], psi[1])
        b = a and _witness(F.right, leaf, phi[2], psi[2])
        return None if b is None else ("X", a, b)
    if tag == "S":
        if phi[1] != psi[1]:
            return None
        w = _witness(F.left if phi[1] == 0 else F.right, leaf, phi[2], psi[2])
        return None if w is None else ("S", phi[1], w)
    if tag == "E":
        ws = [_witness(F.body, leaf, x, y) for x, y in zip(phi[1], psi[1])]
        return None if any(w is None for w in ws) else ("E", tuple(ws))
    if tag == "C":
        def inner(x, y):
            return _witness(F.inner, leaf, x, y)
        w = _witness(F.outer, inner, phi[1], psi[1])
        return None if w is None else ("C", w)
    if tag in ("D", "M"):
        rel = (lambda x, y: leaf(x, y) is not None)
        cp = _coupling(phi[1], psi[1], rel)
        if cp is None:
            return None
        acc = {}
        for i, j, w in cp:
            key = leaf(phi[1][i][0], psi[1][j][0])
            acc[key] = acc.get(key, 0) + w
        if tag == "D":
            return ("D", tuple(sorted(acc.items())))
        return ("M", tuple(sorted((k, int(n)) for k, n in acc.items())))
    raise MalformedValue(f"unknown value tag {tag!r}")


def min_lift_relations(F, phi, psi):
    """The inclusion-minimal relations Z with (phi, psi) in the lifting of Z.

    By monotonicity, (phi, psi) lifts through Z exactly when Z contains one
    of these. Finitary functors only.
    """
    return _minimize(_minrel(F, phi, psi))


def _minimize(rels):
    rels = sorted(set(rels), key=len)
    out = []
    for r in rels:
        if not any(m <= r for m in out):
            out.append(r)
    return out


def _joins(options):
    # options: list of lists of relations; choose one from each and union
    acc = [frozenset()]
    for opts in options:
        if not opts:
            return []
        acc = _minimize(a | b for a in acc for b in opts)
    return acc


def _minrel(F, phi, psi, leafrel=None):
    tag = phi[0]
    if tag != psi[0]:
        return []
    if tag == "K":
        return [frozenset()] if phi == psi else []
    if tag == "I":
        if leafrel is None:
            return [frozenset({(phi[1], psi[1])})]
        return leafrel(phi[1], psi[1])
    if tag == "P":
        xs, ys = phi[1], psi[1]
        if not xs or not ys:
            return [frozenset()] if not xs and not ys else []
        cell = {(i, j): _minrel(F.body, x, y, leafrel)
                for i, x in enumerate(xs) for j, y in enumerate(ys)}
        cell = {k: v for k, v in cell.items() if v}
        best = []
        # every x and every y needs at least one covering cell; enumerate
        # minimal edge covers of the bipartite cell graph
        edges = sorted(cell)
        for cover in _edge_covers(len(xs), len(ys), edges):
            best.extend(_joins([cell[e] for e in cover]))
        return _minimize(best)
    if tag == "X":
        return _joins([_minrel(F.left, phi[1], psi[1], leafrel),
                       _minrel(F.right, phi[2], psi[2], leafrel)])
    if tag == "S":
        if phi[1] != psi[1]:
            return []
        return _minrel(F.left if phi[1] == 0 else F.right, phi[2], psi[2], leafrel)
    if tag == "E":
        return _joins([_minrel(F.body, x, y, leafrel) for x, y in zip(phi[1], psi[1])])
    if tag == "C":
        def inner(x, y):
            return _minrel(F.inner, x, y, leafrel)
        return _minrel(F.outer, phi[1], psi[1], inner)
    raise NonFinitaryFunctor("minimal lifting relations need a finitary functor")


def _edge_covers(n, m, edges):
    """Inclusion-minimal edge sets covering all n left and m right nodes."""
    by_left = {i: [e for e in edges if e[0] == i] for i in range(n)}
    if any(not v for v in by_left.values()):
        return []
    if any(not [e for e in edges if e[1] == j] for j in range(m)):
        return []
    covers = set()

    def extend(chosen, i):
        if i == n:
            missing = [j for j in range(m) if not any(e[1] == j for e in chosen)]
            for extra in product(*[[e for e in edges if e[1] == j] for j in missing]):
                covers.add(frozenset(chosen) | frozenset(extra))
            return
        for e in by_left[i]:
            extend(chosen + [e], i + 1)

    extend([], 0)
    return _minimize(covers)


# ------------------------------------------------------------ enumeration

def f_size(F, n):
    """|F U| for |U| = n (finitary F)."""
    if isinstance(F, Const):
        return len(F.labels)
    if isinstance(F, Id):
        return n
    if isinstance(F, Pow):
        k = f_size(F.body, n)
        return 2 ** k if k < 4096 else float("inf")
    if isinstance(F, Prod):
        return f_size(F.left, n) * f_size(F.right, n)
    if isinstance(F, Sum):
        return f_size(F.left, n) + f_size(F.right, n)
    if isinstance(F, Exp):
        return f_size(F.body, n) ** len(F.exps)
    if isinstance(F, Comp):
        return f_size(F.outer, f_size(F.inner, n))
    raise NonFinitaryFunctor(f"{show_functor(F)} has infinitely many values")


def enumerate_f(F, U):
    """All values of F over the atoms U, sorted."""
    require_finitary(F)
    U = sorted(set(U))
    check_size(f_size(F, len(U)), f"enumerating {show_functor(F)} over {len(U)} atoms")
    return _enum(F, U)


def _enum(F, U):
    if isinstance(F, Const):
        return [("K", c) for c in sorted(F.labels)]
    if isinstance(F, Id):
        return [("I", u) for u in U]
    if isinstance(F, Pow):
        elems = _enum(F.body, U)
        out = []
        for r in range(len(elems) + 1):
            out.extend(("P", c) for c in combinations(elems, r))
        return sorted(out)
    if isinstance(F, Prod):
        return [("X", a, b) for a in _enum(F.left, U) for b in _enum(F.right, U)]
    if isinstance(F, Sum):
        return ([("S", 0, a) for a in _enum(F.left, U)]
                + [("S", 1, b) for b in _enum(F.right, U)])
    if isinstance(F, Exp):
        vals = _enum(F.body, U)
        return [("E", t) for t in product(vals, repeat=len(F.exps))]
    if isinstance(F, Comp):
        inner = _enum(F.inner, U)
        return sorted(("C", v) for v in _enum(F.outer, inner))
    raise NonFinitaryFunctor(f"{show_functor(F)} has infinitely many values")


# ---------------------------------------------------------- lifting oracle

ORACLE_BRUTE_LIMIT = 4096


def lift_member_oracle(F, Z, phi, psi):
    """Decide (phi, psi) in the lifting of Z by searching F(Z) directly.

    A witness w in F(Z) must satisfy F(pi1)(w) = phi and F(pi2)(w) = psi.
    Since base(F f (w)) = f[base(w)], any witness lives over
    Z restricted to base(phi) x base(psi); the search is confined there.
    Small spaces are enumerated outright; for larger ones a set node is
    decided by its largest candidate (every witness is contained in the
    set of all elements projecting into phi and psi).
    """
    require_finitary(F)
    pairs = as_pairs(Z)
    bl, br = base(F, phi), base(F, psi)
    Zr = sorted(p for p in pairs if p[0] in bl and p[1] in br)
    G, phi2, psi2 = _flatten(F), _flatten_value(F, phi), _flatten_value(F, psi)
    return _oracle(G, Zr, phi2, psi2)


def _proj(F, i, w):
    return _fmap(F, lambda p: p[i], w)


def _oracle(F, Zr, phi, psi):
    if f_size(F, len(Zr)) <= ORACLE_BRUTE_LIMIT:
        return any(_proj(F, 0, w) == phi and _proj(F, 1, w) == psi
                   for w in _enum(F, Zr))
    if isinstance(F, Pow):
        if phi[0] != "P" or psi[0] != "P":
            return False
        want_l, want_r = set(phi[1]), set(psi[1])
        cands = [c for c in _enum_guarded(F.body, Zr)
                 if _proj(F.body, 0, c) in want_l and _proj(F.body, 1, c) in want_r]
        w = ("P", tuple(cands))
        return _proj(F, 0, w) == phi and _proj(F, 1, w) == psi
    if isinstance(F, Prod):
        return (phi[0] == psi[0] == "X"
                and _oracle(F.left, Zr, phi[1], psi[1])
                and _oracle(F.right, Zr, phi[2], psi[2]))
    if isinstance(F, Sum):
        return (phi[0] == psi[0] == "S" and phi[1] == psi[1]
                and _oracle(F.left if phi[1] == 0 else F.right, Zr, phi[2], psi[2]))
    if isinstance(F, Exp):
        return (phi[0] == psi[0] == "E"
                and all(_oracle(F.body, Zr, x, y) for x, y in zip(phi[1], psi[1])))
    raise AssertionError("flattened functor expected")


def _enum_guarded(F, U):
    check_size(f_size(F, len(U)), "oracle search")
    return _enum(F, U)


def _flatten(F):
    """Remove composition nodes by substituting the inner functor for Id."""
    if isinstance(F, (Const, Id)):
        return F
    if isinstance(F, Pow):
        return Pow(_flatten(F.body))
    if isinstance(F, Prod):
        return Prod(_flatten(F.left), _flatten(F.right))
    if isinstance(F, Sum):
        return Sum(_flatten(F.left), _flatten(F.right))
    if isinstance(F, Exp):
        return Exp(F.exps, _flatten(F.body))
    if isinstance(F, Comp):
        return _subst(_flatten(F.outer), _flatten(F.inner))
    raise NonFinitaryFunctor(show_functor(F))


def _subst(F, G):
    if isinstance(F, Id):
        return G
    if isinstance(F, Const):
        return F
    if isinstance(F, Pow):
        return Pow(_subst(F.body, G))
    if isinstance(F, Prod):
        return Prod(_subst(F.left, G), _subst(F.right, G))
    if isinstance(F, Sum):
        return Sum(_subst(F.left, G), _subst(F.right, G))
    if isinstance(F, Exp):
        return Exp(F.exps, _subst(F.body, G))
    raise AssertionError("flattened functor expected")


def _flatten_value(F, v):
    tag = v[0]
    if tag in ("K", "I"):
        return v
    if tag == "P":
        return ("P", tuple(sorted({_flatten_value(F.body, w) for w in v[1]})))
    if tag == "X":
        return ("X", _flatten_value(F.left, v[1]), _flatten_value(F.right, v[2]))
    if tag == "S":
        return ("S", v[1], _flatten_value(F.left if v[1] == 0 else F.right, v[2]))
    if tag == "E":
        return ("E", tuple(_flatten_value(F.body, w) for w in v[1]))
    if tag == "C":
        return _replace_leaves(_flatten_value(F.outer, v[1]),
                               lambda w: _flatten_value(F.inner, w))
    raise NonFinitaryFunctor("flattening needs a finitary functor")


def _replace_leaves(v, g):
    tag = v[0]
    if tag == "K":
        return v
    if tag == "I":
        return g(v[1])
    if tag == "P":
        return ("P", tuple(sorted({_replace_leaves(w, g) for w in v[1]})))
    if tag == "X":
        return ("X", _replace_leaves(v[1], g), _replace_leaves(v[2], g))
    if tag == "S":
        return ("S", v[1], _replace_leaves(v[2], g))
    if tag == "E":
        return ("E", tuple(_replace_leaves(w, g) for w in v[1]))
    raise AssertionError(v)


# --------------------------------------------------------- redistributions

def membership(A):
    """The relation a in X between atoms of A and subsets of A (as tuples)."""
    A = sorted(set(A))
    return Relation({(a, X) for X in set_atoms(A) for a in X},
                    A, set_atoms(A))


def set_atoms(A, max_size=None, include_empty=True):
    """Subsets of A encoded as sorted tuples."""
    A = sorted(set(A))
    top = len(A) if max_size is None else min(max_size, len(A))
    out = []
    for r in range(0 if include_empty else 1, top + 1):
        out.extend(combinations(A, r))
    return out


def _in(a, X):
    return a in X


def is_redistribution(F, Xi, Phi):
    """Is Xi (over set-atoms) a redistribution of the set of values Phi?"""
    check_value(F, Xi)
    for phi in Phi:
        check_value(F, phi)
        if not lift(F, _in, phi, Xi):
            return False
    return True


def enumerate_redistributions(F, Phi, A, base_cap=None):
    """All redistributions of Phi over subsets of A of size at most base_cap.

    The empty set-atom can only occur in a redistribution of the empty
    family, so it is offered only when Phi is empty.
    """
    require_finitary(F)
    Phi = list(Phi)
    atoms = set_atoms(A, base_cap, include_empty=not Phi)
    return [Xi for Xi in enumerate_f(F, atoms)
            if all(lift(F, _in, phi, Xi) for phi in Phi)]


# ---------------------------------------------------------------- printing

def show_value(F, v, leaf=None):
    """Literal syntax for a value; leaf prints the atoms."""
    leaf = leaf or show_atom
    tag = v[0]
    if tag == "K":
        return str(v[1])
    if tag == "I":
        return leaf(v[1])
    if tag == "P":
        return "{" + ",".join(show_value(F.body, w, leaf) for w in v[1]) + "}"
    if tag == "X":
        parts = [show_value(F.left, v[1], leaf)]
        right, rv = F.right, v[2]
        while isinstance(right, Prod) and rv[0] == "X":
            parts.append(show_value(right.left, rv[1], leaf))
            right, rv = right.right, rv[2]
        parts.append(show_value(right, rv, leaf))
        return "(" + ",".join(parts) + ")"
    if tag == "S":
        side = "inl" if v[1] == 0 else "inr"
        return f"{side} " + show_value(F.left if v[1] == 0 else F.right, v[2], leaf)
    if tag == "E":
        return "[" + ",".join(f"{d}->{show_value(F.body, w, leaf)}"
                              for d, w in zip(F.exps, v[1])) + "]"
    if tag == "C":
        return show_value(F.outer, v[1], lambda w: show_value(F.inner, w, leaf))
    if tag == "D":
        return "dist{" + ",".join(f"{leaf(x)}:{p}" for x, p in v[1]) + "}"
    if tag == "M":
        return "multi{" + ",".join(f"{leaf(x)}:{n}" for x, n in v[1]) + "}"
    raise MalformedValue(f"unknown value tag {tag!r}")


def show_atom(x):
    if isinstance(x, tuple):
        return "<" + ",".join(show_atom(y) for y in x) + ">"
    return str(x)
