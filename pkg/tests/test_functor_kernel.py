from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coalgauto.errors import (BlowupGuard, MalformedValue, NonFinitaryFunctor,
                              PartialMap, UniverseMismatch)
from coalgauto.functor_kernel import (Comp, Const, Dist, Exp, Id, Multi, Pow, Prod,
                                      Relation, Sum, all_relations, atom, base, const,
                                      dist, enumerate_f, enumerate_redistributions, expval,
                                      f_map, f_size, inl, inr, is_redistribution,
                                      lift_member, lift_member_oracle, lift_witness,
                                      membership, min_lift_relations, multi, pair, pset,
                                      show_functor, show_value)
from coalgauto.guard import cap_override

K = Pow(Id())
C2 = Const(("c1", "c2"))


def s(*xs):
    return pset(atom(x) for x in xs)


# ------------------------------------------------------------------ f_map

def test_fmap_pow_collapses_duplicates():
    assert f_map(K, {"a": "x", "b": "x"}, s("a", "b")) == s("x")


def test_fmap_identity_law():
    assert f_map(Id(), lambda x: x, atom("a")) == atom("a")


def test_fmap_constants_fixed():
    F = Prod(Const(("c",)), Id())
    assert f_map(F, {"a": "b"}, pair(const("c"), atom("a"))) == pair(const("c"), atom("b"))


def test_fmap_errors():
    with pytest.raises(PartialMap):
        f_map(K, {"a": "x"}, s("a", "b"))
    with pytest.raises(MalformedValue):
        f_map(K, {}, const("c"))
    with pytest.raises(NonFinitaryFunctor):
        f_map(Dist(), {}, dist({"a": 1}))


# ---------------------------------------------------------------- lifting

# values frozen from lift_member_oracle
LIFT_CASES = [
    (K, {("x", "a")}, s("x"), s("a"), True),
    (K, {("x", "a")}, s("x"), s("a", "b"), False),
    (K, set(), s(), s(), True),
    (K, set(), s("x"), s("a"), False),
    (K, {("x", "a"), ("x", "b")}, s("x"), s("a", "b"), True),
    (Id(), {("x", "a")}, atom("x"), atom("a"), True),
]


@pytest.mark.parametrize("F,Z,phi,psi,expected", LIFT_CASES)
def test_lift_member_examples(F, Z, phi, psi, expected):
    assert lift_member_oracle(F, Z, phi, psi) == expected
    assert lift_member(F, Z, phi, psi) == expected


def test_lift_colored_binary_tree_diagonal():
    F = Prod(Const(("c",)), Prod(Id(), Id()))
    v = pair(const("c"), pair(atom("a"), atom("a")))
    assert lift_member(F, {("a", "a")}, v, v)


def test_lift_universe_mismatch():
    Z = Relation({("x", "a")}, {"x"}, {"a"})
    with pytest.raises(UniverseMismatch):
        lift_member(K, Z, s("y"), s("a"))


def test_dist_and_multi_coupling():
    Z = {("x", "a"), ("y", "a"), ("y", "b")}
    half = Fraction(1, 2)
    assert lift_member(Dist(), Z, dist({"x": half, "y": half}),
                       dist({"a": Fraction(3, 4), "b": Fraction(1, 4)}))
    assert not lift_member(Dist(), Z, dist({"x": half, "y": half}),
                           dist({"a": Fraction(1, 4), "b": Fraction(3, 4)}))
    assert lift_member(Multi(), Z, multi({"x": 1, "y": 2}), multi({"a": 2, "b": 1}))
    assert not lift_member(Multi(), Z, multi({"x": 2, "y": 1}), multi({"a": 1, "b": 2}))
    w = lift_witness(Dist(), Z, dist({"x": half, "y": half}),
                     dist({"a": Fraction(3, 4), "b": Fraction(1, 4)}))
    assert sum(p for _, p in w[1]) == 1


def test_min_lift_relations_are_minimal_and_complete():
    phi, psi = s("x", "y"), s("a", "b")
    mins = min_lift_relations(K, phi, psi)
    for Z in all_relations("xy", "ab"):
        assert lift_member(K, Z, phi, psi) == any(m <= Z for m in mins)


FUNCTORS = [Id(), C2, K, Prod(Id(), Id()), Prod(C2, Id()), Sum(Id(), Id()),
            Exp(("l", "r"), Id()), Comp(K, K), Pow(Prod(C2, Id()))]


@pytest.mark.parametrize("F", FUNCTORS, ids=show_functor)
def test_lift_matches_oracle_on_two_atoms(F):
    U, V = "xy", "ab"
    vu, vv = enumerate_f(F, U), enumerate_f(F, V)
    for Z in all_relations(U, V):
        for phi, psi in product(vu, vv):
            assert lift_member(F, Z, phi, psi) == lift_member_oracle(F, Z, phi, psi)


@pytest.mark.parametrize("F", FUNCTORS, ids=show_functor)
def test_witness_projects_back(F):
    U = "xy"
    vals = enumerate_f(F, U)
    Z = {("x", "x"), ("x", "y"), ("y", "y")}
    for phi, psi in product(vals, vals):
        w = lift_witness(F, Z, phi, psi)
        if lift_member(F, Z, phi, psi):
            assert f_map(F, lambda p: p[0], w) == phi
            assert f_map(F, lambda p: p[1], w) == psi
        else:
            assert w is None


# ------------------------------------------------------------ enumeration

def test_enumerate_examples():
    assert enumerate_f(K, {"a"}) == [s(), s("a")]
    assert set(enumerate_f(C2, set())) == {const("c1"), const("c2")}
    assert len(enumerate_f(Prod(Id(), Id()), "ab")) == 4


@pytest.mark.parametrize("F", FUNCTORS, ids=show_functor)
@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_enumeration_count_matches_closed_form(F, n):
    U = "abc"[:n]
    if f_size(F, n) > 5000:
        pytest.skip("too large to enumerate here")
    vals = enumerate_f(F, U)
    assert len(vals) == len(set(vals)) == f_size(F, n)


def test_enumeration_guard():
    with cap_override(100):
        with pytest.raises(BlowupGuard):
            enumerate_f(K, "abcdefgh")
    with pytest.raises(NonFinitaryFunctor):
        enumerate_f(Multi(), "a")


# ------------------------------------------------------------------- base

def test_base_examples():
    assert base(Prod(Id(), Id()), pair(atom("a1"), atom("a2"))) == {"a1", "a2"}
    assert base(K, s("a", "b")) == {"a", "b"}
    assert base(Const(("c",)), const("c")) == set()


def test_base_of_composite_and_exp():
    F = Comp(K, Sum(Id(), C2))
    v = ("C", ("P", (("I", inl(atom("a"))), ("I", inr(const("c1"))))))
    assert base(F, v) == {"a"}
    E = Exp(("l", "r"), Id())
    assert base(E, expval(E, {"l": atom("x"), "r": atom("y")})) == {"x", "y"}


# -------------------------------------------------------- redistributions

def test_redistribution_examples():
    assert is_redistribution(K, ("P", (("I", ("a", "b")),)), [s("a"), s("b")])
    assert is_redistribution(K, ("P", (("I", ("b",)),)), [])
    assert not is_redistribution(K, ("P", (("I", ("b",)),)), [s("a")])


def test_enumerate_redistributions_examples():
    assert enumerate_redistributions(Id(), [atom("a")], ["a"]) == [atom(("a",))]
    everything = enumerate_redistributions(K, [], ["a"])
    assert len(everything) == 4  # all subsets of {(), (a,)}
    # every member of xi must meet both sets, so only {{a,b}} survives
    got = enumerate_redistributions(K, [s("a"), s("b")], ["a", "b"], base_cap=2)
    assert got == [("P", (("I", ("a", "b")),))]


def test_redistributions_match_membership_lifting():
    A = ["a", "b"]
    mem = membership(A)
    Phi = [s("a"), s("a", "b")]
    got = set(enumerate_redistributions(K, Phi, A))
    for xi in enumerate_f(K, [x for x in mem.target if x]):
        expected = all(lift_member(K, mem, phi, xi) for phi in Phi)
        assert (xi in got) == expected


# --------------------------------------------------------------- printing

def test_show_value_forms():
    F = Prod(C2, Prod(Id(), Id()))
    assert show_value(F, pair(const("c1"), pair(atom("a"), atom("b")))) == "(c1,a,b)"
    assert show_value(Comp(K, K), ("C", ("P", (("I", s("a")),)))) == "{{a}}"
    assert show_value(Dist(), dist({"a": Fraction(1, 2), "b": Fraction(1, 2)})) \
        == "dist{a:1/2,b:1/2}"


# ------------------------------------------------------ property checks

atoms3 = st.sets(st.sampled_from("xyz"), min_size=0, max_size=3)


@st.composite
def pow_pairs(draw):
    U = draw(atoms3)
    V = draw(atoms3)
    Z = draw(st.sets(st.tuples(st.sampled_from(sorted(U) or ["x"]),
                               st.sampled_from(sorted(V) or ["x"]))))
    Z = {(a, b) for a, b in Z if a in U and b in V}
    phi = pset(atom(x) for x in draw(st.sets(st.sampled_from(sorted(U) or ["x"]))) if x in U)
    psi = pset(atom(x) for x in draw(st.sets(st.sampled_from(sorted(V) or ["x"]))) if x in V)
    return Z, phi, psi


@settings(max_examples=200, deadline=None)
@given(pow_pairs())
def test_converse_property(case):
    Z, phi, psi = case
    conv = {(b, a) for a, b in Z}
    assert lift_member(K, Z, phi, psi) == lift_member(K, conv, psi, phi)


@settings(max_examples=200, deadline=None)
@given(pow_pairs(), st.sets(st.tuples(st.sampled_from("xyz"), st.sampled_from("xyz"))))
def test_monotone_property(case, extra):
    Z, phi, psi = case
    if lift_member(K, Z, phi, psi):
        assert lift_member(K, Z | extra, phi, psi)
