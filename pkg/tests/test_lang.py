"""Type-level functions: clearance, availability, protection, reads, fails and the C function."""

import random

from flaqr import lang as L
from flaqr import principals as P
from flaqr.fuzz import random_principal
from flaqr.principals import BOT, TOP, prim
from flaqr.syntax import parse_principal as pp
from flaqr.syntax import parse_type as pt

U = L.UNIT_T
a, b, p, q = (prim(n) for n in "abpq")


def eq(x, y):
    return P.equiv(P.EMPTY, x, y)


def test_clearance():
    assert eq(L.clearance(U), BOT)
    assert eq(L.clearance(L.Says(P.canonical(a.ia), L.enum_type(4))), BOT)
    assert eq(L.clearance(L.FunT(U, p, U)), p)


def test_type_avail():
    assert eq(L.type_avail(U), TOP)
    assert eq(L.type_avail(L.Says(p, U)), P.join(p.a, TOP))
    assert eq(L.type_avail(L.ProdT(U, U)), P.join(TOP, TOP))


def test_protects():
    assert L.protects(P.EMPTY, p, U)
    assert L.protects(P.EMPTY, p, L.Says(p, U))
    assert not L.protects(P.EMPTY, TOP.c, L.Says(BOT, U))


def test_reads():
    assert L.reads(P.EMPTY, p, U)
    assert L.reads(P.EMPTY, TOP, L.Says(p, U))
    assert not L.reads(P.EMPTY, a, L.Says(P.conj(a, b), U))


def test_fails_examples():
    lq = pp("a (*) b (+) (b (*) c (+) a (*) c)")
    assert L.fails(P.EMPTY, a.ia, L.Says(lq, L.Says(a, U)))
    assert not L.fails(P.EMPTY, BOT, L.Says(p, U))
    assert L.fails(P.EMPTY, a.ia, L.Says(pp("a (*) b"), U))
    assert not L.fails(P.EMPTY, a.ia, L.Says(b, U))


def test_fails_is_monotone():
    rng = random.Random(8)
    types = [
        L.Says(random_principal(rng, ("a", "b"), depth=2), L.Says(random_principal(rng, ("a", "b"), depth=1), U))
        for _ in range(30)
    ]
    attackers = [random_principal(rng, ("a", "b"), depth=2) for _ in range(20)]
    for t in types:
        for l1 in attackers:
            if not L.fails(P.EMPTY, l1, t):
                continue
            for l2 in attackers:
                if P.acts_for(P.EMPTY, l2, l1):
                    assert L.fails(P.EMPTY, l2, t)


def test_cfun():
    assert L.type_equiv(L.cfun(L.Says(pp("a (+) b"), U)), L.Says(pp("a \\/ b"), U))
    assert L.cfun(U) == U
    got = L.cfun(L.Says(pp("a (*) b"), L.Says(pp("c (+) d"), U)))
    assert L.type_equiv(got, L.Says(pp("a /\\ b"), L.Says(pp("c \\/ d"), U)))


def test_enum_round_trip():
    for n in (1, 2, 4):
        for k in range(n):
            v = L.enum_value(k, n)
            assert L.is_value(v)
            assert L.enum_index(v) == k


def test_subst_avoids_capture():
    body = L.Lam("y", U, BOT, L.Pair(L.Var("x"), L.Var("y"), L.ProdT(U, U)))
    out = L.subst(body, "x", L.Var("y"))
    assert isinstance(out, L.Lam)
    assert out.var != "y"
    assert L.free_vars(out) == {"y"}


def test_values_and_fail_values():
    v = L.Sealed(p, L.UNIT)
    f = L.Fail(L.Says(p, U))
    assert L.is_value(v) and not L.is_value(f)
    assert L.is_fv(f) and L.is_fail(f)
    assert L.is_value(L.Bracket(v, v)) and L.is_fv(L.Bracket(v, f))
    assert not L.is_value(L.UnitM(p, L.UNIT))


def test_type_equiv_alpha():
    t1 = L.ForallT("X", p, L.FunT(L.TVar("X"), p, L.TVar("X")))
    t2 = L.ForallT("Y", p, L.FunT(L.TVar("Y"), p, L.TVar("Y")))
    assert L.type_equiv(t1, t2)
    assert L.type_equiv(pt("(says {a /\\ b} unit)"), pt("(says {b /\\ a} unit)"))
