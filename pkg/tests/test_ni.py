"""Brackets: projection, bracketed steps, bracket typing, observations and the NI suites."""

import pytest

from flaqr import lang as L
from flaqr import principals as P
from flaqr.lang import Frame, GlobalConfig
from flaqr.ni import (
    PASS, BracketCtx, bracket_step, bracket_typecheck, observe, project, project_config, step_is_sound,
)
from flaqr.ni_suite import leaky_cases, ci_suite, availability_suite
from flaqr.principals import TOP, compare_action, prim, select_action
from flaqr.typecheck import PROTECTION, FlaqrTypeError, TypingCtx

E2 = L.enum_type(2)
U = L.UNIT_T
a, b, l, l1, l2, pc = (prim(n) for n in ("a", "b", "l", "l1", "l2", "pc"))
v0, v1 = L.enum_value(0, 2), L.enum_value(1, 2)
LOW = P.canonical(P.conj(P.BOT.c, TOP.ia))


def br(x, y):
    return L.Bracket(x, y)


def test_projection():
    e = L.Pair(br(v0, v1), br(L.UNIT, L.UNIT), L.ProdT(E2, U))
    assert project(e, 1) == L.Pair(v0, L.UNIT, L.ProdT(E2, U))
    assert project(e, 2) == L.Pair(v1, L.UNIT, L.ProdT(E2, U))
    with pytest.raises(ValueError):
        project(e, 3)


def test_project_config_resumes_parked_side():
    ann = L.Says(P.canonical(a.ia), E2)
    parked = br(L.Expect(ann), L.Sealed(P.canonical(a.ia), v1))
    g = GlobalConfig(br(L.RetTo(v0, TOP), L.HOLE), a, (Frame(parked, TOP),))
    assert project_config(g, 1) == GlobalConfig(L.RetTo(v0, TOP), a, (Frame(L.Expect(ann), TOP),))
    assert project_config(g, 2) == GlobalConfig(L.Sealed(P.canonical(a.ia), v1), TOP, ())


def _one(e):
    g = GlobalConfig(e, TOP)
    rule, nxt = bracket_step(g)
    assert step_is_sound(g, nxt)
    return rule, nxt.expr


def test_b_fail_rules():
    assert _one(L.UnitM(l, br(v0, L.Fail(E2)))) == ("B-Fail1", br(L.Sealed(l, v0), L.Fail(L.Says(l, E2))))
    assert _one(L.UnitM(l, br(L.Fail(E2), v1))) == ("B-Fail2", br(L.Fail(L.Says(l, E2)), L.Sealed(l, v1)))
    assert _one(L.UnitM(l, br(L.Fail(E2), L.Fail(E2)))) == ("B-Fail", L.Fail(L.Says(l, E2)))


def test_b_bindm():
    body = L.UnitM(l2, L.Var("y"))
    e = L.Bind("y", br(L.Sealed(l1, v0), L.Sealed(l1, v1)), body)
    assert _one(e) == ("B-BindM", br(L.Bind("y", L.Sealed(l1, v0), body), L.Bind("y", L.Sealed(l1, v1), body)))


def test_b_app():
    f1 = L.Lam("x", E2, pc, L.Var("x"))
    f2 = L.Lam("x", E2, pc, v1)
    assert _one(L.App(br(f1, f2), v0)) == ("B-App", br(L.App(f1, v0), L.App(f2, v0)))


def test_app_of_bracketed_argument_substitutes():
    f = L.Lam("x", E2, pc, L.Var("x"))
    assert _one(L.App(f, br(v0, v1))) == ("E-App", br(v0, v1))


def test_b_tapp():
    t1 = L.TLam("X", pc, L.Lam("z", L.TVar("X"), pc, L.Var("z")))
    t2 = L.TLam("X", pc, L.Lam("w", L.TVar("X"), pc, L.Var("w")))
    assert _one(L.TApp(br(t1, t2), U)) == ("B-TApp", br(L.TApp(t1, U), L.TApp(t2, U)))


def test_b_compare_common():
    ann = L.Says(compare_action(l1, l2), E2)
    e = L.Compare(ann, br(L.Sealed(l1, v0), L.Sealed(l1, v1)), L.Sealed(l2, v0))
    assert _one(e) == ("B-CompareCommonLeft", br(L.Sealed(compare_action(l1, l2), v0), L.Fail(ann)))


def test_b_select_common():
    ann = L.Says(select_action(l1, l2), E2)
    e = L.Select(L.Sealed(l1, v0), br(L.Fail(L.Says(l2, E2)), L.Sealed(l2, v1)), ann)
    lab = select_action(l1, l2)
    assert _one(e) == ("B-SelectCommonRight", br(L.Sealed(lab, v0), L.Sealed(lab, v0)))


def test_b_lift_then_step():
    t = L.ProdT(L.Says(l, E2), U)
    e = L.Pair(br(L.UnitM(l, v0), L.UnitM(l, v1)), L.UNIT, t)
    g = GlobalConfig(e, TOP)
    rule, g2 = bracket_step(g)
    assert rule == "B-Lift"
    assert g2.expr == br(L.Pair(L.UnitM(l, v0), L.UNIT, t), L.Pair(L.UnitM(l, v1), L.UNIT, t))
    rule, g3 = bracket_step(g2)
    assert rule == "B-Step"
    assert g3.expr == br(L.Pair(L.Sealed(l, v0), L.UNIT, t), L.Pair(L.UnitM(l, v1), L.UNIT, t))
    assert step_is_sound(g, g2) and step_is_sound(g2, g3)


CTX = TypingCtx.make((), LOW, TOP)


def test_bracket_same_needs_no_protection():
    t = bracket_typecheck(CTX, BracketCtx(b, "c"), br(L.Sealed(a, v0), L.Sealed(a, v0)))
    assert t == L.Says(a, E2)


def test_bracket_values_need_protection():
    e = br(L.Sealed(a, v0), L.Sealed(a, v1))
    assert bracket_typecheck(CTX, BracketCtx(a, "c"), e) == L.Says(a, E2)
    with pytest.raises(FlaqrTypeError) as info:
        bracket_typecheck(CTX, BracketCtx(b, "c"), e)
    assert info.value.kind == PROTECTION


def test_value_against_fail():
    e = br(L.Sealed(a, v0), L.Fail(L.Says(a, E2)))
    # c and i ignore a failing side
    assert bracket_typecheck(CTX, BracketCtx(b, "c"), e) == L.Says(a, E2)
    assert bracket_typecheck(CTX, BracketCtx(b, "i"), e) == L.Says(a, E2)
    # availability sees it and needs protection
    with pytest.raises(FlaqrTypeError):
        bracket_typecheck(CTX, BracketCtx(b, "a"), e)


def test_availability_ignores_value_differences():
    e = br(L.Sealed(a, v0), L.Sealed(a, v1))
    assert bracket_typecheck(CTX, BracketCtx(b, "a"), e) == L.Says(a, E2)


def test_bad_facet():
    with pytest.raises(ValueError):
        BracketCtx(a, "x")


def test_observe():
    sealed = L.Sealed(a, v1)
    assert observe(sealed, P.EMPTY, a, "c") == sealed
    assert observe(sealed, P.EMPTY, b, "c") == L.BLANK
    assert observe(L.Fail(L.Says(a, E2)), P.EMPTY, a, "c") == L.BLANK
    assert observe(L.UNIT, P.EMPTY, b, "i") == L.UNIT
    hidden_pair = L.Pair(sealed, L.UNIT, L.ProdT(L.Says(a, E2), U))
    assert observe(hidden_pair, P.EMPTY, b, "c") == L.BLANK
    assert observe(hidden_pair, P.EMPTY, a, "c") == hidden_pair
    with pytest.raises(ValueError):
        observe(sealed, P.EMPTY, a, "a")


@pytest.mark.parametrize("case", ci_suite(), ids=lambda c: c.name)
def test_confidentiality_integrity_suite(case):
    res = case.check()
    assert res.verdict == case.expect == PASS, res.reason
    assert res.unsound_steps == 0


@pytest.mark.parametrize("case", availability_suite(), ids=lambda c: c.name)
def test_availability_suite(case):
    res = case.check()
    assert res.verdict == case.expect, res.reason
    assert res.unsound_steps == 0


@pytest.mark.parametrize("case", leaky_cases(), ids=lambda c: c.name)
def test_leaky_programs_are_caught(case):
    res = case.check()
    assert res.verdict == case.expect, res.reason
