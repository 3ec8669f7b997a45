"""One-step cases for every local, fail-propagation and global rule.

Each expected term is written out by hand from the rule's conclusion.
"""

from __future__ import annotations

from dataclasses import dataclass

from flaqr import lang as L
from flaqr import principals as P
from flaqr.lang import Frame, GlobalConfig
from flaqr.principals import TOP, compare_action, prim, select_action

U = L.UNIT_T
E2 = L.enum_type(2)
l1, l2, pc = prim("l1"), prim("l2"), prim("pc")
c, c2 = prim("c"), prim("c2")
v0, v1 = L.enum_value(0, 2), L.enum_value(1, 2)
cmp_t = L.Says(compare_action(l1, l2), E2)
sel_t = L.Says(select_action(l1, l2), E2)


@dataclass
class RuleCase:
    rule: str
    before: L.Expr
    after: L.Expr
    via: str = ""  # context rule wrapping the redex, if any


def _local() -> list[RuleCase]:
    ident = L.Lam("x", E2, pc, L.Pair(L.Var("x"), L.Var("x"), L.ProdT(E2, E2)))
    tl = L.TLam("X", pc, L.Lam("z", L.TVar("X"), pc, L.Var("z")))
    pair = L.Pair(v0, v1, L.ProdT(E2, E2))
    case = lambda s: L.Case(s, "z", L.Inj(1, L.SumT(U, U), L.Var("z")), L.Inj(2, L.SumT(U, U), L.Var("z")), L.SumT(U, U))  # noqa: E731
    return [
        RuleCase("E-App", L.App(ident, v1), L.Pair(v1, v1, L.ProdT(E2, E2))),
        RuleCase("E-TApp", L.TApp(tl, U), L.Lam("z", U, pc, L.Var("z"))),
        RuleCase("E-UnPair", L.ProjE(1, pair), v0),
        RuleCase("E-UnPair", L.ProjE(2, pair), v1),
        RuleCase("E-Sealed", L.UnitM(l1, v0), L.Sealed(l1, v0)),
        RuleCase("E-BindM", L.Bind("y", L.Sealed(l1, v1), L.UnitM(l2, L.Var("y"))), L.UnitM(l2, v1)),
        RuleCase("E-Case", case(L.Inj(1, E2, L.UNIT)), L.Inj(1, L.SumT(U, U), L.UNIT)),
        RuleCase("E-Case", case(L.Inj(2, E2, L.UNIT)), L.Inj(2, L.SumT(U, U), L.UNIT)),
        RuleCase("E-Compare", L.Compare(cmp_t, L.Sealed(l1, v1), L.Sealed(l2, v1)), L.Sealed(compare_action(l1, l2), v1)),
        RuleCase("E-CompareFail", L.Compare(cmp_t, L.Sealed(l1, v0), L.Sealed(l2, v1)), L.Fail(cmp_t)),
        RuleCase(
            "E-CompareFailL",
            L.Compare(cmp_t, L.Fail(L.Says(l1, E2)), L.Sealed(l2, v1)),
            L.Fail(cmp_t),
        ),
        RuleCase(
            "E-CompareFailR",
            L.Compare(cmp_t, L.Sealed(l1, v1), L.Fail(L.Says(l2, E2))),
            L.Fail(cmp_t),
        ),
        RuleCase("E-Select", L.Select(L.Sealed(l1, v0), L.Sealed(l2, v1), sel_t), L.Sealed(select_action(l1, l2), v0)),
        RuleCase(
            "E-Select",
            L.Select(L.Sealed(l1, v0), L.Fail(L.Says(l2, E2)), sel_t),
            L.Sealed(select_action(l1, l2), v0),
        ),
        RuleCase(
            "E-Select",
            L.Select(L.Fail(L.Says(l1, E2)), L.Sealed(l2, v1), sel_t),
            L.Sealed(select_action(l1, l2), v1),
        ),
        RuleCase(
            "E-SelectFail",
            L.Select(L.Fail(L.Says(l1, E2)), L.Fail(L.Says(l2, E2)), sel_t),
            L.Fail(sel_t),
        ),
        RuleCase("E-Sealed", L.Pair(L.UnitM(l1, v0), v1, L.ProdT(L.Says(l1, E2), E2)),
                 L.Pair(L.Sealed(l1, v0), v1, L.ProdT(L.Says(l1, E2), E2)), "E-Step"),
        RuleCase("E-UnPair", L.RetTo(L.ProjE(2, pair), c), L.RetTo(v1, c), "E-RetStep"),
    ]


def _fail() -> list[RuleCase]:
    fun_t = L.FunT(E2, pc, U)
    all_t = L.ForallT("X", pc, L.FunT(L.TVar("X"), pc, L.TVar("X")))
    prod_t = L.ProdT(E2, U)
    ident = L.Lam("x", E2, pc, L.Pair(L.Var("x"), L.UNIT, prod_t))
    case_t = L.SumT(U, U)
    return [
        RuleCase("E-AppFailL", L.App(L.Fail(fun_t), v0), L.Fail(U)),
        RuleCase("E-AppFail", L.App(ident, L.Fail(E2)), L.Pair(L.Fail(E2), L.UNIT, prod_t)),
        RuleCase("E-TAppFail", L.TApp(L.Fail(all_t), E2), L.Fail(L.FunT(E2, pc, E2))),
        RuleCase("E-SealedFail", L.UnitM(l1, L.Fail(E2)), L.Fail(L.Says(l1, E2))),
        RuleCase("E-InjFail", L.Inj(1, L.SumT(E2, U), L.Fail(E2)), L.Fail(L.SumT(E2, U))),
        RuleCase(
            "E-CaseFail",
            L.Case(L.Fail(E2), "z", L.Inj(1, case_t, L.Var("z")), L.Inj(2, case_t, L.Var("z")), case_t),
            L.Fail(case_t),
        ),
        RuleCase("E-PairFailL", L.Pair(L.Fail(E2), L.UNIT, prod_t), L.Fail(prod_t)),
        RuleCase("E-PairFailR", L.Pair(v0, L.Fail(U), prod_t), L.Fail(prod_t)),
        RuleCase("E-ProjFail", L.ProjE(1, L.Fail(prod_t)), L.Fail(E2)),
        RuleCase("E-ProjFail", L.ProjE(2, L.Fail(prod_t)), L.Fail(U)),
        RuleCase(
            "E-BindMFail",
            L.Bind("y", L.Fail(L.Says(l1, E2)), L.UnitM(l2, L.Var("y"))),
            L.UnitM(l2, L.Fail(E2)),
        ),
    ]


LOCAL_CASES = _local()
FAIL_CASES = _fail()


@dataclass
class GlobalCase:
    rule: str
    before: GlobalConfig
    after: GlobalConfig


def _global() -> list[GlobalCase]:
    lab = P.canonical(c2.ia)
    ann = L.Says(lab, E2)
    ctx_pair = lambda hole: L.Pair(hole, L.UNIT, L.ProdT(ann, U))  # noqa: E731
    frame = Frame(ctx_pair(L.Expect(ann)), c)
    return [
        GlobalCase(
            "E-Run",
            GlobalConfig(ctx_pair(L.Run(ann, v1, c2)), c, ()),
            GlobalConfig(L.RetTo(v1, c), c2, (frame,)),
        ),
        GlobalCase(
            "E-RetV",
            GlobalConfig(L.RetTo(v1, c), c2, (frame,)),
            GlobalConfig(ctx_pair(L.Sealed(lab, v1)), c, ()),
        ),
        GlobalCase(
            "E-RetFail",
            GlobalConfig(L.RetTo(L.Fail(E2), c), c2, (frame,)),
            GlobalConfig(ctx_pair(L.Fail(ann)), c, ()),
        ),
        GlobalCase(
            "E-DStep",
            GlobalConfig(ctx_pair(L.UnitM(l1, v0)), TOP, ()),
            GlobalConfig(ctx_pair(L.Sealed(l1, v0)), TOP, ()),
        ),
    ]


GLOBAL_CASES = _global()
