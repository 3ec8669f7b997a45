"""Blame constraints: DNF formulas over ``l in F`` atoms, updated when a compare fails."""

from __future__ import annotations

from dataclasses import dataclass

from . import lang as L
from . import principals as P
from .interp import FaultPlan, Interpreter, RunResult, StepInfo, Stuck, values_equal
from .interp import FAIL, STUCK, TIMEOUT, VALUE
from .lang import Expr, GlobalConfig
from .principals import Principal, acts_for


@dataclass(frozen=True)
class BlameConstraint:
    """``disjuncts is None`` is ``F = {}``; an empty set of disjuncts is unsatisfiable."""

    disjuncts: frozenset | None = None

    @property
    def is_empty(self) -> bool:
        return self.disjuncts is None

    @property
    def is_false(self) -> bool:
        return self.disjuncts is not None and not self.disjuncts

    def faulty_sets(self) -> list[frozenset]:
        """Possible faulty sets, in a stable order."""
        if self.disjuncts is None:
            return []
        return sorted(self.disjuncts, key=lambda d: sorted(P.show(p) for p in d))

    def __str__(self) -> str:
        if self.disjuncts is None:
            return "{}"
        if not self.disjuncts:
            return "false"
        return " | ".join("{" + ",".join(sorted(P.show(p) for p in d)) + "}" for d in self.faulty_sets())


EMPTY = BlameConstraint(None)
FALSE = BlameConstraint(frozenset())


def atom(p: Principal) -> Principal:
    return P.canonical(p)


def dnf(*conjunctions) -> BlameConstraint:
    """Constraint from iterables of principals, one per disjunct."""
    return BlameConstraint(frozenset(frozenset(atom(p) for p in c) for c in conjunctions))


def init_blame(toleration) -> BlameConstraint:
    """One disjunct per toleration element; its atoms are the element's primitives."""
    toleration = list(toleration)
    if not toleration:
        return FALSE
    return dnf(*[[P.Prim(n) for n in sorted(P.principal_atoms(t))] for t in toleration])


def entails(b: BlameConstraint, l: Principal, ctx=None) -> bool:
    """``b |= l in F``: every possible faulty set holds an atom acting for ``l``.

    Vacuously true for the unsatisfiable constraint.
    """
    if b.disjuncts is None:
        return False
    return all(any(acts_for(ctx, a, l) for a in d) for d in b.disjuncts)


def and_atom(l: Principal, b: BlameConstraint) -> BlameConstraint:
    if b.disjuncts is None:
        return dnf([l])
    return BlameConstraint(frozenset(d | {atom(l)} for d in b.disjuncts))


def disjoin(b1: BlameConstraint, b2: BlameConstraint) -> BlameConstraint:
    if b1.disjuncts is None or b2.disjuncts is None:
        return EMPTY if b1.disjuncts is None and b2.disjuncts is None else (b2 if b1.disjuncts is None else b1)
    return BlameConstraint(b1.disjuncts | b2.disjuncts)


def _same_label(p: Principal, q: Principal) -> bool:
    return P.canonical(p) == P.canonical(q) or P.equiv(P.EMPTY, p, q)


def _same_term(x: Expr, y: Expr) -> bool:
    if L.is_fv(x) and L.is_fv(y):
        return values_equal(x, y)
    return x == y


def lfl(x: Expr, y: Expr, b: BlameConstraint, l1: Principal, l2: Principal, ctx=None) -> BlameConstraint:
    """Blame update for a failed compare of payloads ``x`` and ``y`` sealed at ``l1``, ``l2``."""

    def go(x, y, b, l1, l2):
        if isinstance(x, L.Sealed) and isinstance(y, L.Sealed) and _same_label(x.label, y.label):
            if entails(b, l1, ctx) or entails(b, l2, ctx) or entails(b, x.label, ctx):
                return b
            return go(x.value, y.value, b, x.label, x.label)
        if isinstance(x, L.UnitM) and isinstance(y, L.UnitM) and _same_label(x.label, y.label):
            return go(x.expr, y.expr, b, l1, l2)
        if isinstance(x, L.Inj) and isinstance(y, L.Inj) and x.index == y.index and x.ann == y.ann:
            return go(x.expr, y.expr, b, l1, l2)
        if isinstance(x, L.Pair) and isinstance(y, L.Pair) and x.ann == y.ann:
            return go(x.left, y.left, go(x.right, y.right, b, l1, l2), l1, l2)
        if isinstance(x, L.Run) and isinstance(y, L.Run) and x.ann == y.ann and x.host == y.host:
            return go(x.expr, y.expr, b, l1, l2)
        if isinstance(x, L.Select) and isinstance(y, L.Select) and x.ann == y.ann:
            return go(x.left, y.left, go(x.right, y.right, b, l1, l2), l1, l2)
        if isinstance(x, L.Compare) and isinstance(y, L.Compare) and x.ann == y.ann:
            return go(x.left, y.left, go(x.right, y.right, b, l1, l2), l1, l2)
        if isinstance(x, L.Lam) and isinstance(y, L.Lam) and (x.var, x.ty, x.pc) == (y.var, y.ty, y.pc):
            return go(x.body, y.body, b, l1, l2)
        if isinstance(x, L.TLam) and isinstance(y, L.TLam) and (x.var, x.pc) == (y.var, y.pc):
            return go(x.body, y.body, b, l1, l2)
        if isinstance(x, L.ProjE) and isinstance(y, L.ProjE) and x.index == y.index:
            return go(x.expr, y.expr, b, l1, l2)
        if isinstance(x, L.Bind) and isinstance(y, L.Bind):
            return go(x.expr, y.expr, go(x.body, y.body, b, l1, l2), l1, l2)
        if isinstance(x, L.Case) and isinstance(y, L.Case) and x.var == y.var and x.ann == y.ann:
            inner = go(x.right, y.right, b, l1, l2)
            return go(x.expr, y.expr, go(x.left, y.left, inner, l1, l2), l1, l2)
        if _same_term(x, y):
            return b
        if entails(b, l1, ctx) or entails(b, l2, ctx):
            return b
        return disjoin(and_atom(l1, b), and_atom(l2, b))

    return go(x, y, b, l1, l2)


# ---------------------------------------------------------------------------
# blame-instrumented stepping


class BlameInterpreter:
    """Global stepper threading a blame constraint through C-CompareFail."""

    def __init__(self, plan: FaultPlan | None = None, ctx=None):
        self.interp = Interpreter(plan)
        self.ctx = ctx

    def step(self, g: GlobalConfig, b: BlameConstraint) -> tuple[StepInfo, BlameConstraint]:
        info = self.interp.step(g)
        if info.rule == "E-CompareFail":
            r = info.redex
            b = lfl(r.left.value, r.right.value, b, r.left.label, r.right.label, self.ctx)
            info = StepInfo(info.config, "C-CompareFail", info.redex, info.host)
        return info, b


def blame_step(g: GlobalConfig, b: BlameConstraint, plan: FaultPlan | None = None, ctx=None):
    info, b = BlameInterpreter(plan, ctx).step(g, b)
    return info.config, b


def run_with_blame(
    g: GlobalConfig,
    b: BlameConstraint,
    plan: FaultPlan | None = None,
    fuel: int = 100_000,
    ctx=None,
    trace: bool = False,
) -> tuple[RunResult, BlameConstraint]:
    it = BlameInterpreter(plan, ctx)
    steps = 0
    log = [g] if trace else []
    while not g.terminal:
        if steps >= fuel:
            return RunResult(TIMEOUT, g, steps, log), b
        try:
            info, b = it.step(g, b)
        except Stuck as exc:
            return RunResult(STUCK, g, steps, log, str(exc)), b
        g = info.config
        steps += 1
        if trace:
            log.append(g)
    return RunResult(FAIL if L.is_fail(g.expr) else VALUE, g, steps, log), b


def sound_blame_violations(ctx, b: BlameConstraint, t: L.Type) -> list[frozenset]:
    """Possible faulty sets whose combined reach cannot fail ``t``."""
    from .quorum import reach

    out = []
    for d in b.faulty_sets():
        who = reach(P.conj(*sorted(d, key=P.show)))
        if not L.fails(ctx, who, t):
            out.append(d)
    return out
