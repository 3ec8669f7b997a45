"""Type checking for FLAQR expressions, configuration stacks and configurations.

Checking is syntax directed: one rule per constructor, every annotation
required. Each rule also demands that the executing host acts for the pc.
Failures raise :class:`FlaqrTypeError` naming the rule and the violated
premise.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

from . import lang as L
from . import principals as P
from .lang import Type
from .principals import BOT, TOP, DelegationContext, Principal, acts_for, flows_to

# kinds of violated premises
HOST_AUTHORITY = "host-authority"
PC_FLOW = "pc-flow"
CLEARANCE = "clearance"
READS = "reads"
PROTECTION = "protection"
ANNOTATION = "annotation"
UNBOUND = "unbound"
SHAPE = "shape"
AVAILABILITY = "availability"
WELL_FORMED = "well-formedness"


class FlaqrTypeError(Exception):
    def __init__(self, rule: str, kind: str, detail: str, principals: tuple = ()):
        self.rule = rule
        self.kind = kind
        self.detail = detail
        self.principals = principals
        shown = ""
        if principals:
            shown = " [" + ", ".join(str(p) for p in principals) + "]"
        super().__init__(f"{rule}: {kind} violation: {detail}{shown}")


@dataclass(frozen=True)
class TypingCtx:
    """``Pi; Gamma; pc; c``."""

    delegations: DelegationContext = P.EMPTY
    vars: tuple = ()  # (name, Type) pairs, innermost last
    pc: Principal = BOT
    host: Principal = TOP
    type_vars: frozenset = frozenset()
    bracket: object = None  # attacker context enabling the bracket rules

    @staticmethod
    def make(delegations=(), pc: Principal = BOT, host: Principal = TOP) -> "TypingCtx":
        return TypingCtx(P.as_ctx(delegations), (), pc, host, frozenset())

    def lookup(self, x: str) -> Type | None:
        for name, t in reversed(self.vars):
            if name == x:
                return t
        return None

    def bind(self, x: str, t: Type) -> "TypingCtx":
        return replace(self, vars=self.vars + ((x, t),))

    def at(self, pc: Principal, host: Principal) -> "TypingCtx":
        return replace(self, pc=pc, host=host)


@dataclass(frozen=True)
class StackType:
    """``[hole]result``."""

    hole: Type
    result: Type


def _teq(ctx: TypingCtx, a: Type, b: Type) -> bool:
    return L.type_equiv(a, b)


def _need(ok: bool, rule: str, kind: str, detail: str, *ps) -> None:
    if not ok:
        raise FlaqrTypeError(rule, kind, detail, ps)


def _wf(ctx: TypingCtx, t: Type, rule: str) -> None:
    free = L.type_free_vars(t) - ctx.type_vars
    _need(not free, rule, WELL_FORMED, f"unbound type variable(s) {sorted(free)} in {t}")


def typecheck_expr(ctx: TypingCtx, e: L.Expr) -> Type:
    """``Pi; Gamma; pc; c |- e : t``."""
    return _check(ctx, e)


@lru_cache(maxsize=100_000)
def _check(ctx: TypingCtx, e: L.Expr) -> Type:
    rule = type(e).__name__
    Pi, pc, c = ctx.delegations, ctx.pc, ctx.host
    _need(acts_for(Pi, c, pc), rule, HOST_AUTHORITY, "host does not act for pc", c, pc)

    if isinstance(e, L.Var):
        t = ctx.lookup(e.name)
        _need(t is not None, "Var", UNBOUND, f"unbound variable {e.name!r}")
        return t
    if isinstance(e, L.Unit):
        return L.UNIT_T
    if isinstance(e, (L.Fail, L.Expect)):
        _wf(ctx, e.ann, rule)
        return e.ann

    if isinstance(e, L.Lam):
        _wf(ctx, e.ty, "Lam")
        inner = ctx.bind(e.var, e.ty).at(e.pc, TOP)
        ret = _check(inner, e.body)
        ft = L.FunT(e.ty, e.pc, ret)
        u = L.clearance(ft)
        _check(inner.at(e.pc, u), e.body)
        _need(acts_for(Pi, c, u), "Lam", CLEARANCE, "host does not act for the clearance of the function", c, u)
        return ft

    if isinstance(e, L.TLam):
        inner = replace(ctx, type_vars=ctx.type_vars | {e.var}).at(e.pc, TOP)
        body = _check(inner, e.body)
        u = L.clearance(body)
        _check(inner.at(e.pc, u), e.body)
        _need(acts_for(Pi, c, u), "TLam", CLEARANCE, "host does not act for the clearance of the body", c, u)
        return L.ForallT(e.var, e.pc, body)

    if isinstance(e, L.App):
        ft = _check(ctx, e.fn)
        _need(isinstance(ft, L.FunT), "App", SHAPE, f"applying a non-function of type {ft}")
        at = _check(ctx, e.arg)
        _need(_teq(ctx, at, ft.arg), "App", ANNOTATION, f"argument has type {at}, expected {ft.arg}")
        _need(flows_to(Pi, pc, ft.pc), "App", PC_FLOW, "pc does not flow to the function's pc", pc, ft.pc)
        return ft.ret

    if isinstance(e, L.TApp):
        ft = _check(ctx, e.fn)
        _need(isinstance(ft, L.ForallT), "TApp", SHAPE, f"type-applying a non-polymorphic term of type {ft}")
        _wf(ctx, e.ty, "TApp")
        _need(flows_to(Pi, pc, ft.pc), "TApp", PC_FLOW, "pc does not flow to the abstraction's pc", pc, ft.pc)
        return L.subst_type(ft.body, ft.var, e.ty)

    if isinstance(e, L.Pair):
        t1, t2 = _check(ctx, e.left), _check(ctx, e.right)
        _wf(ctx, e.ann, "Pair")
        _need(_teq(ctx, L.ProdT(t1, t2), e.ann), "Pair", ANNOTATION, f"pair of {t1} and {t2} annotated {e.ann}")
        return e.ann

    if isinstance(e, L.ProjE):
        t = _check(ctx, e.expr)
        _need(isinstance(t, L.ProdT), "UnPair", SHAPE, f"projecting from non-product {t}")
        return t.left if e.index == 1 else t.right

    if isinstance(e, L.Inj):
        t = _check(ctx, e.expr)
        _wf(ctx, e.ann, "Inj")
        _need(isinstance(e.ann, L.SumT), "Inj", ANNOTATION, f"injection annotated with non-sum {e.ann}")
        want = e.ann.left if e.index == 1 else e.ann.right
        _need(_teq(ctx, t, want), "Inj", ANNOTATION, f"injected {t}, annotation expects {want}")
        return e.ann

    if isinstance(e, L.Case):
        st = _check(ctx, e.expr)
        _need(isinstance(st, L.SumT), "Case", SHAPE, f"case on non-sum {st}")
        res = e.ann
        _wf(ctx, res, "Case")
        _need(L.protects(Pi, pc, res), "Case", PROTECTION, f"pc does not protect the result type {res}", pc)
        ra = L.type_avail(res).a
        for part in (st.left, st.right):
            pa = L.type_avail(part).a
            _need(acts_for(Pi, pa, ra), "Case", AVAILABILITY, "branch availability below result availability", pa, ra)
        for part, branch in ((st.left, e.left), (st.right, e.right)):
            bt = _check(ctx.bind(e.var, part), branch)
            _need(_teq(ctx, bt, res), "Case", ANNOTATION, f"branch has type {bt}, annotation {res}")
        return res

    if isinstance(e, L.UnitM):
        t = _check(ctx, e.expr)
        _need(flows_to(Pi, pc, e.label), "UnitM", PC_FLOW, "pc does not flow to the label", pc, e.label)
        return L.Says(e.label, t)

    if isinstance(e, L.Sealed):
        return L.Says(e.label, _check(ctx, e.value))

    if isinstance(e, L.Bind):
        st = _check(ctx, e.expr)
        _need(isinstance(st, L.Says), "BindM", SHAPE, f"binding from non-says type {st}")
        pc2 = P.join(st.label, pc)
        t = _check(ctx.bind(e.var, st.body).at(pc2, c), e.body)
        _need(L.protects(Pi, pc2, t), "BindM", PROTECTION, f"label joined with pc does not protect {t}", pc2)
        return t

    if isinstance(e, L.Run):
        ann = e.ann
        _wf(ctx, ann, "Run")
        _need(isinstance(ann, L.Says), "Run", ANNOTATION, f"run annotated with non-says type {ann}")
        pc2 = L.remote_pc(e.host, ann.label)
        _need(
            P.equiv(P.EMPTY, ann.label, pc2.ia),
            "Run", ANNOTATION, "run label must be an integrity-availability label", ann.label,
        )
        t = _check(ctx.at(pc2, e.host), e.expr)
        _need(_teq(ctx, t, ann.body), "Run", ANNOTATION, f"remote term has type {t}, annotation {ann.body}")
        _need(flows_to(Pi, pc, pc2), "Run", PC_FLOW, "pc does not flow to the remote pc", pc, pc2)
        u = L.clearance(t)
        _need(acts_for(Pi, c, u), "Run", CLEARANCE, "caller does not act for the clearance of the result", c, u)
        return ann

    if isinstance(e, L.RetTo):
        t = _check(ctx, e.expr)
        u = L.clearance(t)
        _need(acts_for(Pi, e.host, u), "Ret", CLEARANCE, "caller does not act for the clearance of the result", e.host, u)
        return L.Says(P.canonical(pc.ia), t)

    if isinstance(e, (L.Compare, L.Select)):
        name = type(e).__name__
        t1, t2 = _check(ctx, e.left), _check(ctx, e.right)
        for t in (t1, t2):
            _need(isinstance(t, L.Says), name, SHAPE, f"operand of non-says type {t}")
        _need(_teq(ctx, t1.body, t2.body), name, ANNOTATION, f"operands carry {t1.body} and {t2.body}")
        if isinstance(e, L.Compare):
            for t in (t1, t2):
                _need(L.reads(Pi, c, t), "Compare", READS, f"host cannot read {t}", c)
            label = P.compare_action(t1.label, t2.label)
        else:
            label = P.select_action(t1.label, t2.label)
        want = L.Says(label, t1.body)
        _wf(ctx, e.ann, name)
        _need(_teq(ctx, e.ann, want), name, ANNOTATION, f"annotation {e.ann}, operands give {want}")
        return e.ann

    if isinstance(e, (L.Bracket, L.Hole)):
        _need(ctx.bracket is not None, rule, SHAPE, "bracketed terms need an attacker context")
        from .ni import check_bracket

        return check_bracket(ctx, e, _check)
    raise FlaqrTypeError(rule, SHAPE, f"unknown expression {e!r}")


def well_typed(ctx: TypingCtx, e: L.Expr) -> bool:
    try:
        _check(ctx, e)
        return True
    except FlaqrTypeError:
        return False


# ---------------------------------------------------------------------------
# stacks and configurations


def expect_labels(frames) -> list[Principal]:
    out = []
    for f in frames:
        for x in L.walk(f.expr):
            if isinstance(x, L.Expect) and isinstance(x.ann, L.Says):
                out.append(x.ann.label)
    return out


def _pc_candidates(ctx: TypingCtx, host: Principal, frames) -> list[Principal]:
    """pcs to try for a stack element at ``host``: the global pc or a remote pc."""
    cands = [ctx.pc]
    for lbl in expect_labels(frames):
        cands.append(L.remote_pc(host, lbl))
    out = []
    for p in cands:
        if p not in out:
            out.append(p)
    return out


def _types_at_some_pc(ctx: TypingCtx, e: L.Expr, host: Principal, frames, rule: str) -> list[Type]:
    """Types of ``e`` at each admissible pc; raises the last error when there are none."""
    Pi = ctx.delegations
    last: FlaqrTypeError | None = None
    out: list[Type] = []
    for pc2 in _pc_candidates(ctx, host, frames):
        if not flows_to(Pi, ctx.pc, pc2) or not acts_for(Pi, host, pc2):
            continue
        try:
            t = _check(ctx.at(pc2, host), e)
        except FlaqrTypeError as err:
            last = err
            continue
        if t not in out:
            out.append(t)
    if out:
        return out
    if last is not None:
        raise last
    raise FlaqrTypeError(rule, PC_FLOW, "no pc for this element satisfies the pc chain", (ctx.pc, host))


def _stack_from(ctx: TypingCtx, frames: tuple, k: int, cur: Type) -> Type:
    if k == len(frames):
        return cur
    f = frames[k]
    expects = [x for x in L.walk(f.expr) if isinstance(x, L.Expect)]
    _need(len(expects) == 1, "Tail", SHAPE, "a frame must contain exactly one expect")
    _need(_teq(ctx, expects[0].ann, cur), "Tail", ANNOTATION, f"frame expects {expects[0].ann}, receives {cur}")
    last: FlaqrTypeError | None = None
    for t in _types_at_some_pc(ctx, f.expr, f.host, frames, "Tail"):
        try:
            return _stack_from(ctx, frames, k + 1, t)
        except FlaqrTypeError as err:
            last = err
    raise last


def typecheck_stack(ctx: TypingCtx, frames, hole: Type) -> StackType:
    """``Pi; Gamma; pc |- t : [hole]result``."""
    return StackType(hole, _stack_from(ctx, tuple(frames), 0, hole))


def typecheck_config(ctx: TypingCtx, g: L.GlobalConfig) -> Type:
    """``Pi; Gamma; pc |- <e ; c ; t> : result``; the head may use any admissible pc."""
    last: FlaqrTypeError | None = None
    for head in _types_at_some_pc(ctx, g.expr, g.host, g.stack, "Head"):
        try:
            return typecheck_stack(ctx, g.stack, head).result
        except FlaqrTypeError as err:
            last = err
    raise last


def clear_cache() -> None:
    _check.cache_clear()
