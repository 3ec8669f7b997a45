"""Bracketed pairs of executions, bracket typing, observations and noninterference checks.

A bracket ``<e1|e2>`` stands for two runs that differ only where an
attacker ``H`` could influence them. Projection ``k`` recovers run ``k``.
Brackets whose sides still compute are lifted to the top of the
configuration, so each side then steps by the ordinary rules and remote
calls use the hole ``*`` to park the other side on the stack.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace

from . import lang as L
from . import principals as P
from .interp import Interpreter, Stuck, contract, decompose, _expect_type, _fill_expect
from .lang import Expr, Frame, GlobalConfig, Type
from .principals import Principal, acts_for, flows_to
from .typecheck import (
    ANNOTATION, HOST_AUTHORITY, PROTECTION, SHAPE,
    FlaqrTypeError, TypingCtx, typecheck_config, typecheck_expr,
)

FACETS = ("c", "i", "a")


@dataclass(frozen=True)
class BracketCtx:
    """Attacker ``H`` and the facet ``pi`` under analysis."""

    attacker: Principal
    facet: str

    def __post_init__(self):
        if self.facet not in FACETS:
            raise ValueError(f"facet must be one of {FACETS}, got {self.facet!r}")

    @property
    def h_pi(self) -> Principal:
        return P.canonical(P.project(self.attacker, self.facet))


# ---------------------------------------------------------------------------
# projections


def _proj(e: Expr, k: int) -> Expr:
    if isinstance(e, L.Bracket):
        return _proj(e.left if k == 1 else e.right, k)
    return L.map_children(e, lambda c: _proj(c, k))


def project(e: Expr, k: int) -> Expr:
    """``|e|_k``; a side parked as a hole projects to the hole."""
    if k not in (1, 2):
        raise ValueError("projection index must be 1 or 2")
    if isinstance(e, L.Hole):
        raise ValueError("cannot project a bare hole")
    return _proj(e, k)


def project_frame(f: Frame, k: int) -> Frame:
    return Frame(_proj(f.expr, k), f.host)


def project_config(g: GlobalConfig, k: int) -> GlobalConfig:
    """Projection of a configuration, resuming the parked side when the head is a hole."""
    if k not in (1, 2):
        raise ValueError("projection index must be 1 or 2")
    expr, host = _proj(g.expr, k), g.host
    frames = [project_frame(f, k) for f in g.stack]
    while isinstance(expr, L.Hole):
        if not frames:
            raise ValueError("projection parks a side with no frame to resume")
        f = frames.pop(0)
        expr, host = f.expr, f.host
    return GlobalConfig(expr, host, tuple(frames))


def has_bracket(e: Expr) -> bool:
    return any(isinstance(x, (L.Bracket, L.Hole)) for x in L.walk(e))


# ---------------------------------------------------------------------------
# bracketed evaluation


def _side(b: L.Bracket, k: int) -> Expr:
    return b.left if k == 1 else b.right


def _with_side(b: L.Bracket, k: int, e: Expr) -> L.Bracket:
    return L.Bracket(e, b.right) if k == 1 else L.Bracket(b.left, e)


def _ret_value(f: Expr, label: Principal, body: Type) -> Expr:
    """``f'``: a returned value is sealed at the expected label, a fail retyped."""
    if L.is_fail(f):
        return L.Fail(L.Says(label, body))
    return L.Sealed(label, f)


def _can_step(e: Expr) -> bool:
    if isinstance(e, L.Hole) or L.is_fv(e):
        return False
    return not (isinstance(e, L.RetTo) and L.is_fv(e.expr))


_SPLIT_RULES = {L.App: "B-App", L.TApp: "B-TApp", L.Bind: "B-BindM"}


def _common(r: Expr, name: str) -> tuple[str, Expr]:
    outs = [contract(_proj(r, k)) for k in (1, 2)]
    if None in outs:
        raise Stuck(f"no rule for a projection of {r}")
    left, right = has_bracket(r.left), has_bracket(r.right)
    suffix = "Left" if left and not right else "Right" if right and not left else ""
    return f"{name}{suffix}", L.Bracket(outs[0][1], outs[1][1])


def bracket_contract(r: Expr) -> tuple[str, Expr]:
    """Local rule for a redex that may hold brackets."""
    if not has_bracket(r):
        out = contract(r)
        if out is None:
            raise Stuck(f"no rule for {r}")
        return out
    if isinstance(r, L.Compare):
        return _common(r, "B-CompareCommon")
    if isinstance(r, L.Select) and (isinstance(r.left, L.Bracket) or isinstance(r.right, L.Bracket)):
        return _common(r, "B-SelectCommon")
    if isinstance(r, L.UnitM) and isinstance(r.expr, L.Bracket) and not L.is_value(r.expr):
        a, b = r.expr.left, r.expr.right
        if L.is_value(a) and L.is_fail(b):
            return "B-Fail1", L.Bracket(L.Sealed(r.label, a), L.Fail(L.Says(r.label, b.ann)))
        if L.is_fail(a) and L.is_value(b):
            return "B-Fail2", L.Bracket(L.Fail(L.Says(r.label, a.ann)), L.Sealed(r.label, b))
        if L.is_fail(a) and L.is_fail(b):
            return "B-Fail", L.Fail(L.Says(r.label, a.ann))
    out = contract(r)
    if out is not None:
        return out
    return _SPLIT_RULES.get(type(r), "B-Split"), L.Bracket(_proj(r, 1), _proj(r, 2))


def _step_top(g: GlobalConfig) -> tuple[str, GlobalConfig]:
    e = g.expr
    for k in (1, 2):
        side = _side(e, k)
        if not _can_step(side):
            continue
        r, plug = decompose(side)
        if isinstance(r, L.Run):
            parked = _with_side(e, k, plug(L.Expect(r.ann)))
            head = _with_side(L.Bracket(L.HOLE, L.HOLE), k, L.RetTo(r.expr, g.host))
            frame = Frame(parked, g.host)
            return f"B-Run{'Left' if k == 1 else 'Right'}", GlobalConfig(head, r.host, (frame,) + g.stack)
        out = contract(r)
        if out is None:
            raise Stuck(f"no rule for {r}", g)
        return "B-Step", GlobalConfig(_with_side(e, k, plug(out[1])), g.host, g.stack)

    a, b = e.left, e.right
    for k, side, other in ((1, a, b), (2, b, a)):
        if isinstance(side, L.RetTo) and isinstance(other, L.Hole):
            if not g.stack or not isinstance(g.stack[0].expr, L.Bracket):
                raise Stuck("one-sided return without a bracketed frame", g)
            frame, rest = g.stack[0], g.stack[1:]
            waiting = _side(frame.expr, k)
            want = _expect_type(waiting)
            if not isinstance(want, L.Says):
                raise Stuck("expect frame without a says annotation", g)
            filled = _fill_expect(waiting, _ret_value(side.expr, want.label, want.body))
            name = "B-RetLeft" if k == 1 else "B-RetRight"
            return name, GlobalConfig(_with_side(frame.expr, k, filled), frame.host, rest)
    if isinstance(a, L.RetTo) and isinstance(b, L.RetTo) and P.equiv(P.EMPTY, a.host, b.host):
        return "B-RetJoin", GlobalConfig(L.RetTo(L.Bracket(a.expr, b.expr), a.host), g.host, g.stack)
    raise Stuck("no rule for this bracket", g)


def bracket_step(g: GlobalConfig, bctx: BracketCtx | None = None) -> tuple[str, GlobalConfig]:
    """One deterministic bracketed step; returns the rule name and the next configuration."""
    e = g.expr
    if isinstance(e, L.Bracket) and not L.is_fv(e):
        return _step_top(g)
    if isinstance(e, L.RetTo) and L.is_fv(e.expr):
        if not g.stack:
            raise Stuck("return with an empty stack", g)
        frame, rest = g.stack[0], g.stack[1:]
        want = _expect_type(frame.expr)
        if not isinstance(want, L.Says):
            raise Stuck("expect frame without a says annotation", g)
        f = e.expr
        if isinstance(f, L.Bracket) and not L.is_value(f):
            out = L.Bracket(_ret_value(f.left, want.label, want.body), _ret_value(f.right, want.label, want.body))
            rule = "B-RetV"
        else:
            out = _ret_value(f, want.label, want.body)
            rule = "E-RetFail" if L.is_fail(out) else "E-RetV"
        return rule, GlobalConfig(_fill_expect(frame.expr, out), frame.host, rest)
    if L.is_fv(e):
        raise Stuck("terminal configuration", g)
    r, plug = decompose(e)
    if isinstance(r, L.Bracket):
        return "B-Lift", GlobalConfig(L.Bracket(_proj(e, 1), _proj(e, 2)), g.host, g.stack)
    if isinstance(r, L.Run):
        frame = Frame(plug(L.Expect(r.ann)), g.host)
        return "E-Run", GlobalConfig(L.RetTo(r.expr, g.host), r.host, (frame,) + g.stack)
    rule, reduct = bracket_contract(r)
    return rule, GlobalConfig(plug(reduct), g.host, g.stack)


def _reaches(src: GlobalConfig, dst: GlobalConfig, limit: int = 1) -> bool:
    """``src`` reaches ``dst`` in at most ``limit`` plain steps."""
    it = Interpreter()
    cur = src
    for n in range(limit + 1):
        if cur == dst:
            return True
        if n == limit or cur.terminal:
            return False
        try:
            cur = it.step(cur).config
        except Stuck:
            return False
    return False


def step_is_sound(before: GlobalConfig, after: GlobalConfig) -> bool:
    """Each projection takes zero or one plain step."""
    return all(_reaches(project_config(before, k), project_config(after, k)) for k in (1, 2))


# ---------------------------------------------------------------------------
# bracket typing


def facet_type(t: Type, facet: str) -> Type:
    """``t`` with every label and pc cut down to one facet."""
    cut = lambda p: P.canonical(P.project(p, facet))  # noqa: E731
    if isinstance(t, (L.UnitT, L.TVar)):
        return t
    if isinstance(t, L.SumT):
        return L.SumT(facet_type(t.left, facet), facet_type(t.right, facet))
    if isinstance(t, L.ProdT):
        return L.ProdT(facet_type(t.left, facet), facet_type(t.right, facet))
    if isinstance(t, L.FunT):
        return L.FunT(facet_type(t.arg, facet), cut(t.pc), facet_type(t.ret, facet))
    if isinstance(t, L.ForallT):
        return L.ForallT(t.var, cut(t.pc), facet_type(t.body, facet))
    return L.Says(cut(t.label), facet_type(t.body, facet))


def attacker_protects(ctx, bctx: BracketCtx, t: Type) -> bool:
    """``H^pi <= C(t)``, compared on the facet ``pi``."""
    return L.protects(ctx, bctx.h_pi, facet_type(L.cfun(t), bctx.facet))


def attacker_flows(ctx, bctx: BracketCtx, label: Principal) -> bool:
    return flows_to(ctx, bctx.h_pi, P.project(label, bctx.facet))


def check_bracket(ctx: TypingCtx, e: Expr, check) -> Type:
    """Typing rules for brackets; ``check`` types the sides."""
    b: BracketCtx = ctx.bracket
    Pi, pc, c = ctx.delegations, ctx.pc, ctx.host
    if isinstance(e, L.Hole):
        raise FlaqrTypeError("Bracket", SHAPE, "a hole outside a bracket")
    left, right = e.left, e.right
    if isinstance(right, L.Hole):
        return check(ctx, left)  # BullR
    if isinstance(left, L.Hole):
        return check(ctx, right)  # BullL
    if left == right and L.is_fv(left):
        return check(ctx, left)  # Bracket-Same

    def both(at: TypingCtx, rule: str) -> Type:
        t1, t2 = check(at, left), check(at, right)
        if not L.type_equiv(t1, t2):
            raise FlaqrTypeError(rule, ANNOTATION, f"sides have types {t1} and {t2}")
        return t1

    def protected(t: Type, rule: str) -> Type:
        if not attacker_protects(Pi, b, t):
            raise FlaqrTypeError(rule, PROTECTION, f"attacker facet does not flow to {L.cfun(t)}", (b.h_pi,))
        return t

    if b.facet != "a":
        for rule, kept, dropped in (("Bracket-Fail-L", left, right), ("Bracket-Fail-R", right, left)):
            if isinstance(dropped, L.Fail) and not isinstance(kept, L.Fail):
                t = check(ctx, kept)
                if not L.type_equiv(t, dropped.ann):
                    raise FlaqrTypeError(rule, ANNOTATION, f"side has type {t}, fail term {dropped.ann}")
                return t
    elif not isinstance(left, L.Fail) and not isinstance(right, L.Fail):
        return both(ctx, "Bracket-Fail-A")
    if L.is_value(left) and L.is_value(right):
        return protected(both(ctx, "Bracket-Values"), "Bracket-Values")
    pc2 = P.canonical(P.join(b.h_pi, pc))
    if not acts_for(Pi, c, pc2):
        raise FlaqrTypeError("Bracket", HOST_AUTHORITY, "host does not act for the raised pc", (c, pc2))
    return protected(both(ctx.at(pc2, c), "Bracket"), "Bracket")


def bracket_typecheck(ctx: TypingCtx, bctx: BracketCtx, e: Expr) -> Type:
    return typecheck_expr(replace(ctx, bracket=bctx), e)


def bracket_typecheck_config(ctx: TypingCtx, bctx: BracketCtx, g: GlobalConfig) -> Type:
    return typecheck_config(replace(ctx, bracket=bctx), g)


# ---------------------------------------------------------------------------
# observations


def observe(e: Expr, ctx, p: Principal, facet: str) -> Expr:
    """What an observer at ``p`` sees of ``e`` on ``facet``; hidden parts become ``blank``."""
    if facet not in ("c", "i"):
        raise ValueError("observations are defined for the c and i facets")
    ctx = P.as_ctx(ctx)
    seen = P.project(p, facet)

    def visible(l: Principal) -> bool:
        return flows_to(ctx, P.project(l, facet), seen)

    def go(e: Expr) -> Expr:
        if isinstance(e, L.Fail):
            return L.BLANK
        if isinstance(e, L.Bracket):
            raise ValueError("observe a projection, not a bracket")
        if isinstance(e, L.Sealed):
            return L.Sealed(e.label, go(e.value)) if visible(e.label) else L.BLANK
        if isinstance(e, L.Lam):
            return L.Lam(e.var, e.ty, e.pc, go(e.body)) if visible(e.pc) else L.BLANK
        if isinstance(e, L.TLam):
            return L.TLam(e.var, e.pc, go(e.body)) if visible(e.pc) else L.BLANK
        if isinstance(e, L.Pair):
            l, r = go(e.left), go(e.right)
            return L.BLANK if L.BLANK in (l, r) else L.Pair(l, r, e.ann)
        if isinstance(e, L.Inj):
            inner = go(e.expr)
            return L.BLANK if inner == L.BLANK else L.Inj(e.index, e.ann, inner)
        if isinstance(e, (L.Run, L.RetTo)):
            return go(e.expr)
        return L.map_children(e, go)

    return go(e)


# ---------------------------------------------------------------------------
# checking the theorems on one program

PASS, FAIL, REJECTED, VACUOUS, TIMEOUT, STUCK = "pass", "fail", "rejected", "vacuous", "timeout", "stuck"


def default_fuel() -> int:
    return int(os.environ.get("FLAQR_FUEL", "100000"))


@dataclass
class NIResult:
    verdict: str
    reason: str = ""
    steps: int = 0
    rules: list = field(default_factory=list)
    unsound_steps: int = 0
    final: GlobalConfig | None = None
    observations: tuple = ()
    trace: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.verdict == PASS


def _premises(ctx: TypingCtx, bctx: BracketCtx, in_t: Type, out_t: Type, inputs, quorum) -> str:
    """Why the theorem's premises fail; empty when they hold."""
    from .quorum import guards, in_attacker_set

    Pi, H = ctx.delegations, bctx.attacker
    if not isinstance(out_t, L.Says):
        return f"program type {out_t} is not a says type"
    if bctx.facet == "a":
        if quorum is None:
            return "availability needs a quorum system"
        if not L.fails(Pi, H, in_t):
            return "the attacker cannot fail the input type"
        if not in_attacker_set(Pi, P.canonical(H.ia), quorum):
            return "the attacker is not tolerated by the quorum system"
        if not guards(Pi, quorum, out_t):
            return "the quorum system does not guard the program type"
        return ""
    if not isinstance(in_t, L.Says):
        return f"input type {in_t} is not a says type"
    if not all(L.is_value(f) for f in inputs):
        return "c-i noninterference takes value inputs"
    if not attacker_flows(Pi, bctx, in_t.label):
        return "the attacker facet does not flow to the input label"
    if attacker_flows(Pi, bctx, out_t.label):
        return "the attacker facet flows to the output label"
    return ""


def run_bracketed(g: GlobalConfig, fuel: int | None = None, check_soundness: bool = True, trace: bool = False):
    """Step a bracketed configuration to the end; returns ``(verdict, config, steps, rules, unsound, log)``."""
    fuel = default_fuel() if fuel is None else fuel
    steps, unsound, rules = 0, 0, []
    log = [g] if trace else []
    while not g.terminal:
        if steps >= fuel:
            return TIMEOUT, g, steps, rules, unsound, log
        try:
            rule, nxt = bracket_step(g)
        except Stuck:
            return STUCK, g, steps, rules, unsound, log
        if check_soundness and not step_is_sound(g, nxt):
            unsound += 1
        rules.append(rule)
        g = nxt
        steps += 1
        if trace:
            log.append(g)
    return "done", g, steps, rules, unsound, log


def ni_check(
    program: Expr,
    x: str,
    inputs: tuple,
    input_type: Type,
    ctx: TypingCtx,
    bctx: BracketCtx,
    quorum=None,
    fuel: int | None = None,
    trace: bool = False,
    check_soundness: bool = True,
) -> NIResult:
    """Run ``program[x := <f1|f2>]`` and compare what the two runs reveal.

    For ``c`` and ``i`` the final values must look the same to an observer
    at the output label; for ``a`` both runs must fail or neither.
    """
    f1, f2 = inputs
    try:
        out_t = typecheck_expr(ctx.bind(x, input_type), program)
    except FlaqrTypeError as err:
        return NIResult(REJECTED, f"program: {err}")
    closed = replace(ctx, vars=())
    for f in inputs:
        try:
            ft = typecheck_expr(closed, f)
        except FlaqrTypeError as err:
            return NIResult(REJECTED, f"input: {err}")
        if not L.type_equiv(ft, input_type):
            return NIResult(REJECTED, f"input has type {ft}, expected {input_type}")
    e = L.subst(program, x, L.Bracket(f1, f2))
    try:
        bracket_typecheck(ctx, bctx, e)
    except FlaqrTypeError as err:
        return NIResult(REJECTED, f"bracket typing: {err}")
    why = _premises(ctx, bctx, input_type, out_t, inputs, quorum)
    if why:
        return NIResult(VACUOUS, why)

    status, g, steps, rules, unsound, log = run_bracketed(GlobalConfig(e, ctx.host), fuel, check_soundness, trace)
    res = NIResult(PASS, "", steps, rules, unsound, g, (), log)
    if status != "done":
        res.verdict, res.reason = (TIMEOUT if status == TIMEOUT else STUCK), status
        return res
    outs = [project(g.expr, k) for k in (1, 2)]
    if unsound:
        res.verdict, res.reason = FAIL, f"{unsound} bracketed steps do not match the plain runs"
        return res
    if bctx.facet == "a":
        res.observations = tuple(L.is_fail(o) for o in outs)
        if res.observations[0] != res.observations[1]:
            res.verdict, res.reason = FAIL, "one run fails and the other does not"
        return res
    if any(L.is_fail(o) for o in outs):
        res.verdict, res.reason = VACUOUS, "a run failed; c-i noninterference is failure-insensitive"
        return res
    res.observations = tuple(observe(o, ctx.delegations, out_t.label, bctx.facet) for o in outs)
    if res.observations[0] != res.observations[1]:
        res.verdict, res.reason = FAIL, "observations differ"
    return res
