"""Small-step local and global semantics with deterministic fault injection."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Callable

from . import lang as L
from . import principals as P
from .lang import Expr, Frame, GlobalConfig, Type
from .principals import Principal


class Stuck(Exception):
    """No rule applies to a non-terminal configuration."""

    def __init__(self, msg: str, config=None):
        super().__init__(msg)
        self.config = config


# ---------------------------------------------------------------------------
# values


def _norm(v: Expr) -> Expr:
    """Canonical labels and types throughout a value, for equality tests."""
    if isinstance(v, L.Sealed):
        return L.Sealed(P.canonical(v.label), _norm(v.value))
    if isinstance(v, L.Inj):
        return L.Inj(v.index, L.canonical_type(v.ann), _norm(v.expr))
    if isinstance(v, L.Pair):
        return L.Pair(_norm(v.left), _norm(v.right), L.canonical_type(v.ann))
    if isinstance(v, L.Fail):
        return L.Fail(L.canonical_type(v.ann))
    return v


def values_equal(v1: Expr, v2: Expr) -> bool:
    return v1 == v2 or _norm(v1) == _norm(v2)


# ---------------------------------------------------------------------------
# evaluation contexts


def decompose(e: Expr) -> tuple[Expr, Callable[[Expr], Expr]]:
    """Split ``e`` into ``E[r]``; returns ``(r, E)``.

    ``r`` is the unique subterm in evaluation position whose own evaluation
    positions hold only values or fail terms.
    """
    fv = L.is_fv

    def here():
        return e, (lambda r: r)

    def into(sub, rebuild):
        r, plug = decompose(sub)
        return r, (lambda x: rebuild(plug(x)))

    if isinstance(e, L.App):
        if not fv(e.fn):
            return into(e.fn, lambda x: L.App(x, e.arg))
        if L.is_value(e.fn) and not fv(e.arg):
            return into(e.arg, lambda x: L.App(e.fn, x))
        return here()
    if isinstance(e, L.TApp):
        if not fv(e.fn):
            return into(e.fn, lambda x: L.TApp(x, e.ty))
        return here()
    if isinstance(e, L.Pair):
        if not fv(e.left):
            return into(e.left, lambda x: L.Pair(x, e.right, e.ann))
        if not fv(e.right):
            return into(e.right, lambda x: L.Pair(e.left, x, e.ann))
        return here()
    if isinstance(e, L.ProjE):
        if not fv(e.expr):
            return into(e.expr, lambda x: L.ProjE(e.index, x))
        return here()
    if isinstance(e, L.Inj):
        if not fv(e.expr):
            return into(e.expr, lambda x: L.Inj(e.index, e.ann, x))
        return here()
    if isinstance(e, L.UnitM):
        if not fv(e.expr):
            return into(e.expr, lambda x: L.UnitM(e.label, x))
        return here()
    if isinstance(e, L.Bind):
        if not fv(e.expr):
            return into(e.expr, lambda x: L.Bind(e.var, x, e.body))
        return here()
    if isinstance(e, L.Case):
        if not fv(e.expr):
            return into(e.expr, lambda x: L.Case(x, e.var, e.left, e.right, e.ann))
        return here()
    if isinstance(e, L.RetTo):
        if not fv(e.expr):
            return into(e.expr, lambda x: L.RetTo(x, e.host))
        return here()
    if isinstance(e, L.Select):
        if not fv(e.left):
            return into(e.left, lambda x: L.Select(x, e.right, e.ann))
        if not fv(e.right):
            return into(e.right, lambda x: L.Select(e.left, x, e.ann))
        return here()
    if isinstance(e, L.Compare):
        if not fv(e.left):
            return into(e.left, lambda x: L.Compare(e.ann, x, e.right))
        if not fv(e.right):
            return into(e.right, lambda x: L.Compare(e.ann, e.left, x))
        return here()
    return here()


# ---------------------------------------------------------------------------
# local rules


def _says_label(t: Type) -> Principal | None:
    return t.label if isinstance(t, L.Says) else None


def _fail_label(f: Expr) -> Principal | None:
    return _says_label(f.ann) if isinstance(f, L.Fail) else None


def contract(r: Expr) -> tuple[str, Expr] | None:
    """Apply the local rule whose left-hand side is ``r``; ``None`` if none does."""
    val, fail = L.is_value, L.is_fail
    if isinstance(r, L.App):
        if isinstance(r.fn, L.Fail):
            if isinstance(r.fn.ann, L.FunT):
                return "E-AppFailL", L.Fail(r.fn.ann.ret)
            return None
        if isinstance(r.fn, L.Lam):
            if val(r.arg):
                return "E-App", L.subst(r.fn.body, r.fn.var, r.arg)
            if fail(r.arg):
                return "E-AppFail", L.subst(r.fn.body, r.fn.var, r.arg)
        return None
    if isinstance(r, L.TApp):
        if isinstance(r.fn, L.TLam):
            return "E-TApp", L.subst_tyvar(r.fn.body, r.fn.var, r.ty)
        if isinstance(r.fn, L.Fail) and isinstance(r.fn.ann, L.ForallT):
            t = r.fn.ann
            return "E-TAppFail", L.Fail(L.subst_type(t.body, t.var, r.ty))
        return None
    if isinstance(r, L.ProjE):
        if isinstance(r.expr, L.Pair) and val(r.expr):
            return "E-UnPair", r.expr.left if r.index == 1 else r.expr.right
        if fail(r.expr) and isinstance(r.expr.ann, L.ProdT):
            t = r.expr.ann
            return "E-ProjFail", L.Fail(t.left if r.index == 1 else t.right)
        return None
    if isinstance(r, L.Pair):
        if fail(r.left) and L.is_fv(r.right):
            return "E-PairFailL", L.Fail(r.ann)
        if L.is_fv(r.left) and fail(r.right):
            return "E-PairFailR", L.Fail(r.ann)
        return None
    if isinstance(r, L.Inj):
        if fail(r.expr):
            return "E-InjFail", L.Fail(r.ann)
        return None
    if isinstance(r, L.UnitM):
        if val(r.expr):
            return "E-Sealed", L.Sealed(r.label, r.expr)
        if fail(r.expr):
            return "E-SealedFail", L.Fail(L.Says(r.label, r.expr.ann))
        return None
    if isinstance(r, L.Bind):
        if isinstance(r.expr, L.Sealed) and val(r.expr):
            return "E-BindM", L.subst(r.body, r.var, r.expr.value)
        if fail(r.expr) and isinstance(r.expr.ann, L.Says):
            return "E-BindMFail", L.subst(r.body, r.var, L.Fail(r.expr.ann.body))
        return None
    if isinstance(r, L.Case):
        if isinstance(r.expr, L.Inj) and val(r.expr):
            branch = r.left if r.expr.index == 1 else r.right
            return "E-Case", L.subst(branch, r.var, r.expr.expr)
        if fail(r.expr):
            return "E-CaseFail", L.Fail(r.ann)
        return None
    if isinstance(r, L.Compare):
        a, b = r.left, r.right
        if isinstance(a, L.Sealed) and isinstance(b, L.Sealed) and val(a) and val(b):
            if values_equal(a.value, b.value):
                return "E-Compare", L.Sealed(P.compare_action(a.label, b.label), a.value)
            return "E-CompareFail", L.Fail(r.ann)
        if fail(a) and L.is_fv(b):
            return "E-CompareFailL", L.Fail(r.ann)
        if L.is_fv(a) and fail(b):
            return "E-CompareFailR", L.Fail(r.ann)
        return None
    if isinstance(r, L.Select):
        a, b = r.left, r.right
        if not (L.is_fv(a) and L.is_fv(b)):
            return None
        la = a.label if isinstance(a, L.Sealed) else _fail_label(a)
        lb = b.label if isinstance(b, L.Sealed) else _fail_label(b)
        if la is None or lb is None:
            return None
        label = P.select_action(la, lb)
        if isinstance(a, L.Sealed):
            return "E-Select", L.Sealed(label, a.value)
        if isinstance(b, L.Sealed):
            return "E-Select", L.Sealed(label, b.value)
        return "E-SelectFail", L.Fail(r.ann)
    return None


FAIL_RULES = frozenset({
    "E-AppFailL", "E-AppFail", "E-TAppFail", "E-SealedFail", "E-InjFail", "E-CaseFail",
    "E-PairFailL", "E-PairFailR", "E-ProjFail", "E-BindMFail",
})


def local_step_rule(e: Expr) -> tuple[str, Expr] | None:
    """One local step with the name of the rule that fired; ``None`` if stuck or not local."""
    if L.is_fv(e):
        return None
    r, plug = decompose(e)
    out = contract(r)
    if out is None:
        return None
    rule, reduct = out
    return rule, plug(reduct)


def local_step(e: Expr) -> Expr | None:
    out = local_step_rule(e)
    return None if out is None else out[1]


def fail_step(e: Expr) -> Expr | None:
    """One step by a fail-propagation rule; ``None`` if the next redex is not one."""
    out = local_step_rule(e)
    if out is None or out[0] not in FAIL_RULES:
        return None
    return out[1]


# ---------------------------------------------------------------------------
# fault plans


HONEST, CRASH, BYZ_CONST, BYZ_SEEDED = "honest", "crash", "byz_const", "byz_seeded"


@dataclass(frozen=True)
class FaultMode:
    kind: str = HONEST
    value: Expr | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in (HONEST, CRASH, BYZ_CONST, BYZ_SEEDED):
            raise ValueError(f"unknown fault mode {self.kind!r}")
        if self.kind == BYZ_CONST and (self.value is None or not L.is_value(self.value)):
            raise ValueError("byz_const needs a value")


class FaultPlanError(ValueError):
    pass


@dataclass
class FaultPlan:
    """Static assignment of behaviours to hosts, keyed by host name."""

    modes: dict = field(default_factory=dict)

    @staticmethod
    def honest() -> "FaultPlan":
        return FaultPlan({})

    @staticmethod
    def of(**modes) -> "FaultPlan":
        return FaultPlan(dict(modes))

    def mode(self, host: Principal) -> FaultMode:
        return self.modes.get(P.show(host), FaultMode())

    @property
    def faulty(self) -> set[str]:
        return {h for h, m in self.modes.items() if m.kind != HONEST}

    @staticmethod
    def from_json(text_or_obj) -> "FaultPlan":
        from .syntax import parse_expr

        obj = json.loads(text_or_obj) if isinstance(text_or_obj, str) else text_or_obj
        if not isinstance(obj, dict):
            raise FaultPlanError("fault plan must be a JSON object")
        modes = {}
        for host, spec in obj.items():
            if spec in (HONEST, CRASH):
                modes[host] = FaultMode(spec)
            elif isinstance(spec, dict) and set(spec) == {"const"}:
                try:
                    v = parse_expr(spec["const"])
                    modes[host] = FaultMode(BYZ_CONST, value=v)
                except ValueError as exc:
                    raise FaultPlanError(f"{host}: {exc}") from exc
            elif isinstance(spec, dict) and set(spec) == {"seed"} and isinstance(spec["seed"], int):
                modes[host] = FaultMode(BYZ_SEEDED, seed=spec["seed"])
            else:
                raise FaultPlanError(f"{host}: expected \"crash\", {{\"const\": ...}} or {{\"seed\": N}}")
        return FaultPlan(modes)

    def validate(self, program: Expr) -> None:
        """Reject constant substitutes that do not fit every ``run`` at their host."""
        from .typecheck import TypingCtx, typecheck_expr, FlaqrTypeError

        for host, m in self.modes.items():
            if m.kind != BYZ_CONST:
                continue
            runs = [r for r in L.walk(program) if isinstance(r, L.Run) and P.show(r.host) == host]
            for r in runs:
                want = r.ann.body if isinstance(r.ann, L.Says) else r.ann
                try:
                    got = typecheck_expr(TypingCtx(), m.value)
                except FlaqrTypeError as exc:
                    raise FaultPlanError(f"{host}: substitute is ill-typed: {exc}") from exc
                if not L.type_equiv(got, want):
                    raise FaultPlanError(f"{host}: substitute has type {got}, run expects {want}")


# ---------------------------------------------------------------------------
# type-directed values


def gen_value(t: Type, rng: random.Random, depth: int = 3) -> Expr:
    """A closed value of type ``t`` (``fail`` in bodies that need a type variable)."""
    if isinstance(t, L.UnitT):
        return L.UNIT
    if isinstance(t, L.SumT):
        k = rng.choice((1, 2))
        return L.Inj(k, t, gen_value(t.left if k == 1 else t.right, rng, depth))
    if isinstance(t, L.ProdT):
        return L.Pair(gen_value(t.left, rng, depth), gen_value(t.right, rng, depth), t)
    if isinstance(t, L.Says):
        return L.Sealed(t.label, gen_value(t.body, rng, depth))
    if isinstance(t, L.FunT):
        return L.Lam("_", t.arg, t.pc, _gen_body(t.ret, rng, depth - 1))
    if isinstance(t, L.ForallT):
        return L.TLam(t.var, t.pc, _gen_body(t.body, rng, depth - 1))
    raise ValueError(f"no closed values of type {t}")


def _gen_body(t: Type, rng: random.Random, depth: int) -> Expr:
    if L.type_free_vars(t) or depth <= 0:
        return L.Fail(t)
    return gen_value(t, rng, depth)


def byzantine_value(t: Type, seed: int, k: int) -> Expr:
    """Value returned by a seeded byzantine host on its ``k``-th return."""
    return gen_value(t, random.Random(f"{seed}:{k}"))


# ---------------------------------------------------------------------------
# global rules


@dataclass(frozen=True)
class StepInfo:
    config: GlobalConfig
    rule: str
    redex: Expr | None = None
    host: Principal | None = None


def _fill_expect(e: Expr, replacement: Expr) -> Expr:
    def go(x):
        if isinstance(x, L.Expect):
            return replacement
        return L.map_children(x, go)

    return go(e)


def _expect_type(e: Expr) -> Type | None:
    for x in L.walk(e):
        if isinstance(x, L.Expect):
            return x.ann
    return None


class Interpreter:
    """Global stepper; counts returns per host so seeded faults are reproducible."""

    def __init__(self, plan: FaultPlan | None = None):
        self.plan = plan or FaultPlan.honest()
        self.returns: dict[str, int] = {}

    def inject(self, host: Principal, f: Expr, label: Principal, body_t: Type) -> tuple[str, Expr]:
        """What crosses the return boundary from ``host``."""
        m = self.plan.mode(host)
        key = P.show(host)
        k = self.returns.get(key, 0)
        self.returns[key] = k + 1
        if m.kind == CRASH:
            return "crash", L.Fail(L.Says(label, body_t))
        if m.kind == BYZ_CONST:
            return "byz", L.Sealed(label, m.value)
        if m.kind == BYZ_SEEDED:
            return "byz", L.Sealed(label, byzantine_value(body_t, m.seed, k))
        if L.is_fail(f):
            return "", L.Fail(L.Says(label, body_t))
        return "", L.Sealed(label, f)

    def step(self, g: GlobalConfig) -> StepInfo:
        e = g.expr
        if isinstance(e, L.RetTo) and L.is_fv(e.expr):
            if not g.stack:
                raise Stuck("return with an empty stack", g)
            frame, rest = g.stack[0], g.stack[1:]
            if not P.equiv(P.EMPTY, frame.host, e.host):
                raise Stuck(f"return to {e.host} but the waiting frame is at {frame.host}", g)
            want = _expect_type(frame.expr)
            if not isinstance(want, L.Says):
                raise Stuck("expect frame without a says annotation", g)
            tag, out = self.inject(g.host, e.expr, want.label, want.body)
            rule = "E-RetFail" if L.is_fail(out) else "E-RetV"
            if tag:
                rule += f"[{tag}]"
            return StepInfo(GlobalConfig(_fill_expect(frame.expr, out), frame.host, rest), rule, e, g.host)
        if L.is_fv(e):
            raise Stuck("terminal configuration", g)
        r, plug = decompose(e)
        if isinstance(r, L.Run):
            frame = Frame(plug(L.Expect(r.ann)), g.host)
            return StepInfo(GlobalConfig(L.RetTo(r.expr, g.host), r.host, (frame,) + g.stack), "E-Run", r, g.host)
        out = contract(r)
        if out is None:
            raise Stuck(f"no rule for {r}", g)
        rule, reduct = out
        return StepInfo(GlobalConfig(plug(reduct), g.host, g.stack), rule, r, g.host)


def global_step(g: GlobalConfig, plan: FaultPlan | None = None) -> GlobalConfig:
    """One global step. Seeded faults count returns from zero, so use
    :class:`Interpreter` when stepping a whole run by hand."""
    return Interpreter(plan).step(g).config


# ---------------------------------------------------------------------------
# driver

VALUE, FAIL, TIMEOUT, STUCK = "value", "fail", "timeout", "stuck"


@dataclass
class RunResult:
    verdict: str
    config: GlobalConfig
    steps: int
    trace: list = field(default_factory=list)
    error: str = ""

    @property
    def result(self) -> Expr:
        return self.config.expr


def initial_config(e: Expr, host: Principal) -> GlobalConfig:
    return GlobalConfig(e, host, ())


def run_to_completion(
    g: GlobalConfig,
    plan: FaultPlan | None = None,
    fuel: int = 100_000,
    trace: bool = False,
    on_step: Callable[[StepInfo], None] | None = None,
) -> RunResult:
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    it = Interpreter(plan)
    steps = 0
    log = [g] if trace else []
    while not g.terminal:
        if steps >= fuel:
            return RunResult(TIMEOUT, g, steps, log)
        try:
            info = it.step(g)
        except Stuck as exc:
            return RunResult(STUCK, g, steps, log, str(exc))
        g = info.config
        steps += 1
        if trace:
            log.append(g)
        if on_step:
            on_step(info)
    return RunResult(FAIL if L.is_fail(g.expr) else VALUE, g, steps, log)
