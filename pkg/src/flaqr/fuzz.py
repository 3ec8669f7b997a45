"""Random well-typed programs, fault plans and compare trees for property suites."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from . import lang as L
from . import principals as P
from .interp import (
    BYZ_SEEDED, CRASH, FAIL, STUCK, TIMEOUT,
    FaultMode, FaultPlan, Interpreter, Stuck, initial_config,
)
from .lang import Expr, GlobalConfig, Type
from .principals import Principal, flows_to, prim
from .quorum import QuorumSystem
from .typecheck import FlaqrTypeError, TypingCtx, typecheck_config, typecheck_expr

HOSTS = ("a", "b", "c")
FUZZ_PC = P.canonical(P.TOP.ia)
ENUM2 = L.enum_type(2)


def _labels() -> list[Principal]:
    a, b, c = (prim(h) for h in HOSTS)
    raw = [a, b, a.c, P.conj(a, b).c, P.conj(a, b, c).c, a.ia, b.ia, c.ia, prim("p"), prim("t"), FUZZ_PC]
    return [P.canonical(x) for x in raw]


LABELS = _labels()


_CONNECTIVES = (P.And, P.Or, P.PAnd, P.POr)


def random_principal(
    rng: random.Random, prims=("x", "y", "z"), depth: int = 3, projections: bool = True, constants: bool = True
) -> Principal:
    """Random principal term of nesting depth at most ``depth``."""
    if depth <= 0 or rng.random() < 0.25:
        r = rng.random() if constants else 1.0
        base = P.TOP if r < 0.05 else P.BOT if r < 0.1 else prim(rng.choice(prims))
    else:
        op = rng.choice(_CONNECTIVES)
        sub = lambda: random_principal(rng, prims, depth - 1, projections, constants)  # noqa: E731
        base = op(sub(), sub())
    if projections and rng.random() < 0.15:
        return P.project(base, rng.choice(P.PROJECTIONS))
    return base


def fuzz_ctx() -> TypingCtx:
    """Top-level code runs at ``top`` with pc ``top^ia``; replicas need no delegations."""
    return TypingCtx.make((), FUZZ_PC, P.TOP)


class ProgramGen:
    """Bottom-up generator of candidate terms; callers keep those that type-check."""

    def __init__(self, rng: random.Random, depth: int = 3):
        self.rng = rng
        self.depth = depth
        self.n = 0

    def fresh(self, base: str) -> str:
        self.n += 1
        return f"{base}{self.n}"

    def label(self, pc: Principal) -> Principal:
        ok = [l for l in LABELS if flows_to(P.EMPTY, pc, l)]
        return self.rng.choice(ok or LABELS)

    def source_of(self, t: Type, pc: Principal) -> Expr | None:
        """A closed source term of type ``t``."""
        if isinstance(t, L.UnitT):
            return L.UNIT
        if isinstance(t, L.SumT):
            k = self.rng.choice((1, 2))
            inner = self.source_of(t.left if k == 1 else t.right, pc)
            return None if inner is None else L.Inj(k, t, inner)
        if isinstance(t, L.ProdT):
            l, r = self.source_of(t.left, pc), self.source_of(t.right, pc)
            return None if l is None or r is None else L.Pair(l, r, t)
        if isinstance(t, L.Says):
            inner = self.source_of(t.body, pc)
            return None if inner is None else L.UnitM(t.label, inner)
        if isinstance(t, L.FunT):
            body = self.source_of(t.ret, t.pc)
            return None if body is None else L.Lam(self.fresh("u"), t.arg, t.pc, body)
        return None

    def leaf(self, env: tuple, pc: Principal) -> tuple[Expr, Type]:
        r = self.rng.random()
        if env and r < 0.35:
            name, t = self.rng.choice(env)
            return L.Var(name), t
        if r < 0.6:
            k = self.rng.randrange(2)
            return L.enum_value(k, 2), ENUM2
        if r < 0.8:
            return L.UNIT, L.UNIT_T
        lab = self.label(pc)
        k = self.rng.randrange(2)
        return L.UnitM(lab, L.enum_value(k, 2)), L.Says(lab, ENUM2)

    def says(self, env, d, pc, host, remote_ok) -> tuple[Expr, Type]:
        """A term of some ``says`` type."""
        for _ in range(6):
            e, t = self.gen(env, d, pc, host, remote_ok)
            if isinstance(t, L.Says):
                return e, t
        lab = self.label(pc)
        e, t = self.gen(env, d - 1, pc, host, remote_ok)
        return L.UnitM(lab, e), L.Says(lab, t)

    def variant(self, e: Expr, t: L.Says, pc: Principal, host: Principal, remote_ok: bool) -> tuple[Expr, L.Says]:
        """A second operand for compare or select carrying the same payload type."""
        r = self.rng.random()
        if isinstance(e, L.Run) and remote_ok and r < 0.6:
            h = prim(self.rng.choice(HOSTS))
            lab = P.canonical(h.ia)
            body = e.expr if self.rng.random() < 0.6 else (self.source_of(t.body, L.remote_pc(h, lab)) or e.expr)
            return L.Run(L.Says(lab, t.body), body, h), L.Says(lab, t.body)
        if r < 0.8:
            return e, t
        lab = self.label(pc)
        src = self.source_of(t.body, pc)
        if src is None:
            return e, t
        return L.UnitM(lab, src), L.Says(lab, t.body)

    def gen(self, env: tuple, d: int, pc: Principal, host: Principal, remote_ok: bool = True) -> tuple[Expr, Type]:
        if d <= 0:
            return self.leaf(env, pc)
        rng = self.rng
        kinds = ["unitm", "pair", "proj", "inj", "app", "bind", "case", "tapp", "compare", "select", "leaf"]
        if remote_ok:
            kinds += ["run", "run"]
        kind = rng.choice(kinds)
        sub = lambda env=env, pc=pc: self.gen(env, d - 1, pc, host, remote_ok)  # noqa: E731

        if kind == "leaf":
            return self.leaf(env, pc)
        if kind == "unitm":
            e, t = sub()
            lab = self.label(pc)
            return L.UnitM(lab, e), L.Says(lab, t)
        if kind == "pair":
            (e1, t1), (e2, t2) = sub(), sub()
            pt = L.ProdT(t1, t2)
            return L.Pair(e1, e2, pt), pt
        if kind == "proj":
            (e1, t1), (e2, t2) = sub(), sub()
            k = rng.choice((1, 2))
            return L.ProjE(k, L.Pair(e1, e2, L.ProdT(t1, t2))), (t1 if k == 1 else t2)
        if kind == "inj":
            e, t = sub()
            k = rng.choice((1, 2))
            st = L.SumT(t, L.UNIT_T) if k == 1 else L.SumT(L.UNIT_T, t)
            return L.Inj(k, st, e), st
        if kind == "app":
            arg, ta = sub()
            x = self.fresh("x")
            body, tb = sub(env + ((x, ta),))
            return L.App(L.Lam(x, ta, pc, body), arg), tb
        if kind == "tapp":
            arg, ta = sub()
            X, z = self.fresh("X"), self.fresh("z")
            ident = L.TLam(X, pc, L.Lam(z, L.TVar(X), pc, L.Var(z)))
            return L.App(L.TApp(ident, ta), arg), ta
        if kind == "bind":
            es, ts = self.says(env, d - 1, pc, host, remote_ok)
            y = self.fresh("y")
            pc2 = P.canonical(P.join(ts.label, pc))
            body, tb = self.gen(env + ((y, ts.body),), d - 1, pc2, host, remote_ok)
            return L.Bind(y, es, body), tb
        if kind == "case":
            k = rng.randrange(2)
            scrut = L.enum_value(k, 2) if rng.random() < 0.7 else L.Inj(1, ENUM2, L.UNIT)
            z = self.fresh("z")
            b1, t1 = sub(env + ((z, L.UNIT_T),))
            b2 = self.source_of(t1, pc) if rng.random() < 0.5 else None
            if b2 is None:
                b2 = b1
            return L.Case(scrut, z, b1, b2, t1), t1
        if kind == "run":
            h = prim(rng.choice(HOSTS))
            lab = P.canonical(h.ia)
            rpc = L.remote_pc(h, lab)
            body, tb = self.gen((), d - 1, rpc, h, False)
            ann = L.Says(lab, tb)
            return L.Run(ann, body, h), ann
        # compare / select
        e1, t1 = self.says(env, d - 1, pc, host, remote_ok)
        e2, t2 = self.variant(e1, t1, pc, host, remote_ok)
        if kind == "compare":
            ann = L.Says(P.compare_action(t1.label, t2.label), t1.body)
            return L.Compare(ann, e1, e2), ann
        ann = L.Says(P.select_action(t1.label, t2.label), t1.body)
        return L.Select(e1, e2, ann), ann


def random_program(rng: random.Random, ctx: TypingCtx | None = None, depth: int = 3, tries: int = 200):
    """A closed well-typed program and its type, or ``None`` after ``tries`` rejections."""
    ctx = ctx or fuzz_ctx()
    gen = ProgramGen(rng, depth)
    for _ in range(tries):
        e, _ = gen.gen((), depth, ctx.pc, ctx.host)
        try:
            return e, typecheck_expr(ctx, e)
        except FlaqrTypeError:
            continue
    return None


def well_typed_programs(seed: int, count: int, depth: int = 3, ctx: TypingCtx | None = None):
    """``count`` distinct well-typed programs from ``seed``."""
    rng = random.Random(seed)
    seen = set()
    while len(seen) < count:
        got = random_program(rng, ctx, depth)
        if got is None or got[0] in seen:
            continue
        seen.add(got[0])
        yield got


def random_fault_plan(rng: random.Random, hosts=HOSTS, p_fault: float = 0.3, kinds=(CRASH, BYZ_SEEDED)) -> FaultPlan:
    modes = {}
    for h in hosts:
        if rng.random() < p_fault:
            kind = rng.choice(kinds)
            modes[h] = FaultMode(kind, seed=rng.randrange(1 << 16)) if kind == BYZ_SEEDED else FaultMode(kind)
    return FaultPlan(modes)


@dataclass
class PreservationReport:
    verdict: str
    steps: int
    violations: list = field(default_factory=list)
    stuck: str = ""


def check_preservation(e: Expr, t: Type, ctx: TypingCtx, plan: FaultPlan | None = None, fuel: int = 10_000) -> PreservationReport:
    """Step ``e`` to the end, re-typing the configuration after every step."""
    it = Interpreter(plan)
    g = initial_config(e, ctx.host)
    steps, bad = 0, []
    while not g.terminal:
        if steps >= fuel:
            return PreservationReport(TIMEOUT, steps, bad)
        try:
            info = it.step(g)
        except Stuck as exc:
            return PreservationReport(STUCK, steps, bad, str(exc))
        g = info.config
        steps += 1
        try:
            got = typecheck_config(ctx, g)
            if not L.type_equiv(got, t):
                bad.append((steps, info.rule, f"type changed to {got}"))
        except FlaqrTypeError as err:
            bad.append((steps, info.rule, str(err)))
    return PreservationReport(FAIL if L.is_fail(g.expr) else "value", steps, bad)


# ---------------------------------------------------------------------------
# compare trees over replicas


@dataclass
class CompareTree:
    """Select over per-group compares of replica reads; each group is a quorum."""

    program: Expr
    type: Type
    quorum: QuorumSystem
    delegations: list
    host: Principal
    pc: Principal

    @property
    def ctx(self) -> TypingCtx:
        return TypingCtx.make(self.delegations, self.pc, self.host)


def random_compare_tree(rng: random.Random, n_hosts: int = 4, width: int = 3) -> CompareTree:
    """Random groups (size >= 2) of ``n_hosts`` replicas, compared within and selected across."""
    from .programs import CLIENT, PC, standard_delegations

    names = ["a", "b", "c", "d", "e", "f"][:n_hosts]
    hosts = [prim(h) for h in names]
    et = L.enum_type(width)
    k_groups = rng.randint(1, 3)
    groups = []
    while len(groups) < k_groups:
        g = tuple(sorted(rng.sample(names, rng.randint(2, min(3, n_hosts)))))
        if g not in groups:
            groups.append(g)
    value = rng.randrange(width)

    def read(h: str):
        lab = P.canonical(prim(h).ia)
        t = L.Says(lab, et)
        return L.Run(t, L.enum_value(value, width), prim(h)), lab

    def compare(group):
        e, lab = read(group[0])
        for h in group[1:]:
            e2, l2 = read(h)
            lab = P.compare_action(lab, l2)
            e = L.Compare(L.Says(lab, et), e, e2)
        return e, lab

    trees = [compare(g) for g in groups]
    body, lab = trees[-1]
    for e, l in reversed(trees[:-1]):
        lab = P.select_action(l, lab)
        body = L.Select(e, body, L.Says(lab, et))
    q = QuorumSystem(tuple(frozenset(g) for g in groups))
    return CompareTree(body, L.Says(lab, et), q, standard_delegations(hosts), CLIENT, PC)
