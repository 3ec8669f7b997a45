"""FLAQR abstract syntax and the auxiliary type-level judgments.

Types, expressions and values are immutable dataclasses. Besides the
constructors this module holds substitution, type equivalence and the
judgments that the checker and the quorum analysis share: clearance,
availability of types, protection, reads, fails and the bracket erasure
``cfun``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

from . import principals as P
from .principals import BOT, TOP, And, Or, PAnd, POr, Principal, acts_for, flows_to

# ---------------------------------------------------------------------------
# types


class Type:
    __slots__ = ()

    def __str__(self) -> str:
        from .syntax import show_type

        return show_type(self)


@dataclass(frozen=True)
class UnitT(Type):
    __str__ = Type.__str__


@dataclass(frozen=True)
class TVar(Type):
    name: str

    __str__ = Type.__str__


@dataclass(frozen=True)
class SumT(Type):
    left: Type
    right: Type

    __str__ = Type.__str__


@dataclass(frozen=True)
class ProdT(Type):
    left: Type
    right: Type

    __str__ = Type.__str__


@dataclass(frozen=True)
class FunT(Type):
    arg: Type
    pc: Principal
    ret: Type

    __str__ = Type.__str__


@dataclass(frozen=True)
class ForallT(Type):
    var: str
    pc: Principal
    body: Type

    __str__ = Type.__str__


@dataclass(frozen=True)
class Says(Type):
    label: Principal
    body: Type

    __str__ = Type.__str__


UNIT_T = UnitT()

# ---------------------------------------------------------------------------
# expressions


class Expr:
    __slots__ = ()

    def __str__(self) -> str:
        from .syntax import show_expr

        return show_expr(self)


@dataclass(frozen=True)
class Unit(Expr):
    __str__ = Expr.__str__


@dataclass(frozen=True)
class Var(Expr):
    name: str

    __str__ = Expr.__str__


@dataclass(frozen=True)
class App(Expr):
    fn: Expr
    arg: Expr

    __str__ = Expr.__str__


@dataclass(frozen=True)
class TApp(Expr):
    fn: Expr
    ty: Type

    __str__ = Expr.__str__


@dataclass(frozen=True)
class Lam(Expr):
    var: str
    ty: Type
    pc: Principal
    body: Expr

    __str__ = Expr.__str__


@dataclass(frozen=True)
class TLam(Expr):
    var: str
    pc: Principal
    body: Expr

    __str__ = Expr.__str__


@dataclass(frozen=True)
class Pair(Expr):
    left: Expr
    right: Expr
    ann: Type

    __str__ = Expr.__str__


@dataclass(frozen=True)
class ProjE(Expr):
    index: int
    expr: Expr

    __str__ = Expr.__str__


@dataclass(frozen=True)
class Inj(Expr):
    index: int
    ann: Type
    expr: Expr

    __str__ = Expr.__str__


@dataclass(frozen=True)
class Case(Expr):
    """``case e of inj1 x -> left | inj2 x -> right``; ``ann`` is the result type."""

    expr: Expr
    var: str
    left: Expr
    right: Expr
    ann: Type

    __str__ = Expr.__str__


@dataclass(frozen=True)
class UnitM(Expr):
    label: Principal
    expr: Expr

    __str__ = Expr.__str__


@dataclass(frozen=True)
class Sealed(Expr):
    label: Principal
    value: Expr

    __str__ = Expr.__str__


@dataclass(frozen=True)
class Bind(Expr):
    var: str
    expr: Expr
    body: Expr

    __str__ = Expr.__str__


@dataclass(frozen=True)
class Run(Expr):
    ann: Type
    expr: Expr
    host: Principal

    __str__ = Expr.__str__


@dataclass(frozen=True)
class RetTo(Expr):
    expr: Expr
    host: Principal

    __str__ = Expr.__str__


@dataclass(frozen=True)
class Expect(Expr):
    ann: Type

    __str__ = Expr.__str__


@dataclass(frozen=True)
class Select(Expr):
    left: Expr
    right: Expr
    ann: Type

    __str__ = Expr.__str__


@dataclass(frozen=True)
class Compare(Expr):
    ann: Type
    left: Expr
    right: Expr

    __str__ = Expr.__str__


@dataclass(frozen=True)
class Fail(Expr):
    ann: Type

    __str__ = Expr.__str__


@dataclass(frozen=True)
class Bracket(Expr):
    left: Expr
    right: Expr

    __str__ = Expr.__str__


@dataclass(frozen=True)
class Hole(Expr):
    __str__ = Expr.__str__


@dataclass(frozen=True)
class Blank(Expr):
    """``o``: an observation hidden from the observer."""

    __str__ = Expr.__str__


UNIT = Unit()
HOLE = Hole()
BLANK = Blank()

RUNTIME_ONLY = (Sealed, Fail, RetTo, Expect, Bracket, Hole, Blank)


def children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, (Unit, Var, Expect, Fail, Hole, Blank)):
        return ()
    if isinstance(e, App):
        return (e.fn, e.arg)
    if isinstance(e, TApp):
        return (e.fn,)
    if isinstance(e, (Lam, TLam)):
        return (e.body,)
    if isinstance(e, (Pair, Select, Bracket)):
        return (e.left, e.right)
    if isinstance(e, Compare):
        return (e.left, e.right)
    if isinstance(e, (ProjE, Inj, UnitM, Run, RetTo)):
        return (e.expr,)
    if isinstance(e, Sealed):
        return (e.value,)
    if isinstance(e, Case):
        return (e.expr, e.left, e.right)
    if isinstance(e, Bind):
        return (e.expr, e.body)
    raise TypeError(f"not an expression: {e!r}")


def walk(e: Expr) -> Iterator[Expr]:
    yield e
    for c in children(e):
        yield from walk(c)


def is_source(e: Expr) -> bool:
    """True iff ``e`` contains no runtime-only term."""
    return not any(isinstance(x, RUNTIME_ONLY) for x in walk(e))


def size(e: Expr) -> int:
    return sum(1 for _ in walk(e))


def is_value(e: Expr) -> bool:
    if isinstance(e, (Unit, Lam, TLam)):
        return True
    if isinstance(e, Sealed):
        return is_value(e.value)
    if isinstance(e, Inj):
        return is_value(e.expr)
    if isinstance(e, (Pair, Bracket)):
        return is_value(e.left) and is_value(e.right)
    return False


def is_fail(e: Expr) -> bool:
    return isinstance(e, Fail)


def is_fv(e: Expr) -> bool:
    """Value or fail term."""
    if isinstance(e, Bracket):
        return is_fv(e.left) and is_fv(e.right)
    return is_value(e) or isinstance(e, Fail)


# ---------------------------------------------------------------------------
# enumerations encoded as sums of units


@lru_cache(maxsize=None)
def enum_type(n: int) -> Type:
    """``n`` alternatives: ``unit + (unit + ... )``."""
    if n < 1:
        raise ValueError("an enumeration needs at least one alternative")
    if n == 1:
        return UNIT_T
    return SumT(UNIT_T, enum_type(n - 1))


def enum_value(k: int, n: int) -> Expr:
    if not 0 <= k < n:
        raise ValueError(f"constant {k} outside enumeration of size {n}")
    if n == 1:
        return UNIT
    if k == 0:
        return Inj(1, enum_type(n), UNIT)
    return Inj(2, enum_type(n), enum_value(k - 1, n - 1))


def enum_index(v: Expr) -> int | None:
    """Inverse of :func:`enum_value`; ``None`` if ``v`` is not an enum constant."""
    if isinstance(v, Unit):
        return 0
    if isinstance(v, Inj) and v.index == 1 and isinstance(v.expr, Unit):
        return 0
    if isinstance(v, Inj) and v.index == 2:
        k = enum_index(v.expr)
        return None if k is None else k + 1
    return None


# ---------------------------------------------------------------------------
# free variables and substitution


def free_vars(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Lam):
        return free_vars(e.body) - {e.var}
    if isinstance(e, Bind):
        return free_vars(e.expr) | (free_vars(e.body) - {e.var})
    if isinstance(e, Case):
        return free_vars(e.expr) | ((free_vars(e.left) | free_vars(e.right)) - {e.var})
    out: set[str] = set()
    for c in children(e):
        out |= free_vars(c)
    return out


def type_free_vars(t: Type) -> set[str]:
    if isinstance(t, TVar):
        return {t.name}
    if isinstance(t, UnitT):
        return set()
    if isinstance(t, (SumT, ProdT)):
        return type_free_vars(t.left) | type_free_vars(t.right)
    if isinstance(t, FunT):
        return type_free_vars(t.arg) | type_free_vars(t.ret)
    if isinstance(t, ForallT):
        return type_free_vars(t.body) - {t.var}
    if isinstance(t, Says):
        return type_free_vars(t.body)
    raise TypeError(f"not a type: {t!r}")


def _fresh(base: str, avoid: set[str]) -> str:
    k = 1
    while f"{base}_{k}" in avoid:
        k += 1
    return f"{base}_{k}"


def subst(e: Expr, x: str, v: Expr) -> Expr:
    """``e[x := v]``; binders are renamed when ``v`` has free variables they would capture."""
    fv = free_vars(v)
    return _subst(e, x, v, fv) if fv else _subst_closed(e, x, v)


def _subst_closed(e: Expr, x: str, v: Expr) -> Expr:
    if isinstance(e, Var):
        return v if e.name == x else e
    if isinstance(e, (Unit, Expect, Fail, Hole)):
        return e
    if isinstance(e, Lam):
        return e if e.var == x else Lam(e.var, e.ty, e.pc, _subst_closed(e.body, x, v))
    if isinstance(e, Bind):
        body = e.body if e.var == x else _subst_closed(e.body, x, v)
        return Bind(e.var, _subst_closed(e.expr, x, v), body)
    if isinstance(e, Case):
        if e.var == x:
            return Case(_subst_closed(e.expr, x, v), e.var, e.left, e.right, e.ann)
        return Case(_subst_closed(e.expr, x, v), e.var, _subst_closed(e.left, x, v), _subst_closed(e.right, x, v), e.ann)
    return map_children(e, lambda c: _subst_closed(c, x, v))


def _binder(var: str, bodies: tuple, x: str, v: Expr, fv: set[str]) -> tuple[str, tuple]:
    """Rename ``var`` away from ``fv`` in ``bodies``, then substitute."""
    if var == x:
        return var, bodies
    if var in fv:
        avoid = fv | {x}
        for b in bodies:
            avoid |= free_vars(b)
        new = _fresh(var, avoid)
        bodies = tuple(_subst_closed(b, var, Var(new)) for b in bodies)
        var = new
    return var, tuple(_subst(b, x, v, fv) for b in bodies)


def _subst(e: Expr, x: str, v: Expr, fv: set[str]) -> Expr:
    if isinstance(e, Var):
        return v if e.name == x else e
    if isinstance(e, (Unit, Expect, Fail, Hole)):
        return e
    if isinstance(e, Lam):
        var, (body,) = _binder(e.var, (e.body,), x, v, fv)
        return Lam(var, e.ty, e.pc, body)
    if isinstance(e, Bind):
        var, (body,) = _binder(e.var, (e.body,), x, v, fv)
        return Bind(var, _subst(e.expr, x, v, fv), body)
    if isinstance(e, Case):
        var, (left, right) = _binder(e.var, (e.left, e.right), x, v, fv)
        return Case(_subst(e.expr, x, v, fv), var, left, right, e.ann)
    return map_children(e, lambda c: _subst(c, x, v, fv))


def map_children(e: Expr, f) -> Expr:
    if isinstance(e, App):
        return App(f(e.fn), f(e.arg))
    if isinstance(e, TApp):
        return TApp(f(e.fn), e.ty)
    if isinstance(e, TLam):
        return TLam(e.var, e.pc, f(e.body))
    if isinstance(e, Lam):
        return Lam(e.var, e.ty, e.pc, f(e.body))
    if isinstance(e, Pair):
        return Pair(f(e.left), f(e.right), e.ann)
    if isinstance(e, ProjE):
        return ProjE(e.index, f(e.expr))
    if isinstance(e, Inj):
        return Inj(e.index, e.ann, f(e.expr))
    if isinstance(e, UnitM):
        return UnitM(e.label, f(e.expr))
    if isinstance(e, Sealed):
        return Sealed(e.label, f(e.value))
    if isinstance(e, Run):
        return Run(e.ann, f(e.expr), e.host)
    if isinstance(e, RetTo):
        return RetTo(f(e.expr), e.host)
    if isinstance(e, Select):
        return Select(f(e.left), f(e.right), e.ann)
    if isinstance(e, Compare):
        return Compare(e.ann, f(e.left), f(e.right))
    if isinstance(e, Bracket):
        return Bracket(f(e.left), f(e.right))
    if isinstance(e, Bind):
        return Bind(e.var, f(e.expr), f(e.body))
    if isinstance(e, Case):
        return Case(f(e.expr), e.var, f(e.left), f(e.right), e.ann)
    return e


def subst_type(t: Type, X: str, s: Type) -> Type:
    """``t[X := s]`` for closed ``s``."""
    if isinstance(t, TVar):
        return s if t.name == X else t
    if isinstance(t, UnitT):
        return t
    if isinstance(t, SumT):
        return SumT(subst_type(t.left, X, s), subst_type(t.right, X, s))
    if isinstance(t, ProdT):
        return ProdT(subst_type(t.left, X, s), subst_type(t.right, X, s))
    if isinstance(t, FunT):
        return FunT(subst_type(t.arg, X, s), t.pc, subst_type(t.ret, X, s))
    if isinstance(t, ForallT):
        return t if t.var == X else ForallT(t.var, t.pc, subst_type(t.body, X, s))
    if isinstance(t, Says):
        return Says(t.label, subst_type(t.body, X, s))
    raise TypeError(f"not a type: {t!r}")


def subst_tyvar(e: Expr, X: str, s: Type) -> Expr:
    """Substitute type ``s`` for ``X`` in every annotation of ``e``."""

    def ty(t: Type) -> Type:
        return subst_type(t, X, s)

    def go(e: Expr) -> Expr:
        if isinstance(e, TLam):
            return e if e.var == X else TLam(e.var, e.pc, go(e.body))
        if isinstance(e, Lam):
            return Lam(e.var, ty(e.ty), e.pc, go(e.body))
        if isinstance(e, TApp):
            return TApp(go(e.fn), ty(e.ty))
        if isinstance(e, Pair):
            return Pair(go(e.left), go(e.right), ty(e.ann))
        if isinstance(e, Inj):
            return Inj(e.index, ty(e.ann), go(e.expr))
        if isinstance(e, Case):
            return Case(go(e.expr), e.var, go(e.left), go(e.right), ty(e.ann))
        if isinstance(e, Run):
            return Run(ty(e.ann), go(e.expr), e.host)
        if isinstance(e, Expect):
            return Expect(ty(e.ann))
        if isinstance(e, Select):
            return Select(go(e.left), go(e.right), ty(e.ann))
        if isinstance(e, Compare):
            return Compare(ty(e.ann), go(e.left), go(e.right))
        if isinstance(e, Fail):
            return Fail(ty(e.ann))
        return map_children(e, go)

    return go(e)


# ---------------------------------------------------------------------------
# type equivalence


def label_equiv(p: Principal, q: Principal, ctx=None) -> bool:
    return P.equiv(ctx, p, q)


def type_equiv(t1: Type, t2: Type, ctx=None, _env: tuple = ()) -> bool:
    """Structural equality up to label equivalence and renaming of bound variables."""
    if isinstance(t1, UnitT) and isinstance(t2, UnitT):
        return True
    if isinstance(t1, TVar) and isinstance(t2, TVar):
        for a, b in _env:
            if a == t1.name or b == t2.name:
                return a == t1.name and b == t2.name
        return t1.name == t2.name
    if type(t1) is not type(t2):
        return False
    if isinstance(t1, (SumT, ProdT)):
        return type_equiv(t1.left, t2.left, ctx, _env) and type_equiv(t1.right, t2.right, ctx, _env)
    if isinstance(t1, FunT):
        return (
            label_equiv(t1.pc, t2.pc, ctx)
            and type_equiv(t1.arg, t2.arg, ctx, _env)
            and type_equiv(t1.ret, t2.ret, ctx, _env)
        )
    if isinstance(t1, ForallT):
        return label_equiv(t1.pc, t2.pc, ctx) and type_equiv(
            t1.body, t2.body, ctx, ((t1.var, t2.var),) + _env
        )
    if isinstance(t1, Says):
        return label_equiv(t1.label, t2.label, ctx) and type_equiv(t1.body, t2.body, ctx, _env)
    return False


def canonical_type(t: Type) -> Type:
    """Canonicalize every label in ``t``."""
    c = P.canonical
    if isinstance(t, (UnitT, TVar)):
        return t
    if isinstance(t, SumT):
        return SumT(canonical_type(t.left), canonical_type(t.right))
    if isinstance(t, ProdT):
        return ProdT(canonical_type(t.left), canonical_type(t.right))
    if isinstance(t, FunT):
        return FunT(canonical_type(t.arg), c(t.pc), canonical_type(t.ret))
    if isinstance(t, ForallT):
        return ForallT(t.var, c(t.pc), canonical_type(t.body))
    if isinstance(t, Says):
        return Says(c(t.label), canonical_type(t.body))
    raise TypeError(f"not a type: {t!r}")


# ---------------------------------------------------------------------------
# auxiliary judgments


def clearance(t: Type) -> Principal:
    """Upper bound of the pc annotations inside ``t``; authority join of the parts."""
    if isinstance(t, (UnitT, TVar)):
        return BOT
    if isinstance(t, Says):
        return clearance(t.body)
    if isinstance(t, (SumT, ProdT)):
        return P.canonical(And(clearance(t.left), clearance(t.right)))
    if isinstance(t, FunT):
        return P.canonical(And(And(clearance(t.arg), t.pc), clearance(t.ret)))
    if isinstance(t, ForallT):
        return P.canonical(And(t.pc, clearance(t.body)))
    raise TypeError(f"not a type: {t!r}")


def type_avail(t: Type) -> Principal:
    """Availability policy ``t^a`` of a type."""
    if isinstance(t, UnitT):
        return TOP
    if isinstance(t, TVar):
        return BOT
    if isinstance(t, (SumT, ProdT)):
        return P.join(type_avail(t.left), type_avail(t.right))
    if isinstance(t, Says):
        return P.join(t.label.a, type_avail(t.body))
    if isinstance(t, FunT):
        return P.join(P.join(type_avail(t.arg), t.pc.a), type_avail(t.ret))
    if isinstance(t, ForallT):
        return P.join(t.pc.a, type_avail(t.body))
    raise TypeError(f"not a type: {t!r}")


def protects(ctx, l: Principal, t: Type) -> bool:
    """``ctx |- l <= t``: every label guarding ``t`` is at least ``l``."""
    if isinstance(t, UnitT):
        return True
    if isinstance(t, ProdT):
        return protects(ctx, l, t.left) and protects(ctx, l, t.right)
    if isinstance(t, FunT):
        return protects(ctx, l, t.ret) and flows_to(ctx, l, t.pc)
    if isinstance(t, ForallT):
        return protects(ctx, l, t.body) and flows_to(ctx, l, t.pc)
    if isinstance(t, Says):
        return flows_to(ctx, l, t.label)
    return False  # sums and type variables have no protection rule


def reads(ctx, p: Principal, t: Type) -> bool:
    """``ctx |- p reads t``: ``p`` may read every value nested in ``t``."""
    if isinstance(t, UnitT):
        return True
    if isinstance(t, (SumT, ProdT)):
        return reads(ctx, p, t.left) and reads(ctx, p, t.right)
    if isinstance(t, Says):
        return acts_for(ctx, p.c, t.label.c) and reads(ctx, p, t.body)
    if isinstance(t, FunT):
        return reads(ctx, p, t.arg) and reads(ctx, p, t.ret)
    if isinstance(t, ForallT):
        return reads(ctx, p, t.body)
    return False


def pand_operands(label: Principal) -> list[Principal]:
    """Operands of a top-level partial conjunction in the integrity of ``label``."""
    comp = P.component(label, "i")
    if comp[0] != "pand":
        return []
    return [P.rebuild(arg, "i") for arg in comp[1:]]


def fails(ctx, l: Principal, t: Type) -> bool:
    """``ctx |- l fails t``: ``l`` can force a term of type ``t`` to fail."""
    if isinstance(t, (ProdT, SumT)):
        return fails(ctx, l, t.left) or fails(ctx, l, t.right)
    if isinstance(t, FunT):
        return fails(ctx, l, t.ret)
    if isinstance(t, Says):
        if fails(ctx, l, t.body):  # A-Type
            return True
        if acts_for(ctx, l.a, t.label.a):  # A-Avail
            return True
        return any(acts_for(ctx, l.i, op) for op in pand_operands(t.label))  # A-IntegCom
    return False


def _erase_label(l: Principal) -> Principal:
    """Replace a top-level partial connective in each conjunct by the full one."""
    if isinstance(l, And):
        return And(_erase_label(l.left), _erase_label(l.right))
    if isinstance(l, PAnd):
        return And(_strip(l.left, PAnd), _strip(l.right, PAnd))
    if isinstance(l, POr):
        return Or(_strip(l.left, POr), _strip(l.right, POr))
    return l


def _strip(l: Principal, cls) -> Principal:
    """Flatten a chain of ``cls`` into the corresponding full connective."""
    if isinstance(l, cls):
        full = And if cls is PAnd else Or
        return full(_strip(l.left, cls), _strip(l.right, cls))
    return l


def cfun(t: Type) -> Type:
    """Erase partial connectives from the outermost layer of every ``says`` label."""
    if isinstance(t, (UnitT, TVar)):
        return t
    if isinstance(t, SumT):
        return SumT(cfun(t.left), cfun(t.right))
    if isinstance(t, ProdT):
        return ProdT(cfun(t.left), cfun(t.right))
    if isinstance(t, FunT):
        return FunT(cfun(t.arg), t.pc, cfun(t.ret))
    if isinstance(t, ForallT):
        return ForallT(t.var, t.pc, cfun(t.body))
    if isinstance(t, Says):
        return Says(_erase_label(t.label), cfun(t.body))
    raise TypeError(f"not a type: {t!r}")


def remote_pc(host: Principal, label: Principal) -> Principal:
    """pc of code run at ``host`` whose result is sealed at ``label``.

    Integrity and availability come from ``label``; confidentiality is the
    host's own.
    """
    return P.canonical(And(host.c, label.ia))



# ---------------------------------------------------------------------------
# global configurations


@dataclass(frozen=True)
class Frame:
    """Suspended caller ``E[expect t]`` waiting at ``host``."""

    expr: Expr
    host: Principal


@dataclass(frozen=True)
class GlobalConfig:
    """``<expr ; host ; stack>``; ``stack[0]`` is the innermost frame."""

    expr: Expr
    host: Principal
    stack: tuple = ()

    def __str__(self) -> str:
        from .syntax import show_config

        return show_config(self)

    @property
    def terminal(self) -> bool:
        return not self.stack and is_fv(self.expr)
