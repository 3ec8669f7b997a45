"""Builders for the worked example programs and majority-quorum families."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import reduce
from importlib import resources

from . import lang as L
from . import principals as P
from .principals import Principal, prim
from .syntax import SourceFile, parse_source

PC = prim("pc")
CLIENT = prim("c'")


@dataclass
class Program:
    """A closed program together with the context it is checked in."""

    expr: L.Expr
    host: Principal
    pc: Principal
    delegations: list = field(default_factory=list)
    hosts: tuple = ()

    @property
    def ctx(self) -> P.DelegationContext:
        return P.as_ctx(self.delegations)


def standard_delegations(hosts) -> list:
    """pc flows to each replica's integrity; each replica may read the pc; the client acts for pc."""
    out = []
    for h in hosts:
        out.append((PC, h))
        out.append((h, PC.c))
    out.append((CLIENT, PC))
    return out


def _payload_type(hosts, sealed: bool, width: int) -> L.Type:
    base = L.enum_type(width)
    if not sealed:
        return base
    return L.Says(P.canonical(P.conj(*hosts).c), base)


def _payload(hosts, value: int, sealed: bool, width: int) -> L.Expr:
    v = L.enum_value(value, width)
    if not sealed:
        return v
    return L.UnitM(P.canonical(P.conj(*hosts).c), v)


def compare_label(labels) -> Principal:
    return reduce(P.compare_action, labels)


def quorum_label(groups) -> Principal:
    """Select, folded to the right, over per-quorum compare labels."""
    labels = [compare_label(g) for g in groups]
    return reduce(lambda acc, l: P.select_action(l, acc), reversed(labels[:-1]), labels[-1])


def majority_quorums(names, m: int) -> list[tuple[str, ...]]:
    if len(names) == 3 and m == 2:
        a, b, c = names
        return [(a, b), (b, c), (a, c)]
    return list(itertools.combinations(names, m))


def majority_quorum_program(
    m: int,
    n: int,
    values=None,
    names=None,
    sealed: bool = True,
    width: int = 4,
) -> Program:
    """Client at ``c'`` reads ``n`` replicas and accepts any ``m`` that agree.

    ``values[k]`` is the balance stored at replica ``k`` (default all 1).
    ``sealed`` seals each balance at the conjoined confidentiality of all
    replicas; otherwise the payload is a bare enumeration.
    """
    names = list(names or ("a", "b", "c", "d", "e", "f", "g")[:n])
    if len(names) != n or not 0 < m <= n:
        raise ValueError("need 0 < m <= n and n host names")
    values = list(values if values is not None else [1] * n)
    hosts = [prim(h) for h in names]
    body_t = _payload_type(hosts, sealed, width)
    labels = {h: P.canonical(P.prim(h).ia) for h in names}
    arg_t = {h: L.Says(labels[h], body_t) for h in names}
    var = {h: f"x_{h}" for h in names}

    def compare_tree(group):
        acc_e = L.Var(var[group[0]])
        acc_l = labels[group[0]]
        for h in group[1:]:
            acc_l = P.compare_action(acc_l, labels[h])
            acc_e = L.Compare(L.Says(acc_l, body_t), acc_e, L.Var(var[h]))
        return acc_e, acc_l

    groups = majority_quorums(names, m)
    trees = [compare_tree(g) for g in groups]
    body, label = trees[-1]
    for e, l in reversed(trees[:-1]):
        label = P.select_action(l, label)
        body = L.Select(e, body, L.Says(label, body_t))
    fn = body
    for h in reversed(names):
        fn = L.Lam(var[h], arg_t[h], PC, fn)
    expr = fn
    for h, v in zip(names, values):
        expr = L.App(expr, L.Run(arg_t[h], _payload(hosts, v, sealed, width), prim(h)))
    return Program(expr, CLIENT, PC, standard_delegations(hosts), tuple(hosts))


def quorum_type(m: int, n: int, sealed: bool = True, width: int = 4, names=None) -> L.Type:
    names = list(names or ("a", "b", "c", "d", "e", "f", "g")[:n])
    hosts = [prim(h) for h in names]
    groups = [[P.canonical(prim(h).ia) for h in g] for g in majority_quorums(names, m)]
    return L.Says(quorum_label(groups), _payload_type(hosts, sealed, width))


def replica(values=(1, 1, 1), sealed: bool = True) -> Program:
    """Three-replica bank balance, 2/3 majority."""
    return majority_quorum_program(2, 3, values, sealed=sealed)


def replica_type(sealed: bool = True) -> L.Type:
    return quorum_type(2, 3, sealed)


def replica_mistyped() -> Program:
    """Third compare reads ``y`` where ``z`` belongs."""
    prog = replica()

    def swap(e):
        if isinstance(e, L.Compare) and e.left == L.Var("x_a") and e.right == L.Var("x_c"):
            return L.Compare(e.ann, e.left, L.Var("x_b"))
        return L.map_children(e, swap)

    return Program(swap(prog.expr), prog.host, prog.pc, prog.delegations, prog.hosts)


# ---------------------------------------------------------------------------
# availability from replication with integrity from sealing

MAX_WIDTH = 4


def _max_expr(x: str, y: str, width: int, seal) -> L.Expr:
    """``seal(max(x, y))`` on enumerations, by case analysis on both arguments."""
    et = L.enum_type(width)

    def branch_on(e: L.Expr, n: int, leaf, ann: L.Type, tag: str, base: int = 0):
        if n == 1:
            return leaf(base)
        z = f"_{tag}{base}"
        return L.Case(e, z, leaf(base), branch_on(L.Var(z), n - 1, leaf, ann, tag, base + 1), ann)

    def result(k: int) -> L.Expr:
        return seal(L.enum_value(k, width))

    ann = seal.type(et)
    return branch_on(
        L.Var(x), width,
        lambda i: branch_on(L.Var(y), width, lambda j: result(max(i, j)), ann, "r"),
        ann, "l",
    )


class _Seal:
    def __init__(self, outer: Principal, inner: Principal):
        self.outer, self.inner = outer, inner

    def __call__(self, v: L.Expr) -> L.Expr:
        return L.UnitM(self.outer, L.UnitM(self.inner, v))

    def type(self, t: L.Type) -> L.Type:
        return L.Says(self.outer, L.Says(self.inner, t))


def bank(values=(1, 2), width: int = MAX_WIDTH, printed_order: bool = False) -> Program:
    """Maximum of two replicated balances, then select between agreement and either copy.

    ``printed_order`` passes the ``b'`` run first, as in the published
    listing; that application is ill-typed.
    """
    b, b2 = prim("b"), prim("b'")
    hosts = (b, b2)
    conf = P.canonical(P.conj(b.c, b2.c))
    et = L.enum_type(width)
    inner_t = L.Says(conf, et)
    lb, lb2 = P.canonical(b.ia), P.canonical(b2.ia)
    tb, tb2 = L.Says(lb, inner_t), L.Says(lb2, inner_t)
    d = P.canonical(P.join(P.join(PC, b), b2))
    seal = _Seal(d, conf)
    maxed = _max_expr("x2", "y2", width, seal)
    combined = L.Bind("x", L.Var("arg1"), L.Bind("y", L.Var("arg2"),
               L.Bind("x2", L.Var("x"), L.Bind("y2", L.Var("y"), maxed))))
    either_label = P.select_action(lb, lb2)
    either = L.Select(L.Var("arg1"), L.Var("arg2"), L.Says(either_label, inner_t))
    out_t = L.Says(P.select_action(d, either_label), inner_t)
    body = L.Select(combined, either, out_t)
    fn = L.Lam("arg1", tb, PC, L.Lam("arg2", tb2, PC, body))
    run_b = L.Run(tb, L.UnitM(conf, L.enum_value(values[0], width)), b)
    run_b2 = L.Run(tb2, L.UnitM(conf, L.enum_value(values[1], width)), b2)
    first, second = (run_b2, run_b) if printed_order else (run_b, run_b2)
    expr = L.App(L.App(fn, first), second)
    return Program(expr, CLIENT, PC, standard_delegations(hosts), hosts)


def bank_type(width: int = MAX_WIDTH) -> L.Type:
    b, b2 = prim("b"), prim("b'")
    d = P.canonical(P.join(P.join(PC, b), b2))
    conf = P.canonical(P.conj(b.c, b2.c))
    lab = P.select_action(d, P.select_action(P.canonical(b.ia), P.canonical(b2.ia)))
    return L.Says(lab, L.Says(conf, L.enum_type(width)))


# ---------------------------------------------------------------------------
# shipped sources


def shipped(name: str) -> str:
    return resources.files("flaqr").joinpath("data", name).read_text()


def load_shipped(name: str) -> SourceFile:
    return parse_source(shipped(name), name)


def as_program(src: SourceFile) -> Program:
    return Program(src.program, src.host or P.TOP, src.pc or P.BOT, list(src.delegations), tuple(prim(h) for h in sorted(src.hosts)))
