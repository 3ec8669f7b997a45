"""Curated programs for the noninterference checks.

Each case names a program with one free input ``x``, the input type, two
inputs, the attacker and facet, and the verdict ``ni_check`` should give.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import lang as L
from . import principals as P
from .ni import PASS, REJECTED, VACUOUS, BracketCtx, NIResult, ni_check
from .principals import Principal, prim
from .programs import CLIENT, PC, majority_quorum_program, standard_delegations
from .quorum import QuorumSystem, majority_system
from .syntax import _principal_sexpr, parse_expr
from .typecheck import TypingCtx


@dataclass
class NICase:
    name: str
    program: L.Expr
    input_type: L.Type
    inputs: tuple
    ctx: TypingCtx
    bctx: BracketCtx
    expect: str
    quorum: QuorumSystem | None = None
    x: str = "x"

    def check(self, **kw) -> NIResult:
        return ni_check(self.program, self.x, self.inputs, self.input_type, self.ctx, self.bctx, self.quorum, **kw)


def _fill(template: str, **subs) -> str:
    out = template
    for k, v in subs.items():
        out = out.replace("{" + k + "}", v)
    return out


# ---------------------------------------------------------------------------
# confidentiality and integrity

# {H}: label of the input; {O}: label of the output; {S}: input type;
# {PC}: the context pc; {CMP}/{SEL}: action labels over two {H} inputs.
CI_TEMPLATES = {
    "constant": "(unitm {O} (const 0 2))",
    "seal-input": "(unitm {O} x)",
    "ignore-arg": "(app (lam (z {S} {PC}) (unitm {O} (const 1 2))) x)",
    "pair-with-public": "(unitm {O} (pair x (const 1 2) (* {S} (enum 2))))",
    "select-input": "(unitm {O} (select x x (says {SEL} (enum 2))))",
    "compare-input": "(unitm {O} (compare (says {CMP} (enum 2)) x x))",
    "remote-echo": "(run (says {OIA} {S}) x top)",
    "bind-public": "(bind y (unitm {O} (const 1 2)) (unitm {O} (pair y x (* (enum 2) {S}))))",
    "case-public": (
        "(case (const 1 2) z (unitm {O} x) (unitm {O} (unitm {H} (const 0 2))) (says {O} {S}))"
    ),
    "poly-ignore": "(app (tapp (tlam (X {PC}) (lam (z X {PC}) (unitm {O} (const 0 2)))) {S}) x)",
    "identity-fn": "(app (lam (z {S} {PC}) (unitm {O} z)) x)",
    "proj-public": "(proj1 (pair (unitm {O} (const 1 2)) x (* (says {O} (enum 2)) {S})))",
    "proj-sealed": "(unitm {O} (proj2 (pair (const 0 2) x (* (enum 2) {S}))))",
    "inject-input": "(unitm {O} (inj1 (+ {S} unit) x))",
    "double-seal": "(unitm {O} (unitm {O} x))",
    "select-public": (
        "(select (unitm {O} (const 0 2)) (unitm {O} (const 1 2)) (says {SELO} (enum 2)))"
    ),
    "higher-order": (
        "(app (lam (f (-> {S} {PC} (says {O} unit)) {PC}) (app f x))"
        " (lam (z {S} {PC}) (unitm {O} ())))"
    ),
    "remote-constant": "(run (says {OIA} (enum 2)) (const 1 2) top)",
}

# each is rejected before it runs
CI_LEAKY = {
    "bind-declassify": "(bind y x (unitm {O} y))",
    "implicit-flow": "(bind y x (case y z (unitm {O} (const 0 2)) (unitm {O} (const 1 2)) (says {O} (enum 2))))",
    "launder-through-fn": "(app (lam (z {S} {PC}) (bind w z (unitm {O} w))) x)",
    "bind-then-constant": "(bind y x (unitm {O} ()))",
}

CI_PC = P.canonical(P.TOP.ia)


def _ci_subs(secret: Principal, observer: Principal) -> dict:
    sx = _principal_sexpr
    s_t = f"(says {sx(secret)} (enum 2))"
    return {
        "H": sx(secret),
        "O": sx(observer),
        "OIA": sx(P.canonical(observer.ia)),
        "S": s_t,
        "PC": sx(CI_PC),
        "CMP": sx(P.compare_action(secret, secret)),
        "SEL": sx(P.select_action(secret, secret)),
        "SELO": sx(P.select_action(observer, observer)),
    }


def _ci_setup(facet: str):
    if facet == "c":
        return P.canonical(prim("s").c), prim("p")
    return P.canonical(prim("s").i), prim("t")


def ci_cases(facet: str) -> list[NICase]:
    """Programs meeting the c-i premises for ``facet`` in ``{"c", "i"}``."""
    secret, observer = _ci_setup(facet)
    subs = _ci_subs(secret, observer)
    ctx = TypingCtx.make((), CI_PC, P.TOP)
    bctx = BracketCtx(prim("s"), facet)
    in_t = L.Says(secret, L.enum_type(2))
    out = []
    for name, tmpl in CI_TEMPLATES.items():
        prog = parse_expr(_fill(tmpl, **subs))
        for a, b in ((0, 1), (1, 0)):
            inputs = (L.Sealed(secret, L.enum_value(a, 2)), L.Sealed(secret, L.enum_value(b, 2)))
            out.append(NICase(f"{facet}/{name}/{a}{b}", prog, in_t, inputs, ctx, bctx, PASS))
    return out


def ci_leaky_cases(facet: str) -> list[NICase]:
    secret, observer = _ci_setup(facet)
    subs = _ci_subs(secret, observer)
    ctx = TypingCtx.make((), CI_PC, P.TOP)
    bctx = BracketCtx(prim("s"), facet)
    in_t = L.Says(secret, L.enum_type(2))
    inputs = (L.Sealed(secret, L.enum_value(0, 2)), L.Sealed(secret, L.enum_value(1, 2)))
    out = [
        NICase(f"{facet}/{name}", parse_expr(_fill(tmpl, **subs)), in_t, inputs, ctx, bctx, REJECTED)
        for name, tmpl in CI_LEAKY.items()
    ]
    # the attacker's input passed off as the observer's own
    low_t = L.Says(observer, L.enum_type(2))
    low = (L.Sealed(observer, L.enum_value(0, 2)), L.Sealed(observer, L.enum_value(1, 2)))
    prog = parse_expr(_fill("(unitm {O} x)", **subs))
    out.append(NICase(f"{facet}/mislabelled-input", prog, low_t, low, ctx, bctx, REJECTED))
    return out


# ---------------------------------------------------------------------------
# availability


def _replace_run(e: L.Expr, host: str, var: str) -> L.Expr:
    if isinstance(e, L.Run) and P.show(e.host) == host:
        return L.Var(var)
    return L.map_children(e, lambda c: _replace_run(c, host, var))


def replica_input_program(m: int, n: int, host: str, width: int = 2):
    """Majority program whose ``host`` replica is the attacker-supplied input ``x``."""
    prog = majority_quorum_program(m, n, sealed=False, width=width)
    expr = _replace_run(prog.expr, host, "x")
    in_t = L.Says(P.canonical(prim(host).ia), L.enum_type(width))
    ctx = TypingCtx.make(prog.delegations, prog.pc, prog.host)
    return expr, in_t, ctx


def _avail_inputs(label: Principal, width: int = 2) -> dict:
    t = L.Says(label, L.enum_type(width))
    v = lambda k: L.Sealed(label, L.enum_value(k, width))  # noqa: E731
    return {
        "value-fail": (v(1), L.Fail(t)),
        "fail-value": (L.Fail(t), v(1)),
        "value-value": (v(0), v(1)),
        "fail-fail": (L.Fail(t), L.Fail(t)),
    }


def _select_pair(first_input: bool, width: int = 2):
    """Select between the input ``x`` (from one host) and a run at the other host."""
    a, b = prim("a"), prim("b")
    mine, other = (a, b) if first_input else (b, a)
    la, lb = P.canonical(mine.ia), P.canonical(other.ia)
    et = L.enum_type(width)
    run = L.Run(L.Says(lb, et), L.enum_value(1, width), other)
    left, right = (L.Var("x"), run) if first_input else (run, L.Var("x"))
    ll, lr = (la, lb) if first_input else (lb, la)
    expr = L.Select(left, right, L.Says(P.select_action(ll, lr), et))
    ctx = TypingCtx.make(standard_delegations([a, b]), PC, CLIENT)
    return expr, L.Says(la, et), ctx, mine


def availability_cases() -> list[NICase]:
    """Programs meeting the availability premises, over two payload widths."""
    out = []
    systems = [(2, 3, majority_system(2, 3)), (3, 5, majority_system(3, 5))]
    for width in (2, 3):
        for m, n, q in systems:
            for h in ("a", "b", "c", "d", "e")[:n]:
                expr, in_t, ctx = replica_input_program(m, n, h, width)
                for kind, inputs in _avail_inputs(in_t.label, width).items():
                    name = f"a/{m}of{n}/w{width}/{h}/{kind}"
                    out.append(NICase(name, expr, in_t, inputs, ctx, BracketCtx(prim(h), "a"), PASS, q))
        either = QuorumSystem.of(["a"], ["b"])
        for first in (True, False):
            expr, in_t, ctx, who = _select_pair(first, width)
            for kind, inputs in _avail_inputs(in_t.label, width).items():
                name = f"a/select-{'left' if first else 'right'}/w{width}/{kind}"
                out.append(NICase(name, expr, in_t, inputs, ctx, BracketCtx(who, "a"), PASS, either))
    return out


def availability_fragile_cases() -> list[NICase]:
    """Inputs the attacker could fail although their type promises otherwise, and unguarded outputs."""
    out = []
    q1 = majority_system(2, 3)
    expr, in_t, ctx = replica_input_program(2, 3, "a")
    # a fails an input typed as b's: the bracket is unprotected
    b_t = L.Says(P.canonical(prim("b").ia), L.enum_type(2))
    mis = _replace_run(majority_quorum_program(2, 3, sealed=False, width=2).expr, "b", "x")
    for kind in ("value-fail", "fail-value"):
        inputs = _avail_inputs(b_t.label)[kind]
        out.append(NICase(f"a/blame-shift/{kind}", mis, b_t, inputs, ctx, BracketCtx(prim("a"), "a"), REJECTED, q1))
    # trusted-looking input, failed by a
    t_lab = P.canonical(prim("t").ia)
    t_t = L.Says(t_lab, L.enum_type(2))
    echo = parse_expr(f"(select x x (says {_principal_sexpr(P.select_action(t_lab, t_lab))} (enum 2)))")
    for kind in ("value-fail", "fail-value"):
        inputs = _avail_inputs(t_lab)[kind]
        out.append(NICase(f"a/forged-trust/{kind}", echo, t_t, inputs, ctx, BracketCtx(prim("a"), "a"), REJECTED, q1))
    # one replica alone is not guarded by the quorum system
    alone = L.Var("x")
    for kind in ("value-fail", "fail-value"):
        inputs = _avail_inputs(in_t.label)[kind]
        out.append(NICase(f"a/single-replica/{kind}", alone, in_t, inputs, ctx, BracketCtx(prim("a"), "a"), VACUOUS, q1))
    return out


def ci_suite() -> list[NICase]:
    return ci_cases("c") + ci_cases("i")


def availability_suite() -> list[NICase]:
    return availability_cases()


def leaky_cases() -> list[NICase]:
    return ci_leaky_cases("c") + ci_leaky_cases("i") + availability_fragile_cases()
