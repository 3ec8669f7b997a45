"""Concrete syntax: infix principals and s-expression types and programs.

Principals::

    top  bot  alice  p^c  p^ia  p /\\ q  p \\/ q  p (*) q  p (+) q  p lub q  p glb q

Precedence, tightest first: projection, ``(*)``, ``(+)``, ``/\\``, ``\\/``,
``lub``, ``glb``. All binary operators associate to the left. ``lub`` and
``glb`` are expanded to their definitions while parsing. Inside an
s-expression a principal is either a bare token (``a``, ``c'``, ``a^ia``) or
an infix term in braces (``{a^c /\\ b^c}``).

Types::

    unit  X  (+ t t)  (* t t)  (-> t pc t)  (forall X pc t)  (says l t)  (enum N)

Expressions::

    ()  x  (lam (x t pc) e)  (tlam (X pc) e)  (app e e ...)  (tapp e t)
    (pair e e t)  (proj1 e)  (proj2 e)  (inj1 t e)  (inj2 t e)
    (case e x e1 e2 t)  (unitm l e)  (bind x e e)  (run t e host)
    (select e e t)  (compare t e e)  (const K N)

Runtime terms (accepted so traces round-trip): ``(sealed l v)``,
``(ret e host)``, ``(expect t)``, ``(fail t)``. Harness-only terms
``(bracket e e)`` and ``hole`` require ``allow_brackets=True``.

Line comments start with ``;``. A comment of the form ``;! key value``
is a pragma: ``;! host c``, ``;! pc p``, ``;! acts p >= q``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import lang as L
from . import principals as P
from .principals import BOT, TOP, Principal

# ---------------------------------------------------------------------------
# errors


class FlaqrSyntaxError(ValueError):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {msg}" if line else msg)
        self.msg = msg
        self.line = line
        self.col = col


def _pos(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    col = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, col


# ---------------------------------------------------------------------------
# principals

_P_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<pand>\(\*\)|⊗)
  | (?P<por>\(\+\)|⊕)
  | (?P<and>/\\|∧)
  | (?P<or>\\/|∨)
  | (?P<lub>⊔)
  | (?P<glb>⊓)
  | (?P<proj>\^[cia]+)
  | (?P<lp>\()
  | (?P<rp>\))
  | (?P<top>⊤)
  | (?P<bot>⊥)
  | (?P<id>[A-Za-z_][A-Za-z0-9_']*)
    """,
    re.VERBOSE,
)

_BINOPS = {
    # token kind: (precedence, builder)
    "glb": (0, P.meet),
    "lub": (1, P.join),
    "or": (2, P.Or),
    "and": (3, P.And),
    "por": (4, P.POr),
    "pand": (5, P.PAnd),
}


def _lex_principal(text: str, base: int = 0, full: str | None = None):
    full = text if full is None else full
    toks = []
    i = 0
    while i < len(text):
        m = _P_TOKEN.match(text, i)
        if not m:
            raise FlaqrSyntaxError(f"unexpected character {text[i]!r} in principal", *_pos(full, base + i))
        kind = m.lastgroup
        val = m.group()
        if kind == "id" and val in ("lub", "glb", "top", "bot"):
            kind = val
        if kind != "ws":
            toks.append((kind, val, base + i))
        i = m.end()
    return toks


class _PParser:
    def __init__(self, toks, full):
        self.toks = toks
        self.i = 0
        self.full = full

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else ("eof", "", len(self.full))

    def error(self, msg):
        raise FlaqrSyntaxError(msg, *_pos(self.full, self.peek()[2]))

    def expr(self, min_prec: int = 0) -> Principal:
        left = self.postfix()
        while True:
            kind = self.peek()[0]
            if kind not in _BINOPS or _BINOPS[kind][0] < min_prec:
                return left
            prec, build = _BINOPS[kind]
            self.i += 1
            right = self.expr(prec + 1)
            left = build(left, right)

    def postfix(self) -> Principal:
        p = self.atom()
        while self.peek()[0] == "proj":
            p = P.project(p, self.peek()[1][1:])
            self.i += 1
        return p

    def atom(self) -> Principal:
        kind, val, _ = self.peek()
        if kind == "id":
            self.i += 1
            return P.Prim(val)
        if kind == "top":
            self.i += 1
            return TOP
        if kind == "bot":
            self.i += 1
            return BOT
        if kind == "lp":
            self.i += 1
            p = self.expr()
            if self.peek()[0] != "rp":
                self.error("expected ')'")
            self.i += 1
            return p
        self.error(f"expected a principal, found {val or 'end of input'!r}")


def parse_principal(text: str, _base: int = 0, _full: str | None = None) -> Principal:
    full = text if _full is None else _full
    parser = _PParser(_lex_principal(text, _base, full), full)
    p = parser.expr()
    if parser.peek()[0] != "eof":
        parser.error(f"unexpected {parser.peek()[1]!r}")
    return p


def show_principal(p: Principal) -> str:
    return P.show(p)


_BARE = re.compile(r"[A-Za-z_][A-Za-z0-9_']*(\^[cia])?")


def _principal_sexpr(p: Principal) -> str:
    s = P.show(p)
    return s if _BARE.fullmatch(s) else "{" + s + "}"


# ---------------------------------------------------------------------------
# s-expressions


@dataclass
class Atom:
    text: str
    offset: int


@dataclass
class Braced:
    text: str
    offset: int  # offset of the first character inside the braces


@dataclass
class SList:
    items: list
    offset: int


_S_TOKEN = re.compile(r"\s+|;[^\n]*|\(|\)|\{[^}]*\}|[^\s(){};]+")


def _read_sexprs(text: str) -> list:
    stack: list[SList] = [SList([], 0)]
    i = 0
    while i < len(text):
        m = _S_TOKEN.match(text, i)
        if not m:
            raise FlaqrSyntaxError(f"unexpected character {text[i]!r}", *_pos(text, i))
        tok = m.group()
        if tok[0].isspace() or tok[0] == ";":
            pass
        elif tok == "(":
            stack.append(SList([], i))
        elif tok == ")":
            if len(stack) == 1:
                raise FlaqrSyntaxError("unbalanced ')'", *_pos(text, i))
            done = stack.pop()
            stack[-1].items.append(done)
        elif tok[0] == "{":
            stack[-1].items.append(Braced(tok[1:-1], i + 1))
        else:
            if tok[0] == "{" or "}" in tok:
                raise FlaqrSyntaxError("unbalanced '{'", *_pos(text, i))
            stack[-1].items.append(Atom(tok, i))
        i = m.end()
    if len(stack) != 1:
        raise FlaqrSyntaxError("unclosed '('", *_pos(text, stack[-1].offset))
    return stack[0].items


KEYWORDS = {
    "lam", "tlam", "app", "tapp", "pair", "proj1", "proj2", "inj1", "inj2", "case",
    "unitm", "sealed", "bind", "run", "ret", "expect", "select", "compare", "fail",
    "bracket", "hole", "const", "unit", "forall", "says", "enum",
}


class _Reader:
    def __init__(self, text: str, allow_brackets: bool = False):
        self.text = text
        self.allow_brackets = allow_brackets

    def error(self, msg: str, node) -> None:
        raise FlaqrSyntaxError(msg, *_pos(self.text, getattr(node, "offset", 0)))

    # principals --------------------------------------------------------
    def principal(self, node) -> Principal:
        if isinstance(node, Braced):
            return parse_principal(node.text, node.offset, self.text)
        if isinstance(node, Atom):
            return parse_principal(node.text, node.offset, self.text)
        self.error("expected a principal", node)

    def ident(self, node) -> str:
        if not isinstance(node, Atom) or not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_']*", node.text):
            self.error("expected an identifier", node)
        if node.text in KEYWORDS:
            self.error(f"{node.text!r} is reserved", node)
        return node.text

    def nat(self, node) -> int:
        if not isinstance(node, Atom) or not node.text.isdigit():
            self.error("expected a natural number", node)
        return int(node.text)

    def arity(self, node: SList, n: int) -> list:
        if len(node.items) != n + 1:
            self.error(f"{node.items[0].text} expects {n} argument(s), got {len(node.items) - 1}", node)
        return node.items[1:]

    # types -------------------------------------------------------------
    def type(self, node) -> L.Type:
        if isinstance(node, Atom):
            if node.text == "unit":
                return L.UNIT_T
            return L.TVar(self.ident(node))
        if not isinstance(node, SList) or not node.items or not isinstance(node.items[0], Atom):
            self.error("expected a type", node)
        head = node.items[0].text
        if head == "+":
            a, b = self.arity(node, 2)
            return L.SumT(self.type(a), self.type(b))
        if head == "*":
            a, b = self.arity(node, 2)
            return L.ProdT(self.type(a), self.type(b))
        if head == "->":
            a, pc, b = self.arity(node, 3)
            return L.FunT(self.type(a), self.principal(pc), self.type(b))
        if head == "forall":
            x, pc, b = self.arity(node, 3)
            return L.ForallT(self.ident(x), self.principal(pc), self.type(b))
        if head == "says":
            l, b = self.arity(node, 2)
            return L.Says(self.principal(l), self.type(b))
        if head == "enum":
            (n,) = self.arity(node, 1)
            k = self.nat(n)
            if k < 1:
                self.error("an enumeration needs at least one alternative", n)
            return L.enum_type(k)
        self.error(f"unknown type former {head!r}", node)

    # expressions -------------------------------------------------------
    def expr(self, node) -> L.Expr:
        if isinstance(node, Atom):
            if node.text == "hole":
                if not self.allow_brackets:
                    self.error("'hole' is only available to the noninterference harness", node)
                return L.HOLE
            return L.Var(self.ident(node))
        if isinstance(node, Braced):
            self.error("a principal is not an expression", node)
        if not node.items:
            return L.UNIT
        head_node = node.items[0]
        if not isinstance(head_node, Atom):
            self.error("expected a keyword", node)
        head = head_node.text
        e, t, p = self.expr, self.type, self.principal
        if head == "lam":
            binder, body = self.arity(node, 2)
            if not isinstance(binder, SList) or len(binder.items) != 3:
                self.error("lam binder is (x type pc)", binder)
            x, ty, pc = binder.items
            return L.Lam(self.ident(x), t(ty), p(pc), e(body))
        if head == "tlam":
            binder, body = self.arity(node, 2)
            if not isinstance(binder, SList) or len(binder.items) != 2:
                self.error("tlam binder is (X pc)", binder)
            x, pc = binder.items
            return L.TLam(self.ident(x), p(pc), e(body))
        if head == "app":
            if len(node.items) < 3:
                self.error("app needs a function and at least one argument", node)
            out = e(node.items[1])
            for a in node.items[2:]:
                out = L.App(out, e(a))
            return out
        if head == "tapp":
            f, ty = self.arity(node, 2)
            return L.TApp(e(f), t(ty))
        if head == "pair":
            a, b, ty = self.arity(node, 3)
            return L.Pair(e(a), e(b), t(ty))
        if head in ("proj1", "proj2"):
            (a,) = self.arity(node, 1)
            return L.ProjE(int(head[-1]), e(a))
        if head in ("inj1", "inj2"):
            ty, a = self.arity(node, 2)
            return L.Inj(int(head[-1]), t(ty), e(a))
        if head == "case":
            a, x, l, r, ty = self.arity(node, 5)
            return L.Case(e(a), self.ident(x), e(l), e(r), t(ty))
        if head == "unitm":
            l, a = self.arity(node, 2)
            return L.UnitM(p(l), e(a))
        if head == "sealed":
            l, a = self.arity(node, 2)
            return L.Sealed(p(l), e(a))
        if head == "bind":
            x, a, b = self.arity(node, 3)
            return L.Bind(self.ident(x), e(a), e(b))
        if head == "run":
            ty, a, h = self.arity(node, 3)
            return L.Run(t(ty), e(a), p(h))
        if head == "ret":
            a, h = self.arity(node, 2)
            return L.RetTo(e(a), p(h))
        if head == "expect":
            (ty,) = self.arity(node, 1)
            return L.Expect(t(ty))
        if head == "select":
            a, b, ty = self.arity(node, 3)
            return L.Select(e(a), e(b), t(ty))
        if head == "compare":
            ty, a, b = self.arity(node, 3)
            return L.Compare(t(ty), e(a), e(b))
        if head == "fail":
            (ty,) = self.arity(node, 1)
            return L.Fail(t(ty))
        if head == "const":
            k, n = self.arity(node, 2)
            try:
                return L.enum_value(self.nat(k), self.nat(n))
            except ValueError as exc:
                self.error(str(exc), node)
        if head == "bracket":
            if not self.allow_brackets:
                self.error("brackets are only available to the noninterference harness", node)
            a, b = self.arity(node, 2)
            return L.Bracket(e(a), e(b))
        self.error(f"unknown expression form {head!r}", node)


def _single(text: str):
    items = _read_sexprs(text)
    if len(items) != 1:
        raise FlaqrSyntaxError(f"expected exactly one form, found {len(items)}")
    return items[0]


def parse_type(text: str) -> L.Type:
    return _Reader(text).type(_single(text))


def parse_program(text: str, allow_brackets: bool = False) -> L.Expr:
    return _Reader(text, allow_brackets).expr(_single(text))


def parse_expr(text: str, allow_brackets: bool = False) -> L.Expr:
    return parse_program(text, allow_brackets)


# ---------------------------------------------------------------------------
# source files with pragmas


@dataclass
class SourceFile:
    path: str | None
    program: L.Expr
    host: Principal | None = None
    pc: Principal | None = None
    delegations: list = field(default_factory=list)

    @property
    def hosts(self) -> set[str]:
        """Hosts named by ``run`` and ``ret`` terms."""
        out: set[str] = set()
        for e in L.walk(self.program):
            if isinstance(e, (L.Run, L.RetTo)):
                out |= P.principal_atoms(e.host)
        return out


_PRAGMA = re.compile(r"^\s*;!\s*(\w+)\s+(.*?)\s*$")


def parse_delegation(text: str) -> tuple[Principal, Principal]:
    if ">=" not in text:
        raise FlaqrSyntaxError(f"delegation must read 'p >= q': {text!r}")
    lhs, rhs = text.split(">=", 1)
    return parse_principal(lhs.strip()), parse_principal(rhs.strip())


def parse_delegations(text: str) -> list[tuple[Principal, Principal]]:
    """Comma separated ``p >= q`` judgments."""
    return [parse_delegation(part) for part in text.split(",") if part.strip()]


def parse_source(text: str, path: str | None = None) -> SourceFile:
    src = SourceFile(path, parse_program(text))
    for line in text.splitlines():
        m = _PRAGMA.match(line)
        if not m:
            continue
        key, val = m.groups()
        if key == "host":
            src.host = parse_principal(val)
        elif key == "pc":
            src.pc = parse_principal(val)
        elif key == "acts":
            src.delegations.append(parse_delegation(val))
        else:
            raise FlaqrSyntaxError(f"unknown pragma {key!r}")
    return src


# ---------------------------------------------------------------------------
# printing


def show_type(t: L.Type) -> str:
    if isinstance(t, L.UnitT):
        return "unit"
    if isinstance(t, L.TVar):
        return t.name
    if isinstance(t, L.SumT):
        return f"(+ {show_type(t.left)} {show_type(t.right)})"
    if isinstance(t, L.ProdT):
        return f"(* {show_type(t.left)} {show_type(t.right)})"
    if isinstance(t, L.FunT):
        return f"(-> {show_type(t.arg)} {_principal_sexpr(t.pc)} {show_type(t.ret)})"
    if isinstance(t, L.ForallT):
        return f"(forall {t.var} {_principal_sexpr(t.pc)} {show_type(t.body)})"
    if isinstance(t, L.Says):
        return f"(says {_principal_sexpr(t.label)} {show_type(t.body)})"
    raise TypeError(f"not a type: {t!r}")


def show_expr(e: L.Expr) -> str:
    s, pr, ty = show_expr, _principal_sexpr, show_type
    if isinstance(e, L.Unit):
        return "()"
    if isinstance(e, L.Var):
        return e.name
    if isinstance(e, L.Hole):
        return "hole"
    if isinstance(e, L.Blank):
        return "blank"
    if isinstance(e, L.Lam):
        return f"(lam ({e.var} {ty(e.ty)} {pr(e.pc)}) {s(e.body)})"
    if isinstance(e, L.TLam):
        return f"(tlam ({e.var} {pr(e.pc)}) {s(e.body)})"
    if isinstance(e, L.App):
        return f"(app {s(e.fn)} {s(e.arg)})"
    if isinstance(e, L.TApp):
        return f"(tapp {s(e.fn)} {ty(e.ty)})"
    if isinstance(e, L.Pair):
        return f"(pair {s(e.left)} {s(e.right)} {ty(e.ann)})"
    if isinstance(e, L.ProjE):
        return f"(proj{e.index} {s(e.expr)})"
    if isinstance(e, L.Inj):
        return f"(inj{e.index} {ty(e.ann)} {s(e.expr)})"
    if isinstance(e, L.Case):
        return f"(case {s(e.expr)} {e.var} {s(e.left)} {s(e.right)} {ty(e.ann)})"
    if isinstance(e, L.UnitM):
        return f"(unitm {pr(e.label)} {s(e.expr)})"
    if isinstance(e, L.Sealed):
        return f"(sealed {pr(e.label)} {s(e.value)})"
    if isinstance(e, L.Bind):
        return f"(bind {e.var} {s(e.expr)} {s(e.body)})"
    if isinstance(e, L.Run):
        return f"(run {ty(e.ann)} {s(e.expr)} {pr(e.host)})"
    if isinstance(e, L.RetTo):
        return f"(ret {s(e.expr)} {pr(e.host)})"
    if isinstance(e, L.Expect):
        return f"(expect {ty(e.ann)})"
    if isinstance(e, L.Select):
        return f"(select {s(e.left)} {s(e.right)} {ty(e.ann)})"
    if isinstance(e, L.Compare):
        return f"(compare {ty(e.ann)} {s(e.left)} {s(e.right)})"
    if isinstance(e, L.Fail):
        return f"(fail {ty(e.ann)})"
    if isinstance(e, L.Bracket):
        return f"(bracket {s(e.left)} {s(e.right)})"
    raise TypeError(f"not an expression: {e!r}")


def pretty(e: L.Expr, width: int = 80, indent: int = 0) -> str:
    """Multi-line rendering that breaks forms wider than ``width``."""
    flat = show_expr(e)
    if len(flat) + indent <= width or not L.children(e):
        return flat
    pad = " " * (indent + 2)
    head = flat[1:].split(" ", 1)[0]
    parts = []
    # non-expression fields are printed inline with the head
    if isinstance(e, L.Lam):
        head = f"lam ({e.var} {show_type(e.ty)} {_principal_sexpr(e.pc)})"
    elif isinstance(e, L.TLam):
        head = f"tlam ({e.var} {_principal_sexpr(e.pc)})"
    elif isinstance(e, L.Inj):
        head = f"inj{e.index} {show_type(e.ann)}"
    elif isinstance(e, L.UnitM):
        head = f"unitm {_principal_sexpr(e.label)}"
    elif isinstance(e, L.Sealed):
        head = f"sealed {_principal_sexpr(e.label)}"
    elif isinstance(e, L.Bind):
        head = f"bind {e.var}"
    elif isinstance(e, L.Compare):
        head = f"compare {show_type(e.ann)}"
    elif isinstance(e, L.Case):
        head = "case"
    for c in L.children(e):
        parts.append(pad + pretty(c, width, indent + 2))
    if isinstance(e, L.Case):
        parts.insert(1, pad + e.var)
    tail = []
    if isinstance(e, (L.Pair, L.Select, L.Case)):
        tail.append(pad + show_type(e.ann))
    elif isinstance(e, L.Run):
        tail.append(pad + _principal_sexpr(e.host))
        parts = [pad + show_type(e.ann)] + parts
    elif isinstance(e, L.RetTo):
        tail.append(pad + _principal_sexpr(e.host))
    elif isinstance(e, L.TApp):
        tail.append(pad + show_type(e.ty))
    return "(" + head + "\n" + "\n".join(parts + tail) + ")"


def show_config(g: L.GlobalConfig) -> str:
    frames = " :: ".join(f"<{show_expr(f.expr)} @ {_principal_sexpr(f.host)}>" for f in g.stack)
    return f"<{show_expr(g.expr)} ; {_principal_sexpr(g.host)} ; [{frames}]>"
