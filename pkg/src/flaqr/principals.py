"""FLAQR principals: terms, canonical forms and the acts-for decision procedure.

Authority is decided semantically. A principal is a triple of components
(confidentiality, integrity, availability); each component is a term over
atoms ``n^pi`` built with ``/\\``, ``\\/``, ``(*)`` and ``(+)``. A two-valued
model of one component assigns a bit to every atom and a mode ``(mu, sigma)``
with ``sigma <= mu``:

* ``p /\\ q`` is the maximum and ``p \\/ q`` the minimum;
* ``p (*) q`` is the common value when the operands agree, else ``mu``;
* ``p (+) q`` is the common value when the operands agree, else ``sigma``.

``p >= q`` holds under a delegation context iff every model satisfying the
delegations gives ``p`` at least the value of ``q`` in every component. All
models of one component are packed into the bits of a Python integer, so a
query costs a handful of bitwise operations.
"""

from __future__ import annotations

import enum
import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Iterator

PROJECTIONS = ("c", "i", "a")


class Principal:
    """Base class of principal terms."""

    __slots__ = ()

    def __str__(self) -> str:
        return show(self)

    # operator sugar used heavily in tests and program builders
    def __and__(self, other: "Principal") -> "Principal":
        return And(self, other)

    def __or__(self, other: "Principal") -> "Principal":
        return Or(self, other)

    def __mul__(self, other: "Principal") -> "Principal":
        return PAnd(self, other)

    def __add__(self, other: "Principal") -> "Principal":
        return POr(self, other)

    def proj(self, tags: str) -> "Principal":
        """``p^tags``; several tags give the conjunction of projections."""
        return project(self, tags)

    @property
    def c(self) -> "Principal":
        return Proj(self, "c")

    @property
    def i(self) -> "Principal":
        return Proj(self, "i")

    @property
    def a(self) -> "Principal":
        return Proj(self, "a")

    @property
    def ia(self) -> "Principal":
        return project(self, "ia")


@dataclass(frozen=True, eq=True, repr=True)
class Prim(Principal):
    name: str

    __str__ = Principal.__str__


@dataclass(frozen=True, eq=True, repr=True)
class TopP(Principal):
    __str__ = Principal.__str__


@dataclass(frozen=True, eq=True, repr=True)
class BotP(Principal):
    __str__ = Principal.__str__


@dataclass(frozen=True, eq=True, repr=True)
class Proj(Principal):
    base: Principal
    tag: str

    def __post_init__(self) -> None:
        if self.tag not in PROJECTIONS:
            raise ValueError(f"projection tag must be one of c, i, a: {self.tag!r}")

    __str__ = Principal.__str__


@dataclass(frozen=True, eq=True, repr=True)
class And(Principal):
    left: Principal
    right: Principal

    __str__ = Principal.__str__


@dataclass(frozen=True, eq=True, repr=True)
class Or(Principal):
    left: Principal
    right: Principal

    __str__ = Principal.__str__


@dataclass(frozen=True, eq=True, repr=True)
class PAnd(Principal):
    """Partial conjunction ``p (*) q``."""

    left: Principal
    right: Principal

    __str__ = Principal.__str__


@dataclass(frozen=True, eq=True, repr=True)
class POr(Principal):
    """Partial disjunction ``p (+) q``."""

    left: Principal
    right: Principal

    __str__ = Principal.__str__


TOP = TopP()
BOT = BotP()
BINARY = (And, Or, PAnd, POr)


def prim(name: str) -> Prim:
    return Prim(name)


def project(p: Principal, tags: str) -> Principal:
    """``p^{tags}``: conjunction of the listed projections."""
    if not tags:
        raise ValueError("empty projection")
    parts = [Proj(p, t) for t in tags]
    return conj(*parts)


def conj(*ps: Principal) -> Principal:
    if not ps:
        return BOT
    out = ps[0]
    for p in ps[1:]:
        out = And(out, p)
    return out


def disj(*ps: Principal) -> Principal:
    if not ps:
        return TOP
    out = ps[0]
    for p in ps[1:]:
        out = Or(out, p)
    return out


def join(p: Principal, q: Principal) -> Principal:
    """Flows-to join: ``(p^c /\\ q^c) /\\ (p^i \\/ q^i) /\\ (p^a \\/ q^a)``."""
    return canonical(And(And(And(p.c, q.c), Or(p.i, q.i)), Or(p.a, q.a)))


def meet(p: Principal, q: Principal) -> Principal:
    """Flows-to meet: ``(p^c \\/ q^c) /\\ (p^i /\\ q^i) /\\ (p^a /\\ q^a)``."""
    return canonical(And(And(Or(p.c, q.c), And(p.i, q.i)), And(p.a, q.a)))


def compare_action(l1: Principal, l2: Principal) -> Principal:
    """Label of a consensus over ``l1`` and ``l2``."""
    return canonical(And(And(And(l1.c, l2.c), PAnd(l1.i, l2.i)), Or(l1.a, l2.a)))


def select_action(l1: Principal, l2: Principal) -> Principal:
    """Label of a replicated read over ``l1`` and ``l2``."""
    return canonical(And(And(And(l1.c, l2.c), POr(l1.i, l2.i)), And(l1.a, l2.a)))


# ---------------------------------------------------------------------------
# printing

_PREC = {Or: 1, And: 2, POr: 3, PAnd: 4}
_SYM = {And: "/\\", Or: "\\/", PAnd: "(*)", POr: "(+)"}


def show(p: Principal) -> str:
    """ASCII rendering accepted by :func:`flaqr.syntax.parse_principal`."""
    return _show(p, 0)


def _show(p: Principal, ctx: int) -> str:
    if isinstance(p, Prim):
        return p.name
    if isinstance(p, TopP):
        return "top"
    if isinstance(p, BotP):
        return "bot"
    if isinstance(p, Proj):
        return f"{_show(p.base, 5)}^{p.tag}"
    prec = _PREC[type(p)]
    # operators are associative, so only the right operand needs a tighter bound
    s = f"{_show(p.left, prec)} {_SYM[type(p)]} {_show(p.right, prec + 1)}"
    return f"({s})" if prec < ctx else s


# ---------------------------------------------------------------------------
# component terms
#
# A component term is a nested tuple:
#   ("0",)  ("1",)  ("v", name)  (op, arg1, arg2, ...) with op in and/or/pand/por

ZERO = ("0",)
ONE = ("1",)
_OPS = {And: "and", Or: "or", PAnd: "pand", POr: "por"}
_CLS = {v: k for k, v in _OPS.items()}


@lru_cache(maxsize=200_000)
def component(p: Principal, tag: str) -> tuple:
    """Normalized ``tag``-component of ``p``, with projections pushed to atoms."""
    if isinstance(p, Prim):
        return ("v", p.name)
    if isinstance(p, TopP):
        return ONE
    if isinstance(p, BotP):
        return ZERO
    if isinstance(p, Proj):
        return component(p.base, tag) if p.tag == tag else ZERO
    op = _OPS[type(p)]
    return _mk(op, [component(p.left, tag), component(p.right, tag)])


def _key(t: tuple) -> str:
    return repr(t)


def _mk(op: str, args: list[tuple]) -> tuple:
    flat: list[tuple] = []
    for a in args:
        if a[0] == op:
            flat.extend(a[1:])
        else:
            flat.append(a)
    if op == "and":
        if ONE in flat:
            return ONE
        flat = [a for a in flat if a != ZERO]
        if not flat:
            return ZERO
    elif op == "or":
        if ZERO in flat:
            return ZERO
        flat = [a for a in flat if a != ONE]
        if not flat:
            return ONE
    uniq = sorted(set(flat), key=_key)
    if len(uniq) == 1:
        return uniq[0]
    return (op, *uniq)


def atoms_of(t: tuple, out: set[str] | None = None) -> set[str]:
    out = set() if out is None else out
    if t[0] == "v":
        out.add(t[1])
    elif t[0] not in ("0", "1"):
        for a in t[1:]:
            atoms_of(a, out)
    return out


def rebuild(t: tuple, tag: str | None) -> Principal:
    """Principal whose ``tag``-component is ``t`` and whose other components are bottom.

    ``tag=None`` rebuilds the unprojected term (all components equal ``t``).
    """
    if t == ZERO:
        return BOT
    if t == ONE:
        return TOP if tag is None else Proj(TOP, tag)
    if t[0] == "v":
        return Prim(t[1]) if tag is None else Proj(Prim(t[1]), tag)
    cls = _CLS[t[0]]
    parts = [rebuild(a, tag) for a in t[1:]]
    out = parts[0]
    for q in parts[1:]:
        out = cls(out, q)
    return out


@lru_cache(maxsize=100_000)
def canonical(p: Principal) -> Principal:
    """Normal form: per-component flattening, sorting and unit collapse.

    Idempotent and acts-for-equivalent to ``p``. When all three components
    coincide the unprojected term is returned.
    """
    comps = [component(p, t) for t in PROJECTIONS]
    if comps[0] == comps[1] == comps[2]:
        return rebuild(comps[0], None)
    parts = [rebuild(c, t) for c, t in zip(comps, PROJECTIONS) if c != ZERO]
    return conj(*parts) if parts else BOT


def principal_atoms(p: Principal) -> set[str]:
    """Primitive names occurring in ``p``."""
    if isinstance(p, Prim):
        return {p.name}
    if isinstance(p, (TopP, BotP)):
        return set()
    if isinstance(p, Proj):
        return principal_atoms(p.base)
    return principal_atoms(p.left) | principal_atoms(p.right)


def subterms(p: Principal) -> Iterator[Principal]:
    yield p
    if isinstance(p, Proj):
        yield from subterms(p.base)
    elif isinstance(p, BINARY):
        yield from subterms(p.left)
        yield from subterms(p.right)


# ---------------------------------------------------------------------------
# delegation contexts


@dataclass(frozen=True)
class DelegationContext:
    """Finite set of assumed judgments ``p >= q``."""

    delegations: frozenset = frozenset()

    @staticmethod
    def of(pairs: Iterable[tuple[Principal, Principal]] = ()) -> "DelegationContext":
        return DelegationContext(frozenset((p, q) for p, q in pairs))

    def __iter__(self):
        return iter(sorted(self.delegations, key=lambda pq: (show(pq[0]), show(pq[1]))))

    def __len__(self) -> int:
        return len(self.delegations)

    def extend(self, pairs: Iterable[tuple[Principal, Principal]]) -> "DelegationContext":
        return DelegationContext(self.delegations | frozenset(pairs))


EMPTY = DelegationContext()


def as_ctx(ctx) -> DelegationContext:
    if ctx is None:
        return EMPTY
    if isinstance(ctx, DelegationContext):
        return ctx
    return DelegationContext.of(ctx)


# ---------------------------------------------------------------------------
# decision procedure


class Verdict(enum.Enum):
    TRUE = "true"
    FALSE = "false"
    UNKNOWN = "unknown"  # atom budget exceeded


_hooks: list[Callable[[DelegationContext, Principal, Principal, str], None]] = []
_hook_lock = threading.Lock()


def add_diagnostics_hook(fn: Callable[[DelegationContext, Principal, Principal, str], None]) -> None:
    """Register ``fn(ctx, p, q, reason)``; called whenever a query is undecided."""
    with _hook_lock:
        _hooks.append(fn)


def remove_diagnostics_hook(fn) -> None:
    with _hook_lock:
        if fn in _hooks:
            _hooks.remove(fn)


def _report(ctx, p, q, reason) -> None:
    with _hook_lock:
        hooks = list(_hooks)
    for fn in hooks:
        fn(ctx, p, q, reason)


DEFAULT_MAX_ATOMS = 16


class _Models:
    """Bit-packed models of one component over a fixed atom list.

    Bit ``m * 2**k + s`` is the model with mode ``m`` (0: mu=sigma=0,
    1: mu=1 sigma=0, 2: mu=sigma=1) and atom assignment ``s``.
    """

    def __init__(self, atoms: tuple[str, ...]):
        k = len(atoms)
        block = 1 << k
        self.full = (1 << (3 * block)) - 1
        ones = (1 << block) - 1
        self.index = {a: j for j, a in enumerate(atoms)}
        self.atom_mask = {}
        for a, j in self.index.items():
            w = 1 << j
            pat = ones // ((1 << (2 * w)) - 1) * (((1 << w) - 1) << w)
            self.atom_mask[a] = pat | (pat << block) | (pat << (2 * block))
        self.mu = ones << block | ones << (2 * block)
        self.sigma = ones << (2 * block)

    def mask(self, t: tuple) -> int:
        tag = t[0]
        if tag == "0":
            return 0
        if tag == "1":
            return self.full
        if tag == "v":
            return self.atom_mask[t[1]]
        ms = [self.mask(a) for a in t[1:]]
        if tag == "and":
            out = 0
            for m in ms:
                out |= m
            return out
        if tag == "or":
            out = self.full
            for m in ms:
                out &= m
            return out
        hi, lo = 0, self.full
        for m in ms:
            hi |= m
            lo &= m
        return lo | (hi & ~lo & (self.mu if tag == "pand" else self.sigma))


@lru_cache(maxsize=4096)
def _models(atoms: tuple[str, ...]) -> _Models:
    return _Models(atoms)


@lru_cache(maxsize=200_000)
def _decide_component(hyps: tuple[tuple[tuple, tuple], ...], p: tuple, q: tuple, max_atoms: int) -> Verdict:
    if p == q or q == ZERO or p == ONE:
        return Verdict.TRUE
    names = atoms_of(p) | atoms_of(q)
    for h1, h2 in hyps:
        atoms_of(h1, names)
        atoms_of(h2, names)
    if len(names) > max_atoms:
        return Verdict.UNKNOWN
    m = _models(tuple(sorted(names)))
    valid = m.full
    for h1, h2 in hyps:
        valid &= m.mask(h1) | ~m.mask(h2)
    bad = m.mask(q) & ~m.mask(p) & valid
    return Verdict.FALSE if bad else Verdict.TRUE


@lru_cache(maxsize=4096)
def _ctx_components(ctx: DelegationContext, tag: str) -> tuple:
    out = []
    for h1, h2 in ctx.delegations:
        c1, c2 = component(h1, tag), component(h2, tag)
        if c2 == ZERO or c1 == ONE or c1 == c2:
            continue  # trivially satisfied by every model
        out.append((c1, c2))
    return tuple(sorted(set(out), key=repr))


def decide(ctx, p: Principal, q: Principal, max_atoms: int = DEFAULT_MAX_ATOMS) -> Verdict:
    """Three-valued acts-for: TRUE, FALSE, or UNKNOWN when over budget."""
    ctx = as_ctx(ctx)
    unknown = False
    for tag in PROJECTIONS:
        v = _decide_component(_ctx_components(ctx, tag), component(p, tag), component(q, tag), max_atoms)
        if v is Verdict.FALSE:
            return v
        if v is Verdict.UNKNOWN:
            unknown = True
    if unknown:
        _report(ctx, p, q, f"more than {max_atoms} atoms in one component")
        return Verdict.UNKNOWN
    return Verdict.TRUE


def acts_for(ctx, p: Principal, q: Principal, max_atoms: int = DEFAULT_MAX_ATOMS) -> bool:
    """``ctx |- p >= q``. Undecided queries answer False and notify the hooks."""
    return decide(ctx, p, q, max_atoms) is Verdict.TRUE


def equiv(ctx, p: Principal, q: Principal) -> bool:
    return acts_for(ctx, p, q) and acts_for(ctx, q, p)


def flows_to(ctx, p: Principal, q: Principal) -> bool:
    """``p`` flows to ``q``: ``q^c >= p^c``, ``p^i >= q^i`` and ``p^a >= q^a``."""
    return (
        acts_for(ctx, q.c, p.c)
        and acts_for(ctx, p.i, q.i)
        and acts_for(ctx, p.a, q.a)
    )


def flows_equiv(ctx, p: Principal, q: Principal) -> bool:
    return flows_to(ctx, p, q) and flows_to(ctx, q, p)


def clear_caches() -> None:
    for f in (component, canonical, _models, _decide_component, _ctx_components):
        f.cache_clear()
