"""Independent reference procedures for acts-for.

``model_acts_for`` enumerates two-valued models directly on the principal
AST, sharing no code with the bit-packed solver.

``Saturation`` forward-closes the acts-for rules over the finite carrier
generated from a set of primitives until fixpoint. It works on terms without
projections, where the projection rules are inert, and keeps the relation as
a boolean matrix over term nodes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .principals import (
    BOT,
    PROJECTIONS,
    TOP,
    And,
    BotP,
    Or,
    PAnd,
    POr,
    Prim,
    Principal,
    Proj,
    TopP,
    as_ctx,
    principal_atoms,
)

# ---------------------------------------------------------------------------
# brute-force models


def _eval(p: Principal, tag: str, env: dict[str, int], mu: int, sigma: int) -> int:
    if isinstance(p, Prim):
        return env[p.name]
    if isinstance(p, TopP):
        return 1
    if isinstance(p, BotP):
        return 0
    if isinstance(p, Proj):
        return _eval(p.base, tag, env, mu, sigma) if p.tag == tag else 0
    l = _eval(p.left, tag, env, mu, sigma)
    r = _eval(p.right, tag, env, mu, sigma)
    if isinstance(p, And):
        return max(l, r)
    if isinstance(p, Or):
        return min(l, r)
    if l == r:
        return l
    return mu if isinstance(p, PAnd) else sigma


MODES = ((0, 0), (1, 0), (1, 1))


def model_acts_for(ctx, p: Principal, q: Principal) -> bool:
    """Exhaustive check of ``p >= q`` over all two-valued models."""
    ctx = as_ctx(ctx)
    names = principal_atoms(p) | principal_atoms(q)
    for h1, h2 in ctx.delegations:
        names |= principal_atoms(h1) | principal_atoms(h2)
    names = sorted(names)
    for tag in PROJECTIONS:
        for mu, sigma in MODES:
            for bits in itertools.product((0, 1), repeat=len(names)):
                env = dict(zip(names, bits))
                if all(
                    _eval(h1, tag, env, mu, sigma) >= _eval(h2, tag, env, mu, sigma)
                    for h1, h2 in ctx.delegations
                ) and _eval(p, tag, env, mu, sigma) < _eval(q, tag, env, mu, sigma):
                    return False
    return True


# ---------------------------------------------------------------------------
# rule saturation

_OPS = ("and", "or", "pand", "por")
_CTOR = {"and": And, "or": Or, "pand": PAnd, "por": POr}

# distributivity schemes: outer(A, inner(B, C)) == inner(outer(A, B), outer(A, C))
_DIST = (
    ("and", "or"),  # ConjDistDisj
    ("or", "and"),  # DisjDistConj
    ("and", "por"),  # AndDistPOr
    ("por", "and"),  # POrDistAnd
    ("or", "por"),  # OrDistPOr
    ("por", "or"),  # POrDistOr
    ("and", "pand"),  # AndDistPAnd
    ("pand", "and"),  # PAndDistAnd
    ("or", "pand"),  # OrDistPAnd
    ("pand", "or"),  # PAndDistOr
)


@dataclass
class Saturation:
    """Closure of ``generators`` under the four connectives, ordered by saturation.

    ``constants_as_operands`` also feeds top and bottom to the connectives;
    otherwise they are only adjoined as bounds.
    """

    generators: tuple[str, ...]
    constants_as_operands: bool = False
    max_nodes: int = 6000
    max_points: int = 64
    nodes: list = field(default_factory=list)
    terms: list = field(default_factory=list)

    def __post_init__(self) -> None:
        self._index: dict = {}
        self._add(("top",), TOP)
        self._add(("bot",), BOT)
        for g in self.generators:
            self._add(("v", g), Prim(g))
        self.rel = np.zeros((0, 0), dtype=bool)
        self._run()

    # -- node management -------------------------------------------------
    def _add(self, key, term) -> int:
        if key in self._index:
            return self._index[key]
        self._index[key] = len(self.nodes)
        self.nodes.append(key)
        self.terms.append(term)
        return len(self.nodes) - 1

    def _grow(self) -> None:
        n_old = self.rel.shape[0]
        n = len(self.nodes)
        rel = np.zeros((n, n), dtype=bool)
        rel[:n_old, :n_old] = self.rel
        self.rel = rel

    # -- classes ---------------------------------------------------------
    def _classes(self) -> np.ndarray:
        eq = self.rel & self.rel.T
        return eq.argmax(axis=1)  # least node index in each class

    # -- main loop -------------------------------------------------------
    def _fingerprint(self, p: Principal) -> tuple:
        out = []
        for mu, sigma in MODES:
            for bits in itertools.product((0, 1), repeat=len(self.generators)):
                out.append(_eval(p, "c", dict(zip(self.generators, bits)), mu, sigma))
        return tuple(out)

    def _candidates(self) -> list[Principal]:
        """Smallest term of every model-distinct point of the closure.

        Only proposes the carrier; the order and the closure itself are
        established by saturation.
        """
        seen: dict[tuple, Principal] = {}
        frontier = [Prim(g) for g in self.generators]
        if self.constants_as_operands:
            frontier += [TOP, BOT]
        for p in frontier:
            seen.setdefault(self._fingerprint(p), p)
        while True:
            pts = list(seen.values())
            fresh = {}
            for op in _OPS:
                for a in pts:
                    for b in pts:
                        t = _CTOR[op](a, b)
                        fp = self._fingerprint(t)
                        if fp not in seen and fp not in fresh:
                            fresh[fp] = t
            if not fresh:
                return pts
            if len(seen) + len(fresh) > self.max_points:
                raise RuntimeError(f"closure exceeds {self.max_points} points")
            seen.update(fresh)

    def _run(self) -> None:
        cands = [c for c in self._candidates() if not isinstance(c, (TopP, BotP, Prim))]
        operands = [self._index[("v", g)] for g in self.generators]
        if self.constants_as_operands:
            operands += [self._index[("top",)], self._index[("bot",)]]
        operands += [self._term_node(c) for c in cands]
        self.operands = operands
        for op in _OPS:
            for a in operands:
                for b in operands:
                    self._add((op, a, b), _CTOR[op](self.terms[a], self.terms[b]))
        if len(self.nodes) > self.max_nodes:
            raise RuntimeError(f"carrier exceeds {self.max_nodes} nodes")
        self._grow()
        self._saturate()
        cls = self._classes()
        self.classes = cls
        self.reps = sorted(set(cls.tolist()))
        rep_classes = {int(cls[k]) for k in operands} | {int(cls[self._index[("top",)]]), int(cls[self._index[("bot",)]])}
        # closed iff every connective applied to carrier points lands on a carrier point
        self.closed = set(self.reps) <= rep_classes

    def _term_node(self, p: Principal) -> int:
        if isinstance(p, Prim):
            return self._index[("v", p.name)]
        if isinstance(p, TopP):
            return self._index[("top",)]
        if isinstance(p, BotP):
            return self._index[("bot",)]
        op = {And: "and", Or: "or", PAnd: "pand", POr: "por"}[type(p)]
        return self._add((op, self._term_node(p.left), self._term_node(p.right)), p)

    def _saturate(self) -> None:
        rel = self.rel
        n = len(self.nodes)
        idx = {op: [] for op in _OPS}
        for k, key in enumerate(self.nodes):
            if key[0] in idx:
                idx[key[0]].append((k, key[1], key[2]))
        cols = {op: tuple(np.array(v, dtype=int).reshape(-1, 3).T) for op, v in idx.items()}
        top, bot = self._index[("top",)], self._index[("bot",)]
        rel[np.arange(n), np.arange(n)] = True  # Refl
        rel[top, :] = True  # Top
        rel[:, bot] = True  # Bot
        N, A, B = cols["and"]
        rel[N, A] = rel[N, B] = True  # ConjL
        N, A, B = cols["or"]
        rel[A, N] = rel[B, N] = True  # DisjR
        while True:
            before = rel.copy()
            self._closure(rel)
            cls = self._classes().tolist()
            table = {}
            for op in _OPS:
                for k, a, b in idx[op]:
                    table.setdefault((op, cls[a], cls[b]), k)

            def look(op, a, b):
                return table.get((op, cls[a], cls[b]))

            # AndPAnd, PAndPOr, POrOr
            for k, a, b in idx["pand"]:
                m = look("and", a, b)
                if m is not None:
                    rel[m, k] = True
                m = look("por", a, b)
                if m is not None:
                    rel[k, m] = True
            for k, a, b in idx["por"]:
                m = look("or", a, b)
                if m is not None:
                    rel[k, m] = True
            # ConjR, PAndR: c >= a and c >= b gives c >= op(a, b)
            for op in ("and", "pand"):
                N, A, B = cols[op]
                if len(N):
                    rel[:, N] |= rel[:, A] & rel[:, B]
            # DisjL, PAndL (both operands): a >= c and b >= c gives op(a, b) >= c
            for op in ("or", "pand"):
                N, A, B = cols[op]
                if len(N):
                    rel[N, :] |= rel[A, :] & rel[B, :]
            # monotonicity and commutativity of every connective
            for op in _OPS:
                N, A, B = cols[op]
                if len(N):
                    same = rel[np.ix_(A, A)] & rel[np.ix_(B, B)]
                    swap = rel[np.ix_(A, B)] & rel[np.ix_(B, A)]
                    rel[np.ix_(N, N)] |= same | swap
            # distributivity, instantiated where both sides are present
            reps = sorted({cls[k] for k in self.operands})
            for outer, inner in _DIST:
                for a in reps:
                    for b in reps:
                        ab = look(outer, a, b)
                        for c in reps:
                            bc = look(inner, b, c)
                            if bc is None:
                                continue
                            lhs = look(outer, a, bc)
                            if lhs is None or ab is None:
                                continue
                            ac = look(outer, a, c)
                            if ac is None:
                                continue
                            rhs = look(inner, ab, ac)
                            if rhs is None:
                                continue
                            rel[lhs, rhs] = rel[rhs, lhs] = True
            if np.array_equal(before, rel):
                return

    @staticmethod
    def _closure(rel: np.ndarray) -> None:
        while True:
            f = rel.astype(np.float32)
            nxt = rel | ((f @ f) > 0)
            if np.array_equal(nxt, rel):
                return
            rel[:] = nxt

    # -- queries ---------------------------------------------------------
    def points(self) -> list[Principal]:
        """One smallest term per equivalence class."""
        out = []
        for r in self.reps:
            members = np.flatnonzero(self.classes == r)
            best = min(members, key=lambda m: (len(str(self.terms[m])), str(self.terms[m])))
            out.append(self.terms[best])
        return out

    def acts_for(self, p_index: int, q_index: int) -> bool:
        return bool(self.rel[p_index, q_index])

    def order(self) -> dict[tuple[int, int], bool]:
        """Relation between class representatives."""
        return {(a, b): bool(self.rel[a, b]) for a in self.reps for b in self.reps}

    def node_of(self, p: Principal) -> int | None:
        """Node denoting ``p``, if ``p`` is built from carrier operands."""
        if isinstance(p, TopP):
            return self._index[("top",)]
        if isinstance(p, BotP):
            return self._index[("bot",)]
        if isinstance(p, Prim):
            return self._index.get(("v", p.name))
        for op, ctor in _CTOR.items():
            if isinstance(p, ctor):
                a, b = self.node_of(p.left), self.node_of(p.right)
                if a is None or b is None:
                    return None
                cls = self.classes
                for k, key in enumerate(self.nodes):
                    if key[0] == op and cls[key[1]] == cls[a] and cls[key[2]] == cls[b]:
                        return k
                return None
        return None
