"""Quorum systems, toleration sets, availability attackers and guarded types."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

from . import lang as L
from . import principals as P
from .principals import Principal, acts_for


@dataclass(frozen=True)
class QuorumSystem:
    quorums: tuple  # of frozensets of host names

    def __post_init__(self):
        qs = tuple(frozenset(q) for q in self.quorums)
        if not qs or any(not q for q in qs):
            raise ValueError("a quorum system needs at least one non-empty quorum")
        object.__setattr__(self, "quorums", qs)

    @staticmethod
    def of(*quorums) -> "QuorumSystem":
        return QuorumSystem(tuple(frozenset(q) for q in quorums))

    @staticmethod
    def from_json(text_or_obj) -> "QuorumSystem":
        obj = json.loads(text_or_obj) if isinstance(text_or_obj, str) else text_or_obj
        if not isinstance(obj, dict) or "quorums" not in obj:
            raise ValueError('quorum config must be {"quorums": [[host, ...], ...]}')
        return QuorumSystem(tuple(frozenset(map(str, q)) for q in obj["quorums"]))

    @property
    def universe(self) -> frozenset:
        return frozenset().union(*self.quorums)


def reach(l: Principal) -> Principal:
    """Authority of ``l`` as an availability attacker: its integrity and availability."""
    return P.canonical(l.ia)


def tolerated_sets(q: QuorumSystem) -> list[frozenset]:
    """Maximal non-empty host sets whose failure leaves some quorum intact."""
    hosts = sorted(q.universe)
    ok = []
    for k in range(1, len(hosts) + 1):
        for f in itertools.combinations(hosts, k):
            fs = frozenset(f)
            if any(not (qq & fs) for qq in q.quorums):
                ok.append(fs)
    return [f for f in ok if not any(f < g for g in ok)]


def toleration_set(q: QuorumSystem) -> list[Principal]:
    return [reach(P.conj(*(P.Prim(h) for h in sorted(f)))) for f in tolerated_sets(q)]


def in_attacker_set(ctx, l: Principal, q: QuorumSystem) -> bool:
    return any(acts_for(ctx, t, l) for t in toleration_set(q))


def guards(ctx, q: QuorumSystem, t: L.Type, cross_check: bool = True) -> bool:
    """No tolerated attacker can fail ``t``.

    Checking the toleration elements suffices because ``fails`` is monotone
    in the attacker; ``cross_check`` also tries every dominated host subset.
    """
    ok = not any(L.fails(ctx, ti, t) for ti in toleration_set(q))
    if ok and cross_check:
        for f in tolerated_sets(q):
            for k in range(1, len(f)):
                for sub in itertools.combinations(sorted(f), k):
                    weaker = reach(P.conj(*(P.Prim(h) for h in sub)))
                    assert not L.fails(ctx, weaker, t), "fails is not monotone here"
    return ok


def majority_bound(q: QuorumSystem) -> tuple[int, int] | None:
    """``(m, n)`` when the quorums are exactly all ``m``-subsets of ``n`` hosts, ``m > n/2``."""
    n = len(q.universe)
    sizes = {len(x) for x in q.quorums}
    if len(sizes) != 1:
        return None
    (m,) = sizes
    if 2 * m <= n:
        return None
    want = {frozenset(c) for c in itertools.combinations(sorted(q.universe), m)}
    return (m, n) if set(q.quorums) == want else None


def majority_system(m: int, n: int, names=None) -> QuorumSystem:
    names = list(names or ("a", "b", "c", "d", "e", "f", "g")[:n])
    return QuorumSystem(tuple(frozenset(c) for c in itertools.combinations(names, m)))
