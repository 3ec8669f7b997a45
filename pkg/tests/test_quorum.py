"""Quorum systems, toleration sets and guarded types."""

import json

import pytest

from flaqr import lang as L
from flaqr import principals as P
from flaqr.principals import prim
from flaqr.programs import replica, replica_type, shipped
from flaqr.quorum import (
    QuorumSystem, guards, in_attacker_set, majority_bound, majority_system, reach, tolerated_sets,
    toleration_set,
)
from flaqr.syntax import parse_type

a, b, c, p, q, r = (prim(n) for n in "abcpqr")
Q1 = majority_system(2, 3)
Q_PRIME = QuorumSystem.of("ab", "ac")
CTX = P.EMPTY
# availability of a result that needs both a and one of b, c
GUARD_T = parse_type("(says {a (*) b (+) (b (*) c (+) a (*) c)} (says a unit))")


def same_elements(got, want):
    return len(got) == len(want) and all(any(P.equiv(P.EMPTY, g, w) for g in got) for w in want)


def test_reach_is_integrity_and_availability():
    assert P.equiv(P.EMPTY, reach(p), P.conj(p.i, p.a))
    assert not P.acts_for(P.EMPTY, reach(p), p.c)


def test_tolerated_sets():
    assert sorted(map(sorted, tolerated_sets(Q1))) == [["a"], ["b"], ["c"]]
    assert sorted(map(sorted, tolerated_sets(Q_PRIME))) == [["b"], ["c"]]
    assert sorted(map(sorted, tolerated_sets(QuorumSystem.of("pq", "r")))) == [["p", "q"], ["r"]]
    assert tolerated_sets(QuorumSystem.of(["alice"])) == []


def test_toleration_set_heterogeneous():
    got = toleration_set(QuorumSystem.of("pq", "r"))
    assert same_elements(got, [P.conj(p, q).ia, r.ia])


def test_toleration_set_majority():
    assert same_elements(toleration_set(Q1), [a.ia, b.ia, c.ia])
    assert same_elements(toleration_set(Q_PRIME), [b.ia, c.ia])


def test_attacker_membership():
    assert in_attacker_set(CTX, b.ia, Q1)
    assert in_attacker_set(CTX, b.i, Q1)
    assert not in_attacker_set(CTX, P.conj(a, b).ia, Q1)
    assert not in_attacker_set(CTX, a.ia, Q_PRIME)


def test_guards():
    assert not guards(CTX, Q1, GUARD_T)
    assert guards(CTX, Q_PRIME, GUARD_T)


def test_guards_with_action_labels():
    A, B, C = (P.canonical(h.ia) for h in (a, b, c))
    says = lambda lab: L.Says(lab, L.UNIT_T)  # noqa: E731
    # compare needs both sides: one faulty replica fails it
    assert not guards(CTX, Q1, says(P.compare_action(A, B)))
    # select needs one side: a single faulty replica cannot fail it
    assert guards(CTX, Q1, says(P.select_action(A, B)))
    assert guards(CTX, Q1, says(P.select_action(A, P.compare_action(B, C))))
    pairs = [P.compare_action(A, B), P.compare_action(B, C), P.compare_action(A, C)]
    assert guards(CTX, Q1, says(P.select_action(pairs[0], P.select_action(pairs[1], pairs[2]))))


def test_sealed_balance_type_is_not_guarded():
    prog = replica()
    assert not guards(prog.ctx, Q1, replica_type())


def test_majority_bound():
    assert majority_bound(Q1) == (2, 3)
    assert majority_bound(majority_system(3, 5)) == (3, 5)
    assert majority_bound(QuorumSystem.of("a")) == (1, 1)
    assert majority_bound(Q_PRIME) is None
    assert majority_bound(QuorumSystem.of("ab", "cd")) is None


@pytest.mark.parametrize("name,n", [("q1.json", 3), ("q_prime.json", 2), ("pq_r.json", 2), ("alice.json", 1), ("q35.json", 10)])
def test_shipped_configs(name, n):
    qs = QuorumSystem.from_json(shipped(name))
    assert len(qs.quorums) == n


def test_bad_config():
    with pytest.raises(ValueError):
        QuorumSystem.from_json(json.dumps({"quorums": [[]]}))
    with pytest.raises(ValueError):
        QuorumSystem.from_json("[]")
