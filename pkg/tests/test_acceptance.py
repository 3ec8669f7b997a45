"""Acceptance criteria 1-9.

Each criterion prints one ``PASS``/``FAIL`` line with its measurements and
time. Run directly (``python3 tests/test_acceptance.py``) or under pytest,
where the lines are written to the terminal as each check finishes.
"""

from __future__ import annotations

import itertools
import random
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from flaqr import lang as L  # noqa: E402
from flaqr import principals as P  # noqa: E402
from flaqr.blame import dnf, init_blame, lfl, run_with_blame, sound_blame_violations  # noqa: E402
from flaqr.fuzz import check_preservation, fuzz_ctx, random_compare_tree, random_principal, well_typed_programs  # noqa: E402
from flaqr.interp import (  # noqa: E402
    BYZ_CONST, BYZ_SEEDED, CRASH, FAIL, VALUE, FaultMode, FaultPlan, Interpreter, initial_config,
    local_step_rule, run_to_completion,
)
from flaqr.ni import PASS as NI_PASS, FAIL as NI_FAIL, REJECTED  # noqa: E402
from flaqr.ni_suite import leaky_cases, ci_suite, availability_suite  # noqa: E402
from flaqr.oracle import Saturation, model_acts_for  # noqa: E402
from flaqr.principals import And, Or, PAnd, POr, acts_for, prim  # noqa: E402
from flaqr.programs import (  # noqa: E402
    as_program, replica_mistyped, replica_type, bank_type, load_shipped, majority_quorum_program,
)
from flaqr.quorum import QuorumSystem, guards, majority_system, toleration_set  # noqa: E402
from flaqr.typecheck import FlaqrTypeError, TypingCtx, typecheck_expr  # noqa: E402

from rule_cases import FAIL_CASES, GLOBAL_CASES, LOCAL_CASES  # noqa: E402


@dataclass
class Outcome:
    ok: bool
    limit: float
    notes: list = field(default_factory=list)
    seconds: float = 0.0

    def line(self, n: int) -> str:
        verdict = "PASS" if self.ok and self.seconds < self.limit else "FAIL"
        return f"{verdict} criterion {n}: {'; '.join(self.notes)} ({self.seconds:.2f} s, limit {self.limit:g} s)"

    @property
    def passed(self) -> bool:
        return self.ok and self.seconds < self.limit


def timed(limit: float):
    def wrap(fn):
        def run() -> Outcome:
            t0 = time.perf_counter()
            out = fn()
            out.seconds = time.perf_counter() - t0
            out.limit = limit
            return out

        run.__name__ = fn.__name__
        return run

    return wrap


x, y = prim("x"), prim("y")
a, b, c = prim("a"), prim("b"), prim("c")


# ---------------------------------------------------------------------------
# 1. lattice


@timed(10)
def criterion_1() -> Outcome:
    sat = Saturation(("x", "y"))
    out = Outcome(True, 10)
    out.notes.append(f"{len(sat.reps)} points in the closure")
    chain = [And(x, y), PAnd(x, y), And(x, POr(x, y)), POr(x, y), Or(x, y)]
    bad = []
    for p, q in zip(chain, chain[1:]):
        i, j = sat.node_of(p), sat.node_of(q)
        down, up = sat.acts_for(i, j), sat.acts_for(j, i)
        if not down:
            bad.append(f"{P.show(p)} >= {P.show(q)} does not hold")
        elif up:
            bad.append(f"{P.show(q)} >= {P.show(p)} also holds")
    out.notes.append("chain: " + (", ".join(bad) if bad else "every link holds strictly"))
    # least upper bound named in the prose
    lub = sat.node_of(And(And(x, POr(x, y)), PAnd(x, y)))
    want = sat.node_of(And(x, PAnd(x, y)))
    lub_ok = sat.acts_for(lub, want) and sat.acts_for(want, lub)
    out.notes.append(f"x/\\(x(*)y) is the join of x/\\(x(+)y) and x(*)y: {lub_ok}")
    # solver against the oracle on every pair of points
    pts = dict(zip(sat.reps, sat.points()))
    mism = sum(acts_for(P.EMPTY, pts[i], pts[j]) != sat.acts_for(i, j) for i in pts for j in pts)
    out.notes.append(f"solver vs saturation on {len(pts) ** 2} point pairs: {mism} mismatches")
    out.ok = not bad and lub_ok and mism == 0 and sat.closed
    return out


# ---------------------------------------------------------------------------
# 2. solver vs oracles


@timed(60)
def criterion_2() -> Outcome:
    out = Outcome(True, 60)
    sat = Saturation(("x", "y"))
    rng = random.Random(2024)
    mism = 0
    for _ in range(5000):
        s = random_principal(rng, ("x", "y"), depth=3, projections=False, constants=False)
        t = random_principal(rng, ("x", "y"), depth=3, projections=False, constants=False)
        if acts_for(P.EMPTY, s, t) != sat.acts_for(sat.node_of(s), sat.node_of(t)):
            mism += 1
    out.notes.append(f"5000 pairs over {{x,y}} vs saturation: {mism} mismatches")
    mism3 = 0
    for _ in range(5000):
        s = random_principal(rng, ("x", "y", "z"), depth=3)
        t = random_principal(rng, ("x", "y", "z"), depth=3)
        if acts_for(P.EMPTY, s, t) != model_acts_for(P.EMPTY, s, t):
            mism3 += 1
    out.notes.append(f"5000 pairs over {{x,y,z}} with projections and constants vs model oracle: {mism3} mismatches")
    out.ok = mism == 0 and mism3 == 0
    return out


# ---------------------------------------------------------------------------
# 3. golden types


def _typed(name: str):
    prog = as_program(load_shipped(name))
    t0 = time.perf_counter()
    try:
        t = typecheck_expr(TypingCtx.make(prog.delegations, prog.pc, prog.host), prog.expr)
        err = None
    except FlaqrTypeError as e:
        t, err = None, e
    return prog, t, err, time.perf_counter() - t0


@timed(3)
def criterion_3() -> Outcome:
    out = Outcome(True, 3)
    ok = True
    for name, want in (("replica.flaqr", replica_type()), ("bank.flaqr", bank_type())):
        prog, t, err, secs = _typed(name)
        if err is not None:
            out.notes.append(f"{name} rejected ({err.rule}: {err.kind})")
            ok = False
        else:
            same = L.type_equiv(t, want, prog.ctx)
            out.notes.append(f"{name} {'has' if same else 'does not have'} the stated type")
            ok &= same
        ok &= secs < 1
    bad = replica_mistyped()
    try:
        typecheck_expr(TypingCtx.make(bad.delegations, bad.pc, bad.host), bad.expr)
        out.notes.append("mistyped third compare accepted")
        ok = False
    except FlaqrTypeError as e:
        out.notes.append(f"mistyped third compare rejected at {e.rule}")
    out.ok = ok
    return out


# ---------------------------------------------------------------------------
# 4. one-step rules

LOCAL_RULES = {
    "E-App", "E-TApp", "E-UnPair", "E-Sealed", "E-BindM", "E-Case", "E-Compare", "E-CompareFail",
    "E-CompareFailL", "E-CompareFailR", "E-Select", "E-SelectFail", "E-Step", "E-RetStep",
}
FAIL_RULES = {
    "E-AppFailL", "E-AppFail", "E-TAppFail", "E-SealedFail", "E-InjFail", "E-CaseFail", "E-PairFailL",
    "E-PairFailR", "E-ProjFail", "E-BindMFail",
}


@timed(1)
def criterion_4() -> Outcome:
    out = Outcome(True, 1)
    bad = []
    covered = set()
    for case in LOCAL_CASES + FAIL_CASES:
        rule, got = local_step_rule(case.before)
        if rule != case.rule or got != case.after:
            bad.append(case.via or case.rule)
        covered.add(case.rule)
        if case.via:
            covered.add(case.via)
    it = Interpreter()
    for case in GLOBAL_CASES:
        if it.step(case.before).config != case.after:
            bad.append(case.rule)
    missing = (LOCAL_RULES | FAIL_RULES) - covered
    out.notes.append(f"{len(LOCAL_CASES) + len(FAIL_CASES) + len(GLOBAL_CASES)} one-step cases, {len(bad)} mismatches")
    out.notes.append("all rules covered" if not missing else f"uncovered: {sorted(missing)}")
    out.ok = not bad and not missing
    return out


# ---------------------------------------------------------------------------
# 5. subject reduction


@timed(300)
def criterion_5() -> Outcome:
    out = Outcome(True, 300)
    rng = random.Random(5)
    stuck = timeouts = violations = steps = 0
    runs = 0
    for e, t in well_typed_programs(seed=505, count=1000, depth=3):
        for plan in (FaultPlan.honest(), _random_plan(rng)):
            rep = check_preservation(e, t, fuzz_ctx(), plan)
            runs += 1
            steps += rep.steps
            stuck += rep.verdict == "stuck"
            timeouts += rep.verdict == "timeout"
            violations += len(rep.violations)
    out.notes.append(f"1000 programs, {runs} runs, {steps} steps re-typed")
    out.notes.append(f"{violations} preservation violations, {stuck} stuck, {timeouts} timeouts")
    out.ok = violations == 0 and stuck == 0 and timeouts == 0
    return out


def _random_plan(rng) -> FaultPlan:
    modes = {}
    for h in ("a", "b", "c"):
        r = rng.random()
        if r < 0.2:
            modes[h] = FaultMode(CRASH)
        elif r < 0.4:
            modes[h] = FaultMode(BYZ_SEEDED, seed=rng.randrange(1 << 16))
    return FaultPlan(modes)


# ---------------------------------------------------------------------------
# 6. majority liveness


def _byz_payload(names, k: int) -> L.Expr:
    inner = P.canonical(P.conj(*(prim(h) for h in names)).c)
    return L.Sealed(inner, L.enum_value(k, 4))


def _plans(names, hosts):
    """Crash or byzantine per host; byzantine hosts report distinct wrong balances."""
    wrong = {h: (0, 2, 3)[k % 3] for k, h in enumerate(names)}
    for modes in itertools.product((CRASH, BYZ_CONST), repeat=len(hosts)):
        yield FaultPlan({
            h: FaultMode(CRASH) if m == CRASH else FaultMode(BYZ_CONST, value=_byz_payload(names, wrong[h]))
            for h, m in zip(hosts, modes)
        })


def _verdict(prog, plan) -> str:
    return run_to_completion(initial_config(prog.expr, prog.host), plan).verdict


@timed(5)
def criterion_6() -> Outcome:
    out = Outcome(True, 5)
    names3 = ["a", "b", "c"]
    prog = majority_quorum_program(2, 3)
    live = [FaultPlan.honest()] + [p for h in names3 for p in _plans(names3, [h])]
    live_ok = sum(_verdict(prog, p) == VALUE for p in live)
    dead = [p for pair in itertools.combinations(names3, 2) for p in _plans(names3, list(pair))]
    dead_ok = sum(_verdict(prog, p) == FAIL for p in dead)
    out.notes.append(f"2/3: {live_ok}/{len(live)} tolerated plans give a value, {dead_ok}/{len(dead)} quorum-breaking plans fail")
    names5 = ["a", "b", "c", "d", "e"]
    prog5 = majority_quorum_program(3, 5)
    plans5 = [FaultPlan.honest()] + [p for k in (1, 2) for hs in itertools.combinations(names5, k) for p in _plans(names5, list(hs))]
    ok5 = sum(_verdict(prog5, p) == VALUE for p in plans5)
    out.notes.append(f"3/5: {ok5}/{len(plans5)} plans with at most 2 faults give a value")
    out.ok = live_ok == len(live) and dead_ok == len(dead) and ok5 == len(plans5)
    return out


# ---------------------------------------------------------------------------
# 7. sound blame


def _byz_plan(rng, names, p: float) -> FaultPlan:
    return FaultPlan({h: FaultMode(BYZ_SEEDED, seed=rng.randrange(1 << 16)) for h in names if rng.random() < p})


@timed(120)
def criterion_7() -> Outcome:
    out = Outcome(True, 120)
    rng = random.Random(7)
    failing = violations = 0
    from_replica = from_tree = 0
    shapes = [(2, 3, True), (2, 3, False), (3, 5, True), (3, 5, False)]
    while from_replica < 150:
        m, n, sealed = rng.choice(shapes)
        prog = majority_quorum_program(m, n, sealed=sealed)
        t = typecheck_expr(TypingCtx.make(prog.delegations, prog.pc, prog.host), prog.expr)
        b0 = init_blame(toleration_set(majority_system(m, n)))
        plan = _byz_plan(rng, [h.name for h in prog.hosts], 0.6)
        res, bc = run_with_blame(initial_config(prog.expr, prog.host), b0, plan, ctx=prog.ctx)
        if res.verdict == FAIL:
            from_replica += 1
            violations += len(sound_blame_violations(prog.ctx, bc, t))
    while from_tree < 100:
        tree = random_compare_tree(rng)
        t = typecheck_expr(tree.ctx, tree.program)
        b0 = init_blame(toleration_set(tree.quorum))
        plan = _byz_plan(rng, sorted(tree.quorum.universe), 0.6)
        ctx = P.as_ctx(tree.delegations)
        res, bc = run_with_blame(initial_config(tree.program, tree.host), b0, plan, ctx=ctx)
        if res.verdict == FAIL:
            from_tree += 1
            violations += len(sound_blame_violations(ctx, bc, t))
    failing = from_replica + from_tree
    out.notes.append(f"{failing} failing runs ({from_replica} majority programs, {from_tree} compare trees), {violations} unsound faulty sets")
    p, q, r, l1, l2 = (prim(s) for s in ("p", "q", "r", "l1", "l2"))
    got = lfl(L.enum_value(0, 2), L.enum_value(1, 2), dnf([p, q], [r]), l1, l2)
    want = dnf([p, q, l1], [p, q, l2], [r, l1], [r, l2])
    out.notes.append(f"worked LFL update {'reproduced' if got == want else 'differs'}")
    out.ok = failing >= 200 and violations == 0 and got == want
    return out


# ---------------------------------------------------------------------------
# 8. noninterference


@timed(120)
def criterion_8() -> Outcome:
    out = Outcome(True, 120)
    unsound = 0
    ok = True
    for name, cases in (("confidentiality/integrity", ci_suite()), ("availability", availability_suite())):
        results = [cs.check() for cs in cases]
        premised = [(cs, r) for cs, r in zip(cases, results) if cs.expect == NI_PASS]
        passed = sum(r.verdict == NI_PASS for _, r in premised)
        unsound += sum(r.unsound_steps for r in results)
        programs = len({cs.program for cs, _ in premised})
        out.notes.append(f"{name}: {passed}/{len(premised)} cases pass over {programs} programs")
        ok &= passed == len(premised) and programs >= 20
    leaky = [cs.check() for cs in leaky_cases()]
    rejected = sum(r.verdict == REJECTED for r in leaky)
    leaks = sum(r.verdict in (NI_PASS, NI_FAIL) for r in leaky)
    unsound += sum(r.unsound_steps for r in leaky)
    out.notes.append(f"leaky: {rejected}/{len(leaky)} rejected, {leaks} ran to a comparison")
    out.notes.append(f"{unsound} unsound bracketed steps")
    out.ok = ok and rejected >= 5 and leaks == 0 and unsound == 0
    return out


# ---------------------------------------------------------------------------
# 9. quorum guards and toleration sets


@timed(1)
def criterion_9() -> Outcome:
    out = Outcome(True, 1)
    q1 = majority_system(2, 3)
    qp = QuorumSystem.of("ab", "ac")
    lq = P.select_action(P.compare_action(a, b), P.select_action(P.compare_action(b, c), P.compare_action(a, c)))
    t = L.Says(lq, L.Says(a, L.UNIT_T))
    g1, gp = guards(P.EMPTY, q1, t), guards(P.EMPTY, qp, t)
    out.notes.append(f"guard verdicts: Q1 {'valid' if g1 else 'invalid'}, Q' {'valid' if gp else 'invalid'}")

    def same(got, want):
        return len(got) == len(want) and all(any(P.equiv(P.EMPTY, g, w) for g in got) for w in want)

    p, q, r = prim("p"), prim("q"), prim("r")
    tol = [
        same(toleration_set(q1), [a.ia, b.ia, c.ia]),
        same(toleration_set(QuorumSystem.of("pq", "r")), [P.conj(p.ia, q.ia), r.ia]),
        toleration_set(QuorumSystem.of(["alice"])) == [],
    ]
    out.notes.append(f"toleration sets reproduced: {sum(tol)}/3")
    out.ok = (not g1) and gp and all(tol)
    return out


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8, criterion_9]


@pytest.mark.parametrize("n", range(1, 10))
def test_criterion(n, capsys):
    out = CRITERIA[n - 1]()
    with capsys.disabled():
        print("\n" + out.line(n))
    assert out.passed, out.line(n)


if __name__ == "__main__":
    results = []
    for n, crit in enumerate(CRITERIA, 1):
        out = crit()
        results.append(out.passed)
        print(out.line(n), flush=True)
    sys.exit(0 if all(results) else 1)
