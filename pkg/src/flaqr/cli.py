"""Command-line front end: ``flaqr check|run|quorum|ni|lattice``.

Exit codes: 0 success, 1 type or syntax error, 2 run failed or a guard or
premise was violated, 3 timeout or stuck.
"""

from __future__ import annotations

import json
import os
import sys
from dataclasses import asdict, dataclass, field

import click

from . import lang as L
from . import principals as P
from .blame import EMPTY, init_blame, run_with_blame
from .interp import FAIL, STUCK, TIMEOUT, VALUE, FaultPlan, FaultPlanError, initial_config, run_to_completion
from .quorum import QuorumSystem, guards, majority_bound, toleration_set, tolerated_sets
from .syntax import FlaqrSyntaxError, parse_delegations, parse_expr, parse_principal, parse_source, parse_type, pretty, show_config, show_expr
from .typecheck import FlaqrTypeError, TypingCtx, typecheck_expr

OK, ERROR, FAILED, TIMED_OUT = 0, 1, 2, 3
_EXIT = {VALUE: OK, FAIL: FAILED, TIMEOUT: TIMED_OUT, STUCK: TIMED_OUT}


def default_fuel() -> int:
    return int(os.environ.get("FLAQR_FUEL", "100000"))


@dataclass
class RunReport:
    verdict: str
    result: str
    steps: int
    type: str = ""
    blame: list | None = None
    tolerance_exceeded: bool | None = None
    trace: list = field(default_factory=list)
    error: str = ""

    def human(self) -> str:
        lines = []
        for k, g in enumerate(self.trace):
            lines.append(f"[{k}] {g}")
        lines.append(f"verdict: {self.verdict}")
        lines.append(f"result: {self.result}")
        lines.append(f"steps: {self.steps}")
        if self.type:
            lines.append(f"type: {self.type}")
        if self.blame is not None:
            lines.append("blame: " + (" | ".join(self.blame) if self.blame else "{}"))
        if self.tolerance_exceeded is not None:
            lines.append(f"tolerance exceeded: {'yes' if self.tolerance_exceeded else 'no'}")
        if self.error:
            lines.append(f"error: {self.error}")
        return "\n".join(lines)


def _emit(as_json: bool, obj: dict, text: str) -> None:
    click.echo(json.dumps(obj, indent=2) if as_json else text)


def _fail(as_json: bool, kind: str, err: Exception, code: int = ERROR):
    _emit(as_json, {"error": kind, "message": str(err)}, f"{kind} error: {err}")
    sys.exit(code)


def _load(path: str, as_json: bool):
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_source(fh.read(), path)
    except FlaqrSyntaxError as err:
        _fail(as_json, "syntax", err)
    except OSError as err:
        _fail(as_json, "io", err)


def _ctx(src, extra_delegations: str | None = None) -> TypingCtx:
    dels = list(src.delegations)
    if extra_delegations:
        dels += parse_delegations(extra_delegations)
    return TypingCtx.make(dels, src.pc or P.BOT, src.host or P.TOP)


def _load_quorum(path: str, as_json: bool) -> QuorumSystem:
    try:
        with open(path, encoding="utf-8") as fh:
            return QuorumSystem.from_json(fh.read())
    except (OSError, ValueError) as err:
        _fail(as_json, "quorum", err)


@click.group()
def main():
    """Type check, run and analyse FLAQR programs."""


@main.command()
@click.argument("path")
@click.option("--pi", "pi", default=None, help="Extra delegations, e.g. 'p >= q, r >= s'.")
@click.option("--json", "as_json", is_flag=True, help="Emit JSON.")
def check(path, pi, as_json):
    """Type check a program."""
    src = _load(path, as_json)
    try:
        t = typecheck_expr(_ctx(src, pi), src.program)
    except FlaqrTypeError as err:
        _emit(as_json, {"ok": False, "rule": err.rule, "kind": err.kind, "message": str(err)}, f"type error: {err}")
        sys.exit(ERROR)
    _emit(as_json, {"ok": True, "type": str(t)}, f"{path}: {t}")


def _blame_disjuncts(b) -> list[str]:
    if b.disjuncts is None:
        return []
    return ["{" + ",".join(sorted(P.show(p) for p in d)) + "}" for d in b.faulty_sets()]


def _exceeds(b, q: QuorumSystem) -> bool:
    """Some possible faulty set names more hosts than any tolerated set allows."""
    ok = tolerated_sets(q)
    for d in b.faulty_sets():
        hosts = set()
        for p in d:
            hosts |= P.principal_atoms(p) & q.universe
        if not any(hosts <= f for f in ok):
            return True
    return False


@main.command()
@click.argument("path")
@click.option("--faults", default=None, help="Fault plan JSON file.")
@click.option("--trace", is_flag=True, help="Print every configuration.")
@click.option("--blame", is_flag=True, help="Track the blame constraint.")
@click.option("--quorum", default=None, help="Quorum system JSON file (initial blame).")
@click.option("--fuel", type=int, default=None, help="Step bound (default FLAQR_FUEL or 100000).")
@click.option("--pi", "pi", default=None, help="Extra delegations.")
@click.option("--json", "as_json", is_flag=True, help="Emit JSON.")
def run(path, faults, trace, blame, quorum, fuel, pi, as_json):
    """Type check and run a program."""
    src = _load(path, as_json)
    ctx = _ctx(src, pi)
    try:
        t = typecheck_expr(ctx, src.program)
    except FlaqrTypeError as err:
        _fail(as_json, "type", err)
    plan = FaultPlan.honest()
    if faults:
        try:
            with open(faults, encoding="utf-8") as fh:
                plan = FaultPlan.from_json(fh.read())
            plan.validate(src.program)
        except (OSError, ValueError, FaultPlanError) as err:
            _fail(as_json, "fault-plan", err)
    q = _load_quorum(quorum, as_json) if quorum else None
    fuel = default_fuel() if fuel is None else fuel
    g0 = initial_config(src.program, ctx.host)
    b = None
    if blame:
        b0 = init_blame(toleration_set(q)) if q else EMPTY
        res, b = run_with_blame(g0, b0, plan, fuel, ctx.delegations, trace)
    else:
        res = run_to_completion(g0, plan, fuel, trace)
    report = RunReport(
        verdict=res.verdict,
        result=show_expr(res.config.expr) if res.config.terminal else show_config(res.config),
        steps=res.steps,
        type=str(t),
        blame=_blame_disjuncts(b) if b is not None else None,
        tolerance_exceeded=(_exceeds(b, q) if (b is not None and q is not None and res.verdict == FAIL) else None),
        trace=[show_config(g) for g in res.trace],
        error=res.error,
    )
    _emit(as_json, asdict(report), report.human())
    sys.exit(_EXIT[res.verdict])


@main.command()
@click.argument("path")
@click.option("--type", "ty", default=None, help="Type to check against the quorum system.")
@click.option("--pi", "pi", default=None, help="Delegations, e.g. 'p >= q, r >= s'.")
@click.option("--json", "as_json", is_flag=True, help="Emit JSON.")
def quorum(path, ty, pi, as_json):
    """Toleration set, majority classification and guard verdict of a quorum system."""
    q = _load_quorum(path, as_json)
    try:
        dels = P.as_ctx(parse_delegations(pi) if pi else [])
        t = parse_type(ty) if ty else None
    except FlaqrSyntaxError as err:
        _fail(as_json, "syntax", err)
    tol = [P.show(x) for x in toleration_set(q)]
    mb = majority_bound(q)
    out = {
        "quorums": [sorted(x) for x in q.quorums],
        "toleration": tol,
        "majority": list(mb) if mb else None,
    }
    lines = [
        "quorums: " + ", ".join("{" + ",".join(sorted(x)) + "}" for x in q.quorums),
        "toleration set: " + ("{" + ", ".join(tol) + "}" if tol else "{} (no fault tolerated)"),
        "majority: " + (f"{mb[0]}/{mb[1]}" if mb else "not a majority system"),
    ]
    code = OK
    if t is not None:
        ok = guards(dels, q, t)
        out["type"], out["guarded"] = str(t), ok
        lines.append(f"guards {t}: {'yes' if ok else 'no'}")
        code = OK if ok else FAILED
    _emit(as_json, out, "\n".join(lines))
    sys.exit(code)


@main.command()
@click.argument("path")
@click.option("--attacker", required=True, help="Attacker principal H.")
@click.option("--facet", type=click.Choice(["c", "i", "a"]), required=True)
@click.option("--in1", required=True, help="First input (a closed value or fail term).")
@click.option("--in2", required=True, help="Second input.")
@click.option("--var", "var", default="x", show_default=True, help="Free input variable of the program.")
@click.option("--input-type", default=None, help="Type of the input (default: type of --in1).")
@click.option("--quorum", default=None, help="Quorum system JSON file (availability).")
@click.option("--fuel", type=int, default=None)
@click.option("--trace", is_flag=True, help="Print the bracketed configurations.")
@click.option("--json", "as_json", is_flag=True, help="Emit JSON.")
def ni(path, attacker, facet, in1, in2, var, input_type, quorum, fuel, trace, as_json):
    """Check noninterference of a program with one free input."""
    from .ni import FAIL as NI_FAIL, PASS, REJECTED, VACUOUS, BracketCtx, ni_check

    src = _load(path, as_json)
    ctx = _ctx(src)
    try:
        f1, f2 = parse_expr(in1), parse_expr(in2)
        H = parse_principal(attacker)
        if input_type:
            in_t = parse_type(input_type)
        else:
            in_t = typecheck_expr(TypingCtx(ctx.delegations, (), ctx.pc, ctx.host), f1)
    except FlaqrSyntaxError as err:
        _fail(as_json, "syntax", err)
    except FlaqrTypeError as err:
        _fail(as_json, "type", err)
    q = _load_quorum(quorum, as_json) if quorum else None
    res = ni_check(src.program, var, (f1, f2), in_t, ctx, BracketCtx(H, facet), q, fuel=fuel, trace=trace)
    out = {
        "verdict": res.verdict,
        "reason": res.reason,
        "steps": res.steps,
        "unsound_steps": res.unsound_steps,
        "observations": [str(o) for o in res.observations],
        "trace": [show_config(g) for g in res.trace],
    }
    lines = [f"[{k}] {g}" for k, g in enumerate(out["trace"])]
    lines.append(f"verdict: {res.verdict}" + (f" ({res.reason})" if res.reason else ""))
    lines.append(f"steps: {res.steps}")
    if res.observations:
        lines.append("observations: " + " / ".join(out["observations"]))
    _emit(as_json, out, "\n".join(lines))
    codes = {PASS: OK, REJECTED: ERROR, NI_FAIL: FAILED, VACUOUS: FAILED}
    sys.exit(codes.get(res.verdict, TIMED_OUT))


def hasse(sat) -> tuple[list, list[tuple[int, int]]]:
    """Class representatives and covering edges ``(upper, lower)`` of a saturation."""
    reps = list(sat.reps)
    above = {(a, b) for a in reps for b in reps if a != b and sat.acts_for(a, b)}
    edges = []
    for a, b in above:
        if not any((a, c) in above and (c, b) in above for c in reps if c not in (a, b)):
            edges.append((a, b))
    return reps, sorted(edges)


@main.command()
@click.option("--prims", default="x,y", show_default=True, help="Comma-separated primitive principals.")
@click.option("--max-points", type=int, default=64, show_default=True, help="Size cap on the closure.")
@click.option("--json", "as_json", is_flag=True, help="Emit JSON.")
def lattice(prims, max_points, as_json):
    """Canonical closure of primitives under the four connectives, as a dot Hasse diagram."""
    from .oracle import Saturation

    names = tuple(p.strip() for p in prims.split(",") if p.strip())
    try:
        sat = Saturation(names, max_points=max_points)
    except ValueError as err:
        _fail(as_json, "size", err)
    reps, edges = hasse(sat)
    pts = sat.points()
    label = {r: P.show(p) for r, p in zip(reps, pts)}
    if as_json:
        click.echo(json.dumps({"points": [label[r] for r in reps], "edges": [[label[a], label[b]] for a, b in edges]}, indent=2))
        return
    click.echo(f"// {len(reps)} points")
    click.echo("digraph lattice {")
    click.echo("  rankdir=BT;")
    for r in reps:
        click.echo(f'  n{r} [label="{label[r]}"];')
    for a, b in edges:
        click.echo(f"  n{b} -> n{a};")
    click.echo("}")


if __name__ == "__main__":
    main()
