"""Command-line front end: outputs and exit codes."""

import json

import pytest
from click.testing import CliRunner

from flaqr.cli import ERROR, FAILED, OK, TIMED_OUT, main
from flaqr.programs import shipped

# NI inputs: b-labelled balances, observed at a
LABEL_B = "{b^c /\\ top^ia}"
IN1 = f"(sealed {LABEL_B} (const 0 2))"
IN2 = f"(sealed {LABEL_B} (const 1 2))"
HEADER = ";! host top\n;! pc top^ia\n"


@pytest.fixture
def files(tmp_path):
    out = {}
    for name in ("replica.flaqr", "bank.flaqr", "q1.json", "q_prime.json", "alice.json", "crash_b.json", "break_q1.json"):
        p = tmp_path / name
        p.write_text(shipped(name))
        out[name] = str(p)
    for name, body in {
        "seal.flaqr": "(unitm {a^c /\\ top^ia} x)",
        "leak.flaqr": "(bind y x (unitm {a^c /\\ top^ia} y))",
    }.items():
        p = tmp_path / name
        p.write_text(HEADER + body + "\n")
        out[name] = str(p)
    return out


def invoke(*args):
    return CliRunner().invoke(main, list(args))


def test_check_ok(files):
    r = invoke("check", files["replica.flaqr"], "--json")
    assert r.exit_code == OK
    assert json.loads(r.output)["ok"] is True


def test_check_type_error(files):
    r = invoke("check", files["bank.flaqr"], "--json")
    assert r.exit_code == ERROR
    out = json.loads(r.output)
    assert out["ok"] is False and out["rule"] == "Case"


def test_check_missing_file():
    assert invoke("check", "/nonexistent/prog.flaqr").exit_code == ERROR


def test_run_honest(files):
    r = invoke("run", files["replica.flaqr"], "--json")
    assert r.exit_code == OK
    out = json.loads(r.output)
    assert out["verdict"] == "value" and out["steps"] > 0


def test_run_one_crash(files):
    r = invoke("run", files["replica.flaqr"], "--faults", files["crash_b.json"])
    assert r.exit_code == OK
    assert "verdict: value" in r.output


def test_run_two_faults_fail_with_blame(files):
    r = invoke("run", files["replica.flaqr"], "--faults", files["break_q1.json"], "--blame", "--quorum", files["q1.json"], "--json")
    assert r.exit_code == FAILED
    out = json.loads(r.output)
    assert out["verdict"] == "fail"
    # every host acts for the inner seal (a/\b/\c)^c, so each disjunct already entails it
    # and the initial constraint stands
    assert out["blame"] == ["{a}", "{b}", "{c}"]
    assert out["tolerance_exceeded"] is False


def test_run_timeout(files):
    r = invoke("run", files["replica.flaqr"], "--fuel", "2")
    assert r.exit_code == TIMED_OUT


def test_run_trace(files):
    r = invoke("run", files["replica.flaqr"], "--trace", "--json")
    out = json.loads(r.output)
    assert len(out["trace"]) == out["steps"] + 1


def test_quorum_summary(files):
    r = invoke("quorum", files["q1.json"], "--json")
    assert r.exit_code == OK
    out = json.loads(r.output)
    assert out["majority"] == [2, 3]
    assert out["toleration"] == ["a^i /\\ a^a", "b^i /\\ b^a", "c^i /\\ c^a"]


def test_quorum_no_tolerance(files):
    r = invoke("quorum", files["alice.json"])
    assert r.exit_code == OK and "no fault tolerated" in r.output


@pytest.mark.parametrize("name,code", [("q1.json", FAILED), ("q_prime.json", OK)])
def test_quorum_guard(files, name, code):
    t = "(says {a (*) b (+) (b (*) c (+) a (*) c)} (says a unit))"
    assert invoke("quorum", files[name], "--type", t).exit_code == code


def test_ni_pass(files):
    r = invoke("ni", files["seal.flaqr"], "--attacker", "b", "--facet", "c", "--in1", IN1, "--in2", IN2, "--json")
    assert r.exit_code == OK
    out = json.loads(r.output)
    assert out["verdict"] == "pass" and out["observations"][0] == out["observations"][1]


def test_ni_rejects_leak(files):
    r = invoke("ni", files["leak.flaqr"], "--attacker", "b", "--facet", "c", "--in1", IN1, "--in2", IN2, "--json")
    assert r.exit_code == ERROR
    assert json.loads(r.output)["verdict"] == "rejected"


def test_ni_availability_needs_quorum(files):
    r = invoke("ni", files["seal.flaqr"], "--attacker", "b", "--facet", "a", "--in1", IN1, "--in2", IN2)
    assert r.exit_code == FAILED and "vacuous" in r.output


def test_lattice_counts():
    r = invoke("lattice", "--prims", "")
    assert r.exit_code == OK and r.output.startswith("// 2 points")
    out = json.loads(invoke("lattice", "--prims", "x,y", "--json").output)
    assert len(out["points"]) == 18
