import subprocess
import sys
import time

import pytest

from helpers import SCALING_SPLIT, cvc5_available, solver_pids

from aquaforte.instantiate import Instantiation, definitional_axioms
from aquaforte.smtlib import Env, parse_script, print_script, print_term
from aquaforte.smtlib.terms import REAL, Var
from aquaforte.solver import (
    ModelError,
    SolverConfig,
    SolverNotFound,
    Verdict,
    parse_model,
    prepare_script,
    print_model,
    resolve_command,
    solve,
)

needs_cvc5 = pytest.mark.skipif(not cvc5_available(), reason="cvc5 not installed")


def test_trivially_sat_fast():
    out = solve(parse_script("(assert true)(check-sat)"), SolverConfig("z3", timeout=5))
    assert out.verdict is Verdict.SAT and out.wall_time < 1.0


def test_trivially_unsat():
    assert solve(parse_script("(assert false)(check-sat)"), SolverConfig("z3", timeout=5)).verdict is Verdict.UNSAT


@needs_cvc5
def test_cvc5_backend_verdicts():
    cfg = SolverConfig("cvc5", timeout=5)
    assert solve(parse_script("(assert true)"), cfg).verdict is Verdict.SAT
    assert solve(parse_script("(assert false)"), cfg).verdict is Verdict.UNSAT


@needs_cvc5
def test_scaling_with_goal_negation_is_hard_for_some_backend():
    s = parse_script(SCALING_SPLIT + "(assert (not (forall ((x Real)) (= (f x) (g x)))))")
    verdicts = {}
    for name in ("cvc5", "z3"):
        verdicts[name] = solve(s, SolverConfig(name, timeout=24)).verdict
        if verdicts[name] in (Verdict.UNKNOWN, Verdict.TIMEOUT):
            break
    assert any(v in (Verdict.UNKNOWN, Verdict.TIMEOUT) for v in verdicts.values())


def test_timeout_kills_process():
    s = parse_script("(assert (exists ((a Int) (b Int) (c Int)) (and (> a 0) (> b 0) (> c 0)"
                     " (= (+ (* a a a) (* b b b)) (* c c c)))))")
    before = solver_pids()
    t0 = time.monotonic()
    out = solve(s, SolverConfig("z3", timeout=1.5))
    assert out.verdict is Verdict.TIMEOUT
    assert time.monotonic() - t0 < 2.0
    time.sleep(0.1)
    assert not (solver_pids() - before)


def test_prepare_script_single_query():
    s = parse_script("(assert true)(check-sat)(get-model)(get-value (1))(check-sat)(exit)")
    text = print_script(prepare_script(s, get_model=True))
    assert text.count("(check-sat)") == 1 and text.strip().endswith("(get-model)")
    assert "get-value" not in text and "(exit)" not in text


def test_resolve_commands():
    z3 = resolve_command(SolverConfig("z3", timeout=2.5), "f.smt2")
    assert z3[1:] == ["-smt2", "-t:2500", "f.smt2"]
    cvc = resolve_command(SolverConfig("cvc5", timeout=1), "f.smt2", get_model=True)
    assert "--tlimit-per=1000" in cvc and "--produce-models" in cvc and "--full-saturate-quant" in cvc
    with pytest.raises(SolverNotFound):
        resolve_command(SolverConfig("/no/such/solver"), "f.smt2")


def test_error_output_is_error_verdict(tmp_path):
    fake = tmp_path / "fake.sh"
    fake.write_text('#!/bin/sh\necho \'(error "boom")\'\n')
    fake.chmod(0o755)
    out = solve(parse_script("(assert true)"), SolverConfig(str(fake), timeout=5))
    assert out.verdict is Verdict.ERROR and "boom" in out.message


def test_memory_limit_is_applied():
    out = solve(parse_script("(assert true)"), SolverConfig("z3", timeout=5, memory_mb=512))
    assert out.verdict is Verdict.SAT


# models


def test_parse_z3_style_model():
    entries = parse_model("sat\n(model (define-fun c () Real 3.0))")
    assert [(e.name, print_term(e.value)) for e in entries] == [("c", "3.0")]


def test_parse_cvc5_style_model():
    entries = parse_model("sat\n((define-fun c () Real 3.0))")
    assert [(e.name, print_term(e.value)) for e in entries] == [("c", "3.0")]


@needs_cvc5
def test_parse_real_cvc5_model():
    s = parse_script("(declare-const c Real)(assert (= c 3.0))")
    out = solve(s, SolverConfig("cvc5", timeout=10), get_model=True, env=Env.from_script(s))
    assert out.verdict is Verdict.SAT
    assert [(e.name, e.value.value) for e in out.model] == [("c", 3)]


def test_parse_real_z3_function_model():
    # z3 leaves define-fun symbols out of its model, so state the definitions as axioms
    s = parse_script(SCALING_SPLIT)
    insts = [Instantiation(n, (("x0", REAL),), Var("x0"), REAL) for n in "fg"]
    out = solve(s.add_assertions(definitional_axioms(insts)), SolverConfig("z3", timeout=10), get_model=True)
    assert out.verdict is Verdict.SAT
    by_name = {e.name: e for e in out.model}
    f = by_name["f"]
    assert len(f.params) == 1 and print_term(f.value) == f.params[0][0]


def test_parse_model_function_and_negative():
    raw = "(\n  (define-fun f ((x!0 Real)) Real (ite (= x!0 1.0) 2.0 (- 1.0)))\n  (define-fun k () Int (- 4))\n)"
    entries = parse_model(raw)
    assert [e.name for e in entries] == ["f", "k"]
    assert entries[1].value.value == -4
    assert "define-fun k () Int" in print_model(entries)


def test_parse_model_missing():
    with pytest.raises(ModelError):
        parse_model("unknown")


@needs_cvc5
def test_cvc5_shim_cli(tmp_path):
    p = tmp_path / "t.smt2"
    p.write_text("(set-logic QF_LRA)(declare-const x Real)(assert (> x 1.0))(check-sat)")
    out = subprocess.run([sys.executable, "-m", "aquaforte.solver.cvc5_cli", "--tlimit-per=5000", str(p)],
                         capture_output=True, text=True, timeout=30)
    assert out.stdout.strip() == "sat"
    bad = subprocess.run([sys.executable, "-m", "aquaforte.solver.cvc5_cli", str(tmp_path / "missing.smt2")],
                         capture_output=True, text=True, timeout=30)
    assert bad.returncode == 1 and "error" in bad.stdout
