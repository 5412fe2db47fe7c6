"""Shared test helpers: canned scripts and replay-fixture construction."""

from __future__ import annotations

import json
import os
import shutil
from pathlib import Path

from aquaforte.llm.client import LlmSession, RecordingClient, ScriptedClient, Transcript
from aquaforte.orchestrator import Budgets, adaptive_solve
from aquaforte.smtlib import parse_script
from aquaforte.solver.driver import SolverConfig

DATA = Path(__file__).parent / "data"

# f(2x) = 2x and g(2x) = 2x, written as one quantified conjunction
SCALING = """(set-logic UFNIRA)
(declare-fun f (Real) Real)
(declare-fun g (Real) Real)
(assert (forall ((x Real)) (and (= (f (* 2.0 x)) (* 2.0 x)) (= (g (* 2.0 x)) (* 2.0 x)))))
(check-sat)
"""

# same constraints as two assertions with integer literals
SCALING_SPLIT = """(set-logic UFNIRA)
(declare-fun f (Real) Real)
(declare-fun g (Real) Real)
(assert (forall ((x Real)) (= (f (* 2 x)) (* 2 x))))
(assert (forall ((x Real)) (= (g (* 2 x)) (* 2 x))))
(check-sat)
"""

# no solver finishes this within any test budget (cubes, Fermat n = 3)
NONTERMINATING = """(set-logic UFNIRA)
(declare-fun f (Real) Real)
(assert (forall ((x Real)) (= (f (* 2.0 x)) (* 2.0 x))))
(assert (exists ((a Int) (b Int) (c Int)) (and (> a 0) (> b 0) (> c 0) (= (+ (* a a a) (* b b b)) (* c c c)))))
(check-sat)
"""


def answer(defs: dict[str, str], arity: int = 1) -> str:
    """JSON answer text defining each function over x0.. with the given body."""
    out = {}
    for name, body in defs.items():
        out[name] = {"params": [[f"x{i}", "Real"] for i in range(arity)], "body": body,
                     "reasoning": "test", "confidence": 0.9}
    return json.dumps(out)


def record_fixtures(script_text: str, answers: list[str], path, iters: int, total: float = 120.0,
                    solver: str = "z3"):
    """Run the loop with scripted answers, storing each prompt/answer pair as a replay fixture."""
    client = RecordingClient(ScriptedClient(answers), str(path))
    return adaptive_solve(parse_script(script_text), Budgets(iters, total), LlmSession(client, Transcript()),
                          SolverConfig(solver))


def cvc5_available() -> bool:
    return bool(os.environ.get("AQUAFORTE_CVC5") or shutil.which("cvc5")) or _cvc5_module()


def _cvc5_module() -> bool:
    try:
        import cvc5  # noqa: F401
    except ImportError:
        return False
    return True


def solver_pids() -> set[int]:
    """PIDs of running z3/cvc5 processes (read from /proc)."""
    out = set()
    for d in Path("/proc").iterdir():
        if not d.name.isdigit():
            continue
        try:
            cmd = (d / "cmdline").read_bytes().split(b"\0")
        except OSError:
            continue
        joined = b" ".join(cmd)
        if not cmd or not cmd[0]:
            continue
        if Path(cmd[0].decode(errors="replace")).name in ("z3", "cvc5") or b"aquaforte.solver.cvc5_cli" in joined:
            out.add(int(d.name))
    return out
