"""The adaptive loop: propose definitions, check them, learn from refutations, fall back."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

from .instantiate import (
    ExclusionClause,
    Instantiation,
    InstantiationError,
    TriggerPattern,
    add_triggers,
    apply_instantiations,
    definitional_axioms,
    make_exclusion_clause,
    merge_instantiations,
    same_instantiation_set,
)
from .llm.client import LlmError, LlmSession
from .llm.prompts import HistoryEntry, build_instantiation_prompt, build_trigger_prompt, quantifier_sites
from .llm.response import CandidateError, MalformedResponse, parse_response, parse_trigger_response, validate_candidate
from .preprocess import ground_residue, rewrite_formula, separate_components
from .preprocess.components import Component
from .smtlib.errors import SmtLibError
from .smtlib.parser import parse_term
from .smtlib.printer import print_script, print_term
from .smtlib.subst import free_vars
from .smtlib.terms import BUILTIN_OPS, INT, REAL, App, Num, Script, subterms
from .smtlib.typecheck import Env, coerce, elaborate
from .solver.driver import SolveOutcome, SolverConfig, Verdict, solve
from .solver.models import ModelEntry

log = logging.getLogger(__name__)

MAX_REQUERIES = 2

# Final verdicts are a subset of solver verdicts.
FINAL_VERDICTS = (Verdict.SAT, Verdict.UNSAT, Verdict.UNKNOWN)


@dataclass(frozen=True)
class Budgets:
    max_iters: int = 1
    total: float = 120.0
    tau: Optional[float] = None

    def __post_init__(self):
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if not self.total > 0:
            raise ValueError("total budget must be positive")
        if self.tau is not None and not self.tau > 0:
            raise ValueError("tau must be positive")

    @property
    def per_solve(self) -> float:
        if self.tau is not None:
            return self.tau
        return min(24.0, self.total / (self.max_iters + 1))


@dataclass
class SessionState:
    budgets: Budgets
    start: float
    history: list[HistoryEntry] = field(default_factory=list)
    learned: list[ExclusionClause] = field(default_factory=list)
    iter: int = 0


@dataclass
class FinalResult:
    verdict: Verdict
    provenance: str  # llm_instantiated | fallback | baseline
    instantiations: list[Instantiation] = field(default_factory=list)
    trace: list[dict] = field(default_factory=list)
    evidence: Optional[str] = None
    learned: int = 0
    wall_time: float = 0.0
    history: list[HistoryEntry] = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "provenance": self.provenance,
            "instantiations": [i.define_fun() for i in self.instantiations],
            "evidence": self.evidence,
            "learned": self.learned,
            "wall_time": round(self.wall_time, 3),
            "iterations": sum(1 for t in self.trace if "iter" in t),
        }


def record_outcome(state: SessionState, insts: Sequence[Instantiation], outcome: str) -> SessionState:
    if outcome not in ("refuted", "timeout"):
        raise ValueError(f"unexpected outcome {outcome!r}")
    state.history.append(HistoryEntry(tuple(insts), outcome))
    if outcome == "refuted":
        state.learned.append(make_exclusion_clause(insts))
    return state


# -- soundness check -----------------------------------------------------------


def _model_instantiation(entry: ModelEntry, env: Env) -> Optional[Instantiation]:
    """A model entry as a definition, when it is closed and well-sorted."""
    sig = env.functions.get(entry.name)
    if sig is None or sig.interpreted or entry.value is None:
        return None
    if tuple(s for _, s in entry.params) != sig.arg_sorts:
        return None
    body = entry.value
    names = {n for n, _ in entry.params}
    if not free_vars(body) <= names:
        return None
    if any(isinstance(s, App) and s.op not in BUILTIN_OPS for s in subterms(body)):
        return None
    try:
        inner = env.bind(entry.params)
        body, s = elaborate(body, inner)
        body = coerce(body, s, sig.ret_sort)
    except SmtLibError:
        return None
    if isinstance(body, Num) and body.sort == INT and sig.ret_sort == REAL:
        body = Num(body.value, REAL)
    return Instantiation(entry.name, entry.params, body, sig.ret_sort)


def restriction_script(original: Script, insts: Sequence[Instantiation], model: Optional[list[ModelEntry]]) -> Script:
    """The original script with the definitions plus every usable model value fixed."""
    env = Env.from_script(original)
    chosen = {i.function: i for i in insts}
    for entry in model or []:
        if entry.name in chosen:
            continue
        inst = _model_instantiation(entry, env)
        if inst is not None:
            chosen[inst.function] = inst
    return apply_instantiations(original, list(chosen.values()))


def model_restriction_check(
    original: Script, insts: Sequence[Instantiation], outcome: SolveOutcome, config: SolverConfig
) -> Optional[bool]:
    """Re-check the original script under the definitions and the solver's model.

    True when that restriction is satisfiable, False when it is not, None
    when the check itself was inconclusive.
    """
    try:
        check = restriction_script(original, insts, outcome.model)
    except SmtLibError as err:
        log.warning("soundness check could not be built: %s", err)
        return None
    res = solve(check, config)
    if res.verdict is Verdict.SAT:
        return True
    if res.verdict is Verdict.UNSAT:
        return False
    return None


# -- LLM queries ---------------------------------------------------------------


@dataclass
class QueryResult:
    instantiations: list[Instantiation]
    transcript_ids: list[int]
    events: list[str]
    # valid definitions volunteered for functions of other components
    extras: list[Instantiation] = field(default_factory=list)


def query_component(
    session: LlmSession,
    comp: Component,
    history: Sequence[HistoryEntry],
    residue: Sequence,
    env: Env,
) -> QueryResult:
    base = build_instantiation_prompt(comp, history, residue)
    prompt = base
    best: list[Instantiation] = []
    extras: list[Instantiation] = []
    ids: list[int] = []
    events: list[str] = []
    for attempt in range(MAX_REQUERIES + 1):
        try:
            raw, idx = session.ask(prompt)
        except LlmError as err:
            events.append(f"llm error: {err}")
            break
        ids.append(idx)
        try:
            cands = parse_response(raw)
            if cands and not all(hasattr(c, "function") for c in cands):
                raise MalformedResponse("expected function definitions, got a list of patterns")
        except MalformedResponse as err:
            events.append(f"malformed response: {err}")
            session.transcript.tag(idx, "invalid")
            prompt = base.with_feedback(
                f"Your previous answer could not be used: {err}. Answer with the JSON object described above."
            )
            continue
        insts, problems = [], []
        for c in cands:
            if c.function not in comp.functions:
                try:
                    extras.append(validate_candidate(c, env))
                except CandidateError:
                    events.append(f"ignored candidate for {c.function}")
                continue
            try:
                insts.append(validate_candidate(c, env))
            except CandidateError as err:
                problems.append(err)
        if len(insts) > len(best) or not problems:
            best = insts
        if not problems:
            break
        events.extend(f"invalid candidate ({e.kind}): {e}" for e in problems)
        session.transcript.tag(idx, "invalid")
        prompt = base.with_feedback("\n".join(e.feedback for e in problems))
    return QueryResult(best, ids, events, extras)


def query_triggers(session: LlmSession, script: Script) -> list[TriggerPattern]:
    assertions = list(script.assertions)
    sites = quantifier_sites(assertions)
    if not sites:
        return []
    prompt = build_trigger_prompt(assertions)
    try:
        raw, idx = session.ask(prompt)
        answer = parse_trigger_response(raw, [s.label for s in sites])
    except (LlmError, MalformedResponse) as err:
        log.info("no triggers: %s", err)
        return []
    env = Env.from_script(script)
    out = []
    by_label = {s.label: s for s in sites}
    for label, sets in answer.items():
        site = by_label[label]
        inner = env.bind(site.quant.bindings)
        for texts in sets:
            try:
                terms = tuple(parse_term(t, inner) for t in texts)
            except SmtLibError as err:
                log.warning("dropping pattern %s for %s: %s", texts, label, err)
                continue
            out.append(TriggerPattern(site.assertion_index, site.binder_path, terms, site.quant.var_names))
    session.transcript.tag(idx, "accepted" if out else "invalid")
    return out


# -- main loop -----------------------------------------------------------------


@dataclass
class SolveOptions:
    use_triggers: bool = False
    inline: bool = False
    debug_exclusions: bool = False
    emit_dir: Optional[str] = None
    trace_path: Optional[str] = None


def _fill_from_extras(work, per_comp, extras):
    """Give a component without candidates the first valid definitions another component's answer offered."""
    out = []
    for comp, insts in zip(work, per_comp):
        if not insts:
            seen = set()
            for e in extras:
                if e.function in comp.functions and e.function not in seen:
                    seen.add(e.function)
                    insts = insts + [e]
        out.append(insts)
    return out


def fallback_solve(
    script: Script,
    learned: Sequence[ExclusionClause],
    config: SolverConfig,
    trace: Optional[list[dict]] = None,
) -> FinalResult:
    """Back-end on the script plus all learned clauses.

    Unsat with learned clauses present only shows that the refuted
    definitions were not the only candidates, so it is reported as unknown
    with that evidence attached.
    """
    augmented = script.add_assertions([c.assertion for c in learned]) if learned else script
    out = solve(augmented, config)
    provenance = "fallback" if learned else "baseline"
    evidence = None
    if out.verdict is Verdict.SAT:
        verdict = Verdict.SAT
    elif out.verdict is Verdict.UNSAT:
        if learned:
            verdict = Verdict.UNKNOWN
            evidence = f"unsat modulo {len(learned)} exclusion clause(s)"
        else:
            verdict = Verdict.UNSAT
    else:
        verdict = Verdict.UNKNOWN
        evidence = f"back-end {out.verdict.value}" + (f": {out.message}" if out.message else "")
    rec = {"stage": provenance, "verdict": out.verdict.value, "solve_time": round(out.wall_time, 3), "learned": len(learned)}
    trace = list(trace or []) + [rec]
    return FinalResult(verdict, provenance, trace=trace, evidence=evidence, learned=len(learned))


class _Tracer:
    def __init__(self, path: Optional[str]):
        self.records: list[dict] = []
        self.path = Path(path) if path else None
        if self.path:
            self.path.write_text("", encoding="utf-8")

    def add(self, rec: dict) -> None:
        self.records.append(rec)
        if self.path:
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(rec) + "\n")


def adaptive_solve(
    script: Script,
    budgets: Budgets,
    session: LlmSession,
    solver_config: SolverConfig,
    options: Optional[SolveOptions] = None,
    clock: Callable[[], float] = time.monotonic,
) -> FinalResult:
    opts = options or SolveOptions()
    state = SessionState(budgets, clock())
    tracer = _Tracer(opts.trace_path)
    tau = budgets.per_solve

    def elapsed() -> float:
        return clock() - state.start

    def emit(name: str, s: Script) -> None:
        if opts.emit_dir:
            Path(opts.emit_dir).mkdir(parents=True, exist_ok=True)
            (Path(opts.emit_dir) / name).write_text(print_script(s), encoding="utf-8")

    env = Env.from_script(script)
    work: list[Component] = []
    residue = ()
    if budgets.max_iters > 0:
        try:
            rewritten = rewrite_formula(script)
            comps = separate_components(rewritten)
            emit("rewritten.smt2", rewritten)
        except SmtLibError as err:
            tracer.add({"stage": "preprocess", "error": str(err)})
            comps = []
        res = ground_residue(comps)
        residue = res.assertions if res else ()
        work = [c for c in comps if not c.is_residue]

    triggers: list[TriggerPattern] = []
    if opts.use_triggers and work:
        triggers = query_triggers(session, script)

    while state.iter < budgets.max_iters and elapsed() < budgets.total and work:
        it = state.iter
        state.iter += 1
        rec: dict = {"iter": it + 1}
        t0 = clock()
        per_comp, ids, events, extras = [], [], [], []
        for comp in work:
            q = query_component(session, comp, state.history, residue, env)
            per_comp.append(q.instantiations)
            ids += q.transcript_ids
            events += q.events
            extras += q.extras
        per_comp = _fill_from_extras(work, per_comp, extras)
        rec["llm_time"] = round(clock() - t0, 3)
        if events:
            rec["events"] = events
        try:
            merged = merge_instantiations(per_comp, env)
        except SmtLibError as err:
            rec.update(outcome="invalid", error=str(err))
            tracer.add(rec)
            continue
        rec["instantiations"] = [i.define_fun() for i in merged]
        if not merged:
            rec["outcome"] = "no_candidate"
            tracer.add(rec)
            continue
        if any(h.outcome == "refuted" and same_instantiation_set(h.instantiations, merged) for h in state.history):
            rec["outcome"] = "repeat"
            for i in ids:
                session.transcript.tag(i, "refuted")
            tracer.add(rec)
            continue
        try:
            inst_script = apply_instantiations(script, merged, inline=opts.inline)
            inst_script = add_triggers(inst_script, triggers)
        except InstantiationError as err:
            rec.update(outcome="invalid", error=str(err))
            tracer.add(rec)
            continue
        emit(f"iter{it + 1}.smt2", inst_script)

        remaining = budgets.total - elapsed()
        if remaining <= 0:
            rec["outcome"] = "out_of_time"
            tracer.add(rec)
            break
        out = solve(inst_script, solver_config.with_timeout(min(tau, remaining)), get_model=True, env=env)
        rec["verdict"] = out.verdict.value
        rec["solve_time"] = round(out.wall_time, 3)
        if out.verdict is Verdict.SAT:
            check_budget = min(tau, max(budgets.total - elapsed(), tau / 4))
            t1 = clock()
            ok = model_restriction_check(script, merged, out, solver_config.with_timeout(check_budget))
            rec["soundness_check"] = ok
            rec["check_time"] = round(clock() - t1, 3)
            if ok:
                rec["outcome"] = "accepted"
                for i in ids:
                    session.transcript.tag(i, "accepted")
                tracer.add(rec)
                return FinalResult(
                    Verdict.SAT,
                    "llm_instantiated",
                    merged,
                    tracer.records,
                    learned=len(state.learned),
                    wall_time=elapsed(),
                    history=state.history,
                )
            # an unconfirmed sat teaches nothing definite; treat it like a timeout
            rec["outcome"] = "unverified"
            record_outcome(state, merged, "timeout")
            tag = "timeout"
        elif out.verdict is Verdict.UNSAT:
            record_outcome(state, merged, "refuted")
            rec["outcome"] = "refuted"
            tag = "refuted"
            if opts.debug_exclusions:
                rec["exclusion_exact"] = _exclusion_exact(script, merged, state.learned[-1], solver_config, tau)
        else:
            record_outcome(state, merged, "timeout")
            rec["outcome"] = "timeout"
            tag = "timeout"
            if out.verdict is Verdict.ERROR:
                rec["error"] = out.message[:500]
        for i in ids:
            session.transcript.tag(i, tag)
        tracer.add(rec)

    fb_budget = max(budgets.total - elapsed(), min(tau, budgets.total) / 2)
    result = fallback_solve(script, state.learned, solver_config.with_timeout(fb_budget))
    tracer.add(result.trace[-1])
    result.trace = tracer.records
    result.history = state.history
    result.wall_time = elapsed()
    return result


def _exclusion_exact(script, insts, clause, config, tau) -> Optional[bool]:
    check = script.add_assertions([clause.assertion, *definitional_axioms(insts)])
    out = solve(check, config.with_timeout(tau))
    if out.verdict is Verdict.UNSAT:
        return True
    if out.verdict is Verdict.SAT:
        log.error("exclusion clause admits the refuted definitions: %s", print_term(clause.assertion))
        return False
    return None
