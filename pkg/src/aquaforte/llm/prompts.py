"""Prompt construction for instantiation and trigger queries.

Prompts are plain data and render deterministically, so the sha256 of the
rendered text can key replay fixtures. ``PROMPT_VERSION`` is part of the
rendered text; bump it whenever the wording changes so stale fixtures miss
loudly instead of matching silently.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from typing import Optional, Sequence

from ..instantiate import Instantiation, find_quantifiers
from ..preprocess.components import Component
from ..smtlib.printer import print_sort, print_symbol, print_term
from ..smtlib.subst import free_vars
from ..smtlib.terms import BUILTIN_OPS, App, FunctionSignature, Quant, Term, subterms

PROMPT_VERSION = "aquaforte-prompt/1"

ARROW = "→"


@dataclass(frozen=True)
class HistoryEntry:
    """One earlier attempt: the merged definitions and what the solver said."""

    instantiations: tuple[Instantiation, ...]
    outcome: str  # refuted | timeout


@dataclass(frozen=True)
class Prompt:
    instruction: str
    data: str
    output_format: str
    tips: str
    history_digest: str = ""
    feedback: str = ""
    kind: str = "instantiate"

    def render(self) -> str:
        parts = [
            f"[{PROMPT_VERSION} {self.kind}]",
            "## Task\n" + self.instruction,
            "## Problem\n" + self.data,
            "## Answer format\n" + self.output_format,
            "## Rules\n" + self.tips,
        ]
        if self.history_digest:
            parts.append("## Previous attempts\n" + self.history_digest)
        if self.feedback:
            parts.append("## Fix your previous answer\n" + self.feedback)
        return "\n\n".join(parts) + "\n"

    def sha256(self) -> str:
        return prompt_hash(self)

    def with_feedback(self, message: str) -> "Prompt":
        return replace(self, feedback=message)


def prompt_hash(prompt: Prompt) -> str:
    return hashlib.sha256(prompt.render().encode("utf-8")).hexdigest()


def declare_text(sig: FunctionSignature) -> str:
    args = " ".join(print_sort(s) for s in sig.arg_sorts)
    return f"(declare-fun {print_symbol(sig.name)} ({args}) {print_sort(sig.ret_sort)})"


def instantiation_schema(signatures: Sequence[FunctionSignature]) -> dict:
    props = {}
    for sig in signatures:
        props[sig.name] = {
            "type": "object",
            "required": ["params", "body", "reasoning", "confidence"],
            "properties": {
                "params": {
                    "type": "array",
                    "minItems": sig.arity,
                    "maxItems": sig.arity,
                    "items": {"type": "array", "minItems": 2, "maxItems": 2, "items": {"type": "string"}},
                },
                "body": {"type": "string"},
                "reasoning": {"type": "string"},
                "confidence": {"type": "number", "minimum": 0, "maximum": 1},
            },
        }
    return {
        "type": "object",
        "required": [s.name for s in signatures],
        "additionalProperties": False,
        "properties": props,
    }


_INSTRUCTION = (
    "You are helping an SMT solver with a quantified problem over real and integer arithmetic. "
    "Read the constraints as mathematics, work out what they say about each uninterpreted "
    "function, and propose a concrete closed-form definition for every function listed so "
    "that all constraints hold at once."
)

_TIPS = "\n".join(
    [
        "- Each body must be a single SMT-LIB 2 term in prefix notation, e.g. (+ (* 2.0 x) 1.0).",
        "- A body may use only its own parameters, numerals and built-in operators: "
        "+ - * / div mod abs ite and or not => = < <= > >= to_real to_int.",
        "- Do not mention any function from the problem, nor any declared constant, inside a body.",
        "- Use the parameter sorts and return sort exactly as declared; write Real constants as 2.0 or (/ 1 3).",
        "- Piecewise definitions use (ite condition then else).",
        "- Reply with the JSON object only; extra prose is ignored.",
    ]
)


def _signature_lines(sigs: Sequence[FunctionSignature]) -> list[str]:
    return [declare_text(s) for s in sigs]


def history_digest(history: Sequence[HistoryEntry], functions: Optional[set[str]] = None) -> str:
    """One line per earlier definition with its outcome; restricted to ``functions`` when given."""
    lines = []
    slow = False
    for h in history:
        for inst in h.instantiations:
            if functions is not None and inst.function not in functions:
                continue
            lines.append(f"{inst.define_fun()} {ARROW} {h.outcome}")
        slow |= h.outcome == "timeout"
    if not lines:
        return ""
    head = "These definitions were already tried together and must not be proposed again:"
    tail = []
    if any(h.outcome == "refuted" for h in history):
        tail.append("Sets marked refuted make the constraints unsatisfiable; change at least one definition.")
    if slow:
        tail.append(
            "Sets marked timeout were too expensive for the solver: avoid expensive forms such as "
            "high-degree polynomials, division and deeply nested ite; prefer simple linear or constant pieces."
        )
    return "\n".join([head, *lines, *tail])


def build_instantiation_prompt(
    component: Component,
    history: Sequence[HistoryEntry] = (),
    residue: Sequence[Term] = (),
) -> Prompt:
    if not component.functions:
        raise ValueError("instantiation prompt needs a component with at least one function")
    sigs = component.signatures()
    data = ["Uninterpreted functions:"]
    data += ["  " + s for s in _signature_lines(sigs)]
    data.append("Constraints:")
    data += [f"  (assert {print_term(t)})" for t in component.assertions]
    if residue:
        data.append("Other ground constraints of the same problem:")
        data += [f"  (assert {print_term(t)})" for t in residue]

    names = [s.name for s in sigs]
    example = {
        s.name: {
            "params": [[f"x{i}", print_sort(a)] for i, a in enumerate(s.arg_sorts)],
            "body": "<SMT-LIB term>",
            "reasoning": "<short derivation>",
            "confidence": 0.9,
        }
        for s in sigs
    }
    fmt = "\n".join(
        [
            f"Return one JSON object with exactly {len(names)} entr{'y' if len(names) == 1 else 'ies'}, "
            f"one per function: {', '.join(names)}.",
            "Each entry gives params (name and sort pairs), body, reasoning and a confidence between 0 and 1.",
            "JSON schema:",
            json.dumps(instantiation_schema(sigs), sort_keys=True),
            "Example shape:",
            json.dumps(example, sort_keys=True),
        ]
    )
    return Prompt(
        instruction=_INSTRUCTION,
        data="\n".join(data),
        output_format=fmt,
        tips=_TIPS,
        history_digest=history_digest(history, set(component.functions)),
    )


# -- triggers ------------------------------------------------------------------


@dataclass(frozen=True)
class QuantifierSite:
    label: str
    assertion_index: int
    binder_path: tuple[int, ...]
    quant: Quant


def quantifier_sites(assertions: Sequence[Term]) -> list[QuantifierSite]:
    sites = []
    for ai, a in enumerate(assertions):
        for path, q in find_quantifiers(a, "forall"):
            sites.append(QuantifierSite(f"Q{len(sites)}", ai, path, q))
    return sites


def candidate_patterns(q: Quant) -> list[Term]:
    """Non-builtin applications in the body that mention a bound variable and nothing bound deeper."""
    bound = set(q.var_names)
    seen: list[Term] = []
    for s in subterms(q.body):
        if isinstance(s, App) and s.op not in BUILTIN_OPS:
            fv = free_vars(s)
            if fv & bound and s not in seen:
                seen.append(s)
    return seen


_TRIGGER_INSTRUCTION = (
    "You are tuning quantifier instantiation in an SMT solver. For every universally quantified "
    "formula below, choose trigger patterns: function applications that the solver should match "
    "against ground terms to decide which instances of the formula to create."
)

_TRIGGER_TIPS = "\n".join(
    [
        "- A pattern is a function application such as (f x); bare variables and arithmetic or "
        "Boolean operators at the top are not allowed.",
        "- The terms of one pattern together must mention every bound variable of its quantifier.",
        "- Prefer small patterns that occur in the formula; avoid patterns that generate endless instances.",
        "- Reply with the JSON object only.",
    ]
)


def build_trigger_prompt(quantified_assertions: Sequence[Term]) -> Prompt:
    sites = quantifier_sites(quantified_assertions)
    if not sites:
        raise ValueError("trigger prompt needs at least one universally quantified assertion")
    data = []
    for site in sites:
        q = site.quant
        binders = " ".join(f"({print_symbol(n)} {print_sort(s)})" for n, s in q.bindings)
        data.append(f"{site.label}: {print_term(q)}")
        data.append(f"  bound variables: {binders}")
        cands = candidate_patterns(q)
        if cands:
            data.append("  candidate patterns: " + ", ".join(print_term(c) for c in cands))
    labels = [s.label for s in sites]
    fmt = "\n".join(
        [
            "Return one JSON object mapping each quantifier label to a JSON list of patterns.",
            "A pattern is either one term string or a list of term strings (a multi-pattern).",
            "Every pattern must mention all bound variables of its quantifier.",
            f"Labels: {', '.join(labels)}.",
            'Example: {"Q0": ["(f x)", ["(g x)", "(h y)"]]}',
        ]
    )
    return Prompt(
        instruction=_TRIGGER_INSTRUCTION,
        data="\n".join(data),
        output_format=fmt,
        tips=_TRIGGER_TIPS,
        kind="triggers",
    )
