"""Extracting and checking LLM answers."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Any, Optional, Sequence, Union

from ..instantiate import Instantiation
from ..smtlib.errors import ParseError, SortError
from ..smtlib.parser import parse_sort, parse_term
from ..smtlib.printer import print_term
from ..smtlib.subst import uninterpreted_symbols
from ..smtlib.terms import INT, REAL, Num
from ..smtlib.typecheck import Env, coerce, elaborate

log = logging.getLogger(__name__)


class MalformedResponse(ValueError):
    """No usable JSON in the answer, or JSON of the wrong shape."""


class CandidateError(ValueError):
    """A candidate that cannot be used; ``feedback`` is phrased for a re-query."""

    kind = "invalid"

    def __init__(self, function: str, message: str):
        super().__init__(f"{function}: {message}")
        self.function = function
        self.feedback = f"The definition you gave for {function} is not usable: {message}"


class CandidateParseError(CandidateError):
    kind = "parse"


class ArityMismatch(CandidateError):
    kind = "arity"


class SortMismatch(CandidateError):
    kind = "sort"


class NonConcreteBody(CandidateError):
    kind = "non_concrete"


class UnknownFunction(CandidateError):
    kind = "unknown_function"


@dataclass(frozen=True)
class CandidateInstantiation:
    function: str
    params: Optional[tuple[tuple[str, str], ...]]
    body_text: str
    reasoning: str = ""
    confidence: float = 0.5


def find_json(raw: str) -> Any:
    """First well-formed JSON object or array in ``raw``; prose and code fences are skipped."""
    dec = json.JSONDecoder()
    i = 0
    while True:
        starts = [p for p in (raw.find("{", i), raw.find("[", i)) if p >= 0]
        if not starts:
            raise MalformedResponse("no JSON object or array found in the response")
        i = min(starts)
        try:
            value, _ = dec.raw_decode(raw, i)
            return value
        except json.JSONDecodeError:
            i += 1


def _confidence(v: Any) -> float:
    if v is None:
        return 0.5
    try:
        c = float(v)
    except (TypeError, ValueError):
        return 0.5
    if c != c:
        return 0.5
    return min(1.0, max(0.0, c))


def _params(v: Any, function: str) -> Optional[tuple[tuple[str, str], ...]]:
    if v is None:
        return None
    if not isinstance(v, list):
        raise MalformedResponse(f"params of {function} must be a list")
    out = []
    for p in v:
        if isinstance(p, (list, tuple)) and len(p) == 2 and all(isinstance(x, str) for x in p):
            out.append((p[0], p[1]))
        elif isinstance(p, dict) and isinstance(p.get("name"), str) and isinstance(p.get("sort"), str):
            out.append((p["name"], p["sort"]))
        else:
            raise MalformedResponse(f"params of {function} must be [name, sort] pairs")
    return tuple(out)


def _candidate(function: Any, entry: Any) -> CandidateInstantiation:
    if not isinstance(function, str) or not function:
        raise MalformedResponse("candidate without a function name")
    if isinstance(entry, str):
        return CandidateInstantiation(function, None, entry)
    if not isinstance(entry, dict):
        raise MalformedResponse(f"entry for {function} must be an object")
    body = entry.get("body")
    if not isinstance(body, str) or not body.strip():
        raise MalformedResponse(f"entry for {function} has no body")
    reasoning = entry.get("reasoning", "")
    return CandidateInstantiation(
        function,
        _params(entry.get("params"), function),
        body,
        reasoning if isinstance(reasoning, str) else json.dumps(reasoning),
        _confidence(entry.get("confidence")),
    )


def _dedupe(cands: list[CandidateInstantiation]) -> list[CandidateInstantiation]:
    seen: set[str] = set()
    out = []
    for c in cands:
        if c.function in seen:
            log.warning("ignoring extra candidate for %s", c.function)
            continue
        seen.add(c.function)
        out.append(c)
    return out


def parse_response(raw: str) -> Union[list[CandidateInstantiation], list[Union[str, list[str]]]]:
    """Candidates from an instantiation answer, or pattern strings from a trigger answer.

    Accepted shapes: ``{"f": {...}, "g": {...}}``, the same wrapped under a
    ``definitions``/``instantiations`` key, a list of objects each carrying a
    ``function`` key, or a list of pattern strings (or lists of them).
    """
    value = find_json(raw)
    if isinstance(value, dict):
        for key in ("definitions", "instantiations"):
            if key in value and len(value) == 1:
                value = value[key]
                break
    if isinstance(value, dict):
        return _dedupe([_candidate(k, v) for k, v in value.items()])
    if isinstance(value, list):
        if not value:
            return []
        if all(isinstance(v, str) or (isinstance(v, list) and all(isinstance(x, str) for x in v)) for v in value):
            return list(value)
        if all(isinstance(v, dict) for v in value):
            return _dedupe([_candidate(v.get("function", v.get("name")), v) for v in value])
    raise MalformedResponse("JSON does not match the requested format")


def parse_trigger_response(raw: str, labels: Sequence[str]) -> dict[str, list[list[str]]]:
    """Map quantifier label to its pattern sets (each a list of term strings)."""
    value = find_json(raw)
    if isinstance(value, list):
        if len(labels) != 1:
            raise MalformedResponse("a bare list is only accepted when there is a single quantifier")
        value = {labels[0]: value}
    if not isinstance(value, dict):
        raise MalformedResponse("trigger answer must be a JSON object keyed by quantifier label")
    out: dict[str, list[list[str]]] = {}
    for label, pats in value.items():
        if label not in labels:
            log.warning("ignoring patterns for unknown quantifier %s", label)
            continue
        if not isinstance(pats, list):
            raise MalformedResponse(f"patterns for {label} must be a list")
        sets = []
        for p in pats:
            if isinstance(p, str):
                sets.append([p])
            elif isinstance(p, list) and p and all(isinstance(x, str) for x in p):
                sets.append(list(p))
            else:
                raise MalformedResponse(f"bad pattern entry for {label}")
        out[label] = sets
    return out


def validate_candidate(cand: CandidateInstantiation, env: Env) -> Instantiation:
    """Parse and type-check one candidate against its declared signature."""
    f = cand.function
    sig = env.functions.get(f)
    if sig is None or sig.interpreted:
        raise UnknownFunction(f, f"{f} is not one of the uninterpreted functions of this problem")
    if cand.params is None:
        params = tuple((f"x{i}", s) for i, s in enumerate(sig.arg_sorts))
    else:
        if len(cand.params) != sig.arity:
            raise ArityMismatch(f, f"{f} takes {sig.arity} argument(s) but {len(cand.params)} parameter(s) were given")
        params = []
        for (name, sort_text), want in zip(cand.params, sig.arg_sorts):
            try:
                s = parse_sort(sort_text, env)
            except ParseError as err:
                raise CandidateParseError(f, f"unknown sort {sort_text!r} ({err})") from err
            if s != want:
                raise SortMismatch(f, f"parameter {name} must have sort {want}, not {s}")
            params.append((name, s))
        params = tuple(params)
        names = [n for n, _ in params]
        if len(set(names)) != len(names):
            raise CandidateParseError(f, "parameter names must be distinct")
    inner = env.bind(params)
    try:
        body = parse_term(cand.body_text, inner)
    except SortError as err:
        raise SortMismatch(f, f"body is ill-sorted: {err}") from err
    except ParseError as err:
        raise CandidateParseError(f, f"body is not a valid SMT-LIB term: {err}") from err
    stray = uninterpreted_symbols(body, inner)
    if stray:
        raise NonConcreteBody(
            f, f"body mentions undefined symbol(s) {', '.join(sorted(stray))}; use only the parameters and built-in operators"
        )
    body, s = elaborate(body, inner)
    try:
        body = coerce(body, s, sig.ret_sort)
    except SortError as err:
        raise SortMismatch(f, f"body has sort {s} but {f} returns {sig.ret_sort}") from err
    if isinstance(body, Num) and body.sort == INT and sig.ret_sort == REAL:
        body = Num(body.value, REAL)
    return Instantiation(f, params, body, sig.ret_sort)


def candidate_json(inst: Instantiation, reasoning: str = "", confidence: float = 1.0) -> dict:
    """Entry in the answer schema for a known instantiation (used to build fixtures)."""
    return {
        "params": [[n, s.name] for n, s in inst.params],
        "body": print_term(inst.body),
        "reasoning": reasoning,
        "confidence": confidence,
    }

