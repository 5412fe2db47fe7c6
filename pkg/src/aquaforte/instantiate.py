"""Concrete definitions for uninterpreted functions and their script-level effects.

Replacing a ``declare-fun`` by a ``define-fun`` only removes models, so a
satisfiable instantiated script means the original is satisfiable. When the
instantiated script is unsatisfiable, the joint definition is wrong and an
exclusion clause records that.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .preprocess.rewrite import expand_definitions
from .smtlib.errors import SmtLibError, SortError
from .smtlib.printer import print_define_fun
from .smtlib.subst import FreshNames, free_vars, substitute
from .smtlib.terms import (
    BUILTIN_OPS,
    Annot,
    App,
    Assert,
    Attribute,
    DeclareFun,
    DefineFun,
    FunctionSignature,
    Let,
    Quant,
    Script,
    Sort,
    Term,
    Var,
    children,
    mk_app,
    mk_or,
)
from .smtlib.typecheck import Env, check_script, coerce, elaborate

log = logging.getLogger(__name__)


class InstantiationError(SmtLibError):
    pass


class InvariantViolation(InstantiationError):
    """Raised when component disjointness was broken upstream."""


@dataclass(frozen=True)
class Instantiation:
    function: str
    params: tuple[tuple[str, Sort], ...]
    body: Term
    ret_sort: Sort

    @property
    def arity(self) -> int:
        return len(self.params)

    def define_fun(self) -> str:
        return print_define_fun(self.function, self.params, self.ret_sort, self.body)

    def canonical(self) -> "Instantiation":
        """Same definition with parameters renamed to x0, x1, ..."""
        names = [f"x{i}" for i in range(len(self.params))]
        if [n for n, _ in self.params] == names:
            return self
        mapping = {old: Var(new) for (old, _), new in zip(self.params, names)}
        body = substitute(self.body, mapping)
        return Instantiation(self.function, tuple((n, s) for n, (_, s) in zip(names, self.params)), body, self.ret_sort)

    def signature(self) -> FunctionSignature:
        return FunctionSignature(self.function, tuple(s for _, s in self.params), self.ret_sort, True)

    def to_json(self) -> dict:
        from .smtlib.printer import print_term

        return {
            "function": self.function,
            "params": [[n, s.name] for n, s in self.params],
            "body": print_term(self.body),
        }


def same_instantiation_set(a: Iterable[Instantiation], b: Iterable[Instantiation]) -> bool:
    ka = sorted((i.canonical() for i in a), key=lambda i: i.function)
    kb = sorted((i.canonical() for i in b), key=lambda i: i.function)
    return ka == kb


# -- merging -------------------------------------------------------------------


def merge_instantiations(
    per_component: Sequence[Sequence[Instantiation]], env: Optional[Env] = None
) -> list[Instantiation]:
    """Flatten per-component results into one canonicalised set.

    Parameters are renamed to x0, x1, ... so definitions from different
    components cannot clash. With ``env`` every definition is re-checked
    against the global symbol table.
    """
    merged: dict[str, Instantiation] = {}
    for group in per_component:
        for inst in group:
            if inst.function in merged:
                raise InvariantViolation(
                    f"function '{inst.function}' defined by more than one component; components must be disjoint"
                )
            merged[inst.function] = inst.canonical()
    if env is not None:
        for inst in merged.values():
            _check_against(inst, env)
    return [merged[k] for k in sorted(merged)]


def _check_against(inst: Instantiation, env: Env) -> None:
    sig = env.functions.get(inst.function)
    if sig is None:
        raise InstantiationError(f"function '{inst.function}' is not declared")
    if sig.interpreted:
        raise InstantiationError(f"function '{inst.function}' is already defined")
    arg_sorts = tuple(s for _, s in inst.params)
    if arg_sorts != sig.arg_sorts or inst.ret_sort != sig.ret_sort:
        raise InstantiationError(
            f"definition of '{inst.function}' has type {arg_sorts} -> {inst.ret_sort}, "
            f"declared {sig.arg_sorts} -> {sig.ret_sort}"
        )
    _, s = elaborate(inst.body, env.bind(inst.params))
    coerce(inst.body, s, sig.ret_sort)


# -- applying ------------------------------------------------------------------


def apply_instantiations(script: Script, insts: Sequence[Instantiation], inline: bool = False) -> Script:
    """Turn each instantiated ``declare-fun`` into a ``define-fun`` in place.

    With ``inline`` the definitions are beta-reduced at their call sites and
    the declarations dropped instead.
    """
    if not insts:
        return script
    by_name = {i.function: i for i in insts}
    found: set[str] = set()
    defined = {c.signature.name for c in script.commands if isinstance(c, DefineFun)}
    out = []
    for c in script.commands:
        if isinstance(c, DeclareFun) and c.signature.name in by_name:
            inst = by_name[c.signature.name]
            sig = c.signature
            if tuple(s for _, s in inst.params) != sig.arg_sorts or inst.ret_sort != sig.ret_sort:
                raise InstantiationError(f"definition of '{sig.name}' does not match its declaration")
            found.add(sig.name)
            out.append(
                DefineFun(FunctionSignature(sig.name, sig.arg_sorts, sig.ret_sort, True), inst.params, inst.body, pos=c.pos)
            )
        else:
            out.append(c)
    for name in by_name:
        if name in found:
            continue
        if name in defined:
            raise InstantiationError(f"function '{name}' is already defined")
        raise InstantiationError(f"function '{name}' is not declared")
    result = check_script(Script(tuple(out)))
    if inline:
        result = _inline(result, set(by_name))
    return result


def _inline(script: Script, names: set[str]) -> Script:
    env = Env()
    for c in script.commands:
        if isinstance(c, DefineFun) and c.signature.name in names:
            env.add_command(c)
    fresh = FreshNames()
    out = []
    for c in script.commands:
        if isinstance(c, DefineFun) and c.signature.name in names:
            continue
        if isinstance(c, Assert):
            c = Assert(expand_definitions(c.term, env, fresh), pos=c.pos)
        elif isinstance(c, DefineFun):
            c = DefineFun(c.signature, c.params, expand_definitions(c.body, env, fresh), pos=c.pos)
        out.append(c)
    return Script(tuple(out))


# -- triggers ------------------------------------------------------------------


@dataclass(frozen=True)
class TriggerPattern:
    """One (multi-)pattern for the universal quantifier at ``binder_path`` inside assertion ``assertion_index``.

    ``binder_vars`` are the bound-variable names the pattern was written
    against; when the quantifier has since been alpha-renamed, pattern
    variables are mapped onto the current names by position.
    """

    assertion_index: int
    binder_path: tuple[int, ...]
    terms: tuple[Term, ...]
    binder_vars: Optional[tuple[str, ...]] = None


def find_quantifiers(t: Term, kind: Optional[str] = "forall", path: tuple[int, ...] = ()):
    """Yield (path, quantifier) pairs; paths index into ``children()``."""
    if isinstance(t, Quant) and (kind is None or t.kind == kind):
        yield path, t
    for i, c in enumerate(children(t)):
        yield from find_quantifiers(c, kind, path + (i,))


def term_at(t: Term, path: Sequence[int]) -> Optional[Term]:
    for i in path:
        kids = children(t)
        if i >= len(kids):
            return None
        t = kids[i]
    return t


def replace_at(t: Term, path: Sequence[int], new: Term) -> Term:
    if not path:
        return new
    i, rest = path[0], path[1:]
    if isinstance(t, App):
        args = list(t.args)
        args[i] = replace_at(args[i], rest, new)
        return App(t.op, tuple(args))
    if isinstance(t, Quant):
        return Quant(t.kind, t.bindings, replace_at(t.body, rest, new))
    if isinstance(t, Annot):
        return Annot(replace_at(t.body, rest, new), t.attributes)
    if isinstance(t, Let):
        if i < len(t.bindings):
            b = list(t.bindings)
            b[i] = (b[i][0], replace_at(b[i][1], rest, new))
            return Let(tuple(b), t.body)
        return Let(t.bindings, replace_at(t.body, rest, new))
    raise IndexError("path leads into a leaf")


_NOT_IN_PATTERNS = BUILTIN_OPS - {"+", "-", "*", "/", "div", "mod", "abs", "to_real", "to_int"}


def pattern_problem(terms: Sequence[Term], quant: Quant, env: Env) -> Optional[str]:
    """Why ``terms`` is not a usable pattern for ``quant``, or None when it is."""
    if not terms:
        return "empty pattern"
    inner = env.bind(quant.bindings)
    bound = set(quant.var_names)
    mentioned: set[str] = set()
    for p in terms:
        if not isinstance(p, App) or p.op in BUILTIN_OPS:
            return f"pattern {p!r} must be a function application"
        try:
            elaborate(p, inner)
        except SortError as err:
            return f"ill-sorted pattern: {err}"
        for s in _walk(p):
            if isinstance(s, (Quant, Let, Annot)):
                return "patterns may not contain binders"
            if isinstance(s, App) and s.op in _NOT_IN_PATTERNS:
                return f"patterns may not contain '{s.op}'"
        fv = free_vars(p)
        stray = {v for v in fv - bound if env.var_sort(v) is None}
        if stray:
            return f"pattern mentions unbound names {sorted(stray)}"
        mentioned |= fv & bound
    missing = bound - mentioned
    if missing:
        return f"pattern does not mention bound variables {sorted(missing)}"
    return None


def _walk(t: Term):
    yield t
    for c in children(t):
        yield from _walk(c)


def _rename_to_binder(tp: TriggerPattern, quant: Quant) -> tuple[Term, ...]:
    if tp.binder_vars is None or tuple(tp.binder_vars) == quant.var_names:
        return tp.terms
    if len(tp.binder_vars) != len(quant.var_names):
        return tp.terms
    mapping = {old: Var(new) for old, new in zip(tp.binder_vars, quant.var_names) if old != new}
    return tuple(substitute(p, mapping) for p in tp.terms)


def add_triggers(script: Script, triggers: Sequence[TriggerPattern]) -> Script:
    """Attach ``:pattern`` annotations to universal quantifiers.

    Stale locators and invalid patterns are skipped with a warning. Patterns
    equal to one already on the quantifier (after mapping onto its variable
    names) are dropped.
    """
    if not triggers:
        return script
    asserts = [i for i, c in enumerate(script.commands) if isinstance(c, Assert)]
    env = Env.from_script(script)
    by_target: dict[tuple[int, tuple[int, ...]], list[TriggerPattern]] = {}
    for tp in triggers:
        by_target.setdefault((tp.assertion_index, tuple(tp.binder_path)), []).append(tp)

    commands = list(script.commands)
    for (ai, path), tps in by_target.items():
        if ai >= len(asserts):
            log.warning("trigger locator %s/%s is stale: no such assertion", ai, path)
            continue
        cmd = commands[asserts[ai]]
        quant = term_at(cmd.term, path)
        if not isinstance(quant, Quant) or quant.kind != "forall":
            log.warning("trigger locator %s/%s is stale: no universal quantifier there", ai, path)
            continue
        body = quant.body
        attrs = list(body.attributes) if isinstance(body, Annot) else []
        inner = body.body if isinstance(body, Annot) else body
        existing = [a.terms for a in attrs if a.keyword == ":pattern"]
        added = False
        for tp in tps:
            terms = _rename_to_binder(tp, quant)
            problem = pattern_problem(terms, quant, env)
            if problem:
                log.warning("rejected trigger for assertion %s: %s", ai, problem)
                continue
            terms = tuple(elaborate(p, env.bind(quant.bindings))[0] for p in terms)
            if terms in existing:
                continue
            existing.append(terms)
            attrs.append(Attribute(":pattern", terms))
            added = True
        if not added:
            continue
        new_q = Quant(quant.kind, quant.bindings, Annot(inner, tuple(attrs)))
        commands[asserts[ai]] = Assert(replace_at(cmd.term, path, new_q), pos=cmd.pos)
    return Script(tuple(commands))


# -- exclusion clauses ---------------------------------------------------------


@dataclass(frozen=True)
class ExclusionClause:
    assertion: Term


def make_exclusion_clause(insts: Sequence[Instantiation]) -> ExclusionClause:
    """Clause satisfied exactly when some function differs from its refuted definition somewhere."""
    if not insts:
        raise ValueError("exclusion clause needs at least one instantiation")
    disjuncts = []
    for inst in sorted((i.canonical() for i in insts), key=lambda i: i.function):
        if inst.params:
            call = mk_app(inst.function, *(Var(n) for n, _ in inst.params))
            diff = mk_app("not", mk_app("=", call, inst.body))
            disjuncts.append(Quant("exists", inst.params, diff))
        else:
            disjuncts.append(mk_app("not", mk_app("=", Var(inst.function), inst.body)))
    return ExclusionClause(mk_or(disjuncts))


def definitional_axioms(insts: Sequence[Instantiation]) -> list[Term]:
    """``forall params. f(params) = body`` for each instantiation (0-ary: ``f = body``)."""
    out = []
    for inst in (i.canonical() for i in insts):
        if inst.params:
            call = mk_app(inst.function, *(Var(n) for n, _ in inst.params))
            out.append(Quant("forall", inst.params, mk_app("=", call, inst.body)))
        else:
            out.append(mk_app("=", Var(inst.function), inst.body))
    return out
