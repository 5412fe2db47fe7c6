"""Free variables, capture-avoiding substitution and symbol queries."""

from __future__ import annotations

import itertools
from typing import Mapping, Optional

from .errors import SortError
from .terms import BUILTIN_OPS, Annot, App, Attribute, Let, Quant, Term, Var, subterms
from .typecheck import Env, sort_of


class FreshNames:
    """Generates ``base!k`` names with a counter that only ever increases."""

    def __init__(self, start: int = 1):
        self._counter = itertools.count(start)

    def fresh(self, base: str, avoid: set[str]) -> str:
        stem = base.split("!", 1)[0] or "v"
        while True:
            cand = f"{stem}!{next(self._counter)}"
            if cand not in avoid:
                return cand


def free_vars(t: Term) -> frozenset[str]:
    """Names referenced as ``Var`` and not bound inside ``t`` (0-ary constants included)."""
    if isinstance(t, Var):
        return frozenset((t.name,))
    if isinstance(t, App):
        out: frozenset[str] = frozenset()
        for a in t.args:
            out |= free_vars(a)
        return out
    if isinstance(t, Quant):
        return free_vars(t.body) - set(t.var_names)
    if isinstance(t, Let):
        out = frozenset()
        for _, v in t.bindings:
            out |= free_vars(v)
        return out | (free_vars(t.body) - {n for n, _ in t.bindings})
    if isinstance(t, Annot):
        out = free_vars(t.body)
        for a in t.attributes:
            for p in a.terms:
                out |= free_vars(p)
        return out
    return frozenset()


def all_names(t: Term) -> set[str]:
    """Every variable, binder and function name occurring anywhere in ``t``."""
    names: set[str] = set()
    for s in subterms(t):
        if isinstance(s, Var):
            names.add(s.name)
        elif isinstance(s, App):
            names.add(s.op)
        elif isinstance(s, Quant):
            names.update(s.var_names)
        elif isinstance(s, Let):
            names.update(n for n, _ in s.bindings)
    return names


def substitute(
    term: Term,
    bindings: Mapping[str, Term],
    env: Optional[Env] = None,
    fresh: Optional[FreshNames] = None,
) -> Term:
    """Replace free occurrences of variables, renaming binders that would capture.

    With ``env`` each replacement must have the sort of the variable it
    replaces (looked up in ``env``); a mismatch raises SortError.
    """
    if env is not None:
        for name, repl in bindings.items():
            want = env.var_sort(name)
            if want is None:
                continue
            have = sort_of(repl, env)
            if have != want:
                raise SortError(f"binding for '{name}' has sort {have}, expected {want}")
    return _subst(term, dict(bindings), fresh or FreshNames())


def _subst(t: Term, m: dict[str, Term], fresh: FreshNames) -> Term:
    if not m:
        return t
    if isinstance(t, Var):
        return m.get(t.name, t)
    if isinstance(t, App):
        args = tuple(_subst(a, m, fresh) for a in t.args)
        return t if args == t.args else App(t.op, args)
    if isinstance(t, Annot):
        attrs = tuple(
            Attribute(a.keyword, tuple(_subst(p, m, fresh) for p in a.terms), a.raw) if a.terms else a
            for a in t.attributes
        )
        return Annot(_subst(t.body, m, fresh), attrs)
    if isinstance(t, Quant):
        names = t.var_names
        body, new_names = _under_binder(names, t.body, m, fresh)
        if body is None:
            return t
        sorts = [s for _, s in t.bindings]
        return Quant(t.kind, tuple(zip(new_names, sorts)), body)
    if isinstance(t, Let):
        vals = [(n, _subst(v, m, fresh)) for n, v in t.bindings]
        names = tuple(n for n, _ in t.bindings)
        body, new_names = _under_binder(names, t.body, m, fresh)
        if body is None:
            body, new_names = t.body, names
        return Let(tuple((nn, v) for nn, (_, v) in zip(new_names, vals)), body)
    return t


def _under_binder(names, body, m, fresh):
    inner = {k: v for k, v in m.items() if k not in names}
    fv_body = free_vars(body)
    inner = {k: v for k, v in inner.items() if k in fv_body}
    if not inner:
        return None, names
    danger: set[str] = set()
    for v in inner.values():
        danger |= free_vars(v)
    clash = [n for n in names if n in danger]
    if not clash:
        return _subst(body, inner, fresh), names
    avoid = danger | all_names(body) | set(names) | set(inner)
    new_names = []
    for n in names:
        if n in danger:
            nn = fresh.fresh(n, avoid)
            avoid.add(nn)
            inner[n] = Var(nn)
            new_names.append(nn)
        else:
            new_names.append(n)
    return _subst(body, inner, fresh), tuple(new_names)


def uninterpreted_symbols(term: Term, env: Env) -> set[str]:
    """Applied or referenced symbols that are declared but not defined in ``env``."""
    out: set[str] = set()
    _collect_uf(term, env, frozenset(), out)
    return out


def _collect_uf(t: Term, env: Env, bound: frozenset, out: set) -> None:
    if isinstance(t, Var):
        if t.name not in bound and env.is_uninterpreted(t.name):
            out.add(t.name)
    elif isinstance(t, App):
        if t.op not in BUILTIN_OPS and t.op not in bound and env.is_uninterpreted(t.op):
            out.add(t.op)
        for a in t.args:
            _collect_uf(a, env, bound, out)
    elif isinstance(t, Quant):
        _collect_uf(t.body, env, bound | set(t.var_names), out)
    elif isinstance(t, Let):
        for _, v in t.bindings:
            _collect_uf(v, env, bound, out)
        _collect_uf(t.body, env, bound | {n for n, _ in t.bindings}, out)
    elif isinstance(t, Annot):
        _collect_uf(t.body, env, bound, out)
        for a in t.attributes:
            for p in a.terms:
                _collect_uf(p, env, bound, out)


def applied_functions(term: Term) -> set[str]:
    """Names of non-builtin operators applied somewhere in ``term``."""
    return {s.op for s in subterms(term) if isinstance(s, App) and s.op not in BUILTIN_OPS}


def alpha_equivalent(a: Term, b: Term) -> bool:
    """Structural equality up to consistent renaming of bound variables."""
    return _alpha(a, b, {}, {})


def _alpha(a: Term, b: Term, ma: dict, mb: dict) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, Var):
        la, lb = ma.get(a.name), mb.get(b.name)
        if la is None and lb is None:
            return a.name == b.name
        return la == lb
    if isinstance(a, App):
        return a.op == b.op and len(a.args) == len(b.args) and all(_alpha(x, y, ma, mb) for x, y in zip(a.args, b.args))
    if isinstance(a, Quant):
        if a.kind != b.kind or len(a.bindings) != len(b.bindings):
            return False
        if [s for _, s in a.bindings] != [s for _, s in b.bindings]:
            return False
        depth = object()
        ma2, mb2 = dict(ma), dict(mb)
        for (na, _), (nb, _), k in zip(a.bindings, b.bindings, itertools.count()):
            ma2[na] = (id(depth), k)
            mb2[nb] = (id(depth), k)
        return _alpha(a.body, b.body, ma2, mb2)
    if isinstance(a, Let):
        if len(a.bindings) != len(b.bindings):
            return False
        if not all(_alpha(va, vb, ma, mb) for (_, va), (_, vb) in zip(a.bindings, b.bindings)):
            return False
        depth = object()
        ma2, mb2 = dict(ma), dict(mb)
        for (na, _), (nb, _), k in zip(a.bindings, b.bindings, itertools.count()):
            ma2[na] = (id(depth), k)
            mb2[nb] = (id(depth), k)
        return _alpha(a.body, b.body, ma2, mb2)
    if isinstance(a, Annot):
        if len(a.attributes) != len(b.attributes) or not _alpha(a.body, b.body, ma, mb):
            return False
        for x, y in zip(a.attributes, b.attributes):
            if x.keyword != y.keyword or x.raw != y.raw or len(x.terms) != len(y.terms):
                return False
            if not all(_alpha(p, q, ma, mb) for p, q in zip(x.terms, y.terms)):
                return False
        return True
    return a == b
