"""Symbol tables and sort checking.

Mixed Int/Real arithmetic is elaborated into explicit ``to_real`` nodes so that
printing is deterministic. Integer *literals* in a Real context are left alone;
both back-ends accept them and the printed form stays readable.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Optional

from .errors import SortError
from .terms import (
    BOOL,
    INT,
    REAL,
    Annot,
    App,
    Assert,
    Attribute,
    BoolConst,
    DeclareFun,
    DeclareSort,
    DefineFun,
    FunctionSignature,
    Let,
    Num,
    Quant,
    Script,
    Sort,
    Term,
    Var,
)


class Env:
    """Function table plus the sorts of variables currently in scope."""

    def __init__(
        self,
        functions: Optional[Mapping[str, FunctionSignature]] = None,
        definitions: Optional[Mapping[str, DefineFun]] = None,
        sorts: Iterable[str] = (),
        variables: Optional[Mapping[str, Sort]] = None,
    ):
        self.functions: dict[str, FunctionSignature] = dict(functions or {})
        self.definitions: dict[str, DefineFun] = dict(definitions or {})
        self.sorts = frozenset(sorts)
        self.variables: dict[str, Sort] = dict(variables or {})

    @classmethod
    def from_script(cls, script: Script) -> "Env":
        env = cls()
        for c in script.commands:
            env.add_command(c)
        return env

    def add_command(self, c) -> None:
        if isinstance(c, DeclareFun):
            self.functions[c.signature.name] = c.signature
        elif isinstance(c, DefineFun):
            self.functions[c.signature.name] = c.signature
            self.definitions[c.signature.name] = c
        elif isinstance(c, DeclareSort):
            self.sorts = self.sorts | {c.name}

    def bind(self, pairs: Iterable[tuple[str, Sort]]) -> "Env":
        new = Env.__new__(Env)
        new.functions = self.functions
        new.definitions = self.definitions
        new.sorts = self.sorts
        new.variables = {**self.variables, **dict(pairs)}
        return new

    def copy(self) -> "Env":
        return Env(self.functions, self.definitions, self.sorts, self.variables)

    def var_sort(self, name: str) -> Optional[Sort]:
        if name in self.variables:
            return self.variables[name]
        sig = self.functions.get(name)
        if sig is not None and sig.arity == 0:
            return sig.ret_sort
        return None

    def is_uninterpreted(self, name: str) -> bool:
        """True for declared (not defined) symbols that are not shadowed by a variable."""
        if name in self.variables:
            return False
        sig = self.functions.get(name)
        return sig is not None and not sig.interpreted

    def uninterpreted_functions(self) -> list[FunctionSignature]:
        return [s for s in self.functions.values() if not s.interpreted]


def _is_literal(t: Term) -> bool:
    return isinstance(t, Num)


def coerce(t: Term, have: Sort, want: Sort, path=()) -> Term:
    if have == want:
        return t
    if have == INT and want == REAL:
        return t if _is_literal(t) else App("to_real", (t,))
    raise SortError(f"expected {want}, got {have}", path)


def _unify_numeric(args, sorts, path) -> tuple[tuple[Term, ...], Sort]:
    for i, s in enumerate(sorts):
        if not s.is_numeric:
            raise SortError(f"expected a numeric argument, got {s}", path + (i,))
    target = REAL if REAL in sorts else INT
    return tuple(coerce(a, s, target, path + (i,)) for i, (a, s) in enumerate(zip(args, sorts))), target


def _unify_any(args, sorts, path) -> tuple[tuple[Term, ...], Sort]:
    if all(s.is_numeric for s in sorts):
        return _unify_numeric(args, sorts, path)
    first = sorts[0]
    for i, s in enumerate(sorts):
        if s != first:
            raise SortError(f"sort mismatch: {first} vs {s}", path + (i,))
    return tuple(args), first


def _need_bool(sorts, path):
    for i, s in enumerate(sorts):
        if s != BOOL:
            raise SortError(f"expected Bool, got {s}", path + (i,))


def _arity(op, args, lo, hi, path):
    n = len(args)
    if n < lo or (hi is not None and n > hi):
        want = f"{lo}" if hi == lo else f"at least {lo}" if hi is None else f"{lo}..{hi}"
        raise SortError(f"'{op}' expects {want} arguments, got {n}", path)


def elaborate(term: Term, env: Env, path: tuple[int, ...] = ()) -> tuple[Term, Sort]:
    """Sort-check ``term`` and return it with explicit coercions, plus its sort."""
    if isinstance(term, Num):
        return term, term.sort
    if isinstance(term, BoolConst):
        return term, BOOL
    if isinstance(term, Var):
        s = env.var_sort(term.name)
        if s is None:
            if term.name in env.functions:
                raise SortError(f"function '{term.name}' used without arguments", path)
            raise SortError(f"unbound symbol '{term.name}'", path)
        return term, s
    if isinstance(term, App):
        return _elab_app(term, env, path)
    if isinstance(term, Quant):
        names = term.var_names
        if len(set(names)) != len(names):
            raise SortError("duplicate bound variable in quantifier", path)
        for _, s in term.bindings:
            _check_sort_known(s, env, path)
        body, s = elaborate(term.body, env.bind(term.bindings), path + (0,))
        if s != BOOL:
            raise SortError(f"quantifier body must be Bool, got {s}", path + (0,))
        return Quant(term.kind, term.bindings, body), BOOL
    if isinstance(term, Let):
        names = [n for n, _ in term.bindings]
        if len(set(names)) != len(names):
            raise SortError("duplicate let binding", path)
        vals, pairs = [], []
        for i, (n, v) in enumerate(term.bindings):
            v2, s = elaborate(v, env, path + (i,))
            vals.append((n, v2))
            pairs.append((n, s))
        body, s = elaborate(term.body, env.bind(pairs), path + (len(term.bindings),))
        return Let(tuple(vals), body), s
    if isinstance(term, Annot):
        body, s = elaborate(term.body, env, path + (0,))
        attrs = []
        for a in term.attributes:
            if a.terms:
                pats = tuple(elaborate(p, env, path + (0,))[0] for p in a.terms)
                attrs.append(Attribute(a.keyword, pats, a.raw))
            else:
                attrs.append(a)
        return Annot(body, tuple(attrs)), s
    raise SortError(f"unknown term node {type(term).__name__}", path)


def _check_sort_known(s: Sort, env: Env, path):
    if not s.is_builtin and s.name not in env.sorts:
        raise SortError(f"unknown sort {s}", path)


def _elab_app(term: App, env: Env, path) -> tuple[Term, Sort]:
    op = term.op
    pairs = [elaborate(a, env, path + (i,)) for i, a in enumerate(term.args)]
    args = tuple(p[0] for p in pairs)
    sorts = [p[1] for p in pairs]

    if op in ("and", "or", "xor"):
        _arity(op, args, 1, None, path)
        _need_bool(sorts, path)
        return App(op, args), BOOL
    if op == "not":
        _arity(op, args, 1, 1, path)
        _need_bool(sorts, path)
        return App(op, args), BOOL
    if op == "=>":
        _arity(op, args, 2, None, path)
        _need_bool(sorts, path)
        return App(op, args), BOOL
    if op == "ite":
        _arity(op, args, 3, 3, path)
        if sorts[0] != BOOL:
            raise SortError(f"ite condition must be Bool, got {sorts[0]}", path + (0,))
        branches, s = _unify_any(args[1:], sorts[1:], path)
        return App(op, (args[0],) + branches), s
    if op in ("=", "distinct"):
        _arity(op, args, 2, None, path)
        args, _ = _unify_any(args, sorts, path)
        return App(op, args), BOOL
    if op in ("<", "<=", ">", ">="):
        _arity(op, args, 2, None, path)
        args, _ = _unify_numeric(args, sorts, path)
        return App(op, args), BOOL
    if op in ("+", "*", "-"):
        _arity(op, args, 1, None, path)
        args, s = _unify_numeric(args, sorts, path)
        return App(op, args), s
    if op == "/":
        _arity(op, args, 2, None, path)
        args, s = _unify_numeric(args, sorts, path)
        if s == INT:
            args = tuple(coerce(a, INT, REAL) for a in args)
        return App(op, args), REAL
    if op in ("div", "mod"):
        _arity(op, args, 2, None if op == "div" else 2, path)
        for i, s in enumerate(sorts):
            if s != INT:
                raise SortError(f"'{op}' expects Int, got {s}", path + (i,))
        return App(op, args), INT
    if op == "abs":
        _arity(op, args, 1, 1, path)
        if not sorts[0].is_numeric:
            raise SortError(f"'abs' expects a numeric argument, got {sorts[0]}", path + (0,))
        return App(op, args), sorts[0]
    if op == "to_real":
        _arity(op, args, 1, 1, path)
        if sorts[0] != INT:
            raise SortError(f"'to_real' expects Int, got {sorts[0]}", path + (0,))
        return App(op, args), REAL
    if op in ("to_int", "is_int"):
        _arity(op, args, 1, 1, path)
        a = coerce(args[0], sorts[0], REAL, path + (0,))
        return App(op, (a,)), INT if op == "to_int" else BOOL

    sig = env.functions.get(op)
    if sig is None or op in env.variables:
        raise SortError(f"unknown function '{op}'", path)
    if sig.arity != len(args):
        raise SortError(f"'{op}' expects {sig.arity} arguments, got {len(args)}", path)
    args = tuple(coerce(a, s, want, path + (i,)) for i, (a, s, want) in enumerate(zip(args, sorts, sig.arg_sorts)))
    return App(op, args), sig.ret_sort


def sort_of(term: Term, env: Env) -> Sort:
    """Sort of a term closed under ``env``; raises SortError when ill-sorted."""
    return elaborate(term, env)[1]


def check_command(c, env: Env):
    """Sort-check one command against ``env`` (not updated here)."""
    if isinstance(c, DefineFun):
        body, s = elaborate(c.body, env.bind(c.params))
        body = coerce(body, s, c.signature.ret_sort)
        return DefineFun(c.signature, c.params, body, pos=c.pos)
    if isinstance(c, Assert):
        t, s = elaborate(c.term, env)
        if s != BOOL:
            raise SortError(f"assertion has sort {s}, expected Bool")
        return Assert(t, pos=c.pos)
    return c


def check_script(script: Script) -> Script:
    """Elaborate every term of a script in command order."""
    env = Env()
    out = []
    for c in script.commands:
        c = check_command(c, env)
        env.add_command(c)
        out.append(c)
    return Script(tuple(out))
