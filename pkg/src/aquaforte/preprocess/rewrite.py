"""Equivalence-preserving formula rewriting.

Pipeline per assertion: inline define-fun bodies, expand lets, then a single
bottom-up simplification pass (exact constant folding, unit/absorption laws,
tautology and contradiction detection, and/or flattening). Every rule builds
its result from already-simplified parts and re-simplifies what it builds, so
the output is a fixed point and rewriting twice changes nothing.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Optional

from ..smtlib.subst import FreshNames, free_vars, substitute
from ..smtlib.terms import (
    BOOL,
    FALSE,
    INT,
    REAL,
    TRUE,
    Annot,
    App,
    Attribute,
    BoolConst,
    Let,
    Num,
    Quant,
    Script,
    Sort,
    Term,
    Var,
    mk_and,
    mk_or,
)
from ..smtlib.typecheck import Env


def expand_definitions(t: Term, env: Env, fresh: Optional[FreshNames] = None) -> Term:
    """Inline every define-fun application and expand every let, capture-avoidingly."""
    fresh = fresh or FreshNames()
    return _expand(t, env, fresh)


def _expand(t: Term, env: Env, fresh: FreshNames) -> Term:
    if isinstance(t, Var):
        d = env.definitions.get(t.name)
        if d is not None and not d.params:
            return _expand(d.body, env, fresh)
        return t
    if isinstance(t, App):
        args = tuple(_expand(a, env, fresh) for a in t.args)
        d = env.definitions.get(t.op)
        if d is not None:
            body = substitute(d.body, {n: a for (n, _), a in zip(d.params, args)}, fresh=fresh)
            return _expand(body, env, fresh)
        return App(t.op, args)
    if isinstance(t, Quant):
        return Quant(t.kind, t.bindings, _expand(t.body, _shadow(env, t.var_names), fresh))
    if isinstance(t, Let):
        vals = {n: _expand(v, env, fresh) for n, v in t.bindings}
        body = _expand(t.body, _shadow(env, vals), fresh)
        return substitute(body, vals, fresh=fresh)
    if isinstance(t, Annot):
        attrs = tuple(
            Attribute(a.keyword, tuple(_expand(p, env, fresh) for p in a.terms), a.raw) if a.terms else a
            for a in t.attributes
        )
        return Annot(_expand(t.body, env, fresh), attrs)
    return t


def _shadow(env: Env, names) -> Env:
    names = set(names)
    if not names & env.definitions.keys():
        return env
    e = env.copy()
    for n in names:
        e.definitions.pop(n, None)
    return e


# -- simplification ------------------------------------------------------------


def _lit(v: Fraction, sort: Sort) -> Num:
    if sort == INT and v.denominator != 1:
        sort = REAL
    return Num(v, sort)


def _num_sort(sorts) -> Sort:
    return REAL if REAL in sorts else INT


def simplify(t: Term, env: Env) -> Term:
    return _simp(t, env)[0]


def _simp(t: Term, env: Env) -> tuple[Term, Sort]:
    if isinstance(t, Num):
        return t, t.sort
    if isinstance(t, BoolConst):
        return t, BOOL
    if isinstance(t, Var):
        s = env.var_sort(t.name)
        if s is None:
            raise ValueError(f"unbound symbol '{t.name}' during rewriting")
        return t, s
    if isinstance(t, App):
        pairs = [_simp(a, env) for a in t.args]
        return _simp_app(t.op, [p[0] for p in pairs], [p[1] for p in pairs], env)
    if isinstance(t, Quant):
        body, _ = _simp(t.body, env.bind(t.bindings))
        return _mk_quant(t.kind, t.bindings, body), BOOL
    if isinstance(t, Let):
        # lets are expanded before simplification; keep this total anyway
        return _simp(substitute(t.body, dict(t.bindings)), env)
    if isinstance(t, Annot):
        body, s = _simp(t.body, env)
        attrs = []
        for a in t.attributes:
            if a.terms:
                attrs.append(Attribute(a.keyword, tuple(_simp(p, env)[0] for p in a.terms), a.raw))
            else:
                attrs.append(a)
        if isinstance(body, BoolConst) and all(a.keyword in (":pattern", ":no-pattern") for a in attrs):
            return body, s
        return Annot(body, tuple(attrs)), s
    raise TypeError(type(t).__name__)


def _mk_quant(kind: str, bindings, body: Term) -> Term:
    if isinstance(body, BoolConst):
        return body
    used = free_vars(body)
    kept = tuple((n, s) for n, s in bindings if n in used)
    if not kept:
        return _strip_patterns(body)
    return Quant(kind, kept, body)


def _strip_patterns(t: Term) -> Term:
    if isinstance(t, Annot):
        attrs = tuple(a for a in t.attributes if a.keyword not in (":pattern", ":no-pattern"))
        return Annot(t.body, attrs) if attrs else t.body
    return t


def _is_not_of(a: Term, b: Term) -> bool:
    return isinstance(a, App) and a.op == "not" and a.args[0] == b


def _result_sort(op: str, sorts, env: Env) -> Sort:
    if op in ("+", "-", "*", "abs"):
        return _num_sort(sorts)
    if op in ("/", "to_real"):
        return REAL
    if op in ("div", "mod", "to_int"):
        return INT
    if op == "ite":
        return _num_sort(sorts[1:]) if all(s.is_numeric for s in sorts[1:]) else sorts[1]
    if op in ("and", "or", "not", "=>", "xor", "=", "distinct", "<", "<=", ">", ">=", "is_int"):
        return BOOL
    return env.functions[op].ret_sort


def _simp_app(op: str, args: list[Term], sorts: list[Sort], env: Env) -> tuple[Term, Sort]:
    rs = _result_sort(op, sorts, env)
    out = _RULES.get(op, _keep)(op, args, sorts, rs, env)
    return out, rs


def _keep(op, args, sorts, rs, env) -> Term:
    return App(op, tuple(args))


def _all_num(args) -> bool:
    return all(isinstance(a, Num) for a in args)


def _flatten(op, args, sorts):
    fa, fs = [], []
    for a, s in zip(args, sorts):
        if isinstance(a, App) and a.op == op:
            fa.extend(a.args)
            fs.extend([s] * len(a.args))
        else:
            fa.append(a)
            fs.append(s)
    return fa, fs


def _r_add(op, args, sorts, rs, env) -> Term:
    args, sorts = _flatten("+", args, sorts)
    total = Fraction(0)
    real_lit = False
    rest = []
    for a in args:
        if isinstance(a, Num):
            total += a.value
            real_lit |= a.sort == REAL
        else:
            rest.append(a)
    if not rest:
        return _lit(total, rs)
    if total != 0:
        rest.append(_lit(total, REAL if real_lit else INT))
    return rest[0] if len(rest) == 1 else App("+", tuple(rest))


def _r_mul(op, args, sorts, rs, env) -> Term:
    args, sorts = _flatten("*", args, sorts)
    prod = Fraction(1)
    real_lit = False
    rest = []
    for a in args:
        if isinstance(a, Num):
            prod *= a.value
            real_lit |= a.sort == REAL
        else:
            rest.append(a)
    if prod == 0 or not rest:
        return _lit(prod, rs)
    if prod != 1:
        rest.insert(0, _lit(prod, REAL if real_lit else INT))
    return rest[0] if len(rest) == 1 else App("*", tuple(rest))


def _r_sub(op, args, sorts, rs, env) -> Term:
    if len(args) == 1:
        a = args[0]
        if isinstance(a, Num):
            return Num(-a.value, a.sort)
        if isinstance(a, App) and a.op == "-" and len(a.args) == 1:
            return a.args[0]
        return App("-", (a,))
    if _all_num(args):
        v = args[0].value - sum((a.value for a in args[1:]), Fraction(0))
        return _lit(v, rs)
    head, tail = args[0], [a for a in args[1:] if not (isinstance(a, Num) and a.value == 0)]
    if not tail:
        return head
    if len(tail) == 1 and tail[0] == head:
        return _lit(Fraction(0), rs)
    if isinstance(head, Num) and head.value == 0 and len(tail) == 1:
        return _r_sub("-", [tail[0]], [rs], rs, env)
    return App("-", (head, *tail))


def _r_div(op, args, sorts, rs, env) -> Term:
    if _all_num(args) and all(a.value != 0 for a in args[1:]):
        v = args[0].value
        for a in args[1:]:
            v /= a.value
        return Num(v, REAL)
    tail = [a for a in args[1:] if not (isinstance(a, Num) and a.value == 1)]
    if not tail and sorts[0] == REAL:
        return args[0]
    if not tail:
        return App("/", (args[0], Num(Fraction(1), INT)))
    if isinstance(args[0], Num) and args[0].value == 0 and all(isinstance(a, Num) and a.value != 0 for a in tail):
        return Num(Fraction(0), REAL)
    return App("/", (args[0], *tail))


def _euclid(m: int, n: int) -> tuple[int, int]:
    r = m % abs(n)
    return (m - r) // n, r


def _r_divmod(op, args, sorts, rs, env) -> Term:
    if _all_num(args) and all(a.value != 0 for a in args[1:]):
        q = int(args[0].value)
        if op == "mod":
            return Num(Fraction(_euclid(q, int(args[1].value))[1]), INT)
        for a in args[1:]:
            q = _euclid(q, int(a.value))[0]
        return Num(Fraction(q), INT)
    return App(op, tuple(args))


def _r_unary_num(op, args, sorts, rs, env) -> Term:
    a = args[0]
    if isinstance(a, Num):
        if op == "abs":
            return Num(abs(a.value), a.sort)
        if op == "to_real":
            return Num(a.value, REAL)
        if op == "to_int":
            return Num(Fraction(math.floor(a.value)), INT)
        if op == "is_int":
            return BoolConst(a.value.denominator == 1)
    return App(op, (a,))


_CMP = {
    "<": lambda x, y: x < y,
    "<=": lambda x, y: x <= y,
    ">": lambda x, y: x > y,
    ">=": lambda x, y: x >= y,
}


def _r_cmp(op, args, sorts, rs, env) -> Term:
    if _all_num(args):
        return BoolConst(all(_CMP[op](x.value, y.value) for x, y in zip(args, args[1:])))
    if len(args) == 2 and args[0] == args[1]:
        return BoolConst(op in ("<=", ">="))
    return App(op, tuple(args))


def _const_value(t: Term):
    if isinstance(t, Num):
        return t.value
    if isinstance(t, BoolConst):
        return t.value
    return None


def _r_eq(op, args, sorts, rs, env) -> Term:
    if all(isinstance(a, (Num, BoolConst)) for a in args):
        vals = [_const_value(a) for a in args]
        if op == "=":
            return BoolConst(all(v == vals[0] for v in vals))
        return BoolConst(len(set(vals)) == len(vals))
    if op == "=":
        if all(a == args[0] for a in args):
            return TRUE
        if len(args) == 2 and sorts[0] == BOOL:
            a, b = args
            if isinstance(b, BoolConst):
                a, b = b, a
            if isinstance(a, BoolConst):
                return b if a.value else _simp_app("not", [b], [BOOL], env)[0]
    else:
        if len(set(args)) < len(args):
            return FALSE
    return App(op, tuple(args))


def _r_not(op, args, sorts, rs, env) -> Term:
    a = args[0]
    if isinstance(a, BoolConst):
        return BoolConst(not a.value)
    if isinstance(a, App) and a.op == "not":
        return a.args[0]
    return App("not", (a,))


def _r_andor(op, args, sorts, rs, env) -> Term:
    unit, zero = (True, False) if op == "and" else (False, True)
    flat, _ = _flatten(op, args, sorts)
    out: list[Term] = []
    seen: set = set()
    for a in flat:
        if isinstance(a, BoolConst):
            if a.value == zero:
                return BoolConst(zero)
            continue
        if a in seen:
            continue
        seen.add(a)
        out.append(a)
    for a in out:
        if isinstance(a, App) and a.op == "not" and a.args[0] in seen:
            return BoolConst(zero)
    return (mk_and if op == "and" else mk_or)(out)


def _r_implies(op, args, sorts, rs, env) -> Term:
    if len(args) > 2:
        inner = _r_implies(op, args[1:], sorts[1:], rs, env)
        return _r_implies(op, [args[0], inner], [BOOL, BOOL], rs, env)
    a, b = args
    if a == FALSE or b == TRUE or a == b:
        return TRUE
    if a == TRUE:
        return b
    if b == FALSE:
        return _r_not("not", [a], [BOOL], BOOL, env)
    if _is_not_of(a, b) or _is_not_of(b, a):
        return b
    return App("=>", (a, b))


def _r_xor(op, args, sorts, rs, env) -> Term:
    if all(isinstance(a, BoolConst) for a in args):
        v = False
        for a in args:
            v ^= a.value
        return BoolConst(v)
    if len(args) == 2 and args[0] == args[1]:
        return FALSE
    return App("xor", tuple(args))


def _r_ite(op, args, sorts, rs, env) -> Term:
    c, a, b = args
    if isinstance(c, BoolConst):
        return a if c.value else b
    if a == b:
        return a
    if a == TRUE and b == FALSE:
        return c
    if a == FALSE and b == TRUE:
        return _r_not("not", [c], [BOOL], BOOL, env)
    if isinstance(c, App) and c.op == "not":
        return _r_ite(op, [c.args[0], b, a], [BOOL, sorts[2], sorts[1]], rs, env)
    return App("ite", (c, a, b))


_RULES = {
    "+": _r_add,
    "*": _r_mul,
    "-": _r_sub,
    "/": _r_div,
    "div": _r_divmod,
    "mod": _r_divmod,
    "abs": _r_unary_num,
    "to_real": _r_unary_num,
    "to_int": _r_unary_num,
    "is_int": _r_unary_num,
    "<": _r_cmp,
    "<=": _r_cmp,
    ">": _r_cmp,
    ">=": _r_cmp,
    "=": _r_eq,
    "distinct": _r_eq,
    "not": _r_not,
    "and": _r_andor,
    "or": _r_andor,
    "=>": _r_implies,
    "xor": _r_xor,
    "ite": _r_ite,
}


def split_conjuncts(t: Term) -> list[Term]:
    """Top-level conjuncts of ``t``.

    A universal quantifier over a conjunction is distributed over it (each
    part keeps only the binders it uses). Pattern-annotated quantifiers and
    existentials are left whole.
    """
    if isinstance(t, App) and t.op == "and":
        out = []
        for a in t.args:
            out.extend(split_conjuncts(a))
        return out
    if isinstance(t, Quant) and t.kind == "forall":
        parts = split_conjuncts(t.body)
        if len(parts) > 1:
            out = []
            for p in parts:
                used = free_vars(p)
                keep = tuple(b for b in t.bindings if b[0] in used)
                out.append(Quant("forall", keep, p) if keep else p)
            return out
    return [t]


def rewrite_assertions(assertions, env: Env) -> list[Term]:
    fresh = FreshNames()
    out: list[Term] = []
    for a in assertions:
        t = simplify(expand_definitions(a, env, fresh), env)
        for c in split_conjuncts(t):
            if c == TRUE:
                continue
            if c == FALSE:
                return [FALSE]
            out.append(c)
    return out


def rewrite_formula(script: Script) -> Script:
    """Simplified, equivalent script; top-level conjunctions become separate assertions.

    define-fun commands stay in place (their uses are inlined). An assertion
    that reduces to false replaces the whole assertion set with ``false``.
    """
    env = Env.from_script(script)
    return script.replace_assertions(rewrite_assertions(script.assertions, env))
