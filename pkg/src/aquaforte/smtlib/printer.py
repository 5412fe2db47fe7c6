"""SMT-LIB 2 text output. Real literals are printed exactly, as ``k.0`` or ``(/ p q)``."""

from __future__ import annotations

import re

from .terms import (
    REAL,
    Annot,
    App,
    Assert,
    BoolConst,
    CheckSat,
    Command,
    DeclareFun,
    DeclareSort,
    DefineFun,
    Exit,
    GetModel,
    Let,
    Num,
    Passthrough,
    Quant,
    Script,
    SetLogic,
    Sort,
    Term,
    Var,
)

_SIMPLE = re.compile(r"[A-Za-z~!@$%^&*_+=<>.?/\-][A-Za-z0-9~!@$%^&*_+=<>.?/\-]*\Z")


def print_symbol(name: str) -> str:
    return name if _SIMPLE.match(name) else f"|{name}|"


def print_sort(s: Sort) -> str:
    return print_symbol(s.name)


def print_num(n: Num) -> str:
    v = n.value
    neg = v < 0
    v = abs(v)
    if n.sort == REAL:
        if v.denominator == 1:
            text = f"{v.numerator}.0"
        else:
            text = f"(/ {v.numerator} {v.denominator})"
    else:
        text = str(v.numerator)
    return f"(- {text})" if neg else text


def _sorted_vars(bindings) -> str:
    return "(" + " ".join(f"({print_symbol(n)} {print_sort(s)})" for n, s in bindings) + ")"


def print_term(t: Term) -> str:
    parts: list[str] = []
    _emit(t, parts)
    return "".join(parts)


def _emit(t: Term, out: list[str]) -> None:
    if isinstance(t, Num):
        out.append(print_num(t))
    elif isinstance(t, BoolConst):
        out.append("true" if t.value else "false")
    elif isinstance(t, Var):
        out.append(print_symbol(t.name))
    elif isinstance(t, App):
        out.append("(")
        out.append(print_symbol(t.op))
        for a in t.args:
            out.append(" ")
            _emit(a, out)
        out.append(")")
    elif isinstance(t, Quant):
        out.append(f"({t.kind} {_sorted_vars(t.bindings)} ")
        _emit(t.body, out)
        out.append(")")
    elif isinstance(t, Let):
        out.append("(let (")
        for i, (n, v) in enumerate(t.bindings):
            if i:
                out.append(" ")
            out.append(f"({print_symbol(n)} ")
            _emit(v, out)
            out.append(")")
        out.append(") ")
        _emit(t.body, out)
        out.append(")")
    elif isinstance(t, Annot):
        out.append("(! ")
        _emit(t.body, out)
        for a in t.attributes:
            out.append(f" {a.keyword}")
            if a.terms:
                out.append(" (")
                for i, p in enumerate(a.terms):
                    if i:
                        out.append(" ")
                    _emit(p, out)
                out.append(")")
            elif a.raw is not None:
                out.append(f" {a.raw}")
        out.append(")")
    else:
        raise TypeError(f"cannot print {type(t).__name__}")


def print_define_fun(name: str, params, ret: Sort, body: Term) -> str:
    return f"(define-fun {print_symbol(name)} {_sorted_vars(params)} {print_sort(ret)} {print_term(body)})"


def print_command(c: Command) -> str:
    if isinstance(c, SetLogic):
        return f"(set-logic {c.logic})"
    if isinstance(c, DeclareSort):
        return f"(declare-sort {print_symbol(c.name)} {c.arity})"
    if isinstance(c, DeclareFun):
        sig = c.signature
        args = " ".join(print_sort(s) for s in sig.arg_sorts)
        return f"(declare-fun {print_symbol(sig.name)} ({args}) {print_sort(sig.ret_sort)})"
    if isinstance(c, DefineFun):
        return print_define_fun(c.signature.name, c.params, c.signature.ret_sort, c.body)
    if isinstance(c, Assert):
        return f"(assert {print_term(c.term)})"
    if isinstance(c, CheckSat):
        return "(check-sat)"
    if isinstance(c, GetModel):
        return "(get-model)"
    if isinstance(c, Exit):
        return "(exit)"
    if isinstance(c, Passthrough):
        return c.text
    raise TypeError(f"cannot print {type(c).__name__}")


def print_script(script: Script) -> str:
    return "".join(print_command(c) + "\n" for c in script.commands)
