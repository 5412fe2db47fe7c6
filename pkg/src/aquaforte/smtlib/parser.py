"""SMT-LIB 2 reader for the quantified UF + arithmetic fragment."""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .errors import ParseError, SortError, UnknownSymbolError, UnsupportedFeatureError
from .terms import (
    BOOL,
    BUILTIN_OPS,
    FALSE,
    REAL,
    TRUE,
    Annot,
    App,
    Assert,
    Attribute,
    CheckSat,
    Command,
    DeclareFun,
    DeclareSort,
    DefineFun,
    Exit,
    FunctionSignature,
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
    INT,
)
from .typecheck import Env, check_command, elaborate

PASSTHROUGH = frozenset(
    {"set-info", "set-option", "get-info", "get-option", "get-value", "echo", "get-assertions", "get-assignment"}
)
UNSUPPORTED = frozenset(
    {
        "push",
        "pop",
        "reset",
        "reset-assertions",
        "define-fun-rec",
        "define-funs-rec",
        "define-sort",
        "declare-datatype",
        "declare-datatypes",
        "declare-codatatypes",
        "check-sat-assuming",
        "get-unsat-core",
        "get-unsat-assumptions",
        "get-proof",
    }
)
RESERVED = frozenset({"let", "forall", "exists", "!", "_", "as", "match", "par", "true", "false"}) | BUILTIN_OPS


@dataclass
class Atom:
    kind: str  # sym | qsym | num | dec | str | kw | hex | bin
    text: str
    offset: int


@dataclass
class SList:
    items: list
    offset: int
    end: int


SExpr = Union[Atom, SList]

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|;[^\n]*)
  | (?P<lp>\()
  | (?P<rp>\))
  | (?P<str>"(?:[^"]|"")*")
  | (?P<qsym>\|[^|\\]*\|)
  | (?P<kw>:[A-Za-z0-9~!@$%^&*_+=<>.?/\-]+)
  | (?P<hex>\#x[0-9A-Fa-f]+)
  | (?P<bin>\#b[01]+)
  | (?P<dec>[0-9]+\.[0-9]+)
  | (?P<num>[0-9]+)
  | (?P<sym>[A-Za-z~!@$%^&*_+=<>.?/\-][A-Za-z0-9~!@$%^&*_+=<>.?/\-]*)
    """,
    re.VERBOSE,
)


class _Source:
    def __init__(self, text: str):
        self.text = text
        self._lines = [m.start() for m in re.finditer(r"^", text, re.M)]

    def pos(self, offset: int) -> tuple[int, int]:
        lo, hi = 0, len(self._lines) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self._lines[mid] <= offset:
                lo = mid
            else:
                hi = mid - 1
        return lo + 1, offset - self._lines[lo] + 1


def read_sexprs(src: _Source) -> list[SExpr]:
    text = src.text
    stack: list[SList] = []
    top: list[SExpr] = []
    i = 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if m is None:
            raise ParseError(f"unexpected character {text[i]!r}", src.pos(i), "a token")
        kind = m.lastgroup
        i = m.end()
        if kind == "ws":
            continue
        if kind == "lp":
            stack.append(SList([], m.start(), -1))
            continue
        if kind == "rp":
            if not stack:
                raise ParseError("unbalanced ')'", src.pos(m.start()))
            done = stack.pop()
            done.end = m.end()
            (stack[-1].items if stack else top).append(done)
            continue
        atom = Atom(kind, m.group(), m.start())
        (stack[-1].items if stack else top).append(atom)
    if stack:
        raise ParseError("unexpected end of input", src.pos(len(text)), "')'")
    return top


def _symbol(e: SExpr, src: _Source, what: str = "a symbol") -> str:
    if isinstance(e, Atom) and e.kind == "sym":
        return e.text
    if isinstance(e, Atom) and e.kind == "qsym":
        return e.text[1:-1]
    raise ParseError(f"expected {what}", src.pos(e.offset), what)


class _Reader:
    def __init__(self, src: _Source, lenient: bool = False):
        self.src = src
        self.lenient = lenient

    def where(self, e: SExpr):
        return self.src.pos(e.offset)

    def sort(self, e: SExpr, env: Env) -> Sort:
        if isinstance(e, SList):
            raise UnsupportedFeatureError("parametric or indexed sorts", self.where(e))
        name = _symbol(e, self.src, "a sort")
        s = Sort(name)
        if not s.is_builtin and name not in env.sorts and not self.lenient:
            raise ParseError(f"unknown sort '{name}'", self.where(e))
        return s

    def sorted_vars(self, e: SExpr, env: Env) -> tuple[tuple[str, Sort], ...]:
        if not isinstance(e, SList):
            raise ParseError("expected a sorted variable list", self.where(e), "'('")
        out = []
        for item in e.items:
            if not (isinstance(item, SList) and len(item.items) == 2):
                raise ParseError("expected (name Sort)", self.where(item))
            out.append((_symbol(item.items[0], self.src), self.sort(item.items[1], env)))
        return tuple(out)

    # -- terms ---------------------------------------------------------------

    def term(self, e: SExpr, env: Env) -> Term:
        if isinstance(e, Atom):
            return self._atom(e, env)
        if not e.items:
            raise ParseError("empty application", self.where(e), "a term")
        head = e.items[0]
        if isinstance(head, SList):
            raise UnsupportedFeatureError("indexed or qualified identifiers", self.where(head))
        if head.kind not in ("sym", "qsym"):
            raise ParseError("expected an operator", self.where(head))
        op = _symbol(head, self.src)
        rest = e.items[1:]
        if head.kind == "sym":
            if op in ("forall", "exists"):
                if len(rest) != 2:
                    raise ParseError(f"malformed {op}", self.where(e))
                bindings = self.sorted_vars(rest[0], env)
                if not bindings:
                    raise ParseError(f"{op} without bound variables", self.where(e))
                return Quant(op, bindings, self.term(rest[1], env.bind(bindings)))
            if op == "let":
                return self._let(e, rest, env)
            if op == "!":
                return self._annot(e, rest, env)
            if op in ("_", "as", "match"):
                raise UnsupportedFeatureError(f"'{op}' terms", self.where(e))
        args = tuple(self.term(a, env) for a in rest)
        if head.kind == "sym" and op in BUILTIN_OPS:
            lit = _fold_literal(op, args)
            if lit is not None:
                return lit
            return App(op, args)
        if op in env.variables:
            raise ParseError(f"variable '{op}' applied to arguments", self.where(head))
        if op not in env.functions and not self.lenient:
            raise UnknownSymbolError(op, self.where(head))
        return App(op, args)

    def _atom(self, a: Atom, env: Env) -> Term:
        if a.kind == "num":
            return Num(Fraction(int(a.text)), INT)
        if a.kind == "dec":
            return Num(Fraction(a.text), REAL)
        if a.kind in ("hex", "bin", "str"):
            raise UnsupportedFeatureError(f"{a.kind} literals", self.where(a))
        if a.kind == "kw":
            raise ParseError(f"unexpected keyword {a.text}", self.where(a), "a term")
        name = _symbol(a, self.src)
        if a.kind == "sym" and name == "true":
            return TRUE
        if a.kind == "sym" and name == "false":
            return FALSE
        if name not in env.variables and name not in env.functions and not self.lenient:
            raise UnknownSymbolError(name, self.where(a))
        return Var(name)

    def _let(self, e: SList, rest, env: Env) -> Term:
        if len(rest) != 2 or not isinstance(rest[0], SList):
            raise ParseError("malformed let", self.where(e))
        bindings = []
        sorts = []
        for b in rest[0].items:
            if not (isinstance(b, SList) and len(b.items) == 2):
                raise ParseError("expected (name term) in let", self.where(b))
            name = _symbol(b.items[0], self.src)
            val = self.term(b.items[1], env)
            bindings.append((name, val))
            sorts.append((name, self._sort_hint(val, env)))
        return Let(tuple(bindings), self.term(rest[1], env.bind(sorts)))

    def _sort_hint(self, t: Term, env: Env) -> Sort:
        # Scope bookkeeping only; the real check happens in elaborate().
        try:
            return elaborate(t, env)[1]
        except SortError:
            return BOOL

    def _annot(self, e: SList, rest, env: Env) -> Term:
        if not rest:
            raise ParseError("empty annotation", self.where(e))
        body = self.term(rest[0], env)
        attrs = []
        items = rest[1:]
        i = 0
        while i < len(items):
            kw = items[i]
            if not (isinstance(kw, Atom) and kw.kind == "kw"):
                raise ParseError("expected an attribute keyword", self.where(kw), "':keyword'")
            i += 1
            value = None
            if i < len(items) and not (isinstance(items[i], Atom) and items[i].kind == "kw"):
                value = items[i]
                i += 1
            if kw.text == ":named":
                raise UnsupportedFeatureError("named terms (:named)", self.where(kw))
            if kw.text in (":pattern", ":no-pattern"):
                if not isinstance(value, SList) or not value.items:
                    raise ParseError(f"{kw.text} expects a non-empty term list", self.where(kw))
                attrs.append(Attribute(kw.text, tuple(self.term(p, env) for p in value.items)))
            else:
                raw = None if value is None else self._raw(value)
                attrs.append(Attribute(kw.text, (), raw))
        if not attrs:
            raise ParseError("annotation without attributes", self.where(e))
        return Annot(body, tuple(attrs))

    def _raw(self, e: SExpr) -> str:
        if isinstance(e, Atom):
            return e.text
        return self.src.text[e.offset : e.end]

    # -- commands --------------------------------------------------------------

    def command(self, e: SExpr, env: Env) -> Command:
        if not isinstance(e, SList) or not e.items:
            raise ParseError("expected a command", self.where(e), "'('")
        name = _symbol(e.items[0], self.src, "a command name")
        args = e.items[1:]
        pos = self.where(e)
        if name in UNSUPPORTED:
            raise UnsupportedFeatureError(f"command '{name}'", pos)
        if name in PASSTHROUGH:
            return Passthrough(self._raw(e), pos=pos)
        if name == "set-logic":
            self._nargs(e, args, 1)
            return SetLogic(_symbol(args[0], self.src), pos=pos)
        if name == "declare-sort":
            sname = _symbol(args[0], self.src) if args else None
            arity = int(args[1].text) if len(args) > 1 and isinstance(args[1], Atom) else 0
            if sname is None or len(args) > 2:
                raise ParseError("malformed declare-sort", pos)
            if arity != 0:
                raise UnsupportedFeatureError("sort constructors with arity > 0", pos)
            self._fresh_name(sname, env, e, sort=True)
            return DeclareSort(sname, 0, pos=pos)
        if name in ("declare-fun", "declare-const"):
            if name == "declare-fun":
                self._nargs(e, args, 3)
                if not isinstance(args[1], SList):
                    raise ParseError("expected argument sort list", self.where(args[1]), "'('")
                arg_sorts = tuple(self.sort(s, env) for s in args[1].items)
                ret = self.sort(args[2], env)
            else:
                self._nargs(e, args, 2)
                arg_sorts, ret = (), self.sort(args[1], env)
            fname = _symbol(args[0], self.src)
            self._fresh_name(fname, env, e)
            return DeclareFun(FunctionSignature(fname, arg_sorts, ret, False), pos=pos)
        if name == "define-fun":
            self._nargs(e, args, 4)
            fname = _symbol(args[0], self.src)
            params = self.sorted_vars(args[1], env)
            ret = self.sort(args[2], env)
            self._fresh_name(fname, env, e)
            body = self.term(args[3], env.bind(params))
            sig = FunctionSignature(fname, tuple(s for _, s in params), ret, True)
            return DefineFun(sig, params, body, pos=pos)
        if name == "assert":
            self._nargs(e, args, 1)
            return Assert(self.term(args[0], env), pos=pos)
        if name == "check-sat":
            self._nargs(e, args, 0)
            return CheckSat(pos=pos)
        if name == "get-model":
            self._nargs(e, args, 0)
            return GetModel(pos=pos)
        if name == "exit":
            self._nargs(e, args, 0)
            return Exit(pos=pos)
        raise UnsupportedFeatureError(f"command '{name}'", pos)

    def _nargs(self, e, args, n):
        if len(args) != n:
            raise ParseError(f"'{_symbol(e.items[0], self.src)}' expects {n} arguments, got {len(args)}", self.where(e))

    def _fresh_name(self, name: str, env: Env, e, sort: bool = False):
        if name in RESERVED:
            raise ParseError(f"cannot redeclare reserved symbol '{name}'", self.where(e))
        if (name in env.sorts) if sort else (name in env.functions):
            raise ParseError(f"symbol '{name}' already declared", self.where(e))


def _fold_literal(op: str, args: tuple[Term, ...]) -> Optional[Num]:
    """Read ``(- lit)`` and ``(/ lit lit)`` back as literals, mirroring how they print."""
    if op == "-" and len(args) == 1 and isinstance(args[0], Num):
        return Num(-args[0].value, args[0].sort)
    if (
        op == "/"
        and len(args) == 2
        and all(isinstance(a, Num) for a in args)
        and args[1].value != 0
        and args[0].value >= 0
        and args[1].value > 0
    ):
        return Num(args[0].value / args[1].value, REAL)
    return None


def parse_script(text: str) -> Script:
    """Parse and sort-check an SMT-LIB 2 script.

    Raises ParseError (with a line/column) on syntax problems and unknown
    symbols, UnsupportedFeatureError for commands that would change meaning if
    skipped (push/pop, :named, datatypes, ...), and SortError for ill-sorted
    terms.
    """
    src = _Source(text)
    reader = _Reader(src)
    env = Env()
    out = []
    for e in read_sexprs(src):
        c = reader.command(e, env)
        try:
            c = check_command(c, env)
        except SortError as err:
            raise SortError(f"{err.message} (command at line {c.pos[0]})", err.path) from None
        env.add_command(c)
        out.append(c)
    return Script(tuple(out))


def parse_term(text: str, env: Env, lenient: bool = False) -> Term:
    """Parse a single term under ``env``.

    Strict mode also sort-checks and inserts coercions. Lenient mode accepts
    unknown symbols and skips checking (used for solver model output).
    """
    src = _Source(text)
    exprs = read_sexprs(src)
    if len(exprs) != 1:
        raise ParseError(f"expected exactly one term, found {len(exprs)}", src.pos(0))
    t = _Reader(src, lenient=lenient).term(exprs[0], env)
    if not lenient:
        t = elaborate(t, env)[0]
    return t


def parse_sort(text: str, env: Optional[Env] = None) -> Sort:
    src = _Source(text)
    exprs = read_sexprs(src)
    if len(exprs) != 1:
        raise ParseError("expected exactly one sort", src.pos(0))
    return _Reader(src).sort(exprs[0], env or Env())
