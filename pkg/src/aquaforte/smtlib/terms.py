"""Immutable term and script representation for the supported SMT-LIB fragment."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional


@dataclass(frozen=True)
class Sort:
    name: str

    @property
    def is_numeric(self) -> bool:
        return self.name in ("Int", "Real")

    @property
    def is_builtin(self) -> bool:
        return self.name in ("Bool", "Int", "Real")

    def __str__(self) -> str:
        return self.name


BOOL = Sort("Bool")
INT = Sort("Int")
REAL = Sort("Real")


class Term:
    """Base class of all term nodes. Nodes are frozen dataclasses, compared structurally."""

    __slots__ = ()


@dataclass(frozen=True)
class Num(Term):
    """Numeric literal. ``sort`` is INT for numerals and REAL for decimals/fractions."""

    value: Fraction
    sort: Sort = INT

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))
        if self.sort == INT and self.value.denominator != 1:
            raise ValueError(f"non-integral Int literal {self.value}")


@dataclass(frozen=True)
class BoolConst(Term):
    value: bool


@dataclass(frozen=True)
class Var(Term):
    """Reference to a bound variable, a function parameter or a 0-ary function symbol."""

    name: str


@dataclass(frozen=True)
class App(Term):
    """Application of a builtin operator or a declared/defined function to >=1 argument."""

    op: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class Quant(Term):
    kind: str  # "forall" | "exists"
    bindings: tuple[tuple[str, Sort], ...]
    body: Term

    @property
    def var_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.bindings)


@dataclass(frozen=True)
class Let(Term):
    bindings: tuple[tuple[str, Term], ...]
    body: Term


@dataclass(frozen=True)
class Attribute:
    """``:pattern`` attributes carry terms; anything else keeps its raw s-expression text."""

    keyword: str
    terms: tuple[Term, ...] = ()
    raw: Optional[str] = None


@dataclass(frozen=True)
class Annot(Term):
    body: Term
    attributes: tuple[Attribute, ...]


TRUE = BoolConst(True)
FALSE = BoolConst(False)

ARITH_OPS = frozenset({"+", "-", "*", "/", "div", "mod", "abs", "to_real", "to_int"})
COMPARISONS = frozenset({"<", "<=", ">", ">="})
CONNECTIVES = frozenset({"not", "and", "or", "=>", "xor", "ite"})
BUILTIN_OPS = ARITH_OPS | COMPARISONS | CONNECTIVES | {"=", "distinct", "is_int"}


def int_lit(v: int) -> Num:
    return Num(Fraction(v), INT)


def real_lit(v) -> Num:
    return Num(Fraction(v), REAL)


def mk_app(op: str, *args: Term) -> App:
    return App(op, tuple(args))


def mk_and(args) -> Term:
    args = tuple(args)
    if not args:
        return TRUE
    if len(args) == 1:
        return args[0]
    return App("and", args)


def mk_or(args) -> Term:
    args = tuple(args)
    if not args:
        return FALSE
    if len(args) == 1:
        return args[0]
    return App("or", args)


def children(t: Term) -> tuple[Term, ...]:
    if isinstance(t, App):
        return t.args
    if isinstance(t, Quant):
        return (t.body,)
    if isinstance(t, Let):
        return tuple(v for _, v in t.bindings) + (t.body,)
    if isinstance(t, Annot):
        return (t.body,)
    return ()


def subterms(t: Term) -> Iterator[Term]:
    """Pre-order traversal, including terms inside pattern attributes."""
    stack = [t]
    while stack:
        cur = stack.pop()
        yield cur
        kids = list(children(cur))
        if isinstance(cur, Annot):
            for a in cur.attributes:
                kids.extend(a.terms)
        stack.extend(reversed(kids))


# -- declarations and commands ------------------------------------------------


@dataclass(frozen=True)
class FunctionSignature:
    name: str
    arg_sorts: tuple[Sort, ...]
    ret_sort: Sort
    interpreted: bool = False

    @property
    def arity(self) -> int:
        return len(self.arg_sorts)


@dataclass(frozen=True)
class Command:
    pos: Optional[tuple[int, int]] = field(default=None, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class SetLogic(Command):
    logic: str


@dataclass(frozen=True)
class DeclareSort(Command):
    name: str
    arity: int = 0


@dataclass(frozen=True)
class DeclareFun(Command):
    signature: FunctionSignature


@dataclass(frozen=True)
class DefineFun(Command):
    signature: FunctionSignature
    params: tuple[tuple[str, Sort], ...]
    body: Term


@dataclass(frozen=True)
class Assert(Command):
    term: Term


@dataclass(frozen=True)
class CheckSat(Command):
    pass


@dataclass(frozen=True)
class GetModel(Command):
    pass


@dataclass(frozen=True)
class Exit(Command):
    pass


@dataclass(frozen=True)
class Passthrough(Command):
    """Command kept verbatim (set-info, set-option, get-info, get-value, echo)."""

    text: str


@dataclass(frozen=True)
class Script:
    commands: tuple[Command, ...] = ()

    @property
    def logic(self) -> Optional[str]:
        for c in self.commands:
            if isinstance(c, SetLogic):
                return c.logic
        return None

    @property
    def declarations(self) -> list[FunctionSignature]:
        return [c.signature for c in self.commands if isinstance(c, DeclareFun)]

    @property
    def definitions(self) -> list[DefineFun]:
        return [c for c in self.commands if isinstance(c, DefineFun)]

    @property
    def assertions(self) -> list[Term]:
        return [c.term for c in self.commands if isinstance(c, Assert)]

    @property
    def sorts(self) -> list[str]:
        return [c.name for c in self.commands if isinstance(c, DeclareSort)]

    def replace_assertions(self, terms) -> "Script":
        """Swap the assertion set, keeping every other command where it was.

        New assertions are placed where the last original assertion stood, so
        every declaration interleaved with the old assertions still precedes
        them; without assertions they go before the first check-sat.
        """
        new = [Assert(t) for t in terms]
        idx = [i for i, c in enumerate(self.commands) if isinstance(c, Assert)]
        if idx:
            anchor = idx[-1]
        else:
            anchor = next(
                (i for i, c in enumerate(self.commands) if isinstance(c, (CheckSat, GetModel, Exit))),
                len(self.commands),
            )
        out: list[Command] = []
        for i, c in enumerate(self.commands):
            if i == anchor:
                out.extend(new)
            if not isinstance(c, Assert):
                out.append(c)
        if anchor == len(self.commands):
            out.extend(new)
        return Script(tuple(out))

    def add_assertions(self, terms) -> "Script":
        """Append assertions after the existing ones (before check-sat)."""
        return self.replace_assertions(self.assertions + list(terms))

    def with_commands(self, commands) -> "Script":
        return Script(tuple(commands))

