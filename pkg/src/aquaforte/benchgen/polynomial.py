"""Sparse multivariate polynomials with exact rational coefficients."""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Sequence, Union

from ..smtlib.terms import REAL, App, Num, Term, Var, mk_app, real_lit

Number = Union[int, Fraction]
Exponents = tuple[int, ...]


class Polynomial:
    __slots__ = ("variables", "terms")

    def __init__(self, variables: Sequence[str], terms: Mapping[Exponents, Number] = ()):
        self.variables = tuple(variables)
        clean: dict[Exponents, Fraction] = {}
        for exps, c in dict(terms).items():
            if len(exps) != len(self.variables):
                raise ValueError("exponent vector length does not match the variables")
            if any(e < 0 for e in exps):
                raise ValueError("negative exponent")
            c = Fraction(c)
            if c:
                clean[tuple(exps)] = clean.get(tuple(exps), Fraction(0)) + c
        self.terms = {e: c for e, c in clean.items() if c}

    # constructors
    @classmethod
    def zero(cls, variables: Sequence[str]) -> "Polynomial":
        return cls(variables)

    @classmethod
    def const(cls, variables: Sequence[str], c: Number) -> "Polynomial":
        return cls(variables, {(0,) * len(variables): c})

    @classmethod
    def var(cls, variables: Sequence[str], name: str) -> "Polynomial":
        exps = tuple(1 if v == name else 0 for v in variables)
        if sum(exps) != 1:
            raise ValueError(f"unknown variable {name}")
        return cls(variables, {exps: 1})

    def _same(self, other: "Polynomial") -> None:
        if other.variables != self.variables:
            raise ValueError("polynomials over different variables")

    def _lift(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            self._same(other)
            return other
        return Polynomial.const(self.variables, other)

    def __add__(self, other) -> "Polynomial":
        other = self._lift(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, Fraction(0)) + c
        return Polynomial(self.variables, out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.variables, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> "Polynomial":
        return self + (-self._lift(other))

    def __rsub__(self, other) -> "Polynomial":
        return self._lift(other) - self

    def __mul__(self, other) -> "Polynomial":
        other = self._lift(other)
        out: dict[Exponents, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, Fraction(0)) + c1 * c2
        return Polynomial(self.variables, out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Polynomial":
        if k < 0:
            raise ValueError("negative power")
        out = Polynomial.const(self.variables, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.variables == other.variables and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.variables, frozenset(self.terms.items())))

    def __repr__(self) -> str:
        return f"Polynomial({self.variables}, {self.terms})"

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def evaluate(self, point: Union[Mapping[str, Number], Sequence[Number]]) -> Fraction:
        if isinstance(point, Mapping):
            vals = [Fraction(point[v]) for v in self.variables]
        else:
            vals = [Fraction(p) for p in point]
        total = Fraction(0)
        for exps, c in self.terms.items():
            term = c
            for v, e in zip(vals, exps):
                if e:
                    term *= v**e
            total += term
        return total

    def monomials(self) -> list[tuple[Exponents, Fraction]]:
        """Terms in graded reverse-lexicographic order, highest degree first."""
        return sorted(self.terms.items(), key=lambda kv: (-sum(kv[0]), tuple(-e for e in kv[0])))

    def to_term(self, names: Sequence[str] = None) -> Term:
        """SMT-LIB term over Real variables (``names`` overrides the variable names)."""
        names = tuple(names) if names is not None else self.variables
        parts: list[Term] = []
        for exps, c in self.monomials():
            factors: list[Term] = []
            for n, e in zip(names, exps):
                factors.extend([Var(n)] * e)
            if not factors:
                parts.append(real_lit(c))
            elif c == 1:
                parts.append(factors[0] if len(factors) == 1 else mk_app("*", *factors))
            else:
                parts.append(mk_app("*", real_lit(c), *factors))
        if not parts:
            return Num(Fraction(0), REAL)
        return parts[0] if len(parts) == 1 else mk_app("+", *parts)

    @classmethod
    def from_term(cls, t: Term, variables: Sequence[str]) -> "Polynomial":
        """Read back a polynomial built from + - * literals and the given variables."""
        variables = tuple(variables)
        if isinstance(t, Num):
            return cls.const(variables, t.value)
        if isinstance(t, Var):
            return cls.var(variables, t.name)
        if isinstance(t, App):
            args = [cls.from_term(a, variables) for a in t.args]
            if t.op == "+":
                out = cls.zero(variables)
                for a in args:
                    out = out + a
                return out
            if t.op == "*":
                out = cls.const(variables, 1)
                for a in args:
                    out = out * a
                return out
            if t.op == "-":
                if len(args) == 1:
                    return -args[0]
                out = args[0]
                for a in args[1:]:
                    out = out - a
                return out
            if t.op == "to_real" and len(args) == 1:
                return args[0]
        raise ValueError(f"not a polynomial term: {t!r}")
