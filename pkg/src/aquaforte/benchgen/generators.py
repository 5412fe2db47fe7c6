"""Random benchmark instances with ground truth: sums of squares and functional constraints."""

from __future__ import annotations

import random
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional

from ..instantiate import Instantiation
from ..smtlib.parser import parse_script
from ..smtlib.printer import print_num, print_term
from ..smtlib.terms import REAL, Script, Var, mk_app, real_lit
from .polynomial import Polynomial

LOGIC = "UFNIRA"
SOS_FUNCTIONS = ("f_a", "f_b", "f_c")
MFD_CATEGORIES = ("rational", "piecewise", "recursive", "limit")


@dataclass
class ManifestEntry:
    path: str
    family: str
    category: str
    params: dict
    expected: str
    seed: str
    witness: Optional[list[dict]] = None

    def to_json(self) -> dict:
        d = asdict(self)
        if d["witness"] is None:
            del d["witness"]
        return d


@dataclass(frozen=True)
class SosParams:
    n: int
    m: int
    instances: int = 50
    seed: int = 0
    max_degree: int = 2
    coeff_bound: int = 5

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("n and m must be positive")
        if self.max_degree < 1 or self.coeff_bound < 1:
            raise ValueError("degree and coefficient bounds must be positive")


def _r(v) -> str:
    return print_num(real_lit(Fraction(v)))


def _witness(insts: list[Instantiation]) -> list[dict]:
    return [i.to_json() for i in insts]


def _header(status: str) -> list[str]:
    return [f"(set-info :status {status})", f"(set-logic {LOGIC})"]


def variables(n: int) -> tuple[str, ...]:
    return tuple(f"x{i + 1}" for i in range(n))


def exponent_vectors(n: int, max_degree: int) -> list[tuple[int, ...]]:
    out = [()]
    for _ in range(n):
        out = [e + (k,) for e in out for k in range(max_degree + 1)]
    return sorted((e for e in out if sum(e) <= max_degree), key=lambda e: (sum(e), e))


def random_polynomial(rng: random.Random, names, max_degree: int, bound: int) -> Polynomial:
    exps = exponent_vectors(len(names), max_degree)
    while True:
        p = Polynomial(names, {e: rng.randint(-bound, bound) for e in exps})
        if not p.is_zero:
            return p


def sos_target(sources: list[Polynomial]) -> Polynomial:
    total = Polynomial.zero(sources[0].variables)
    for p in sources:
        total = total + p * p
    return total


def gen_sos_instance(params: SosParams, rng: random.Random) -> tuple[Script, str, list[Polynomial], Optional[list[Instantiation]]]:
    """Returns the script, expected status, the source polynomials and (for m <= 3) the witness."""
    names = variables(params.n)
    sources = [random_polynomial(rng, names, params.max_degree, params.coeff_bound) for _ in range(params.m)]
    target = sos_target(sources)
    status = "sat" if params.m <= 3 else "unknown"

    binders = " ".join(f"({x} Real)" for x in names)
    args = " ".join(names)
    sq = " ".join(f"(* ({f} {args}) ({f} {args}))" for f in SOS_FUNCTIONS)
    lines = _header(status)
    lines += [f"(declare-fun {f} ({' '.join(['Real'] * params.n)}) Real)" for f in SOS_FUNCTIONS]
    lines.append(f"(assert (forall ({binders}) (= (+ {sq}) {print_term(target.to_term())})))")
    lines.append("(check-sat)")
    script = parse_script("\n".join(lines))

    witness = None
    if params.m <= 3:
        pnames = tuple(f"x{i}" for i in range(params.n))
        padded = sources + [Polynomial.zero(names)] * (3 - params.m)
        witness = [
            Instantiation(f, tuple((x, REAL) for x in pnames), p.to_term(pnames), REAL)
            for f, p in zip(SOS_FUNCTIONS, padded)
        ]
    return script, status, sources, witness


def sos_witness_identity(target: Polynomial, witness_bodies: list[Polynomial]) -> Polynomial:
    """f_a^2 + f_b^2 + f_c^2 - F; the zero polynomial exactly when the witness is right."""
    total = Polynomial.zero(target.variables)
    for p in witness_bodies:
        total = total + p * p
    return total - target


# -- functional constraint families ---------------------------------------------


@dataclass
class MfdInstance:
    script: Script
    category: str
    expected: str
    params: dict = field(default_factory=dict)
    witness: Optional[list[Instantiation]] = None


def _fun(name: str, body, arity: int = 1) -> Instantiation:
    return Instantiation(name, tuple((f"x{i}", REAL) for i in range(arity)), body, REAL)


def _nonzero(rng: random.Random, lo: int, hi: int) -> int:
    while True:
        v = rng.randint(lo, hi)
        if v:
            return v


def _rational(rng: random.Random, sat: bool) -> tuple[MfdInstance, list[str]]:
    a, b, c = _nonzero(rng, -5, 5), rng.randint(-5, 5), rng.randint(1, 5)

    def r(x: Fraction) -> Fraction:
        return (a * x + b) / (x * x + c)

    points = sorted(rng.sample(range(-4, 5), rng.randint(2, 4)))
    lines = ["(declare-fun f (Real) Real)", "(assert (exists ((x Real)) (not (= (f x) (f 0.0)))))"]
    for p in points:
        v = r(Fraction(p))
        op = rng.choice(["<", "<=", ">", ">="])
        slack = Fraction(rng.randint(0 if "=" in op else 1, 4), 2)
        bound = v + slack if op in ("<", "<=") else v - slack
        lines.append(f"(assert ({op} (f {_r(p)}) {_r(bound)}))")
    if not sat:
        lines.append("(assert (forall ((x Real)) (= (f x) (f 0.0))))")
    body = mk_app("/", mk_app("+", mk_app("*", real_lit(a), Var("x0")), real_lit(b)), mk_app("+", mk_app("*", Var("x0"), Var("x0")), real_lit(c)))
    return MfdInstance(
        None, "rational", "sat" if sat else "unsat", {"a": a, "b": b, "c": c, "points": points},
        [_fun("f", body)] if sat else None,
    ), lines


def _linear(a: int, c: int, x: str = "x") -> str:
    return f"(+ (* {_r(a)} {x}) {_r(c)})"


def _piecewise(rng: random.Random, intervals: Optional[int] = None) -> tuple[MfdInstance, list[str]]:
    k = intervals or rng.randint(2, 4)
    bounds = sorted(rng.sample(range(-5, 6), k - 1))
    pieces = [(rng.randint(-3, 3), rng.randint(-3, 3)) for _ in range(k)]
    lines = ["(declare-fun f (Real) Real)"]
    for i, (a, c) in enumerate(pieces):
        conds = []
        if i > 0:
            conds.append(f"(<= {_r(bounds[i - 1])} x)")
        if i < k - 1:
            conds.append(f"(< x {_r(bounds[i])})")
        guard = conds[0] if len(conds) == 1 else f"(and {' '.join(conds)})"
        lines.append(f"(assert (forall ((x Real)) (=> {guard} (= (f x) {_linear(a, c)}))))")
    for bnd in bounds:
        op = rng.choice(["<", "<=", ">", ">="])
        lines.append(f"(assert ({op} (f {_r(bnd)}) {_r(rng.randint(-10, 10))}))")
    return MfdInstance(None, "piecewise", "unknown", {"intervals": k, "bounds": bounds, "pieces": pieces}), lines


def _recursive(rng: random.Random, sat: bool, max_depth: int) -> tuple[MfdInstance, list[str]]:
    depth = rng.randint(1, max_depth)
    c, d0 = rng.randint(1, 5), rng.randint(-5, 5)
    lines = [
        "(declare-fun f (Real) Real)",
        "(declare-fun g (Real) Real)",
        "(assert (forall ((x Real)) (= (g x) (+ (f x) (g (- x 1.0))))))",
        "(assert (forall ((x Real)) (> (f x) 0.0)))",
        f"(assert (= (g 0.0) {_r(d0)}))",
    ]
    for k in range(1, depth + 1):
        lines.append(f"(assert (= (g {_r(k)}) (+ (f {_r(k)}) (g {_r(k - 1)}))))")
    lines.append(f"(assert ({'>' if sat else '<='} (g {_r(depth)}) {_r(d0)}))")
    witness = None
    if sat:
        witness = [_fun("f", real_lit(c)), _fun("g", mk_app("+", mk_app("*", real_lit(c), Var("x0")), real_lit(d0)))]
    return MfdInstance(None, "recursive", "sat" if sat else "unsat", {"depth": depth, "c": c, "g0": d0}, witness), lines


def _limit(rng: random.Random, sat: bool) -> tuple[MfdInstance, list[str]]:
    c, k = _nonzero(rng, -5, 5), rng.randint(2, 5)
    lines = [
        "(declare-fun f (Real) Real)",
        "(assert (forall ((x Real) (y Real)) (= (f (+ x y)) (+ (f x) (f y)))))",
        f"(assert (forall ((x Real)) (= (f (* {_r(k)} x)) (* {_r(k)} (f x)))))",
        f"(assert (= (f 1.0) {_r(c)}))",
    ]
    params = {"c": c, "k": k}
    if sat:
        lines.append(f"(assert (exists ((x Real)) (and (> x 0.0) ({'>' if c > 0 else '<'} (f x) 0.0))))")
    else:
        j, delta = rng.randint(2, 3), rng.randint(1, 3)
        if rng.random() < 0.5:
            lines.append(f"(assert (> (f {_r(j)}) {_r(j * c + delta)}))")
        else:
            lines.append(f"(assert (< (f {_r(j)}) {_r(j * c - delta)}))")
        params.update(j=j, delta=delta)
    witness = [_fun("f", mk_app("*", real_lit(c), Var("x0")))] if sat else None
    return MfdInstance(None, "limit", "sat" if sat else "unsat", params, witness), lines


def gen_mfd_instance(category: str, rng: random.Random, max_depth: int = 3, sat_ratio: float = 0.5) -> MfdInstance:
    if category not in MFD_CATEGORIES:
        raise ValueError(f"unknown MFD category {category!r}")
    sat = rng.random() < sat_ratio
    if category == "rational":
        inst, lines = _rational(rng, sat)
    elif category == "piecewise":
        inst, lines = _piecewise(rng)
    elif category == "recursive":
        inst, lines = _recursive(rng, sat, max_depth)
    else:
        inst, lines = _limit(rng, sat)
    inst.script = parse_script("\n".join(_header(inst.expected) + lines + ["(check-sat)"]))
    return inst
