"""Seeded random SMT-LIB scripts for the property and acceptance suites."""

from __future__ import annotations

import random


def _lit(rng: random.Random, real: bool = True) -> str:
    v = rng.randint(-4, 4)
    if not real:
        return str(v) if v >= 0 else f"(- {-v})"
    s = f"{abs(v)}.0" if rng.random() < 0.7 else f"(/ {abs(v)}.0 {rng.randint(1, 3)}.0)"
    return s if v >= 0 else f"(- {s})"


def component_script(rng: random.Random, max_funcs: int = 10, max_asserts: int = 20) -> str:
    """Script over unary UFs f0.. where each assertion mentions 0 to 3 of them."""
    nf = rng.randint(1, max_funcs)
    funcs = [f"f{i}" for i in range(nf)]
    lines = ["(set-logic UFNIRA)"] + [f"(declare-fun {f} (Real) Real)" for f in funcs]
    lines.append("(declare-const k Real)")
    funcs_all = funcs + ["k"]
    for _ in range(rng.randint(1, max_asserts)):
        chosen = rng.sample(funcs_all, rng.randint(0, min(3, len(funcs_all))))
        parts = []
        quantified = rng.random() < 0.5
        x = "x" if quantified else _lit(rng)
        for f in chosen:
            parts.append(f if f == "k" else f"({f} {x})")
        if not parts:
            parts = ["x" if quantified else _lit(rng)]
        lhs = parts[0] if len(parts) == 1 else f"(+ {' '.join(parts)})"
        op = rng.choice(["<", "<=", ">", "=", "distinct"])
        body = f"({op} {lhs} {_lit(rng)})"
        if rng.random() < 0.3:
            body = f"(or {body} (> {_lit(rng)} {_lit(rng)}))"
        lines.append(f"(assert (forall ((x Real)) {body}))" if quantified else f"(assert {body})")
    lines.append("(check-sat)")
    return "\n".join(lines)


def _arith(rng: random.Random, depth: int, real_atoms, int_atoms, want_real: bool = True) -> str:
    atoms = real_atoms if want_real else int_atoms
    if depth == 0 or rng.random() < 0.3:
        return rng.choice(atoms) if rng.random() < 0.6 else _lit(rng, want_real)
    op = rng.choice(["+", "-", "*", "ite"] + (["/"] if want_real else []))
    if op == "ite":
        return f"(ite {_bool(rng, depth - 1, real_atoms, int_atoms)} {_arith(rng, depth - 1, real_atoms, int_atoms, want_real)} {_arith(rng, depth - 1, real_atoms, int_atoms, want_real)})"
    if op == "/":
        return f"(/ {_arith(rng, depth - 1, real_atoms, int_atoms)} {rng.randint(1, 4)}.0)"
    if op == "*":
        return f"(* {_lit(rng, want_real)} {_arith(rng, depth - 1, real_atoms, int_atoms, want_real)})"
    n = rng.randint(1, 3) if op == "-" else rng.randint(2, 3)
    return f"({op} {' '.join(_arith(rng, depth - 1, real_atoms, int_atoms, want_real) for _ in range(n))})"


def _bool(rng: random.Random, depth: int, real_atoms, int_atoms) -> str:
    if depth == 0 or rng.random() < 0.4:
        r = rng.random()
        if r < 0.1:
            return rng.choice(["true", "false"])
        want_real = rng.random() < 0.7
        op = rng.choice(["<", "<=", ">", ">=", "=", "distinct"])
        return f"({op} {_arith(rng, depth, real_atoms, int_atoms, want_real)} {_arith(rng, depth, real_atoms, int_atoms, want_real)})"
    op = rng.choice(["and", "or", "not", "=>", "xor", "ite", "="])
    sub = lambda: _bool(rng, depth - 1, real_atoms, int_atoms)  # noqa: E731
    if op == "not":
        return f"(not {sub()})"
    if op == "ite":
        return f"(ite {sub()} {sub()} {sub()})"
    if op in ("=>", "xor", "="):
        return f"({op} {sub()} {sub()})"
    return f"({op} {' '.join(sub() for _ in range(rng.randint(2, 3)))})"


def rewrite_script(rng: random.Random) -> str:
    """Small mixed Int/Real script with a UF, a macro and foldable constants."""
    lines = [
        "(set-logic UFNIRA)",
        "(declare-const a Real)",
        "(declare-const b Real)",
        "(declare-const n Int)",
        "(declare-fun f (Real) Real)",
        f"(define-fun h ((y Real)) Real (+ y {_lit(rng)}))",
    ]
    real_atoms = ["a", "b", "(f a)", "(h b)", "(to_real n)", "(f (h a))"]
    int_atoms = ["n", "(+ n 1)"]
    for _ in range(rng.randint(1, 4)):
        lines.append(f"(assert {_bool(rng, 3, real_atoms, int_atoms)})")
    if rng.random() < 0.3:
        lines.append(f"(assert (forall ((z Real)) (>= (f z) {_lit(rng)})))")
    lines.append("(check-sat)")
    return "\n".join(lines)
