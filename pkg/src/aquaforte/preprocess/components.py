"""Partition assertions into groups that share no uninterpreted function."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..smtlib.subst import uninterpreted_symbols
from ..smtlib.terms import Assert, CheckSat, DeclareFun, DeclareSort, DefineFun, Script, SetLogic, Term
from ..smtlib.typecheck import Env
from .rewrite import split_conjuncts
from .unionfind import UnionFind


@dataclass(frozen=True)
class Component:
    id: int
    functions: frozenset[str]
    assertions: tuple[Term, ...]
    assertion_indices: tuple[int, ...]
    env: Env

    @property
    def is_residue(self) -> bool:
        """Ground residue: the assertions that mention no uninterpreted symbol."""
        return not self.functions

    def signatures(self):
        return [self.env.functions[f] for f in sorted(self.functions)]


def extract_constraints(script: Script) -> list[Term]:
    out: list[Term] = []
    for a in script.assertions:
        out.extend(split_conjuncts(a))
    return out


def separate_components(script: Script) -> list[Component]:
    """Union-find grouping of the script's (top-level split) assertions.

    Two uninterpreted symbols end up together iff a chain of assertions links
    them. Components are ordered by their lexicographically smallest symbol;
    the ground residue, when non-empty, comes last.
    """
    env = Env.from_script(script)
    constraints = extract_constraints(script)
    uf = UnionFind()
    per_constraint: list[set[str]] = []
    for c in constraints:
        funcs = uninterpreted_symbols(c, env)
        per_constraint.append(funcs)
        it = iter(sorted(funcs))
        first = next(it, None)
        if first is None:
            continue
        uf.add(first)
        for f in it:
            uf.add(f)
            uf.union(first, f)

    groups = {root: frozenset(members) for root, members in uf.groups().items()}
    ordered = sorted(groups.items(), key=lambda kv: min(kv[1]))
    index_of = {root: i for i, (root, _) in enumerate(ordered)}
    buckets: list[list[int]] = [[] for _ in ordered]
    residue: list[int] = []
    for i, funcs in enumerate(per_constraint):
        if funcs:
            buckets[index_of[uf.find(next(iter(funcs)))]].append(i)
        else:
            residue.append(i)

    comps = []
    for i, ((_, members), idxs) in enumerate(zip(ordered, buckets)):
        comps.append(_make(i, members, idxs, constraints, env))
    if residue:
        comps.append(_make(len(comps), frozenset(), residue, constraints, env))
    return comps


def _make(cid, members, idxs, constraints, env: Env) -> Component:
    sub = Env(
        {n: s for n, s in env.functions.items() if n in members or s.interpreted},
        env.definitions,
        env.sorts,
    )
    return Component(cid, frozenset(members), tuple(constraints[i] for i in idxs), tuple(idxs), sub)


def ground_residue(components: list[Component]) -> Optional[Component]:
    return next((c for c in components if c.is_residue), None)


def component_script(script: Script, comp: Component) -> Script:
    """Stand-alone script holding one component: its declarations and assertions."""
    cmds = []
    if script.logic:
        cmds.append(SetLogic(script.logic))
    for c in script.commands:
        if isinstance(c, DeclareSort):
            cmds.append(c)
        elif isinstance(c, DeclareFun) and c.signature.name in comp.functions:
            cmds.append(c)
        elif isinstance(c, DefineFun):
            cmds.append(c)
    cmds.extend(Assert(t) for t in comp.assertions)
    cmds.append(CheckSat())
    return Script(tuple(cmds))
