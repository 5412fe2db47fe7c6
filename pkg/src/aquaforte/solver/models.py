"""Reading ``(get-model)`` output from z3 and cvc5."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

from ..smtlib.errors import ParseError, SmtLibError
from ..smtlib.parser import Atom, SList, _Source, parse_term, read_sexprs
from ..smtlib.printer import print_symbol, print_term
from ..smtlib.terms import Sort, Term
from ..smtlib.typecheck import Env

log = logging.getLogger(__name__)


class ModelError(SmtLibError):
    pass


@dataclass(frozen=True)
class ModelEntry:
    """``value`` is None when the entry could not be parsed; ``raw`` keeps the source text."""

    name: str
    params: tuple[tuple[str, Sort], ...]
    sort: Sort
    value: Optional[Term]
    raw: str

    @property
    def is_constant(self) -> bool:
        return not self.params

    def define_fun(self) -> str:
        if self.value is None:
            return self.raw
        params = " ".join(f"({print_symbol(n)} {print_symbol(s.name)})" for n, s in self.params)
        return f"(define-fun {print_symbol(self.name)} ({params}) {print_symbol(self.sort.name)} {print_term(self.value)})"


def _span(e) -> tuple[int, int]:
    if isinstance(e, Atom):
        return e.offset, e.offset + len(e.text)
    return e.offset, e.end


def _model_block(text: str) -> Optional[SList]:
    src = _Source(text)
    try:
        exprs = read_sexprs(src)
    except ParseError:
        return None
    for e in exprs:
        if not isinstance(e, SList):
            continue
        items = e.items
        if items and isinstance(items[0], Atom) and items[0].text == "model":
            return SList(items[1:], e.offset, e.end)
        if not items or all(isinstance(i, SList) and i.items and isinstance(i.items[0], Atom) for i in items):
            heads = {i.items[0].text for i in items}
            if heads <= {"define-fun", "declare-fun", "declare-sort", "define-fun-rec", "forall"}:
                return e
    return None


def parse_model(raw: str, env: Optional[Env] = None) -> list[ModelEntry]:
    """Entries of the first model block in ``raw`` (status lines before it are skipped)."""
    block = _model_block(raw)
    if block is None:
        raise ModelError("no model block in solver output")
    env = env or Env()
    out = []
    for item in block.items:
        text = raw[slice(*_span(item))]
        head = item.items[0].text if isinstance(item, SList) and item.items else None
        if head != "define-fun" or len(item.items) != 5:
            log.debug("skipping model entry %s", text[:60])
            continue
        name_e, params_e, sort_e, body_e = item.items[1:]
        name = name_e.text.strip("|") if isinstance(name_e, Atom) else "?"
        try:
            params = tuple(
                (p.items[0].text.strip("|"), Sort(p.items[1].text)) for p in params_e.items  # type: ignore[union-attr]
            )
            sort = Sort(sort_e.text)  # type: ignore[union-attr]
        except (AttributeError, IndexError):
            log.warning("opaque model entry: %s", text[:80])
            out.append(ModelEntry(name, (), Sort("?"), None, text))
            continue
        body_text = raw[slice(*_span(body_e))]
        try:
            value = parse_term(body_text, env.bind(params), lenient=True)
        except SmtLibError as err:
            log.warning("could not parse model value for %s: %s", name, err)
            value = None
        out.append(ModelEntry(name, params, sort, value, text))
    return out


def print_model(entries: list[ModelEntry]) -> str:
    return "(\n" + "".join(f"  {e.define_fun()}\n" for e in entries) + ")\n"
