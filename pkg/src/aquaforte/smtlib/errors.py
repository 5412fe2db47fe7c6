"""Exception hierarchy for the SMT-LIB layer."""

from __future__ import annotations

from typing import Optional


class SmtLibError(Exception):
    """Base class for every error raised while reading or checking SMT-LIB."""


class ParseError(SmtLibError):
    def __init__(self, message: str, pos: Optional[tuple[int, int]] = None, expected: Optional[str] = None):
        self.message = message
        self.pos = pos
        self.expected = expected
        where = f" at line {pos[0]}, column {pos[1]}" if pos else ""
        hint = f" (expected {expected})" if expected else ""
        super().__init__(f"{message}{where}{hint}")


class UnknownSymbolError(ParseError):
    def __init__(self, symbol: str, pos=None):
        self.symbol = symbol
        super().__init__(f"unknown symbol '{symbol}'", pos)


class UnsupportedFeatureError(ParseError):
    def __init__(self, feature: str, pos=None):
        self.feature = feature
        super().__init__(f"unsupported feature: {feature}", pos)


class SortError(SmtLibError):
    """Ill-sorted term. ``path`` lists child indices from the checked root to the culprit."""

    def __init__(self, message: str, path: tuple[int, ...] = ()):
        self.message = message
        self.path = tuple(path)
        loc = f" at subterm path {list(self.path)}" if self.path else ""
        super().__init__(f"{message}{loc}")
