"""SMT-LIB 2 term algebra: parsing, printing, sort checking and substitution."""

from .errors import ParseError, SmtLibError, SortError, UnknownSymbolError, UnsupportedFeatureError
from .parser import parse_script, parse_sort, parse_term
from .printer import print_command, print_define_fun, print_script, print_sort, print_term
from .subst import FreshNames, alpha_equivalent, free_vars, substitute, uninterpreted_symbols
from .terms import *  # noqa: F401,F403
from .typecheck import Env, check_script, elaborate, sort_of
