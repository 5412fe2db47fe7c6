"""Running back-end SMT solvers and reading their answers."""

from .driver import DEFAULT_FLAGS, SolveOutcome, SolverConfig, SolverNotFound, Verdict, prepare_script, resolve_command, solve
from .models import ModelEntry, ModelError, parse_model, print_model
