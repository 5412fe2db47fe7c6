"""Back-end solvers as subprocesses, one SMT-LIB file per call."""

from __future__ import annotations

import enum
import logging
import math
import os
import resource
import shutil
import signal
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field, replace
from typing import Optional

from ..smtlib.printer import print_script
from ..smtlib.terms import CheckSat, Exit, GetModel, Passthrough, Script
from ..smtlib.typecheck import Env
from .models import ModelEntry, ModelError, parse_model

log = logging.getLogger(__name__)

# Fraction of the budget after which a plain "unknown" counts as running out of time.
_TIMEOUT_SLACK = 0.95

DEFAULT_FLAGS = {
    "z3": (),
    "cvc5": ("--full-saturate-quant",),
}


class Verdict(str, enum.Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"
    TIMEOUT = "timeout"
    ERROR = "error"


class SolverNotFound(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    solver: str = "z3"
    flags: Optional[tuple[str, ...]] = None
    timeout: float = 24.0
    memory_mb: Optional[int] = None
    scratch_dir: Optional[str] = None
    keep_files: bool = False

    def __post_init__(self):
        if not self.timeout > 0:
            raise ValueError("solver timeout must be positive")

    def with_timeout(self, seconds: float) -> "SolverConfig":
        return replace(self, timeout=seconds)

    @property
    def name(self) -> str:
        return os.path.basename(self.solver) if self.solver not in ("z3", "cvc5") else self.solver


@dataclass
class SolveOutcome:
    verdict: Verdict
    wall_time: float
    stdout: str = ""
    stderr: str = ""
    model: Optional[list[ModelEntry]] = None
    message: str = ""
    command: list[str] = field(default_factory=list)

    @property
    def is_sat(self) -> bool:
        return self.verdict is Verdict.SAT

    @property
    def is_unsat(self) -> bool:
        return self.verdict is Verdict.UNSAT


def resolve_command(config: SolverConfig, path: str, get_model: bool = False) -> list[str]:
    ms = max(1, int(math.ceil(config.timeout * 1000)))
    flags = list(config.flags if config.flags is not None else DEFAULT_FLAGS.get(config.solver, ()))
    if config.solver == "z3":
        exe = os.environ.get("AQUAFORTE_Z3") or shutil.which("z3")
        if not exe:
            raise SolverNotFound("z3 not found; install it or set AQUAFORTE_Z3")
        return [exe, "-smt2", f"-t:{ms}", *flags, path]
    if config.solver == "cvc5":
        exe = os.environ.get("AQUAFORTE_CVC5") or shutil.which("cvc5")
        base = [exe] if exe else [sys.executable, "-m", "aquaforte.solver.cvc5_cli"]
        extra = ["--produce-models"] if get_model else []
        return [*base, f"--tlimit-per={ms}", *extra, *flags, path]
    exe = config.solver if os.path.sep in config.solver else shutil.which(config.solver)
    if not exe or not os.path.exists(exe):
        raise SolverNotFound(f"solver executable {config.solver!r} not found")
    return [exe, *flags, path]


_QUERY_PREFIXES = ("(get-", "(echo")


def prepare_script(script: Script, get_model: bool = False) -> Script:
    """Drop existing queries and end with exactly one check-sat (plus get-model)."""
    keep = []
    for c in script.commands:
        if isinstance(c, (CheckSat, GetModel, Exit)):
            continue
        if isinstance(c, Passthrough) and c.text.lstrip().startswith(_QUERY_PREFIXES):
            continue
        keep.append(c)
    keep.append(CheckSat())
    if get_model:
        keep.append(GetModel())
    return Script(tuple(keep))


def _limit_memory(mb: int):
    def apply():
        limit = mb * 1024 * 1024
        resource.setrlimit(resource.RLIMIT_AS, (limit, limit))

    return apply


def _kill_group(proc: subprocess.Popen) -> None:
    try:
        os.killpg(proc.pid, signal.SIGKILL)
    except (ProcessLookupError, PermissionError):
        pass


def _status(stdout: str) -> Optional[str]:
    for line in stdout.splitlines():
        tok = line.strip().split(" ", 1)[0] if line.strip() else ""
        if tok in ("sat", "unsat", "unknown", "timeout"):
            return tok
        if tok and not tok.startswith("(error") and not tok.startswith("("):
            return None
    return None


def solve(script: Script, config: SolverConfig, get_model: bool = False, env: Optional[Env] = None) -> SolveOutcome:
    """Run the configured back-end on ``script`` within ``config.timeout`` seconds.

    Running out of time gives verdict TIMEOUT, never an exception. A missing
    binary raises SolverNotFound.
    """
    text = print_script(prepare_script(script, get_model))
    fd, path = tempfile.mkstemp(suffix=".smt2", prefix="aquaforte-", dir=config.scratch_dir)
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        fh.write(text)
    try:
        cmd = resolve_command(config, path, get_model)
        return _run(cmd, config, get_model, env)
    finally:
        if not config.keep_files:
            try:
                os.unlink(path)
            except OSError:
                pass


def _run(cmd: list[str], config: SolverConfig, get_model: bool, env: Optional[Env]) -> SolveOutcome:
    start = time.monotonic()
    proc = subprocess.Popen(
        cmd,
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        stdin=subprocess.DEVNULL,
        text=True,
        start_new_session=True,
        preexec_fn=_limit_memory(config.memory_mb) if config.memory_mb else None,
    )
    try:
        out, err = proc.communicate(timeout=config.timeout)
    except subprocess.TimeoutExpired:
        _kill_group(proc)
        out, err = proc.communicate()
        wall = time.monotonic() - start
        return SolveOutcome(Verdict.TIMEOUT, wall, out or "", err or "", message="killed at budget", command=cmd)
    finally:
        if proc.poll() is None:
            _kill_group(proc)
            proc.wait()
    # reap anything the solver left behind in its group
    _kill_group(proc)
    wall = time.monotonic() - start

    status = _status(out)
    if status is None:
        msg = (err.strip() or out.strip() or f"exit code {proc.returncode}")[:2000]
        return SolveOutcome(Verdict.ERROR, wall, out, err, message=msg, command=cmd)
    if status == "timeout" or (status == "unknown" and wall >= _TIMEOUT_SLACK * config.timeout):
        return SolveOutcome(Verdict.TIMEOUT, wall, out, err, command=cmd)
    if status == "unknown" and "TIMEOUT" in out.split("\n", 1)[0]:
        return SolveOutcome(Verdict.TIMEOUT, wall, out, err, command=cmd)
    verdict = Verdict(status)
    model = None
    if verdict is Verdict.SAT and get_model:
        try:
            model = parse_model(out, env)
        except ModelError as exc:
            log.warning("sat without a readable model: %s", exc)
    return SolveOutcome(verdict, wall, out, err, model=model, command=cmd)
