"""Run configuration: defaults, then a TOML file, then command-line flags."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .llm.client import LlmConfig
from .orchestrator import Budgets, SolveOptions
from .solver.driver import SolverConfig


@dataclass
class RunConfig:
    solver: SolverConfig = field(default_factory=SolverConfig)
    llm: LlmConfig = field(default_factory=LlmConfig)
    budgets: Budgets = field(default_factory=Budgets)
    options: SolveOptions = field(default_factory=SolveOptions)
    transcript_path: Optional[str] = None
    verbosity: int = 0


_SECTIONS = {
    "solver": {"name", "flags", "memory_mb", "scratch_dir", "keep_files"},
    "llm": {"base_url", "model", "replay", "record", "temperature", "max_retries", "backoff", "request_timeout", "max_tokens"},
    "budgets": {"iters", "total", "tau"},
    "output": {"trace", "transcript", "emit_steps"},
    "pipeline": {"triggers", "inline", "debug_exclusions"},
}


def load_toml(path: str) -> dict[str, Any]:
    data = tomllib.loads(Path(path).read_text(encoding="utf-8"))
    for section, values in data.items():
        if section not in _SECTIONS:
            raise ValueError(f"{path}: unknown section [{section}]")
        unknown = set(values) - _SECTIONS[section]
        if unknown:
            raise ValueError(f"{path}: unknown keys in [{section}]: {', '.join(sorted(unknown))}")
    return data


def build_config(file_values: Optional[dict] = None, **flags) -> RunConfig:
    """Merge file values with flags; flags that are None leave the file value in place."""
    f = file_values or {}
    sv, lv, bv = f.get("solver", {}), f.get("llm", {}), f.get("budgets", {})
    ov, pv = f.get("output", {}), f.get("pipeline", {})

    def pick(flag, section, key, default=None):
        v = flags.get(flag)
        if v is not None:
            return v
        return section.get(key, default)

    flags_list = pick("solver_flags", sv, "flags")
    solver = SolverConfig(
        solver=pick("solver", sv, "name", "z3"),
        flags=tuple(flags_list) if flags_list is not None else None,
        memory_mb=pick("memory_mb", sv, "memory_mb"),
        scratch_dir=sv.get("scratch_dir"),
        keep_files=bool(sv.get("keep_files", False)),
    )
    replay = pick("replay", lv, "replay")
    base_url = pick("endpoint", lv, "base_url")
    if flags.get("replay") is not None:
        base_url = None
    elif flags.get("endpoint") is not None:
        replay = None
    llm = LlmConfig(
        base_url=base_url,
        model=pick("model", lv, "model", "gpt-4.1"),
        replay_path=replay,
        record_path=pick("record", lv, "record"),
        temperature=float(lv.get("temperature", 0.01)),
        max_retries=int(lv.get("max_retries", 3)),
        backoff=float(lv.get("backoff", 1.0)),
        request_timeout=float(lv.get("request_timeout", 120.0)),
        max_tokens=lv.get("max_tokens"),
    )
    budgets = Budgets(
        max_iters=int(pick("iters", bv, "iters", 1)),
        total=float(pick("budget", bv, "total", 120.0)),
        tau=pick("tau", bv, "tau"),
    )
    options = SolveOptions(
        use_triggers=bool(pick("triggers", pv, "triggers", False)),
        inline=bool(pick("inline", pv, "inline", False)),
        debug_exclusions=bool(pick("debug_exclusions", pv, "debug_exclusions", False)),
        emit_dir=pick("emit_steps", ov, "emit_steps"),
        trace_path=pick("trace", ov, "trace"),
    )
    return RunConfig(solver, llm, budgets, options, pick("transcript", ov, "transcript"), int(flags.get("verbose") or 0))


def without_outputs(cfg: RunConfig) -> RunConfig:
    """Copy with per-run output files switched off (used by batch runs)."""
    return replace(cfg, options=replace(cfg.options, trace_path=None, emit_dir=None))
