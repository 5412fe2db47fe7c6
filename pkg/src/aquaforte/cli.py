"""Command line entry point: ``aquaforte solve|preprocess|generate|bench|record``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .bench import format_report, run_batch
from .benchgen.suite import gen_mfd_suite, gen_sos_suite
from .config import RunConfig, build_config, load_toml
from .llm.client import LlmSession, Transcript, make_client
from .orchestrator import adaptive_solve
from .preprocess import component_script, rewrite_formula, separate_components
from .smtlib.errors import SmtLibError
from .smtlib.parser import parse_script
from .smtlib.printer import print_script, print_term
from .solver.driver import SolverNotFound, Verdict

log = logging.getLogger("aquaforte")

EXIT = {Verdict.SAT: 10, Verdict.UNSAT: 20, Verdict.UNKNOWN: 0}
EXIT_ERROR = 1


class _JsonFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        entry = {
            "time": datetime.fromtimestamp(record.created, timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        if record.exc_info:
            entry["exc"] = self.formatException(record.exc_info)
        return json.dumps(entry)


def setup_logging(verbosity: int, log_file: str | None) -> None:
    root = logging.getLogger()
    root.handlers.clear()
    console = logging.StreamHandler(sys.stderr)
    console.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    console.setLevel(logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG)
    root.addHandler(console)
    root.setLevel(logging.DEBUG)
    if log_file:
        fh = logging.FileHandler(log_file, encoding="utf-8")
        fh.setFormatter(_JsonFormatter())
        fh.setLevel(logging.DEBUG)
        root.addHandler(fh)


def _add_run_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("solving")
    g.add_argument("--solver", help="z3, cvc5 or a path to an SMT-LIB solver (default z3)")
    g.add_argument("--solver-flag", dest="solver_flags", action="append", metavar="FLAG",
                   help="extra back-end flag; repeat for several (replaces the defaults)")
    g.add_argument("--memory-mb", type=int, help="address-space cap for the solver process")
    g.add_argument("--iters", type=int, help="maximum LLM iterations N (default 1; 0 = plain solver)")
    g.add_argument("--budget", type=float, help="total seconds T for one problem (default 120)")
    g.add_argument("--tau", type=float, help="seconds per bounded solve (default min(24, T/(N+1)))")
    g.add_argument("--triggers", action="store_true", default=None, help="also ask for trigger patterns")
    g.add_argument("--inline", action="store_true", default=None, help="beta-reduce definitions at call sites")
    g.add_argument("--debug-exclusions", action="store_true", default=None,
                   help="check every learned exclusion clause against its refuted definitions")
    l = p.add_argument_group("LLM")
    mode = l.add_mutually_exclusive_group()
    mode.add_argument("--replay", metavar="FIXTURES", help="answer prompts from a replay fixture file")
    mode.add_argument("--endpoint", metavar="URL", help="OpenAI-compatible base URL (key in AQUAFORTE_API_KEY)")
    l.add_argument("--model", help="model name for the live endpoint")
    o = p.add_argument_group("output")
    o.add_argument("--trace", metavar="FILE", help="per-iteration JSON-lines trace")
    o.add_argument("--transcript", metavar="FILE", help="JSON-lines log of every prompt and answer")
    o.add_argument("--emit-steps", metavar="DIR", help="write every intermediate script")
    o.add_argument("--config", metavar="FILE", help="TOML configuration file")


def _run_config(args, **extra) -> RunConfig:
    file_values = load_toml(args.config) if getattr(args, "config", None) else None
    flags = {k: getattr(args, k, None) for k in (
        "solver", "solver_flags", "memory_mb", "iters", "budget", "tau", "triggers", "inline",
        "debug_exclusions", "replay", "endpoint", "model", "trace", "transcript", "emit_steps", "verbose")}
    flags["emit_steps"] = getattr(args, "emit_steps", None)
    flags.update(extra)
    return build_config(file_values, **flags)


def cmd_solve(args) -> int:
    cfg = _run_config(args, record=getattr(args, "out", None))
    script = parse_script(Path(args.file).read_text(encoding="utf-8"))
    session = LlmSession(make_client(cfg.llm), Transcript(cfg.transcript_path))
    result = adaptive_solve(script, cfg.budgets, session, cfg.solver, cfg.options)
    log.info("%s: %s via %s in %.2fs", args.file, result.verdict.value, result.provenance, result.wall_time)
    if args.json:
        print(json.dumps(result.summary(), indent=1))
    else:
        print(result.verdict.value)
        print(f"; provenance: {result.provenance}")
        for inst in result.instantiations:
            print(f"; {inst.define_fun()}")
        if result.evidence:
            print(f"; {result.evidence}")
    return EXIT[result.verdict]


def cmd_record(args) -> int:
    if not args.endpoint:
        log.error("record needs --endpoint")
        return EXIT_ERROR
    return cmd_solve(args)


def cmd_preprocess(args) -> int:
    script = parse_script(Path(args.file).read_text(encoding="utf-8"))
    rewritten = rewrite_formula(script)
    comps = separate_components(rewritten)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "rewritten.smt2").write_text(print_script(rewritten), encoding="utf-8")
    listing = []
    for c in comps:
        name = "residue.smt2" if c.is_residue else f"component_{c.id}.smt2"
        (out / name).write_text(print_script(component_script(rewritten, c)), encoding="utf-8")
        listing.append({
            "id": c.id,
            "file": name,
            "functions": sorted(c.functions),
            "assertions": [print_term(t) for t in c.assertions],
        })
    (out / "components.json").write_text(json.dumps(listing, indent=1) + "\n", encoding="utf-8")
    print(f"{len(comps)} component(s) written to {out}")
    return 0


def _grid(spec: list[str] | None) -> dict:
    out = {}
    for item in spec or []:
        key, _, vals = item.partition("=")
        if key not in ("n", "m") or not vals:
            raise ValueError(f"bad --grid entry {item!r}; use n=1,2 or m=1,2,3")
        out[key + "s"] = tuple(int(v) for v in vals.split(","))
    return out


def cmd_generate(args) -> int:
    if args.family == "sos":
        kw = _grid(args.grid)
        if args.instances:
            kw["instances"] = args.instances
        man = gen_sos_suite(args.out, args.seed, **kw)
    else:
        kw = {"instances": args.instances} if args.instances else {}
        if args.grid:
            kw["categories"] = tuple(c for g in args.grid for c in g.split(","))
        man = gen_mfd_suite(args.out, args.seed, **kw)
    print(f"{len(man.entries)} {args.family} instances written to {args.out}")
    return 0


def cmd_bench(args) -> int:
    cfg = _run_config(args)
    report = run_batch(args.target, cfg, compare=args.compare, workers=args.workers,
                       baseline_timeout=args.baseline_timeout)
    if args.report:
        Path(args.report).write_text(json.dumps(report, indent=1) + "\n", encoding="utf-8")
    print(format_report(report))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aquaforte", description="LLM-guided instantiation of uninterpreted functions for SMT problems.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more console logging (repeatable)")
    p.add_argument("--log-file", help="structured JSON-lines log file")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve one SMT-LIB file")
    s.add_argument("file")
    s.add_argument("--json", action="store_true", help="print the result as JSON")
    _add_run_options(s)
    s.set_defaults(func=cmd_solve)

    r = sub.add_parser("record", help="solve with a live LLM and store its answers as replay fixtures")
    r.add_argument("file")
    r.add_argument("--out", required=True, metavar="FIXTURES", help="fixture file to create or extend")
    r.add_argument("--json", action="store_true")
    _add_run_options(r)
    r.set_defaults(func=cmd_record)

    pp = sub.add_parser("preprocess", help="rewrite a script and split it into components")
    pp.add_argument("file")
    pp.add_argument("--out-dir", required=True)
    pp.set_defaults(func=cmd_preprocess)

    g = sub.add_parser("generate", help="generate a benchmark family")
    g.add_argument("family", choices=["sos", "mfd"])
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--instances", type=int, help="instances per cell (sos) or per category (mfd)")
    g.add_argument("--grid", action="append",
                   help="sos: n=1,2 or m=1,2,3 (repeatable); mfd: comma-separated categories")
    g.set_defaults(func=cmd_generate)

    b = sub.add_parser("bench", help="run a batch over a directory or manifest")
    b.add_argument("target")
    b.add_argument("--compare", action="store_true", help="also run the plain back-end on each instance")
    b.add_argument("--baseline-timeout", type=float, help="seconds for the plain back-end (default tau)")
    b.add_argument("--workers", type=int, default=4)
    b.add_argument("--report", metavar="FILE", help="write the JSON report here")
    _add_run_options(b)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose, args.log_file)
    try:
        return args.func(args)
    except (SmtLibError, OSError, ValueError, SolverNotFound) as err:
        log.error("%s", err)
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
