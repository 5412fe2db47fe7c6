"""Batch runs over a benchmark directory or manifest, with optional baseline comparison."""

from __future__ import annotations

import logging
import re
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .benchgen.suite import MANIFEST, BenchManifest
from .config import RunConfig, without_outputs
from .llm.client import ChatClient, LlmSession, Transcript, make_client
from .orchestrator import adaptive_solve, fallback_solve
from .smtlib.errors import SmtLibError
from .smtlib.parser import parse_script

log = logging.getLogger(__name__)

_STATUS = re.compile(r"\(set-info\s+:status\s+(sat|unsat|unknown)\s*\)")


@dataclass
class BatchItem:
    path: Path
    family: str = ""
    category: str = ""
    expected: Optional[str] = None


@dataclass
class BatchRow:
    path: str
    family: str
    category: str
    expected: Optional[str]
    verdict: str = "error"
    provenance: str = ""
    time: float = 0.0
    baseline: Optional[str] = None
    baseline_time: Optional[float] = None
    error: Optional[str] = None
    disagreement: bool = False

    def to_json(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if v is not None}
        d["time"] = round(self.time, 3)
        if self.baseline_time is not None:
            d["baseline_time"] = round(self.baseline_time, 3)
        return d


def collect(target) -> list[BatchItem]:
    """Instances named by a manifest, or every .smt2 file below a directory."""
    target = Path(target)
    manifest = target if target.is_file() and target.suffix == ".json" else target / MANIFEST
    if manifest.is_file():
        man = BenchManifest.load(manifest)
        return [BatchItem(man.file(e), e.family, e.category, e.expected) for e in man.entries]
    if target.is_file():
        files = [target]
    elif target.is_dir():
        files = sorted(target.rglob("*.smt2"))
    else:
        raise FileNotFoundError(target)
    items = []
    for p in files:
        rel = p.relative_to(target) if target.is_dir() else Path(p.name)
        head = p.read_text(encoding="utf-8", errors="replace")[:2000]
        m = _STATUS.search(head)
        items.append(BatchItem(p, rel.parts[0] if len(rel.parts) > 1 else "", p.parent.name, m.group(1) if m else None))
    return items


def _contradicts(expected: Optional[str], verdict: Optional[str]) -> bool:
    return expected in ("sat", "unsat") and verdict in ("sat", "unsat") and verdict != expected


def run_one(item: BatchItem, cfg: RunConfig, client: ChatClient, transcript: Transcript, compare: bool,
            baseline_timeout: Optional[float]) -> BatchRow:
    row = BatchRow(str(item.path), item.family, item.category, item.expected)
    try:
        script = parse_script(item.path.read_text(encoding="utf-8"))
    except (OSError, SmtLibError) as err:
        row.error = f"{type(err).__name__}: {err}"
        return row
    try:
        t0 = time.monotonic()
        res = adaptive_solve(script, cfg.budgets, LlmSession(client, transcript), cfg.solver, cfg.options)
        row.time = time.monotonic() - t0
        row.verdict, row.provenance = res.verdict.value, res.provenance
        if compare:
            t = baseline_timeout or cfg.budgets.per_solve
            base = fallback_solve(script, [], cfg.solver.with_timeout(t))
            row.baseline, row.baseline_time = base.verdict.value, base.trace[-1]["solve_time"]
    except Exception as err:  # a broken instance must not stop the batch
        log.exception("instance %s failed", item.path)
        row.error = f"{type(err).__name__}: {err}"
        row.verdict = "error"
        return row
    row.disagreement = _contradicts(item.expected, row.verdict) or _contradicts(item.expected, row.baseline)
    if row.disagreement:
        log.error("VERDICT DISAGREES WITH EXPECTED STATUS: %s expected %s got %s (baseline %s)",
                  item.path, item.expected, row.verdict, row.baseline)
    return row


def run_batch(target, cfg: RunConfig, compare: bool = False, workers: int = 4,
              baseline_timeout: Optional[float] = None, client: Optional[ChatClient] = None) -> dict:
    items = collect(target)
    cfg = without_outputs(cfg)
    client = client or make_client(cfg.llm)
    transcript = Transcript(cfg.transcript_path)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        rows = list(pool.map(lambda it: run_one(it, cfg, client, transcript, compare, baseline_timeout), items))
    rows.sort(key=lambda r: r.path)
    return summarize(rows, compare)


def summarize(rows: list[BatchRow], compare: bool = False) -> dict:
    counts: dict[str, Counter] = {}
    base_counts: dict[str, Counter] = {}
    for r in rows:
        key = f"{r.family}/{r.category}".strip("/") or "all"
        counts.setdefault(key, Counter())[r.verdict] += 1
        if compare and r.baseline is not None:
            base_counts.setdefault(key, Counter())[r.baseline] += 1
    report = {
        "instances": len(rows),
        "rows": [r.to_json() for r in rows],
        "counts": {k: dict(sorted(v.items())) for k, v in sorted(counts.items())},
        "errors": sum(1 for r in rows if r.error),
        "disagreements": [r.path for r in rows if r.disagreement],
        "provenance": dict(sorted(Counter(r.provenance for r in rows if r.provenance).items())),
    }
    if compare:
        report["baseline_counts"] = {k: dict(sorted(v.items())) for k, v in sorted(base_counts.items())}
    return report


def format_report(report: dict) -> str:
    cols = ["sat", "unsat", "unknown", "error"]
    has_base = "baseline_counts" in report
    head = ["group", *cols] + ([f"base_{c}" for c in cols[:3]] if has_base else [])
    lines = [head]
    for group, c in report["counts"].items():
        row = [group, *(str(c.get(k, 0)) for k in cols)]
        if has_base:
            b = report["baseline_counts"].get(group, {})
            row += [str(b.get(k, 0)) for k in cols[:3]]
        lines.append(row)
    widths = [max(len(r[i]) for r in lines) for i in range(len(head))]
    out = ["  ".join(v.ljust(w) if i == 0 else v.rjust(w) for i, (v, w) in enumerate(zip(r, widths))) for r in lines]
    out.append(f"instances: {report['instances']}  errors: {report['errors']}  disagreements: {len(report['disagreements'])}")
    for p in report["disagreements"]:
        out.append(f"  DISAGREEMENT: {p}")
    return "\n".join(out)
