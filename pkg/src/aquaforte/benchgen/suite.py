"""Whole benchmark suites on disk with a manifest.json of ground truth."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from ..smtlib.printer import print_script
from .generators import MFD_CATEGORIES, ManifestEntry, SosParams, _witness, gen_mfd_instance, gen_sos_instance

MANIFEST = "manifest.json"
SCHEMA_VERSION = 1


@dataclass
class BenchManifest:
    family: str
    seed: int
    entries: list[ManifestEntry] = field(default_factory=list)
    root: Optional[Path] = None

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "family": self.family,
            "seed": self.seed,
            "instances": [e.to_json() for e in self.entries],
        }

    def save(self, out_dir) -> Path:
        path = Path(out_dir) / MANIFEST
        path.write_text(json.dumps(self.to_json(), indent=1, sort_keys=True) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path) -> "BenchManifest":
        path = Path(path)
        if path.is_dir():
            path = path / MANIFEST
        data = json.loads(path.read_text(encoding="utf-8"))
        entries = [ManifestEntry(**e) for e in data["instances"]]
        return cls(data["family"], data["seed"], entries, path.parent)

    def file(self, entry: ManifestEntry) -> Path:
        return (self.root or Path(".")) / entry.path


def _write(out: Path, rel: str, text: str) -> None:
    p = out / rel
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text, encoding="utf-8")


def gen_sos_suite(
    out_dir,
    seed: int = 0,
    ns: Sequence[int] = (1, 2, 3),
    ms: Sequence[int] = (1, 2, 3, 4),
    instances: int = 50,
    max_degree: int = 2,
    coeff_bound: int = 5,
) -> BenchManifest:
    out = Path(out_dir)
    man = BenchManifest("sos", seed, root=out)
    for n in ns:
        for m in ms:
            params = SosParams(n, m, instances, seed, max_degree, coeff_bound)
            for k in range(instances):
                key = f"sos:{seed}:{n}:{m}:{k}"
                script, status, sources, witness = gen_sos_instance(params, random.Random(key))
                rel = f"sos/n{n}_m{m}/inst_{k:03d}.smt2"
                _write(out, rel, print_script(script))
                man.entries.append(
                    ManifestEntry(
                        rel,
                        "sos",
                        f"n{n}_m{m}",
                        {"n": n, "m": m, "max_degree": max_degree, "coeff_bound": coeff_bound,
                         "sources": [_poly_json(p) for p in sources]},
                        status,
                        key,
                        _witness(witness) if witness else None,
                    )
                )
    man.save(out)
    return man


def _poly_json(p) -> list:
    return [[list(e), str(c)] for e, c in p.monomials()]


def gen_mfd_suite(
    out_dir,
    seed: int = 0,
    categories: Iterable[str] = MFD_CATEGORIES,
    instances: int = 150,
    max_depth: int = 3,
    sat_ratio: float = 0.5,
) -> BenchManifest:
    out = Path(out_dir)
    man = BenchManifest("mfd", seed, root=out)
    for cat in categories:
        for k in range(instances):
            key = f"mfd:{seed}:{cat}:{k}"
            inst = gen_mfd_instance(cat, random.Random(key), max_depth, sat_ratio)
            rel = f"mfd/{cat}/inst_{k:03d}.smt2"
            _write(out, rel, print_script(inst.script))
            man.entries.append(
                ManifestEntry(rel, "mfd", cat, inst.params, inst.expected, key,
                              _witness(inst.witness) if inst.witness else None)
            )
    man.save(out)
    return man


def gen_suite(family: str, out_dir, seed: int = 0, **params) -> BenchManifest:
    if family == "sos":
        return gen_sos_suite(out_dir, seed, **params)
    if family == "mfd":
        return gen_mfd_suite(out_dir, seed, **params)
    raise ValueError(f"unknown benchmark family {family!r}")
