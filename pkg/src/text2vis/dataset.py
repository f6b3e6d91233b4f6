"""Corpus and schema loading, corpus statistics, and the three split regimes.

Corpus files are JSONL, one sample per line:
    {"id": str, "db_id": str, "question_zh": str, "vql": str,
     "hardness": "easy"|"medium"|"hard"|"extra_hard"}

Schema files are JSON:
    {"databases": [{"db_id": str, "tables": [{"name": str,
     "columns": [{"name": str, "type": "text"|"number"|"time"}],
     "primary_key": str|null, "foreign_keys": [[localCol, fTable, fCol]]}]}]}
"""

from __future__ import annotations

import enum
import hashlib
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .schema import ColumnDef, DatabaseSchema, TableDef, ValidationError
from .vql import canonicalize, parse_vql, unparse_vql

__all__ = [
    "Hardness", "Sample", "SplitMode", "SplitSpec", "StatsReport",
    "CorpusError", "InfeasibleSplit",
    "load_corpus", "load_schemas", "split_corpus", "corpus_stats",
    "canonical_vql_key", "write_corpus",
]


class Hardness(enum.Enum):
    EASY = "easy"
    MEDIUM = "medium"
    HARD = "hard"
    EXTRA_HARD = "extra_hard"


@dataclass(frozen=True)
class Sample:
    id: str
    db_id: str
    question_zh: str
    vql_text: str
    hardness: Hardness


class CorpusError(ValueError):
    """One or more corpus lines failed validation."""

    def __init__(self, diagnostics: list[tuple[int, str]]) -> None:
        self.diagnostics = diagnostics
        lines = "; ".join(f"line {n}: {msg}" for n, msg in diagnostics[:10])
        extra = "" if len(diagnostics) <= 10 else f" (+{len(diagnostics) - 10} more)"
        super().__init__(lines + extra)


class InfeasibleSplit(ValueError):
    """A single group is too large to honor the requested ratios."""


class SplitMode(enum.Enum):
    QUESTION = "question"
    QUERY = "query"
    DATABASE = "database"


@dataclass(frozen=True)
class SplitSpec:
    mode: SplitMode
    ratios: tuple[float, float, float]  # (train, dev, test)
    seed: int = 0

    def __post_init__(self) -> None:
        if any(r <= 0 for r in self.ratios):
            raise ValueError("split ratios must be positive")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ValueError("split ratios must sum to 1")


def load_schemas(path: str | Path) -> dict[str, DatabaseSchema]:
    """Load and validate a schema file; duplicate db_id is an error."""
    raw = Path(path).read_text(encoding="utf-8").strip()
    if not raw:
        return {}
    doc = json.loads(raw)
    out: dict[str, DatabaseSchema] = {}
    for entry in doc.get("databases", []):
        db_id = entry["db_id"]
        if db_id in out:
            raise ValidationError(db_id, "db_id", "duplicate database id")
        tables = tuple(
            TableDef(
                name=t["name"],
                columns=tuple(
                    ColumnDef(c["name"], c["type"].upper()) for c in t["columns"]),
                primary_key=t.get("primary_key"),
                foreign_keys=tuple(tuple(fk) for fk in t.get("foreign_keys", [])),
            )
            for t in entry["tables"]
        )
        schema = DatabaseSchema(db_id=db_id, tables=tables)
        schema.validate()
        out[db_id] = schema
    return out


def load_corpus(path: str | Path, schemas: dict[str, DatabaseSchema] | None = None,
                strict: bool = True) -> list[Sample]:
    """Load a JSONL corpus, validating every record.

    Validation checks that the VQL parses and, when schemas are given, that
    db_id names a loaded schema. In strict mode the first bad line aborts;
    otherwise diagnostics are aggregated and raised together at the end.
    """
    samples: list[Sample] = []
    diagnostics: list[tuple[int, str]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                hardness = Hardness(rec["hardness"])
                sample = Sample(
                    id=str(rec["id"]), db_id=rec["db_id"],
                    question_zh=rec["question_zh"], vql_text=rec["vql"],
                    hardness=hardness)
                if not sample.question_zh:
                    raise ValueError("question_zh is empty")
                parse_vql(sample.vql_text)
                if schemas is not None and sample.db_id not in schemas:
                    raise ValueError(f"unknown db_id {sample.db_id!r}")
            except Exception as exc:  # aggregate per-line causes
                diagnostics.append((lineno, str(exc)))
                if strict:
                    raise CorpusError(diagnostics) from exc
                continue
            samples.append(sample)
    if diagnostics:
        raise CorpusError(diagnostics)
    return samples


def write_corpus(samples: list[Sample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(json.dumps({
                "id": s.id, "db_id": s.db_id, "question_zh": s.question_zh,
                "vql": s.vql_text, "hardness": s.hardness.value,
            }, ensure_ascii=False) + "\n")


def canonical_vql_key(vql_text: str,
                      schema: DatabaseSchema | None = None) -> str:
    """Schema-free (or schema-resolved) canonical string of a VQL text."""
    return unparse_vql(canonicalize(parse_vql(vql_text), schema))


def _group_key(sample: Sample, mode: SplitMode) -> str:
    if mode is SplitMode.QUESTION:
        return sample.question_zh
    if mode is SplitMode.QUERY:
        return canonical_vql_key(sample.vql_text)
    return sample.db_id


def _assign(seed: int, key: str, ratios: tuple[float, float, float]) -> int:
    # Seeded hash of the group key mapped onto ratio intervals: adding
    # samples to one group never perturbs another group's assignment.
    digest = hashlib.sha256(f"{seed}\x00{key}".encode("utf-8")).digest()
    u = int.from_bytes(digest[:8], "big") / 2**64
    if u < ratios[0]:
        return 0
    if u < ratios[0] + ratios[1]:
        return 1
    return 2


def split_corpus(samples: list[Sample], spec: SplitSpec
                 ) -> tuple[list[Sample], list[Sample], list[Sample]]:
    """Partition samples into (train, dev, test) under the given regime.

    Each group (question string / canonical VQL / database) lands wholly in
    one subset; the assignment is a deterministic function of (seed, key).
    """
    if not samples:
        raise ValueError("cannot split an empty corpus")
    groups = Counter(_group_key(s, spec.mode) for s in samples)
    cap = max(spec.ratios) + 0.05
    for key, size in groups.items():
        if size / len(samples) > cap:
            raise InfeasibleSplit(
                f"group {key!r} holds {size}/{len(samples)} samples, beyond "
                f"the largest ratio {max(spec.ratios):.2f} (+5% tolerance)")
    out: tuple[list[Sample], list[Sample], list[Sample]] = ([], [], [])
    for s in samples:
        out[_assign(spec.seed, _group_key(s, spec.mode), spec.ratios)].append(s)
    return out


@dataclass(frozen=True)
class StatsReport:
    total: int
    by_hardness: dict[str, int]
    by_db: dict[str, int]
    distinct_canonical_vqls: int
    question_length_histogram: dict[int, int]  # char count -> samples

    def to_json(self) -> dict:
        return {
            "total": self.total,
            "by_hardness": self.by_hardness,
            "by_db": self.by_db,
            "distinct_canonical_vqls": self.distinct_canonical_vqls,
            "question_length_histogram": {
                str(k): v for k, v in sorted(self.question_length_histogram.items())},
        }


def corpus_stats(samples: list[Sample]) -> StatsReport:
    by_hardness = Counter(s.hardness.value for s in samples)
    by_db = Counter(s.db_id for s in samples)
    vqls = {canonical_vql_key(s.vql_text) for s in samples}
    lengths = Counter(len(s.question_zh) for s in samples)
    return StatsReport(
        total=len(samples),
        by_hardness={h.value: by_hardness.get(h.value, 0) for h in Hardness},
        by_db=dict(sorted(by_db.items())),
        distinct_canonical_vqls=len(vqls),
        question_length_histogram=dict(lengths),
    )
