"""Metrics: tree-match accuracy per hardness, top-k accuracy, per-component
accuracy tables, and the error taxonomy over failed top-1 predictions.

Predictions come as JSONL: {"id": str, "candidates": [str, ...]} with the
candidate list ranked. Candidates that fail to parse count as non-matches,
never as errors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .dataset import Hardness, Sample
from .schema import DatabaseSchema
from .vql import ChartType, VqlQuery, component_match, parse_vql, tree_match

__all__ = [
    "PredictionRecord", "MetricsReport", "UnknownSampleId",
    "evaluate", "classify_error", "load_predictions", "format_report",
    "VIS_PART", "AXIS_PART", "DATA_PART",
]

VIS_PART = "VIS_PART"
AXIS_PART = "AXIS_PART"
DATA_PART = "DATA_PART"


class UnknownSampleId(KeyError):
    pass


@dataclass(frozen=True)
class PredictionRecord:
    sample_id: str
    candidates: tuple[str, ...]  # ranked, nonempty

    def __post_init__(self) -> None:
        if not self.candidates:
            raise ValueError("candidates must be nonempty")


def load_predictions(path: str | Path) -> list[PredictionRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            records.append(PredictionRecord(str(doc["id"]), tuple(doc["candidates"])))
    return records


@dataclass
class MetricsReport:
    tree_acc: dict[str, float]          # per hardness value + "overall"
    topk_acc: dict[int, float]          # k -> accuracy
    component_table: dict               # see evaluate()
    error_counts: dict[str, int]        # vis/axis/data over failed top-1
    total: int
    failed_top1: int

    def to_json(self) -> dict:
        return {
            "tree_acc": self.tree_acc,
            "topk_acc": {str(k): v for k, v in sorted(self.topk_acc.items())},
            "component_table": self.component_table,
            "error_counts": self.error_counts,
            "total": self.total,
            "failed_top1": self.failed_top1,
        }


def _safe_parse(text: str) -> VqlQuery | None:
    try:
        return parse_vql(text)
    except Exception:
        return None


def _safe_tree_match(pred: VqlQuery | None, gold: VqlQuery,
                     schema: DatabaseSchema) -> bool:
    if pred is None:
        return False
    try:
        return tree_match(pred, gold, schema)
    except Exception:
        return False


def classify_error(pred: VqlQuery | None, gold: VqlQuery,
                   schema: DatabaseSchema) -> set[str]:
    """Tag a failed prediction with the parts it gets wrong; unparseable
    (or unresolvable) predictions carry all three flags."""
    if pred is None:
        return {VIS_PART, AXIS_PART, DATA_PART}
    try:
        report = component_match(pred, gold, schema)
    except Exception:
        return {VIS_PART, AXIS_PART, DATA_PART}
    flags = set()
    if not report.vis_match:
        flags.add(VIS_PART)
    if not report.axis_match:
        flags.add(AXIS_PART)
    if not report.data_match.all():
        flags.add(DATA_PART)
    return flags


def evaluate(preds: list[PredictionRecord], gold: list[Sample],
             schemas: dict[str, DatabaseSchema],
             ks: tuple[int, ...] = (1, 3, 5)) -> MetricsReport:
    """Score ranked predictions against gold samples.

    tree_acc@k counts samples whose first k candidates contain a tree
    match; component accuracies and the error taxonomy use top-1 only.
    """
    gold_by_id = {s.id: s for s in gold}
    n = len(preds)
    if n == 0:
        raise ValueError("no predictions to evaluate")

    hard_totals: dict[str, int] = {h.value: 0 for h in Hardness}
    hard_hits: dict[str, int] = {h.value: 0 for h in Hardness}
    topk_hits = {k: 0 for k in ks}
    error_counts = {"vis": 0, "axis": 0, "data": 0}
    failed = 0

    chart_rows = {c.value: {"total": 0, "vis_hits": 0} for c in ChartType}
    comp_hits = {"axis": 0, "where": 0, "join": 0, "group": 0, "binning": 0,
                 "order": 0}

    for rec in preds:
        sample = gold_by_id.get(rec.sample_id)
        if sample is None:
            raise UnknownSampleId(rec.sample_id)
        schema = schemas[sample.db_id]
        gold_q = parse_vql(sample.vql_text)

        match_rank: int | None = None
        for rank, cand in enumerate(rec.candidates, start=1):
            if _safe_tree_match(_safe_parse(cand), gold_q, schema):
                match_rank = rank
                break
        for k in ks:
            if match_rank is not None and match_rank <= k:
                topk_hits[k] += 1
        top1_hit = match_rank == 1
        hard_totals[sample.hardness.value] += 1
        if top1_hit:
            hard_hits[sample.hardness.value] += 1

        top1 = _safe_parse(rec.candidates[0])
        chart_rows[gold_q.chart.value]["total"] += 1
        try:
            report = component_match(top1, gold_q, schema) if top1 else None
        except Exception:
            report = None
        if report is not None:
            if report.vis_match:
                chart_rows[gold_q.chart.value]["vis_hits"] += 1
            if report.axis_match:
                comp_hits["axis"] += 1
            dm = report.data_match
            for name, ok in (("where", dm.where), ("join", dm.join),
                             ("group", dm.group), ("binning", dm.binning),
                             ("order", dm.order)):
                if ok:
                    comp_hits[name] += 1
        if not top1_hit:
            failed += 1
            flags = classify_error(top1, gold_q, schema)
            if VIS_PART in flags:
                error_counts["vis"] += 1
            if AXIS_PART in flags:
                error_counts["axis"] += 1
            if DATA_PART in flags:
                error_counts["data"] += 1

    tree_acc = {"overall": sum(hard_hits.values()) / n}
    for h in Hardness:
        total = hard_totals[h.value]
        tree_acc[h.value] = hard_hits[h.value] / total if total else 0.0

    component_table = {
        "vis_by_chart": {
            chart: (row["vis_hits"] / row["total"] if row["total"] else 0.0)
            for chart, row in chart_rows.items()},
        "axis": comp_hits["axis"] / n,
        "data": {name: comp_hits[name] / n
                 for name in ("where", "join", "group", "binning", "order")},
    }
    return MetricsReport(
        tree_acc=tree_acc,
        topk_acc={k: topk_hits[k] / n for k in ks},
        component_table=component_table,
        error_counts=error_counts,
        total=n,
        failed_top1=failed,
    )


def format_report(report: MetricsReport) -> str:
    """Aligned plain-text rendering of the metrics report."""
    lines = []
    lines.append("Tree matching accuracy")
    order = ["easy", "medium", "hard", "extra_hard", "overall"]
    header = "  " + "".join(f"{name:>12}" for name in order)
    lines.append(header)
    lines.append("  " + "".join(f"{report.tree_acc[name]:>12.3f}" for name in order))
    lines.append("")
    lines.append("Top-k accuracy")
    ks = sorted(report.topk_acc)
    lines.append("  " + "".join(f"{'Top' + str(k):>8}" for k in ks))
    lines.append("  " + "".join(f"{report.topk_acc[k]:>8.3f}" for k in ks))
    lines.append("")
    lines.append("Component matching accuracy (top-1)")
    vis = report.component_table["vis_by_chart"]
    charts = [c.value for c in ChartType]
    lines.append("  " + "".join(f"{c:>16}" for c in charts))
    lines.append("  " + "".join(f"{vis[c]:>16.3f}" for c in charts))
    lines.append(f"  axis select: {report.component_table['axis']:.3f}")
    data = report.component_table["data"]
    lines.append("  data: " + "  ".join(
        f"{name}={data[name]:.3f}" for name in ("where", "join", "group",
                                                "binning", "order")))
    lines.append("")
    lines.append(f"Failed top-1: {report.failed_top1} of {report.total}")
    lines.append("  error parts (may overlap): "
                 f"vis={report.error_counts['vis']} "
                 f"axis={report.error_counts['axis']} "
                 f"data={report.error_counts['data']}")
    return "\n".join(lines) + "\n"
