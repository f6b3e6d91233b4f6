"""Synthetic Chinese question / VQL corpus for desk-scale training.

Questions come from per-chart templates with slot-filled column mentions
in Chinese gloss form (a fixed letter-to-CJK mapping, so every English
identifier has one deterministic Chinese rendering). Every generated VQL
parses and resolves against its schema; generation is deterministic under
the seed.
"""

from __future__ import annotations

import numpy as np

from ..dataset import Hardness, Sample
from ..schema import ColumnDef, DatabaseSchema, TableDef
from ..vql import (
    AggFn,
    BinSpec,
    BinUnit,
    ChartType,
    ColumnRef,
    GROUPED_CHARTS,
    OrderSpec,
    Predicate,
    VqlQuery,
    canonicalize,
    parse_vql,
    unparse_vql,
)

__all__ = ["generate_synthetic_corpus", "toy_schemas", "gloss"]

# One CJK character per ASCII letter/digit: identifiers gloss 1:1 into
# Chinese so the encoder must bridge the two scripts.
_ALPHABET = "abcdefghijklmnopqrstuvwxyz0123456789_"
_GLYPHS = "安波车东风谷海货基拉梦南欧平奇人三天无西杨子红蓝绿金木水火土山石田日月星云"
_GLOSS = {ch: _GLYPHS[i] for i, ch in enumerate(_ALPHABET)}


def gloss(identifier: str) -> str:
    return "".join(_GLOSS.get(ch, "某") for ch in identifier.lower())


_CHART_PHRASE = {
    ChartType.BAR: "柱状图",
    ChartType.PIE: "饼图",
    ChartType.LINE: "折线图",
    ChartType.SCATTER: "散点图",
    ChartType.STACKED_BAR: "堆叠柱状图",
    ChartType.GROUPED_LINE: "分组折线图",
    ChartType.GROUPED_SCATTER: "分组散点图",
}

_AGG_PHRASE = {
    AggFn.COUNT: "数量",
    AggFn.SUM: "总和",
    AggFn.AVG: "平均值",
    AggFn.MIN: "最小值",
    AggFn.MAX: "最大值",
}

_OP_PHRASE = {">": "大于", ">=": "不小于", "<": "小于", "<=": "不大于",
              "=": "等于", "!=": "不等于"}

_UNIT_PHRASE = {BinUnit.YEAR: "年份", BinUnit.MONTH: "月份",
                BinUnit.WEEKDAY: "星期", BinUnit.DAY: "日期"}


def toy_schemas() -> dict[str, DatabaseSchema]:
    """Two small databases used by the synthetic generator and fixtures."""
    movies = DatabaseSchema("cinema", (
        TableDef("movies", (
            ColumnDef("name", "TEXT"), ColumnDef("genre", "TEXT"),
            ColumnDef("stars", "NUMBER"), ColumnDef("gross", "NUMBER"),
            ColumnDef("released", "TIME")), primary_key="name"),
        TableDef("studios", (
            ColumnDef("studio", "TEXT"), ColumnDef("movie_name", "TEXT"),
            ColumnDef("budget", "NUMBER")),
            foreign_keys=(("movie_name", "movies", "name"),)),
    ))
    shop = DatabaseSchema("shop", (
        TableDef("orders", (
            ColumnDef("item", "TEXT"), ColumnDef("region", "TEXT"),
            ColumnDef("amount", "NUMBER"), ColumnDef("ordered_at", "TIME"))),
    ))
    for s in (movies, shop):
        s.validate()
    return {s.db_id: s for s in (movies, shop)}


_CHARTS = list(ChartType)


def _columns_of(schema: DatabaseSchema, table: TableDef, dtype: str | None = None
                ) -> list[ColumnDef]:
    return [c for c in table.columns if dtype is None or c.dtype == dtype]


def generate_synthetic_corpus(schemas: dict[str, DatabaseSchema], n: int,
                              seed: int = 0) -> list[Sample]:
    """Generate n question/VQL samples, stratified over all 7 chart types."""
    if not schemas:
        raise ValueError("schemas must be nonempty")
    rng = np.random.default_rng(seed)
    db_ids = sorted(schemas)
    samples: list[Sample] = []
    i = 0
    while len(samples) < n:
        chart = _CHARTS[i % len(_CHARTS)]
        db_id = db_ids[(i // len(_CHARTS)) % len(db_ids)]
        i += 1
        schema = schemas[db_id]
        table = schema.tables[int(rng.integers(len(schema.tables)))]
        text_cols = _columns_of(schema, table, "TEXT")
        num_cols = _columns_of(schema, table, "NUMBER")
        time_cols = _columns_of(schema, table, "TIME")
        if len(text_cols) < 2 and chart in GROUPED_CHARTS:
            continue
        if not text_cols or not num_cols:
            continue

        x = text_cols[int(rng.integers(len(text_cols)))]
        color = None
        if chart in GROUPED_CHARTS:
            others = [c for c in text_cols if c.name != x.name]
            color = others[int(rng.integers(len(others)))]
        agg = [AggFn.COUNT, AggFn.SUM, AggFn.AVG, AggFn.MIN,
               AggFn.MAX][int(rng.integers(5))]
        y = num_cols[int(rng.integers(len(num_cols)))]

        clauses = 0
        filters: tuple[Predicate, ...] = ()
        if rng.random() < 0.45:
            fcol = num_cols[int(rng.integers(len(num_cols)))]
            op = list(_OP_PHRASE)[int(rng.integers(len(_OP_PHRASE)))]
            val = int(rng.integers(1, 10))
            filters = (Predicate(ColumnRef(fcol.name, table.name), op, (val,)),)
            clauses += 1

        bin_spec = None
        use_bin = bool(time_cols) and rng.random() < 0.3
        group_cols = [ColumnRef(x.name, table.name)]
        if color is not None:
            group_cols.append(ColumnRef(color.name, table.name))
        if use_bin:
            tcol = time_cols[0]
            unit = list(_UNIT_PHRASE)[int(rng.integers(4))]
            bin_spec = BinSpec(ColumnRef(tcol.name, table.name), unit)
            clauses += 1

        order = None
        if rng.random() < 0.4:
            target = "X" if rng.random() < 0.5 else "Y"
            direction = "ASC" if rng.random() < 0.5 else "DESC"
            order = OrderSpec(target, direction)
            clauses += 1

        q = VqlQuery(
            chart=chart,
            x=ColumnRef(x.name, table.name),
            y_agg=agg,
            y_col=ColumnRef(y.name, table.name),
            color=ColumnRef(color.name, table.name) if color else None,
            from_table=table.name,
            filters=filters,
            group_by=tuple(group_cols),
            bin=bin_spec,
            order=order,
        )
        q = canonicalize(q, schema)
        vql_text = unparse_vql(q)
        parse_vql(vql_text)  # generator postcondition

        question = _render_question(chart, table, x, y, agg, color, filters,
                                    bin_spec, order)
        hardness = [Hardness.EASY, Hardness.MEDIUM, Hardness.HARD,
                    Hardness.EXTRA_HARD][min(clauses, 3)]
        samples.append(Sample(
            id=f"syn-{len(samples):05d}", db_id=db_id, question_zh=question,
            vql_text=vql_text, hardness=hardness))
    return samples


def _render_question(chart, table, x, y, agg, color, filters, bin_spec,
                     order) -> str:
    parts = [f"请用{_CHART_PHRASE[chart]}展示{gloss(table.name)}表中"
             f"每个{gloss(x.name)}的{gloss(y.name)}{_AGG_PHRASE[agg]}"]
    if color is not None:
        parts.append(f"，并按{gloss(color.name)}分组")
    for p in filters:
        parts.append(f"，其中{gloss(p.column.column)}{_OP_PHRASE[p.op]}{p.operands[0]}")
    if bin_spec is not None:
        parts.append(f"，按{_UNIT_PHRASE[bin_spec.unit]}对{gloss(bin_spec.column.column)}分箱")
    if order is not None:
        axis = "横轴" if order.target == "X" else "纵轴"
        direction = "升序" if order.direction == "ASC" else "降序"
        parts.append(f"，按{axis}{direction}排列")
    return "".join(parts) + "。"
