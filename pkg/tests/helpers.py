"""Shared generators and independent oracles for property tests.

The random query generator only emits ASTs that satisfy every VQL
invariant and resolve against the schema they were drawn for. The oracle
evaluator is a deliberately naive cross-product interpreter kept separate
from the pipeline evaluator it checks.
"""

from __future__ import annotations

import datetime
import random
import re

from text2vis.compiler import Relation
from text2vis.schema import ColumnDef, DatabaseSchema, TableDef
from text2vis.vql import (
    AggFn,
    BinSpec,
    BinUnit,
    ChartType,
    ColumnRef,
    GROUPED_CHARTS,
    Join,
    OrderSpec,
    Predicate,
    VqlQuery,
)

WORDS = ["ash", "bay", "cod", "dew", "elm", "fig", "gum", "hay", "ivy", "jet"]


def cinema_db() -> dict[str, Relation]:
    movies = Relation(
        (("name", "TEXT"), ("genre", "TEXT"), ("stars", "NUMBER"),
         ("gross", "NUMBER"), ("released", "TIME")),
        (
            ("Alpha", "drama", 4, 120, "2024-07-01"),
            ("Beta", "drama", 3, 80, "2024-07-03"),
            ("Gamma", "comedy", 5, 200, "2024-08-15"),
            ("Delta", "comedy", 2, 40, "2023-12-31"),
            ("Epsilon", "action", 4, 150, "2024-07-03"),
            ("Zeta", "action", None, 60, None),
        ),
    )
    studios = Relation(
        (("studio", "TEXT"), ("movie_name", "TEXT"), ("budget", "NUMBER")),
        (
            ("Orion", "Alpha", 50),
            ("Orion", "Beta", 30),
            ("Pictor", "Gamma", 90),
            ("Pictor", "Epsilon", 70),
        ),
    )
    return {"movies": movies, "studios": studios}


def shop_db() -> dict[str, Relation]:
    orders = Relation(
        (("item", "TEXT"), ("region", "TEXT"), ("amount", "NUMBER"),
         ("ordered_at", "TIME")),
        (("pen", "north", 3, "2024-01-05"),
         ("pad", "south", 7, "2024-02-11"),
         ("pen", "south", 2, "2024-03-20")),
    )
    return {"orders": orders}


def random_schema(rng: random.Random, n_tables: int | None = None) -> DatabaseSchema:
    n_tables = n_tables or rng.randint(1, 3)
    tables = []
    used = rng.sample(WORDS, n_tables)
    for ti, tname in enumerate(used):
        cols = [ColumnDef(f"c{ti}{ci}", rng.choice(["TEXT", "NUMBER", "TIME"]))
                for ci in range(rng.randint(2, 4))]
        # guarantee at least one text and one number column per table
        cols[0] = ColumnDef(cols[0].name, "TEXT")
        cols[1] = ColumnDef(cols[1].name, "NUMBER")
        tables.append(TableDef(tname, tuple(cols)))
    schema = DatabaseSchema(f"db_{used[0]}", tuple(tables))
    schema.validate()
    return schema


def random_db(rng: random.Random, schema: DatabaseSchema,
              max_rows: int = 8) -> dict[str, Relation]:
    db = {}
    for t in schema.tables:
        rows = []
        for _ in range(rng.randint(0, max_rows)):
            row = []
            for c in t.columns:
                if rng.random() < 0.1:
                    row.append(None)
                elif c.dtype == "NUMBER":
                    row.append(rng.randint(-5, 9))
                elif c.dtype == "TIME":
                    day = rng.randint(0, 720)
                    row.append((datetime.date(2023, 1, 1)
                                + datetime.timedelta(days=day)).isoformat())
                else:
                    row.append(rng.choice(["a", "b", "cc", "dd", "e f"]))
            rows.append(tuple(row))
        db[t.name] = Relation(
            tuple((c.name, c.dtype) for c in t.columns), tuple(rows))
    return db


def _cols(schema: DatabaseSchema, tables: list[TableDef], dtype=None
          ) -> list[ColumnRef]:
    out = []
    for t in tables:
        for c in t.columns:
            if dtype is None or c.dtype == dtype:
                out.append(ColumnRef(c.name, t.name))
    return out


def random_query(rng: random.Random, schema: DatabaseSchema,
                 allow_joins: bool = True) -> VqlQuery:
    """A uniform-ish valid query resolving against the schema."""
    from_table = rng.choice(schema.tables)
    tables = [from_table]
    joins: list[Join] = []
    if allow_joins and len(schema.tables) > 1 and rng.random() < 0.4:
        for cand in schema.tables:
            if cand.name == from_table.name or rng.random() < 0.5:
                continue
            # join on dtype-compatible columns
            pairs = [(ColumnRef(a.name, tables[-1].name), ColumnRef(b.name, cand.name))
                     for a in tables[-1].columns for b in cand.columns
                     if a.dtype == b.dtype]
            if not pairs:
                continue
            left, right = rng.choice(pairs)
            joins.append(Join(cand.name, left, right))
            tables.append(cand)

    chart = rng.choice(list(ChartType))
    text_cols = _cols(schema, tables, "TEXT")
    num_cols = _cols(schema, tables, "NUMBER")
    time_cols = _cols(schema, tables, "TIME")
    x = rng.choice(text_cols + time_cols) if (text_cols or time_cols) \
        else rng.choice(num_cols)
    color = None
    if chart in GROUPED_CHARTS:
        pool = [c for c in text_cols if c.lowered() != x.lowered()]
        if not pool:
            chart = rng.choice([ChartType.BAR, ChartType.PIE, ChartType.LINE,
                                ChartType.SCATTER])
        else:
            color = rng.choice(pool)

    agg = rng.choice(list(AggFn))
    y_col: ColumnRef | None
    if agg is AggFn.COUNT and rng.random() < 0.3:
        y_col = None
    elif agg in (AggFn.SUM, AggFn.AVG):
        if not num_cols:
            agg = AggFn.COUNT
            y_col = None
        else:
            y_col = rng.choice(num_cols)
    else:
        y_col = rng.choice(num_cols) if num_cols else rng.choice(text_cols)
    if agg is AggFn.NONE and y_col is None:
        y_col = rng.choice(num_cols) if num_cols else rng.choice(text_cols)

    filters = []
    for _ in range(rng.randint(0, 2)):
        col = rng.choice(_cols(schema, tables))
        dtype = schema.table(col.table).column(col.column).dtype
        kind = rng.random()
        if dtype == "NUMBER":
            if kind < 0.2:
                lo = rng.randint(-5, 5)
                filters.append(Predicate(col, "BETWEEN", (lo, lo + rng.randint(0, 5))))
            elif kind < 0.4:
                filters.append(Predicate(
                    col, "IN", tuple(rng.randint(-5, 9)
                                     for _ in range(rng.randint(1, 3)))))
            else:
                filters.append(Predicate(
                    col, rng.choice(["=", "!=", "<", "<=", ">", ">="]),
                    (rng.randint(-5, 9),)))
        else:
            if kind < 0.3:
                filters.append(Predicate(col, "LIKE", (rng.choice(
                    ["%a%", "b%", "%c", "d_", "%e f%"]),)))
            else:
                filters.append(Predicate(
                    col, rng.choice(["=", "!="]),
                    (rng.choice(["a", "b", "cc", "dd"]),)))

    group_by: tuple[ColumnRef, ...] = ()
    if agg is not AggFn.NONE and rng.random() < 0.6:
        group_by = (x,) + ((color,) if color is not None else ())

    bin_spec = None
    if rng.random() < 0.35:
        excluded = {c.lowered() for c in group_by}
        if agg in (AggFn.SUM, AggFn.AVG) and y_col is not None:
            excluded.add(y_col.lowered())  # SUM/AVG over bucket labels is a type error
        num_pool = [c for c in num_cols if c.lowered() not in excluded]
        time_pool = [c for c in time_cols if c.lowered() not in excluded]
        if time_pool and rng.random() < 0.5:
            bin_spec = BinSpec(rng.choice(time_pool),
                               rng.choice([BinUnit.YEAR, BinUnit.MONTH,
                                           BinUnit.WEEKDAY, BinUnit.DAY]))
        elif num_pool:
            bin_spec = BinSpec(rng.choice(num_pool), BinUnit.INTERVAL,
                               rng.randint(1, 10))

    order = None
    if rng.random() < 0.4:
        order = OrderSpec(rng.choice(["X", "Y"]), rng.choice(["ASC", "DESC"]))

    return VqlQuery(
        chart=chart, x=x, y_agg=agg, y_col=y_col, color=color,
        from_table=from_table.name, joins=tuple(joins),
        filters=tuple(filters), group_by=group_by, bin=bin_spec, order=order)


# ---------------------------------------------------------------------------
# independent oracle evaluator


def _oracle_like(value: str, pattern: str) -> bool:
    rx = "^" + "".join(
        ".*" if c == "%" else "." if c == "_" else re.escape(c)
        for c in pattern) + "$"
    return re.match(rx, value, re.IGNORECASE) is not None


def _oracle_pred(cell, op, operands) -> bool:
    if cell is None:
        return op == "!="
    if op == "=":
        return cell == operands[0]
    if op == "!=":
        return cell != operands[0]
    if op == "LIKE":
        return _oracle_like(str(cell), str(operands[0]))
    if op == "IN":
        return cell in operands
    try:
        if op == "BETWEEN":
            return operands[0] <= cell and cell <= operands[1]
        return {"<": cell < operands[0], "<=": cell <= operands[0],
                ">": cell > operands[0], ">=": cell >= operands[0]}[op]
    except TypeError:
        raise


def _oracle_bin(cell, unit: BinUnit, width):
    if cell is None:
        return None
    if unit is BinUnit.INTERVAL:
        k = cell // width if isinstance(cell, int) and isinstance(width, int) \
            else __import__("math").floor(cell / width)
        lo, hi = k * width, (k + 1) * width
        def show(v):
            return str(int(v)) if float(v).is_integer() else str(v)
        return f"[{show(lo)}, {show(hi)})"
    d = datetime.date.fromisoformat(str(cell)[:10])
    if unit is BinUnit.YEAR:
        return f"{d.year:04d}"
    if unit is BinUnit.MONTH:
        return f"{d.year:04d}-{d.month:02d}"
    if unit is BinUnit.DAY:
        return d.isoformat()
    return ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"][d.isoweekday() - 1]


def oracle_evaluate(q: VqlQuery, db: dict[str, Relation]) -> list[tuple]:
    """Cross-product interpreter; returns the output row multiset (no order)."""
    tables = [q.from_table] + [j.table for j in q.joins]
    # named tuples: list of dict colname->cell, names qualified
    universe = [dict()]
    for tname in tables:
        rel = db[tname.lower()]
        expanded = []
        for env in universe:
            for row in rel.rows:
                e = dict(env)
                for (cname, _), cell in zip(rel.columns, row):
                    e[f"{tname.lower()}.{cname.lower()}"] = cell
                expanded.append(e)
        universe = expanded
    for j in q.joins:
        universe = [e for e in universe
                    if e[str(j.left)] is not None
                    and e[str(j.left)] == e[str(j.right)]]
    for p in q.filters:
        universe = [e for e in universe
                    if _oracle_pred(e[str(p.column)], p.op, p.operands)]
    if q.bin is not None:
        key = str(q.bin.column)
        binned = []
        for e in universe:
            label = _oracle_bin(e[key], q.bin.unit, q.bin.interval)
            if label is None:
                continue
            e = dict(e)
            e[key] = label
            binned.append(e)
        universe = binned

    def proj(e):
        rec = [e[str(q.x)]]
        if q.color is not None:
            rec.append(e[str(q.color)])
        return rec

    if q.y_agg is AggFn.NONE:
        return [tuple(proj(e) + [e[str(q.y_col)]]) for e in universe]

    keys = [str(c) for c in q.group_by] if q.group_by else \
        [str(q.x)] + ([str(q.color)] if q.color else [])
    groups: dict[tuple, list] = {}
    for e in universe:
        groups.setdefault(tuple(e[k] for k in keys), []).append(e)
    out = []
    for members in groups.values():
        if q.y_col is None:
            y = len(members)
        else:
            vals = [e[str(q.y_col)] for e in members if e[str(q.y_col)] is not None]
            if q.y_agg is AggFn.COUNT:
                y = len(vals)
            elif not vals:
                y = None
            elif q.y_agg is AggFn.SUM:
                y = sum(vals)
            elif q.y_agg is AggFn.AVG:
                y = sum(vals) / len(vals)
            elif q.y_agg is AggFn.MIN:
                y = min(vals)
            else:
                y = max(vals)
        out.append(tuple(proj(members[0]) + [y]))
    return out
