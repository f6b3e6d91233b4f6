"""VQL execution over in-memory relations and Vega-Lite emission.

Pipeline order: FROM -> JOIN (inner equi) -> WHERE -> BIN (replace column
with bucket label) -> GROUP BY + aggregate -> ORDER BY. All transforms are
evaluated here; the emitted Vega-Lite document carries final rows only.
"""

from __future__ import annotations

import csv
import datetime
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .dataset import load_schemas
from .schema import DatabaseSchema
from .vql import (
    AggFn,
    BinUnit,
    ChartType,
    ColumnRef,
    VqlQuery,
    canonicalize,
    parse_vql,
)

__all__ = [
    "Relation", "Cell", "EvalError", "MissingTable", "MissingColumn",
    "CellTypeError", "MissingDatabase", "StageError",
    "bin_value", "evaluate_query", "emit_spec", "render_pipeline",
    "load_relation_csv", "load_database",
]

Cell = str | float | int | None


class EvalError(ValueError):
    pass


class MissingTable(EvalError):
    pass


class MissingColumn(EvalError):
    pass


class CellTypeError(EvalError):
    pass


class MissingDatabase(EvalError):
    pass


class StageError(ValueError):
    """An error from render_pipeline, tagged with the stage that raised it."""

    def __init__(self, stage: str, cause: Exception) -> None:
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")


@dataclass(frozen=True)
class Relation:
    """A named-column table. Every row's arity equals the column count."""

    columns: tuple[tuple[str, str], ...]  # (name, dtype)
    rows: tuple[tuple[Cell, ...], ...]

    def __post_init__(self) -> None:
        for row in self.rows:
            if len(row) != len(self.columns):
                raise EvalError("row arity does not match column count")

    def column_index(self, name: str) -> int:
        low = name.lower()
        for i, (cname, _) in enumerate(self.columns):
            if cname.lower() == low:
                return i
        raise MissingColumn(f"no column {name!r}")


def load_relation_csv(path: str | Path, schema_cols: list[tuple[str, str]]) -> Relation:
    """Read a table CSV (header row = column names), typing cells per the
    declared schema. Empty cells become null."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        dtypes = {name.lower(): dtype for name, dtype in schema_cols}
        cols = tuple((h, dtypes.get(h.lower(), "TEXT")) for h in header)
        rows = []
        for raw in reader:
            row: list[Cell] = []
            for (name, dtype), cell in zip(cols, raw):
                if cell == "":
                    row.append(None)
                elif dtype == "NUMBER":
                    v = float(cell)
                    row.append(int(v) if v == int(v) and "." not in cell else v)
                else:
                    row.append(cell)
            rows.append(tuple(row))
    return Relation(cols, tuple(rows))


def load_database(schema: DatabaseSchema, data_dir: str | Path) -> dict[str, Relation]:
    """Load every table's CSV from <data_dir>/<db_id>/<table>.csv."""
    base = Path(data_dir) / schema.db_id
    db: dict[str, Relation] = {}
    for t in schema.tables:
        path = base / f"{t.name}.csv"
        if not path.exists():
            raise MissingTable(f"no data file for table {t.name!r} at {path}")
        db[t.name.lower()] = load_relation_csv(
            path, [(c.name, c.dtype) for c in t.columns])
    return db


_WEEKDAYS = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")


def _parse_time(cell: Cell) -> datetime.date:
    if not isinstance(cell, str):
        raise CellTypeError(f"time bin over non-time cell {cell!r}")
    try:
        return datetime.datetime.fromisoformat(cell).date()
    except ValueError as exc:
        raise CellTypeError(f"unparseable time value {cell!r}") from exc


def _fmt_num(v: float | int) -> str:
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    return str(v)


def bin_value(cell: Cell, unit: BinUnit, interval: float | None = None) -> str | None:
    """Map a cell to its bucket label; null maps to null (row dropped)."""
    if cell is None:
        return None
    if unit is BinUnit.INTERVAL:
        if not isinstance(cell, (int, float)):
            raise CellTypeError(f"INTERVAL bin over non-numeric cell {cell!r}")
        assert interval is not None and interval > 0
        k = math.floor(cell / interval)
        return f"[{_fmt_num(k * interval)}, {_fmt_num((k + 1) * interval)})"
    d = _parse_time(cell)
    if unit is BinUnit.YEAR:
        return f"{d.year:04d}"
    if unit is BinUnit.MONTH:
        return f"{d.year:04d}-{d.month:02d}"
    if unit is BinUnit.DAY:
        return d.isoformat()
    return _WEEKDAYS[d.weekday()]


def _satisfies(cell: Cell, op: str, operands: tuple) -> bool:
    # Simplified three-valued logic: null satisfies only !=.
    if cell is None:
        return op == "!="
    try:
        if op == "=":
            return cell == operands[0]
        if op == "!=":
            return cell != operands[0]
        if op == "LIKE":
            return _like(str(cell), str(operands[0]))
        if op == "IN":
            return any(cell == o for o in operands)
        if op == "BETWEEN":
            return operands[0] <= cell <= operands[1]
        if op == "<":
            return cell < operands[0]
        if op == "<=":
            return cell <= operands[0]
        if op == ">":
            return cell > operands[0]
        if op == ">=":
            return cell >= operands[0]
    except TypeError as exc:
        raise CellTypeError(f"cannot compare {cell!r} {op} {operands!r}") from exc
    raise EvalError(f"unknown operator {op!r}")


def _like(value: str, pattern: str) -> bool:
    # SQL LIKE with % and _ wildcards, case-insensitive.
    import re

    regex = "".join(
        ".*" if ch == "%" else "." if ch == "_" else re.escape(ch) for ch in pattern)
    return re.fullmatch(regex, value, re.IGNORECASE) is not None


_NUMERIC_AGGS = {AggFn.SUM, AggFn.AVG}


def _aggregate(agg: AggFn, values: list[Cell]) -> Cell:
    if agg is AggFn.COUNT:
        return len(values)
    nonnull = [v for v in values if v is not None]
    if not nonnull:
        return None
    if agg in _NUMERIC_AGGS:
        for v in nonnull:
            if not isinstance(v, (int, float)):
                raise CellTypeError(f"{agg.value} over non-numeric cell {v!r}")
    if agg is AggFn.SUM:
        return sum(nonnull)
    if agg is AggFn.AVG:
        return sum(nonnull) / len(nonnull)
    if agg is AggFn.MIN:
        return min(nonnull)
    if agg is AggFn.MAX:
        return max(nonnull)
    raise EvalError(f"cannot aggregate with {agg.value}")


def _sort_key(cell: Cell) -> tuple:
    if cell is None:
        return (0, "", 0.0)
    if isinstance(cell, (int, float)):
        return (1, "", float(cell))
    return (2, cell, 0.0)


def _qualified_columns(q: VqlQuery, db: dict[str, Relation]
                       ) -> tuple[Relation, list[str]]:
    """Join all tables named by the query into one wide relation with
    'table.column' names."""
    def table_rel(name: str) -> Relation:
        rel = db.get(name.lower())
        if rel is None:
            raise MissingTable(f"table {name!r} not present in database")
        cols = tuple((f"{name.lower()}.{c.lower()}", t) for c, t in rel.columns)
        return Relation(cols, rel.rows)

    current = table_rel(q.from_table)
    # Canonicalization may reorder joins and orient their keys, so process
    # any join whose condition touches the tables joined so far; defer the
    # rest until their dependencies are in.
    pending = list(q.joins)
    while pending:
        progressed = False
        for j in list(pending):
            right = table_rel(j.table)
            sides = []
            for a, b in ((j.left, j.right), (j.right, j.left)):
                try:
                    li = current.column_index(str(a))
                    ri = right.column_index(str(b))
                    sides.append((li, ri))
                except MissingColumn:
                    continue
            if not sides:
                continue
            li, ri = sides[0]
            rows = tuple(
                lrow + rrow
                for lrow in current.rows
                for rrow in right.rows
                if lrow[li] is not None and lrow[li] == rrow[ri])
            current = Relation(current.columns + right.columns, rows)
            pending.remove(j)
            progressed = True
        if not progressed:
            j = pending[0]
            raise MissingColumn(
                f"join condition {j.left} = {j.right} references no joined table")
    return current, [c for c, _ in current.columns]


def evaluate_query(q: VqlQuery, db: dict[str, Relation]) -> Relation:
    """Execute a canonical, resolved query over the database.

    Output columns are named x (and color if present) then y; without
    ORDER BY the rows come back ascending by x label.
    """
    wide, _ = _qualified_columns(q, db)

    rows = [row for row in wide.rows
            if all(_satisfies(row[wide.column_index(str(p.column))], p.op, p.operands)
                   for p in q.filters)]

    # BIN: rewrite the binned column's cells into bucket labels.
    bin_col_idx: int | None = None
    if q.bin is not None:
        bin_col_idx = wide.column_index(str(q.bin.column))
        binned_rows = []
        for row in rows:
            label = bin_value(row[bin_col_idx], q.bin.unit, q.bin.interval)
            if label is None:
                continue
            binned_rows.append(row[:bin_col_idx] + (label,) + row[bin_col_idx + 1:])
        rows = binned_rows

    xi = wide.column_index(str(q.x))
    ci = wide.column_index(str(q.color)) if q.color is not None else None

    def y_values(group_rows: list[tuple[Cell, ...]]) -> list[Cell]:
        if q.y_col is None:
            return [1] * len(group_rows)  # COUNT(*): every row counts
        yi = wide.column_index(str(q.y_col))
        return [row[yi] for row in group_rows if row[yi] is not None]

    out_cols: list[tuple[str, str]]
    out_rows: list[tuple[Cell, ...]]
    y_name = f"{q.y_agg.value}({q.y_col or '*'})" if q.y_agg is not AggFn.NONE \
        else str(q.y_col)

    if q.y_agg is not AggFn.NONE:
        # Grouping keys: explicit GROUP BY columns, else the x channel
        # (binned or not), plus the color channel.
        if q.group_by:
            key_idx = [wide.column_index(str(c)) for c in q.group_by]
        else:
            key_idx = [xi] + ([ci] if ci is not None else [])
        groups: dict[tuple, list[tuple[Cell, ...]]] = {}
        for row in rows:
            groups.setdefault(tuple(row[i] for i in key_idx), []).append(row)
        out_rows = []
        for key in groups:
            grows = groups[key]
            rep = grows[0]
            vals = y_values(grows) if q.y_col is not None else [1] * len(grows)
            y = len(grows) if q.y_col is None else _aggregate(q.y_agg, vals)
            rec: tuple[Cell, ...] = (rep[xi],)
            if ci is not None:
                rec += (rep[ci],)
            rec += (y,)
            out_rows.append(rec)
    else:
        out_rows = []
        yi = wide.column_index(str(q.y_col))
        for row in rows:
            rec = (row[xi],)
            if ci is not None:
                rec += (row[ci],)
            rec += (row[yi],)
            out_rows.append(rec)

    x_dtype = "TEXT" if q.bin is not None and bin_col_idx == xi else wide.columns[xi][1]
    out_cols = [("x", x_dtype)]
    if ci is not None:
        out_cols.append(("color", wide.columns[ci][1]))
    out_cols.append(("y", "NUMBER" if q.y_agg is not AggFn.NONE
                     else wide.columns[wide.column_index(str(q.y_col))][1]))

    y_pos = len(out_cols) - 1
    if q.order is not None:
        pos = 0 if q.order.target == "X" else y_pos
        out_rows.sort(key=lambda r: _sort_key(r[pos]),
                      reverse=q.order.direction == "DESC")
    else:
        out_rows.sort(key=lambda r: tuple(_sort_key(c) for c in r))

    rel = Relation(tuple(out_cols), tuple(out_rows))
    # carried for axis titles in emit_spec
    object.__setattr__(rel, "labels", {
        "x": str(q.x), "y": y_name,
        **({"color": str(q.color)} if q.color else {})})
    return rel


_MARKS = {
    ChartType.BAR: "bar",
    ChartType.PIE: "arc",
    ChartType.LINE: "line",
    ChartType.SCATTER: "point",
    ChartType.STACKED_BAR: "bar",
    ChartType.GROUPED_LINE: "line",
    ChartType.GROUPED_SCATTER: "point",
}


def _field_type(dtype: str) -> str:
    return {"NUMBER": "quantitative", "TIME": "temporal"}.get(dtype, "nominal")


def emit_spec(q: VqlQuery, result: Relation) -> dict:
    """Map the evaluated relation onto a Vega-Lite v5 document.

    The document is an abstract JSON tree; serialize it with spec_to_json
    for the byte-stable form the golden files lock.
    """
    labels = getattr(result, "labels", {"x": "x", "y": "y", "color": "color"})
    names = [c for c, _ in result.columns]
    dtypes = {c: t for c, t in result.columns}
    values = [dict(zip(names, row)) for row in result.rows]

    x_enc = {"field": "x", "type": _field_type(dtypes["x"]), "title": labels["x"]}
    y_enc = {"field": "y", "type": _field_type(dtypes["y"]), "title": labels["y"]}
    if q.order is not None:
        sign = "" if q.order.direction == "ASC" else "-"
        x_enc["sort"] = sign + q.order.target.lower()

    encoding: dict[str, dict]
    if q.chart is ChartType.PIE:
        encoding = {
            "theta": {"field": "y", "type": "quantitative", "title": labels["y"]},
            "color": {"field": "x", "type": _field_type(dtypes["x"]),
                      "title": labels["x"]},
        }
    else:
        encoding = {"x": x_enc, "y": y_enc}
        if q.color is not None:
            encoding["color"] = {"field": "color",
                                 "type": _field_type(dtypes["color"]),
                                 "title": labels["color"]}
        if q.chart is ChartType.STACKED_BAR:
            encoding["y"]["stack"] = "zero"

    return {
        "$schema": "https://vega.github.io/schema/vega-lite/v5.json",
        "mark": _MARKS[q.chart],
        "encoding": encoding,
        "data": {"values": values},
    }


def spec_to_json(spec: dict) -> str:
    """Byte-stable serialization: sorted keys, two-space indent, UTF-8."""
    return json.dumps(spec, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def render_pipeline(vql_text: str, db_id: str, data_dir: str | Path,
                    schemas: dict[str, DatabaseSchema] | None = None) -> dict:
    """parse -> canonicalize -> evaluate -> emit, each stage tagged.

    Schemas default to <data_dir>/schemas.json.
    """
    if schemas is None:
        schemas_path = Path(data_dir) / "schemas.json"
        try:
            schemas = load_schemas(schemas_path)
        except Exception as exc:
            raise StageError("load", exc) from exc
    schema = schemas.get(db_id)
    if schema is None:
        raise StageError("load", MissingDatabase(f"unknown db_id {db_id!r}"))
    try:
        q = parse_vql(vql_text)
    except Exception as exc:
        raise StageError("parse", exc) from exc
    try:
        q = canonicalize(q, schema)
    except Exception as exc:
        raise StageError("resolve", exc) from exc
    try:
        db = load_database(schema, data_dir)
    except Exception as exc:
        raise StageError("load", exc) from exc
    try:
        result = evaluate_query(q, db)
    except Exception as exc:
        raise StageError("evaluate", exc) from exc
    return emit_spec(q, result)
