"""Canonical form for VQL queries and the matching predicates built on it.

The canonical form makes query equality decidable and order-insensitive:
identifiers are lower-cased and table-qualified, filter conjuncts and
group-by keys are sorted, duplicate conjuncts collapse, and joins are
reordered with their keys oriented. Tie-breaking everywhere is
lexicographic on the unparsed sub-node, which is total and
implementation-independent.
"""

from __future__ import annotations

from ..schema import DatabaseSchema, ResolutionError
from .ast import (
    AggFn,
    BinSpec,
    ColumnRef,
    ComponentReport,
    DataMatch,
    Join,
    OrderSpec,
    Predicate,
    VqlQuery,
)
from .parser import _fmt_literal

__all__ = ["canonicalize", "tree_match", "component_match"]


def _query_tables(q: VqlQuery) -> list[str]:
    return [q.from_table] + [j.table for j in q.joins]


def _resolve(col: ColumnRef, q: VqlQuery, schema: DatabaseSchema) -> ColumnRef:
    """Lower-case and table-qualify a column reference against the tables the
    query names."""
    tables = _query_tables(q)
    if col.table is not None:
        table = col.table.lower()
        if table not in (t.lower() for t in tables):
            raise ResolutionError(f"table {col.table!r} is not referenced by the query")
        tdef = schema.table(table)
        if tdef is None:
            raise ResolutionError(f"unknown table {col.table!r}")
        if tdef.column(col.column) is None:
            raise ResolutionError(f"unknown column {col.table}.{col.column}")
        return ColumnRef(col.column.lower(), table)
    hits = []
    for tname in tables:
        tdef = schema.table(tname)
        if tdef is None:
            raise ResolutionError(f"unknown table {tname!r}")
        if tdef.column(col.column) is not None:
            hits.append(tname.lower())
    if not hits:
        raise ResolutionError(f"column {col.column!r} matches no table in the query")
    if len(set(hits)) > 1:
        raise ResolutionError(f"column {col.column!r} is ambiguous across {sorted(set(hits))}")
    return ColumnRef(col.column.lower(), hits[0])


def _dtype_of(col: ColumnRef, q: VqlQuery, schema: DatabaseSchema) -> str:
    resolved = _resolve(col, q, schema)
    return schema.table(resolved.table).column(resolved.column).dtype


def _check_types(q: VqlQuery, schema: DatabaseSchema, bin_spec) -> None:
    from .ast import AggFn, BinUnit, SemanticError

    if q.y_agg in (AggFn.SUM, AggFn.AVG) and q.y_col is not None:
        if _dtype_of(q.y_col, q, schema) != "NUMBER":
            raise SemanticError(f"{q.y_agg.value} requires a numeric column")
    if bin_spec is not None:
        dtype = schema.table(bin_spec.column.table).column(bin_spec.column.column).dtype
        if bin_spec.unit is BinUnit.INTERVAL:
            if dtype != "NUMBER":
                raise SemanticError("INTERVAL binning requires a numeric column")
        elif dtype != "TIME":
            raise SemanticError(f"{bin_spec.unit.value} binning requires a time column")


def _pred_sort_key(p: Predicate) -> tuple:
    return (str(p.column), p.op, _fmt_literal(p.operands[0]),
            tuple(_fmt_literal(o) for o in p.operands))


def canonicalize(q: VqlQuery, schema: DatabaseSchema | None = None) -> VqlQuery:
    """Return the deterministic normal form of a query.

    With a schema, every column reference is resolved (lower-cased and
    table-qualified); a reference matching zero or several columns raises
    ResolutionError. Without a schema, identifiers are only lower-cased —
    the schema-free form is still a grouping key usable for dataset splits.
    """
    if schema is not None:
        ref = lambda c: _resolve(c, q, schema)
    else:
        ref = lambda c: c.lowered()

    joins = []
    for j in q.joins:
        left, right = ref(j.left), ref(j.right)
        if str(right) < str(left):
            left, right = right, left
        joins.append(Join(j.table.lower(), left, right))
    joins.sort(key=lambda j: (j.table, str(j.left), str(j.right)))

    filters = sorted(
        {Predicate(ref(p.column), p.op, p.operands) for p in q.filters},
        key=_pred_sort_key)
    group_by = sorted({ref(c) for c in q.group_by}, key=str)
    bin_spec = None
    if q.bin is not None:
        bin_spec = BinSpec(ref(q.bin.column), q.bin.unit, q.bin.interval)

    if schema is not None:
        _check_types(q, schema, bin_spec)

    return VqlQuery(
        chart=q.chart,
        x=ref(q.x),
        y_agg=q.y_agg,
        y_col=ref(q.y_col) if q.y_col is not None else None,
        color=ref(q.color) if q.color is not None else None,
        from_table=q.from_table.lower(),
        joins=tuple(joins),
        filters=tuple(filters),
        group_by=tuple(group_by),
        bin=bin_spec,
        order=q.order,
    )


def tree_match(pred: VqlQuery, gold: VqlQuery, schema: DatabaseSchema) -> bool:
    """True iff the two queries have structurally equal canonical forms."""
    return canonicalize(pred, schema) == canonicalize(gold, schema)


def component_match(pred: VqlQuery, gold: VqlQuery,
                    schema: DatabaseSchema) -> ComponentReport:
    """Per-part comparison on canonical forms.

    The join flag covers the whole data source (FROM table plus JOIN list),
    so the conjunction of all seven flags coincides with tree_match.
    Absent-vs-absent clauses count as matches.
    """
    p = canonicalize(pred, schema)
    g = canonicalize(gold, schema)
    return ComponentReport(
        vis_match=p.chart == g.chart,
        axis_match=(p.x, p.y_agg, p.y_col, p.color) == (g.x, g.y_agg, g.y_col, g.color),
        data_match=DataMatch(
            where=p.filters == g.filters,
            join=(p.from_table, p.joins) == (g.from_table, g.joins),
            group=p.group_by == g.group_by,
            binning=p.bin == g.bin,
            order=p.order == g.order,
        ),
    )
