"""VQL abstract syntax tree: the central intermediate representation.

A VQL statement names a chart type, an x channel, an aggregated y channel,
an optional color channel, and SQL-like data clauses (joins, filters,
grouping, binning, ordering). All nodes are immutable values.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

__all__ = [
    "AggFn",
    "BinSpec",
    "BinUnit",
    "ChartType",
    "ColumnRef",
    "ComponentReport",
    "Join",
    "OrderSpec",
    "Predicate",
    "SemanticError",
    "VqlQuery",
    "GROUPED_CHARTS",
]


class ChartType(enum.Enum):
    BAR = "BAR"
    PIE = "PIE"
    LINE = "LINE"
    SCATTER = "SCATTER"
    STACKED_BAR = "STACKED BAR"
    GROUPED_LINE = "GROUPED LINE"
    GROUPED_SCATTER = "GROUPED SCATTER"


#: Chart types that require (and are the only ones allowed) a color channel.
GROUPED_CHARTS = frozenset(
    {ChartType.STACKED_BAR, ChartType.GROUPED_LINE, ChartType.GROUPED_SCATTER}
)


class AggFn(enum.Enum):
    NONE = "NONE"
    COUNT = "COUNT"
    SUM = "SUM"
    AVG = "AVG"
    MIN = "MIN"
    MAX = "MAX"


class BinUnit(enum.Enum):
    YEAR = "YEAR"
    MONTH = "MONTH"
    WEEKDAY = "WEEKDAY"
    DAY = "DAY"
    INTERVAL = "INTERVAL"


class SemanticError(ValueError):
    """A structurally well-formed query that violates a VQL invariant."""


@dataclass(frozen=True)
class ColumnRef:
    """A possibly table-qualified column reference. Identifiers are ASCII;
    comparisons are case-insensitive (canonical form lower-cases them)."""

    column: str
    table: str | None = None

    def __post_init__(self) -> None:
        if not self.column:
            raise SemanticError("empty column name")
        if self.table == "":
            raise SemanticError("empty table name")

    def lowered(self) -> "ColumnRef":
        return ColumnRef(self.column.lower(), self.table.lower() if self.table else None)

    def __str__(self) -> str:
        return f"{self.table}.{self.column}" if self.table else self.column


Literal = str | float | int


@dataclass(frozen=True)
class Predicate:
    """One WHERE conjunct: <column> <op> <operands>."""

    column: ColumnRef
    op: str  # =, !=, <, <=, >, >=, LIKE, BETWEEN, IN
    operands: tuple[Literal, ...]

    _ARITY = {"=": 1, "!=": 1, "<": 1, "<=": 1, ">": 1, ">=": 1, "LIKE": 1, "BETWEEN": 2}

    def __post_init__(self) -> None:
        if self.op == "IN":
            if len(self.operands) < 1:
                raise SemanticError("IN requires at least one operand")
        elif self.op in self._ARITY:
            if len(self.operands) != self._ARITY[self.op]:
                raise SemanticError(f"{self.op} requires {self._ARITY[self.op]} operand(s)")
        else:
            raise SemanticError(f"unknown predicate operator {self.op!r}")
        if self.op == "LIKE" and not isinstance(self.operands[0], str):
            raise SemanticError("LIKE requires a string operand")
        if self.op == "BETWEEN":
            lo, hi = self.operands
            if isinstance(lo, (int, float)) and isinstance(hi, (int, float)) and lo > hi:
                raise SemanticError("BETWEEN bounds out of order")


@dataclass(frozen=True)
class BinSpec:
    column: ColumnRef
    unit: BinUnit
    interval: float | None = None  # only for INTERVAL

    def __post_init__(self) -> None:
        if self.unit is BinUnit.INTERVAL:
            if self.interval is None or self.interval <= 0:
                raise SemanticError("INTERVAL bin width must be positive")
        elif self.interval is not None:
            raise SemanticError(f"{self.unit.value} bin takes no width")


@dataclass(frozen=True)
class OrderSpec:
    target: str  # "X" or "Y" (the query's axis channel, never a column)
    direction: str  # "ASC" or "DESC"

    def __post_init__(self) -> None:
        if self.target not in ("X", "Y"):
            raise SemanticError("ORDER BY target must be X or Y")
        if self.direction not in ("ASC", "DESC"):
            raise SemanticError("order direction must be ASC or DESC")


@dataclass(frozen=True)
class Join:
    table: str
    left: ColumnRef
    right: ColumnRef


@dataclass(frozen=True)
class VqlQuery:
    chart: ChartType
    x: ColumnRef
    y_agg: AggFn
    y_col: ColumnRef | None  # None means COUNT(*)
    from_table: str
    color: ColumnRef | None = None
    joins: tuple[Join, ...] = ()
    filters: tuple[Predicate, ...] = ()  # implicit AND
    group_by: tuple[ColumnRef, ...] = ()
    bin: BinSpec | None = None
    order: OrderSpec | None = None

    def __post_init__(self) -> None:
        if self.y_col is None and self.y_agg is not AggFn.COUNT:
            raise SemanticError("* is only valid inside COUNT()")
        needs_color = self.chart in GROUPED_CHARTS
        if needs_color and self.color is None:
            raise SemanticError(f"{self.chart.value} requires a color channel")
        if not needs_color and self.color is not None:
            raise SemanticError(f"{self.chart.value} does not take a color channel")
        if self.group_by:
            if self.y_agg is AggFn.NONE:
                raise SemanticError("GROUP BY requires an aggregated y channel")
            keys = {c.lowered() for c in self.group_by}
            if self.x.lowered() not in keys:
                raise SemanticError("GROUP BY must include the x channel column")
            if self.color is not None and self.color.lowered() not in keys:
                raise SemanticError("GROUP BY must include the color channel column")
        if self.bin is not None and self.group_by:
            binned = self.bin.column.lowered()
            if any(c.lowered() == binned for c in self.group_by):
                raise SemanticError("BIN and GROUP BY may not target the same column")

    def with_(self, **changes) -> "VqlQuery":
        return replace(self, **changes)


@dataclass(frozen=True)
class DataMatch:
    where: bool
    join: bool
    group: bool
    binning: bool
    order: bool

    def all(self) -> bool:
        return self.where and self.join and self.group and self.binning and self.order


@dataclass(frozen=True)
class ComponentReport:
    """Per-part comparison of a predicted query against a gold query."""

    vis_match: bool
    axis_match: bool
    data_match: DataMatch

    def all(self) -> bool:
        return self.vis_match and self.axis_match and self.data_match.all()
