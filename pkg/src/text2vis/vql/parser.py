"""Tokenizer, recursive-descent parser, and canonical unparser for VQL.

Grammar (keywords case-insensitive, identifiers ``[A-Za-z_][A-Za-z0-9_]*``,
strings single-quoted with ``''`` escaping, numbers decimal):

    query   := "Visualize" chart "SELECT" channel "," channel
               ["," "COLOR" colref] "FROM" ident join* [where] [group]
               [bin] [order]
    chart   := "BAR"|"PIE"|"LINE"|"SCATTER"|"STACKED BAR"|"GROUPED LINE"
               |"GROUPED SCATTER"
    channel := colref | agg "(" (colref|"*") ")"
    agg     := "COUNT"|"SUM"|"AVG"|"MIN"|"MAX"
    join    := "JOIN" ident "ON" colref "=" colref
    where   := "WHERE" pred ("AND" pred)*
    pred    := colref op literal
             | colref "BETWEEN" literal "AND" literal
             | colref "IN" "(" literal ("," literal)* ")"
             | colref "LIKE" string
    group   := "GROUP" "BY" colref ("," colref)*
    bin     := "BIN" colref "BY" ("YEAR"|"MONTH"|"WEEKDAY"|"DAY"
               |"INTERVAL" number)
    order   := "ORDER" "BY" ("X"|"Y") ("ASC"|"DESC")
    colref  := [ident "."] ident
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .ast import (
    AggFn,
    BinSpec,
    BinUnit,
    ChartType,
    ColumnRef,
    Join,
    OrderSpec,
    Predicate,
    SemanticError,
    VqlQuery,
)

__all__ = ["VqlSyntaxError", "Token", "tokenize", "parse_vql", "unparse_vql"]


KEYWORDS = {
    "VISUALIZE", "SELECT", "COLOR", "FROM", "JOIN", "ON", "WHERE", "AND",
    "GROUP", "BY", "BIN", "ORDER", "ASC", "DESC",
    "BAR", "PIE", "LINE", "SCATTER", "STACKED", "GROUPED",
    "COUNT", "SUM", "AVG", "MIN", "MAX",
    "BETWEEN", "IN", "LIKE",
    "YEAR", "MONTH", "WEEKDAY", "DAY", "INTERVAL",
}

AGG_KEYWORDS = {"COUNT": AggFn.COUNT, "SUM": AggFn.SUM, "AVG": AggFn.AVG,
                "MIN": AggFn.MIN, "MAX": AggFn.MAX}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>-?\d+(?:\.\d+)?)
  | (?P<string>'(?:[^']|'')*')
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct><=|>=|!=|[=<>(),.*])
    """,
    re.VERBOSE,
)


class VqlSyntaxError(ValueError):
    """Malformed VQL text. Carries the byte offset and the expected token set."""

    def __init__(self, position: int, expected: set[str], found: str) -> None:
        self.position = position
        self.expected = frozenset(expected)
        self.found = found
        exp = ", ".join(sorted(expected))
        super().__init__(f"at position {position}: expected {exp}, found {found!r}")


@dataclass(frozen=True)
class Token:
    kind: str  # KEYWORD | IDENT | NUMBER | STRING | PUNCT | EOF
    value: str
    pos: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise VqlSyntaxError(pos, {"token"}, text[pos])
        pos = m.end()
        if m.lastgroup == "ws":
            continue
        value = m.group()
        if m.lastgroup == "ident":
            upper = value.upper()
            if upper in KEYWORDS:
                tokens.append(Token("KEYWORD", upper, m.start()))
            else:
                tokens.append(Token("IDENT", value, m.start()))
        elif m.lastgroup == "number":
            tokens.append(Token("NUMBER", value, m.start()))
        elif m.lastgroup == "string":
            tokens.append(Token("STRING", value, m.start()))
        else:
            tokens.append(Token("PUNCT", value, m.start()))
    tokens.append(Token("EOF", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]) -> None:
        self.tokens = tokens
        self.i = 0

    @property
    def cur(self) -> Token:
        return self.tokens[self.i]

    def error(self, *expected: str) -> VqlSyntaxError:
        tok = self.cur
        found = tok.value if tok.kind != "EOF" else "end of input"
        return VqlSyntaxError(tok.pos, set(expected), found)

    def advance(self) -> Token:
        tok = self.cur
        self.i += 1
        return tok

    def accept_kw(self, *kws: str) -> str | None:
        if self.cur.kind == "KEYWORD" and self.cur.value in kws:
            return self.advance().value
        return None

    def expect_kw(self, *kws: str) -> str:
        got = self.accept_kw(*kws)
        if got is None:
            raise self.error(*kws)
        return got

    def expect_punct(self, punct: str) -> None:
        if self.cur.kind == "PUNCT" and self.cur.value == punct:
            self.advance()
            return
        raise self.error(f"'{punct}'")

    def accept_punct(self, punct: str) -> bool:
        if self.cur.kind == "PUNCT" and self.cur.value == punct:
            self.advance()
            return True
        return False

    def expect_ident(self) -> str:
        if self.cur.kind == "IDENT":
            return self.advance().value
        raise self.error("identifier")

    # grammar productions -------------------------------------------------

    def query(self) -> VqlQuery:
        self.expect_kw("VISUALIZE")
        chart = self.chart()
        self.expect_kw("SELECT")
        x_agg, x_col = self.channel()
        if x_agg is not AggFn.NONE:
            raise SemanticError("x channel must be a plain column, not an aggregate")
        if x_col is None:
            raise SemanticError("x channel may not be *")
        self.expect_punct(",")
        y_agg, y_col = self.channel()
        color: ColumnRef | None = None
        if self.accept_punct(","):
            self.expect_kw("COLOR")
            color = self.colref()
        self.expect_kw("FROM")
        from_table = self.expect_ident()
        joins: list[Join] = []
        while self.accept_kw("JOIN"):
            table = self.expect_ident()
            self.expect_kw("ON")
            left = self.colref()
            self.expect_punct("=")
            right = self.colref()
            joins.append(Join(table, left, right))
        filters: list[Predicate] = []
        if self.accept_kw("WHERE"):
            filters.append(self.pred())
            while self.accept_kw("AND"):
                filters.append(self.pred())
        group_by: list[ColumnRef] = []
        if self.accept_kw("GROUP"):
            self.expect_kw("BY")
            group_by.append(self.colref())
            while self.accept_punct(","):
                group_by.append(self.colref())
        bin_spec: BinSpec | None = None
        if self.accept_kw("BIN"):
            bin_col = self.colref()
            self.expect_kw("BY")
            unit_kw = self.expect_kw("YEAR", "MONTH", "WEEKDAY", "DAY", "INTERVAL")
            if unit_kw == "INTERVAL":
                width = self.number()
                bin_spec = BinSpec(bin_col, BinUnit.INTERVAL, width)
            else:
                bin_spec = BinSpec(bin_col, BinUnit[unit_kw])
        order: OrderSpec | None = None
        if self.accept_kw("ORDER"):
            self.expect_kw("BY")
            if self.cur.kind == "IDENT" and self.cur.value.upper() in ("X", "Y"):
                target = self.advance().value.upper()
            else:
                raise self.error("X", "Y")
            direction = self.expect_kw("ASC", "DESC")
            order = OrderSpec(target, direction)
        if self.cur.kind != "EOF":
            raise self.error("end of input")
        return VqlQuery(
            chart=chart, x=x_col, y_agg=y_agg, y_col=y_col, color=color,
            from_table=from_table, joins=tuple(joins), filters=tuple(filters),
            group_by=tuple(group_by), bin=bin_spec, order=order,
        )

    def chart(self) -> ChartType:
        kw = self.expect_kw("BAR", "PIE", "LINE", "SCATTER", "STACKED", "GROUPED")
        if kw == "STACKED":
            self.expect_kw("BAR")
            return ChartType.STACKED_BAR
        if kw == "GROUPED":
            second = self.expect_kw("LINE", "SCATTER")
            return ChartType.GROUPED_LINE if second == "LINE" else ChartType.GROUPED_SCATTER
        return ChartType[kw]

    def channel(self) -> tuple[AggFn, ColumnRef | None]:
        if self.cur.kind == "KEYWORD" and self.cur.value in AGG_KEYWORDS:
            agg = AGG_KEYWORDS[self.advance().value]
            self.expect_punct("(")
            if self.accept_punct("*"):
                col: ColumnRef | None = None
                if agg is not AggFn.COUNT:
                    raise SemanticError("* is only valid inside COUNT()")
            else:
                col = self.colref()
            self.expect_punct(")")
            return agg, col
        return AggFn.NONE, self.colref()

    def colref(self) -> ColumnRef:
        first = self.expect_ident()
        if self.accept_punct("."):
            return ColumnRef(self.expect_ident(), first)
        return ColumnRef(first)

    def pred(self) -> Predicate:
        col = self.colref()
        if self.accept_kw("BETWEEN"):
            lo = self.literal()
            self.expect_kw("AND")
            hi = self.literal()
            return Predicate(col, "BETWEEN", (lo, hi))
        if self.accept_kw("IN"):
            self.expect_punct("(")
            items = [self.literal()]
            while self.accept_punct(","):
                items.append(self.literal())
            self.expect_punct(")")
            return Predicate(col, "IN", tuple(items))
        if self.accept_kw("LIKE"):
            if self.cur.kind != "STRING":
                raise self.error("string")
            return Predicate(col, "LIKE", (self.string(),))
        if self.cur.kind == "PUNCT" and self.cur.value in ("=", "!=", "<", "<=", ">", ">="):
            op = self.advance().value
            return Predicate(col, op, (self.literal(),))
        raise self.error("=", "!=", "<", "<=", ">", ">=", "BETWEEN", "IN", "LIKE")

    def literal(self) -> str | float | int:
        if self.cur.kind == "NUMBER":
            return self.number()
        if self.cur.kind == "STRING":
            return self.string()
        raise self.error("number", "string")

    def number(self) -> float | int:
        if self.cur.kind != "NUMBER":
            raise self.error("number")
        raw = self.advance().value
        return float(raw) if "." in raw else int(raw)

    def string(self) -> str:
        raw = self.advance().value
        return raw[1:-1].replace("''", "'")


def parse_vql(text: str) -> VqlQuery:
    """Parse VQL text into its unique AST.

    Raises VqlSyntaxError on malformed input and SemanticError when the
    parse is grammatical but violates a VQL invariant.
    """
    return _Parser(tokenize(text)).query()


def _fmt_literal(lit: str | float | int) -> str:
    if isinstance(lit, str):
        return "'" + lit.replace("'", "''") + "'"
    return _fmt_number(lit)


def _fmt_number(n: float | int) -> str:
    # int and float spellings are kept distinct so unparse round-trips.
    return str(n) if isinstance(n, int) else repr(n)


def _fmt_channel(agg: AggFn, col: ColumnRef | None) -> str:
    inner = "*" if col is None else str(col)
    if agg is AggFn.NONE:
        return inner
    return f"{agg.value}({inner})"


def unparse_vql(q: VqlQuery) -> str:
    """Emit the canonical surface string: uppercase keywords, single spaces,
    clauses in the fixed order Visualize/SELECT/FROM/JOIN/WHERE/GROUP BY/
    BIN/ORDER BY."""
    parts = ["Visualize", q.chart.value, "SELECT", str(q.x), ",",
             _fmt_channel(q.y_agg, q.y_col)]
    if q.color is not None:
        parts += [",", "COLOR", str(q.color)]
    parts += ["FROM", q.from_table]
    for j in q.joins:
        parts += ["JOIN", j.table, "ON", str(j.left), "=", str(j.right)]
    if q.filters:
        parts.append("WHERE")
        conjuncts = []
        for p in q.filters:
            if p.op == "BETWEEN":
                conjuncts.append(
                    f"{p.column} BETWEEN {_fmt_literal(p.operands[0])} AND "
                    f"{_fmt_literal(p.operands[1])}")
            elif p.op == "IN":
                items = " , ".join(_fmt_literal(o) for o in p.operands)
                conjuncts.append(f"{p.column} IN ( {items} )")
            else:
                conjuncts.append(f"{p.column} {p.op} {_fmt_literal(p.operands[0])}")
        parts.append(" AND ".join(conjuncts))
    if q.group_by:
        parts += ["GROUP BY", " , ".join(str(c) for c in q.group_by)]
    if q.bin is not None:
        unit = q.bin.unit.value
        if q.bin.unit is BinUnit.INTERVAL:
            unit = f"INTERVAL {_fmt_number(q.bin.interval)}"
        parts += ["BIN", str(q.bin.column), "BY", unit]
    if q.order is not None:
        parts += ["ORDER BY", q.order.target, q.order.direction]
    return " ".join(parts)
