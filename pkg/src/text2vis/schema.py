"""Database schema model: tables, columns, types, and foreign keys.

Identifiers are English/ASCII; the schema is the target space for
pointer-copy decoding and for resolving VQL column references.
"""

from __future__ import annotations

from dataclasses import dataclass, field

__all__ = ["ColumnDef", "TableDef", "DatabaseSchema", "ValidationError", "ResolutionError"]


class ValidationError(ValueError):
    """Schema file violates a structural invariant."""

    def __init__(self, db_id: str, path: str, message: str) -> None:
        self.db_id = db_id
        self.path = path
        super().__init__(f"{db_id}: {path}: {message}")


class ResolutionError(ValueError):
    """A column reference matched zero or multiple schema columns."""


@dataclass(frozen=True)
class ColumnDef:
    name: str
    dtype: str  # TEXT | NUMBER | TIME


@dataclass(frozen=True)
class TableDef:
    name: str
    columns: tuple[ColumnDef, ...]
    primary_key: str | None = None
    foreign_keys: tuple[tuple[str, str, str], ...] = ()  # (local col, foreign table, foreign col)

    def column(self, name: str) -> ColumnDef | None:
        low = name.lower()
        for c in self.columns:
            if c.name.lower() == low:
                return c
        return None


@dataclass(frozen=True)
class DatabaseSchema:
    db_id: str
    tables: tuple[TableDef, ...]

    def table(self, name: str) -> TableDef | None:
        low = name.lower()
        for t in self.tables:
            if t.name.lower() == low:
                return t
        return None

    def validate(self) -> None:
        seen_tables: set[str] = set()
        for t in self.tables:
            tl = t.name.lower()
            if tl in seen_tables:
                raise ValidationError(self.db_id, f"tables.{t.name}", "duplicate table name")
            seen_tables.add(tl)
            seen_cols: set[str] = set()
            for c in t.columns:
                cl = c.name.lower()
                if cl in seen_cols:
                    raise ValidationError(
                        self.db_id, f"tables.{t.name}.columns.{c.name}", "duplicate column name")
                if c.dtype not in ("TEXT", "NUMBER", "TIME"):
                    raise ValidationError(
                        self.db_id, f"tables.{t.name}.columns.{c.name}",
                        f"unknown column type {c.dtype!r}")
                seen_cols.add(cl)
            if t.primary_key is not None and t.column(t.primary_key) is None:
                raise ValidationError(
                    self.db_id, f"tables.{t.name}.primary_key",
                    f"unknown column {t.primary_key!r}")
        for t in self.tables:
            for local, ftable, fcol in t.foreign_keys:
                if t.column(local) is None:
                    raise ValidationError(
                        self.db_id, f"tables.{t.name}.foreign_keys",
                        f"unknown local column {local!r}")
                target = self.table(ftable)
                if target is None:
                    raise ValidationError(
                        self.db_id, f"tables.{t.name}.foreign_keys",
                        f"unknown foreign table {ftable!r}")
                if target.column(fcol) is None:
                    raise ValidationError(
                        self.db_id, f"tables.{t.name}.foreign_keys",
                        f"unknown foreign column {ftable}.{fcol}")

    def to_json(self) -> dict:
        return {
            "db_id": self.db_id,
            "tables": [
                {
                    "name": t.name,
                    "columns": [{"name": c.name, "type": c.dtype.lower()} for c in t.columns],
                    "primary_key": t.primary_key,
                    "foreign_keys": [list(fk) for fk in t.foreign_keys],
                }
                for t in self.tables
            ],
        }
