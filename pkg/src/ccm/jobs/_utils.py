from __future__ import annotations

import functools
import pathlib
import sqlite3
from typing import Optional, cast

from ._enums import SqlOperation
from .const import JOBS_TABLE_COLUMNS
from .exceptions import JobBoardBroken

QUERIES_DIR = pathlib.Path(__file__).resolve().parent / "queries"


@functools.lru_cache(maxsize=None)
def _query_template(operation: SqlOperation) -> str:
    with open(QUERIES_DIR / f"{operation.value}.sql", "r", encoding="utf-8") as f:
        return f.read()


def board_queries(table_name: str) -> dict[SqlOperation, str]:
    """Every job board statement, bound to one table.

    Args:
        table_name (str): Table holding the board's jobs.

    Returns:
        dict[SqlOperation, str]: SQL text by operation.
    """
    return {operation: _query_template(operation).format(table_name=table_name) for operation in SqlOperation}


def board_exists(connection: sqlite3.Connection, table_name: str) -> bool:
    """Whether the jobs table is already there; raises `JobBoardBroken` if it has foreign columns."""
    rows = connection.execute(f"PRAGMA table_info('{table_name}')").fetchall()
    columns = cast(list[tuple[int, str, str, int, Optional[str], int]], rows)
    if not columns:
        return False
    found = [(name, kind.upper(), pk) for _, name, kind, _, _, pk in sorted(columns)]
    if found != JOBS_TABLE_COLUMNS:
        raise JobBoardBroken
    return True
