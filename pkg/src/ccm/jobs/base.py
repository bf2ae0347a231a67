from __future__ import annotations

import contextlib
import sqlite3
from abc import ABCMeta
from pathlib import Path
from typing import Any, Iterator, Union

from ._enums import SqlOperation
from ._utils import board_exists, board_queries

FilePath = Union[str, Path]

__all__ = ("BaseJobBoard",)


class BaseJobBoard(metaclass=ABCMeta):
    """SQLite plumbing of a job board: one table per board, any number of boards per file.

    Connections are opened per operation, so a board object is cheap to rebuild in each worker process.
    """

    namespace_prefix: str = "ccm_jobs"

    def __init__(self, file_path: FilePath, board_name: str = "default", **connection_kwargs: Any) -> None:
        self.file_path = file_path
        self._board_name = board_name
        self._table_name = f"{self.namespace_prefix}_{board_name}"
        connection_kwargs.pop("database", None)
        self._connection_kwargs = connection_kwargs
        self._queries = board_queries(self._table_name)
        with self._transaction() as connection:
            if not board_exists(connection, self._table_name):
                connection.execute(self._queries[SqlOperation.create_jobs_table])

    @property
    def board_name(self) -> str:
        return self._board_name

    @property
    def table_name(self) -> str:
        return self._table_name

    @contextlib.contextmanager
    def _read(self) -> Iterator[sqlite3.Connection]:
        with contextlib.closing(sqlite3.connect(self.file_path, **self._connection_kwargs)) as connection:
            yield connection

    @contextlib.contextmanager
    def _transaction(self) -> Iterator[sqlite3.Connection]:
        """Write lock for the whole block; committed on success, rolled back on any error."""
        with self._read() as connection:
            connection.execute("BEGIN IMMEDIATE")
            try:
                yield connection
            except BaseException:
                connection.rollback()
                raise
            connection.commit()

    def delete(self) -> None:
        with self._transaction() as connection:
            connection.execute(f'DROP TABLE IF EXISTS "{self._table_name}"')

    def __hash__(self) -> int:
        return hash((str(self.file_path), self._table_name))
