from typing import Any

WATCHFILES_KWARGS: dict[str, Any] = {"debounce": 10, "step": 10, "force_polling": True, "poll_delay_ms": 5}

WATCH_POLL_MS = 500

PROGRESS_INTERVAL_SECONDS = 30.0

JOBS_TABLE_COLUMNS: list[tuple[str, str, int]] = [
    ("id", "INTEGER", 1),
    ("seed", "INTEGER", 0),
    ("status", "TEXT", 0),
    ("payload", "BLOB", 0),
    ("result", "BLOB", 0),
    ("error", "TEXT", 0),
]

JOB_BOARD_BROKEN_ERROR_MSG = "Job board file is modified or corrupted."

WORKERS_NON_POSITIVE_ERROR_MSG = "'workers' must be a positive integer"
