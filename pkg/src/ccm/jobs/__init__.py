"""Seed-level job board: one SQLite file shared by every worker process of a run."""

from __future__ import annotations

import logging
import multiprocessing
import pickle
import threading
import time
import traceback
from typing import Any, Callable, NamedTuple, Optional, Sequence, cast

from watchfiles import watch

from ._enums import JobStatus, SqlOperation
from .base import BaseJobBoard, FilePath
from .const import PROGRESS_INTERVAL_SECONDS, WATCH_POLL_MS, WATCHFILES_KWARGS, WORKERS_NON_POSITIVE_ERROR_MSG
from .exceptions import JobBoardBroken, SeedJobFailed

logger = logging.getLogger(__name__)

__all__ = ("Job", "JobBoard", "JobBoardBroken", "JobResult", "JobStatus", "SeedJobFailed", "drain", "run_seed_jobs")

JobFunction = Callable[[int, Any], Any]


class Job(NamedTuple):
    id: int
    seed: int
    payload: Any


OPEN_STATUSES = (JobStatus.pending, JobStatus.running)


class JobResult(NamedTuple):
    seed: int
    status: JobStatus
    result: Any
    error: Optional[str]


class JobBoard(BaseJobBoard):
    """Persistent list of seed jobs that worker processes claim one at a time."""

    def post(self, seed: int, payload: Any = None) -> None:
        with self._transaction() as connection:
            connection.execute(self._queries[SqlOperation.insert_job], (int(seed), pickle.dumps(payload)))

    def claim(self) -> Optional[Job]:
        """Take the pending job with the lowest seed, or None when nothing is pending."""
        with self._transaction() as connection:
            row = connection.execute(self._queries[SqlOperation.fetch_pending_job]).fetchone()
            row = cast(Optional[tuple[int, int, bytes]], row)
            if row is None:
                return None
            job_id, seed, payload = row
            updated = connection.execute(self._queries[SqlOperation.mark_running], (job_id,)).rowcount
            if updated != 1:
                raise JobBoardBroken
            return Job(id=job_id, seed=seed, payload=pickle.loads(payload))

    def complete(self, job_id: int, result: Any) -> None:
        with self._transaction() as connection:
            connection.execute(self._queries[SqlOperation.complete_job], (pickle.dumps(result), job_id))

    def fail(self, job_id: int, error: str) -> None:
        with self._transaction() as connection:
            connection.execute(self._queries[SqlOperation.fail_job], (error, job_id))

    def open_count(self) -> int:
        with self._read() as connection:
            row = connection.execute(self._queries[SqlOperation.count_open_jobs]).fetchone()
        row = cast(Optional[tuple[int]], row)
        if row is None:
            raise JobBoardBroken
        return int(row[0])

    def results(self) -> list[JobResult]:
        with self._read() as connection:
            rows = connection.execute(self._queries[SqlOperation.fetch_jobs]).fetchall()
        rows = cast(list[tuple[int, str, Optional[bytes], Optional[str]]], rows)
        return [
            JobResult(seed=seed, status=JobStatus(status), result=pickle.loads(result) if result is not None else None, error=error)
            for seed, status, result, error in rows
        ]

    def wait(self, timeout: Optional[float] = None) -> bool:
        """Block until no job is pending or running; False if `timeout` seconds pass first."""
        if not self.open_count():
            return True
        stop_event = threading.Event()
        if timeout:
            timer = threading.Timer(timeout, stop_event.set)
            timer.daemon = True
            timer.start()
        rust_timeout = min(WATCH_POLL_MS, max(1, int(timeout * 1000))) if timeout else WATCH_POLL_MS
        for _ in watch(self.file_path, stop_event=stop_event, rust_timeout=rust_timeout, yield_on_timeout=True, **WATCHFILES_KWARGS):
            if not self.open_count():
                return True
        return not self.open_count()

    def __repr__(self) -> str:
        return f"JobBoard<(file_path='{self.file_path}', board_name='{self._board_name}')>"


def drain(file_path: FilePath, board_name: str, fn: JobFunction) -> int:
    """Run jobs from the board until none is pending; returns how many this worker ran."""
    board = JobBoard(file_path, board_name)
    done = 0
    while (job := board.claim()) is not None:
        started = time.monotonic()
        try:
            result = fn(job.seed, job.payload)
        except Exception as e:
            logger.error(f"Seed {job.seed} failed: {e}")
            board.fail(job.id, f"{type(e).__name__}: {e}\n{traceback.format_exc()}")
        else:
            board.complete(job.id, result)
            logger.info(f"Seed {job.seed} finished in {time.monotonic() - started:.1f}s")
        done += 1
    return done


def run_seed_jobs(
    fn: JobFunction,
    seeds: Sequence[int],
    file_path: FilePath,
    payload: Any = None,
    workers: int = 1,
    board_name: str = "default",
    progress_interval: float = PROGRESS_INTERVAL_SECONDS,
) -> dict[int, Any]:
    """Post one job per seed and drain the board with `workers` processes (inline for one worker).

    While worker processes run, the board file is watched and the number of open jobs is logged
    every `progress_interval` seconds.

    Args:
        fn (JobFunction): Top-level function `fn(seed, payload)`; must be picklable for several workers.
        seeds (Sequence[int]): Seeds to run.
        file_path (FilePath): SQLite file backing the board.
        payload (Any): Shared argument handed to every job.
        workers (int): Number of worker processes. Defaults to 1.
        board_name (str): Table suffix, so several boards can share one file.
        progress_interval (float): Seconds between progress lines. Defaults to 30.

    Returns:
        dict[int, Any]: Results by seed, in seed order.

    Raises:
        SeedJobFailed: If any job failed. Results of the completed seeds are attached to the
            board and stay readable through `JobBoard.results`.
    """
    if workers < 1:
        raise ValueError(WORKERS_NON_POSITIVE_ERROR_MSG)
    board = JobBoard(file_path, board_name)
    for seed in sorted(seeds):
        board.post(seed, payload)
    if workers == 1:
        drain(file_path, board_name, fn)
    else:
        processes = [multiprocessing.Process(target=drain, args=(file_path, board_name, fn)) for _ in range(min(workers, len(seeds)))]
        for process in processes:
            process.start()
        while any(process.is_alive() for process in processes):
            if board.wait(timeout=progress_interval):
                break
            logger.info(f"{board.open_count()} of {len(seeds)} seed jobs still open")
        for process in processes:
            process.join()
            if process.exitcode:
                logger.error(f"Worker {process.pid} exited with code {process.exitcode}")
    results = board.results()
    failures = {job.seed: job.error or "" for job in results if job.status is JobStatus.failed}
    failures.update({job.seed: "worker exited before finishing" for job in results if job.status in OPEN_STATUSES})
    if failures:
        raise SeedJobFailed(failures)
    return {job.seed: job.result for job in results if job.status is JobStatus.done}
