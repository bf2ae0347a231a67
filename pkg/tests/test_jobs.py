import logging
import multiprocessing
import os
import sqlite3
import time

import pytest

from ccm.jobs import JobBoard, JobBoardBroken, JobStatus, SeedJobFailed, drain, run_seed_jobs
from ccm.jobs.const import WORKERS_NON_POSITIVE_ERROR_MSG


def square(seed: int, payload):
    return seed * seed + (payload or 0)


def slow_square(seed: int, payload):
    time.sleep(0.4)
    return seed * seed


def odd_fails(seed: int, payload):
    if seed % 2:
        raise RuntimeError(f"seed {seed} diverged")
    return seed


@pytest.fixture
def board_path(temp_dir):
    return os.path.join(temp_dir, "jobs.sqlite")


def test_claim_in_seed_order(board_path):
    board = JobBoard(board_path)
    for seed in (3, 1, 2):
        board.post(seed, {"seed": seed})
    assert board.open_count() == 3
    job = board.claim()
    assert job.seed == 1
    assert job.payload == {"seed": 1}
    assert board.claim().seed == 2
    assert board.open_count() == 3


def test_claim_on_empty_board(board_path):
    assert JobBoard(board_path).claim() is None


def test_complete_and_fail(board_path):
    board = JobBoard(board_path)
    board.post(0)
    board.post(1)
    first, second = board.claim(), board.claim()
    board.complete(first.id, [1.5, 2.5])
    board.fail(second.id, "boom")
    results = board.results()
    assert [(r.seed, r.status) for r in results] == [(0, JobStatus.done), (1, JobStatus.failed)]
    assert results[0].result == [1.5, 2.5]
    assert results[1].error == "boom"
    assert board.open_count() == 0


def test_boards_share_a_file(board_path):
    a = JobBoard(board_path, "a")
    b = JobBoard(board_path, "b")
    a.post(0)
    assert a.table_name == "ccm_jobs_a"
    assert b.open_count() == 0
    a.delete()
    assert JobBoard(board_path, "a").open_count() == 0


def test_foreign_table_is_rejected(board_path):
    with sqlite3.connect(board_path) as connection:
        connection.execute('CREATE TABLE "ccm_jobs_default" (id INTEGER PRIMARY KEY, message TEXT)')
    with pytest.raises(JobBoardBroken):
        JobBoard(board_path)


def test_wait(board_path):
    board = JobBoard(board_path)
    assert board.wait(timeout=0.1)
    board.post(0)
    assert not board.wait(timeout=0.2)


def test_wait_wakes_when_another_process_drains(board_path):
    board = JobBoard(board_path)
    board.post(0)
    board.post(1)
    worker = multiprocessing.Process(target=drain, args=(board_path, "default", slow_square))
    worker.start()
    try:
        assert board.wait(timeout=30)
    finally:
        worker.join()
    assert [r.result for r in board.results()] == [0, 1]


def test_drain_runs_every_job(board_path):
    board = JobBoard(board_path)
    for seed in range(3):
        board.post(seed, 10)
    assert drain(board_path, "default", square) == 3
    assert [r.result for r in board.results()] == [10, 11, 14]


def test_run_seed_jobs_inline(board_path):
    assert run_seed_jobs(square, [2, 0, 1], board_path) == {0: 0, 1: 1, 2: 4}


def test_run_seed_jobs_reports_failures(board_path):
    with pytest.raises(SeedJobFailed) as excinfo:
        run_seed_jobs(odd_fails, [0, 1, 2, 3], board_path)
    assert sorted(excinfo.value.failures) == [1, 3]
    assert "diverged" in excinfo.value.failures[1]
    done = [r.seed for r in JobBoard(board_path).results() if r.status is JobStatus.done]
    assert done == [0, 2]


def test_run_seed_jobs_in_processes(board_path):
    assert run_seed_jobs(square, [0, 1, 2, 3], board_path, payload=1, workers=2) == {0: 1, 1: 2, 2: 5, 3: 10}


def test_run_seed_jobs_logs_progress_while_workers_run(board_path, caplog):
    with caplog.at_level(logging.INFO, logger="ccm.jobs"):
        results = run_seed_jobs(slow_square, [0, 1, 2, 3], board_path, workers=2, progress_interval=0.05)
    assert results == {0: 0, 1: 1, 2: 4, 3: 9}
    assert any("seed jobs still open" in message for message in caplog.messages)


def test_workers_must_be_positive(board_path):
    with pytest.raises(ValueError, match=WORKERS_NON_POSITIVE_ERROR_MSG):
        run_seed_jobs(square, [0], board_path, workers=0)
