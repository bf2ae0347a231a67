from enum import Enum


class SqlOperation(str, Enum):
    """
    Names of the SQL operations used by the job board.
    """

    create_jobs_table = "create_jobs_table"
    insert_job = "insert_job"
    fetch_pending_job = "fetch_pending_job"
    mark_running = "mark_running"
    complete_job = "complete_job"
    fail_job = "fail_job"
    count_open_jobs = "count_open_jobs"
    fetch_jobs = "fetch_jobs"


class JobStatus(str, Enum):
    pending = "pending"
    running = "running"
    done = "done"
    failed = "failed"
