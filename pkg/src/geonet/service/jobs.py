"""In-process job registry for long-running sweeps."""
from __future__ import annotations

import threading
import traceback
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Optional


@dataclass
class Job:
    job_id: str
    status: str = "pending"  # pending | running | done | error
    result: Any = None
    error: Optional[str] = None
    _done: threading.Event = field(default_factory=threading.Event)

    def wait(self, timeout: Optional[float] = None) -> bool:
        return self._done.wait(timeout)


class JobRegistry:
    def __init__(self, max_workers: int = 2):
        self._jobs: dict[str, Job] = {}
        self._lock = threading.Lock()
        self._pool = ThreadPoolExecutor(max_workers=max_workers, thread_name_prefix="geonet-job")

    def submit(self, fn: Callable[[], Any]) -> Job:
        job = Job(job_id=uuid.uuid4().hex)
        with self._lock:
            self._jobs[job.job_id] = job

        def runner():
            job.status = "running"
            try:
                job.result = fn()
                job.status = "done"
            except Exception as exc:  # surfaced through the job status
                job.error = f"{type(exc).__name__}: {exc}"
                job.status = "error"
                traceback.print_exc()
            finally:
                job._done.set()

        self._pool.submit(runner)
        return job

    def get(self, job_id: str) -> Optional[Job]:
        with self._lock:
            return self._jobs.get(job_id)

    def shutdown(self) -> None:
        self._pool.shutdown(wait=False, cancel_futures=True)
