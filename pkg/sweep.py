"""
Worker threads for independent jobs (trajectories, grid columns, state chunks)
"""

import logging
import threading
from collections import deque
from threading import Lock
from typing import Any, Callable, Dict, List, Optional, Sequence

import config

logger = logging.getLogger(__name__)


class SweepQueue:
    """Job ids waiting to run; results and errors are kept by job id."""

    def __init__(self, jobs: Sequence[Callable[[], Any]]):
        self.jobs = list(jobs)
        self.pending: deque = deque(range(len(self.jobs)))
        self.results: Dict[int, Any] = {}
        self.errors: Dict[int, BaseException] = {}
        self.lock = Lock()

    def get_next_job(self) -> Optional[int]:
        with self.lock:
            if self.pending:
                return self.pending.popleft()
            return None

    def job_completed(self, job_id: int, result: Any):
        with self.lock:
            self.results[job_id] = result

    def job_failed(self, job_id: int, error: BaseException):
        with self.lock:
            self.errors[job_id] = error
            # stop handing out work once something failed
            self.pending.clear()


class SweepWorker(threading.Thread):
    def __init__(self, worker_id: int, queue: SweepQueue):
        super().__init__(daemon=True)
        self.worker_id = worker_id
        self.queue = queue

    def run(self):
        """Pull jobs until the queue is empty"""
        while True:
            job_id = self.queue.get_next_job()
            if job_id is None:
                return
            try:
                self.queue.job_completed(job_id, self.queue.jobs[job_id]())
            except Exception as exc:
                logger.debug("worker %d: job %d failed: %s", self.worker_id, job_id, exc)
                self.queue.job_failed(job_id, exc)


class SweepPool:
    def __init__(self, n_workers: Optional[int] = None):
        self.n_workers = max(1, n_workers or config.SWEEP_WORKERS)
        self.workers: List[SweepWorker] = []

    def run(self, queue: SweepQueue) -> List[Any]:
        """Run every job in the queue and return results in job order.

        The first failed job (lowest id) re-raises its exception.
        """
        count = min(self.n_workers, len(queue.jobs))
        self.workers = [SweepWorker(i, queue) for i in range(count)]
        for worker in self.workers:
            worker.start()
        for worker in self.workers:
            worker.join()
        if queue.errors:
            raise queue.errors[min(queue.errors)]
        return [queue.results[i] for i in range(len(queue.jobs))]


def run_jobs(jobs: Sequence[Callable[[], Any]], workers: Optional[int] = None) -> List[Any]:
    """Evaluate zero-argument callables concurrently, preserving order."""
    if not jobs:
        return []
    if (workers or config.SWEEP_WORKERS) <= 1 or len(jobs) == 1:
        return [job() for job in jobs]
    return SweepPool(workers).run(SweepQueue(jobs))
