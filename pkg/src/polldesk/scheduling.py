"""Delayed and periodic task execution on a bounded thread pool."""

from __future__ import annotations

import heapq
import itertools
import logging
import threading
import time
from concurrent.futures import Future, ThreadPoolExecutor
from typing import Callable

logger = logging.getLogger(__name__)


class ScheduledTask:
    def __init__(self, fn: Callable[[], object], when: float, period: float | None) -> None:
        self.fn = fn
        self.when = when
        self.period = period
        self.cancelled = False

    def cancel(self) -> None:
        self.cancelled = True


class Scheduler:
    """One timer thread feeding a pool of ``pool_size`` executor threads."""

    def __init__(self, pool_size: int = 10, name: str = "polldesk-scheduler") -> None:
        self._pool = ThreadPoolExecutor(max_workers=pool_size, thread_name_prefix=name)
        self._heap: list[tuple[float, int, ScheduledTask]] = []
        self._seq = itertools.count()
        self._cond = threading.Condition()
        self._closed = False
        self._timer = threading.Thread(target=self._run, name=f"{name}-timer", daemon=True)
        self._timer.start()

    def submit(self, fn: Callable[..., object], *args) -> Future:
        return self._pool.submit(fn, *args)

    def schedule(self, fn: Callable[[], object], delay: float, period: float | None = None) -> ScheduledTask:
        """Run ``fn`` after ``delay`` seconds, then every ``period`` seconds if given."""
        task = ScheduledTask(fn, time.monotonic() + delay, period)
        with self._cond:
            if self._closed:
                raise RuntimeError("scheduler is shut down")
            heapq.heappush(self._heap, (task.when, next(self._seq), task))
            self._cond.notify()
        return task

    def _run(self) -> None:
        with self._cond:
            while not self._closed:
                if not self._heap:
                    self._cond.wait()
                    continue
                when, _, task = self._heap[0]
                delay = when - time.monotonic()
                if delay > 0:
                    self._cond.wait(delay)
                    continue
                heapq.heappop(self._heap)
                if task.cancelled:
                    continue
                self._pool.submit(self._fire, task)
                if task.period is not None:
                    task.when += task.period
                    heapq.heappush(self._heap, (task.when, next(self._seq), task))

    @staticmethod
    def _fire(task: ScheduledTask) -> None:
        if task.cancelled:
            return
        try:
            task.fn()
        except Exception:
            logger.exception("scheduled task %r failed", task.fn)

    def shutdown(self) -> None:
        with self._cond:
            if self._closed:
                return
            self._closed = True
            self._heap.clear()
            self._cond.notify_all()
        self._timer.join()
        self._pool.shutdown(wait=True)
