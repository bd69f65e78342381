"""Request workers: a FIFO queue drained by a double-while loop.

The outer loop runs until the worker is shut down *and* drained, the inner
loop empties the queue, and between bursts the worker holds on (a timed
condition wait) until new work arrives or the wait times out.
"""

from __future__ import annotations

import logging
import threading
import time
from collections import deque
from typing import Callable, Iterable

from .codec import Envelope
from .errors import Rejected
from .message import ServerMessage
from .transport import OutMessageStream, respond

logger = logging.getLogger(__name__)

REQUEST_THREAD_WAIT_TIME = 2000  # ms

Handler = Callable[[Envelope], "Envelope | ServerMessage | None"]


class RequestWorker(threading.Thread):
    """Base worker. Subclasses override :meth:`process` or the whole :meth:`run`."""

    def __init__(self, max_task_size: int, handler: Handler | None = None) -> None:
        super().__init__(daemon=True)
        self.worker_id = -1
        self.max_task_size = max_task_size
        self.handler = handler
        self.wait_time = REQUEST_THREAD_WAIT_TIME
        self.last_active = time.monotonic()
        self.on_responded: Callable[[], None] | None = None
        self._queue: deque[OutMessageStream] = deque()
        self._cond = threading.Condition()
        self._shutdown_flag = False
        self._busy = False

    # -- queue side ------------------------------------------------------

    def enqueue(self, stream: OutMessageStream) -> None:
        with self._cond:
            if self._shutdown_flag:
                raise Rejected(f"worker {self.worker_id} is shut down")
            self._queue.append(stream)
            self._cond.notify()

    def pending(self) -> int:
        with self._cond:
            return len(self._queue)

    @property
    def retiring(self) -> bool:
        return self._shutdown_flag

    def shutdown(self) -> None:
        """Finish whatever is queued, then stop."""
        with self._cond:
            self._shutdown_flag = True
            self._cond.notify_all()

    def try_retire(self, now: float, keep_alive: float) -> bool:
        """Shut down if idle for strictly longer than ``keep_alive`` seconds."""
        with self._cond:
            if self._shutdown_flag or self._queue or self._busy:
                return False
            if now - self.last_active <= keep_alive:
                return False
            self._shutdown_flag = True
            self._cond.notify_all()
            return True

    # -- loop side -------------------------------------------------------

    def is_shutdown(self) -> bool:
        # queued work submitted before the flag was raised still gets drained
        with self._cond:
            return self._shutdown_flag and not self._queue

    def is_empty(self) -> bool:
        with self._cond:
            return not self._queue

    def get_request(self) -> OutMessageStream:
        with self._cond:
            stream = self._queue.popleft()
            self._busy = True
            self.last_active = time.monotonic()
        return stream

    def hold_on(self, wait_time: int | None = None) -> None:
        wait_ms = self.wait_time if wait_time is None else wait_time
        with self._cond:
            if not self._queue and not self._shutdown_flag:
                self._cond.wait(wait_ms / 1000)

    def respond(self, request: OutMessageStream, response: Envelope | ServerMessage) -> None:
        respond(request, response)
        if self.on_responded is not None:
            self.on_responded()

    def dispose_message(self, request: OutMessageStream, response: object) -> None:
        # nothing is pooled; just mark the worker idle again
        with self._cond:
            self._busy = False
            self.last_active = time.monotonic()

    def process(self, request: OutMessageStream) -> Envelope | ServerMessage | None:
        if self.handler is None:
            raise NotImplementedError(f"{type(self).__name__} needs a handler or a process() override")
        return self.handler(request.message)

    def run(self) -> None:
        while not self.is_shutdown():
            while not self.is_empty():
                request = self.get_request()
                response = None
                try:
                    response = self.process(request)
                    if response is not None:
                        self.respond(request, response)
                except Exception:
                    logger.exception("worker %d failed on %r", self.worker_id, request.message)
                self.dispose_message(request, response)
            self.hold_on()


class ThreadCreator:
    """Factory the dispatcher calls when its existing workers are saturated."""

    def create_request_thread_instance(self, task_size: int) -> RequestWorker:
        raise NotImplementedError

    def __call__(self, task_size: int) -> RequestWorker:
        return self.create_request_thread_instance(task_size)


class HandlerThreadCreator(ThreadCreator):
    """Builds plain :class:`RequestWorker` instances around one handler function."""

    def __init__(self, handler: Handler) -> None:
        self.handler = handler

    def create_request_thread_instance(self, task_size: int) -> RequestWorker:
        return RequestWorker(task_size, self.handler)


def reclaim_idle(workers: Iterable[RequestWorker], keep_alive: float, now: float) -> set[int]:
    """Flag every worker idle for longer than ``keep_alive`` seconds; return their ids.

    Busy workers and workers with queued requests are left alone. The
    caller joins and removes the flagged workers.
    """
    return {w.worker_id for w in workers if w.try_retire(now, keep_alive)}
