"""Type-code routing and per-request-type dispatchers.

:class:`ServerDispatcher` is the sink handed to the transport. Request
types are routed to a :class:`RequestDispatcher`, which owns an elastic
pool of :class:`~polldesk.worker.RequestWorker` threads; notification
types are routed to a plain handler.
"""

from __future__ import annotations

import logging
import sys
import threading
import time
from collections import Counter, deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime
from typing import Callable, Sequence, TextIO

from .codec import (
    INIT_READ_FEEDBACK_NOTIFICATION,
    INIT_READ_NOTIFICATION,
    NODE_KEY_NOTIFICATION,
    REGISTER_CLIENT_NOTIFICATION,
    REGISTRY,
    Envelope,
    MessageTypeRegistry,
)
from .errors import ConnectionClosed, DuplicateRoute, Rejected
from .scheduling import ScheduledTask, Scheduler
from .transport import OutMessageStream, listen, respond
from .worker import Handler, HandlerThreadCreator, RequestWorker, ThreadCreator, reclaim_idle

logger = logging.getLogger(__name__)

NotificationHandler = Callable[[OutMessageStream], None]


@dataclass
class ServerDispatcherConfig:
    """Server-wide pools. Durations in milliseconds."""

    thread_pool_size: int = 100
    thread_keep_alive: int = 30000
    scheduler_pool_size: int = 10
    scheduler_keep_alive: int = 30000

    def __post_init__(self) -> None:
        _require_positive(self)


@dataclass
class RequestDispatcherConfig:
    """Per-request-type pool settings. Durations in milliseconds."""

    pool_size: int = 100
    keep_alive: int = 30000
    max_task_size: int = 200
    dispatcher_wait_time: int = 500
    wait_round: int = 5
    idle_check_delay: int = 3000
    idle_check_period: int = 6000
    request_thread_wait_time: int = 2000

    def __post_init__(self) -> None:
        _require_positive(self)


def _require_positive(cfg) -> None:
    for name, value in vars(cfg).items():
        if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
            raise ValueError(f"{type(cfg).__name__}.{name} must be a positive integer, got {value!r}")


def receipt_line(name: str) -> str:
    """``"<NAME> received @<local time>"``, the line printed for every routed message."""
    stamp = datetime.now().astimezone().isoformat(timespec="seconds")
    return f"{name} received @{stamp}"


def choose_worker(loads: Sequence[tuple[int, int]], max_task_size: int) -> int | None:
    """Pick the least-loaded worker whose queue is below ``max_task_size``.

    ``loads`` holds ``(worker_id, queue_length)`` pairs. Ties go to the
    lowest id. Returns ``None`` when every queue is full.
    """
    best = None
    for worker_id, length in loads:
        if length >= max_task_size:
            continue
        if best is None or (length, worker_id) < best:
            best = (length, worker_id)
    return None if best is None else best[1]


def least_loaded(loads: Sequence[tuple[int, int]]) -> int | None:
    if not loads:
        return None
    return min(loads, key=lambda item: (item[1], item[0]))[0]


class RequestDispatcher:
    """Routes one request type onto an elastic worker pool.

    Streams land in an unbounded inbox; a single distribution loop
    (:meth:`distribute`, run on the server's execution pool) moves them to
    workers. The loop exits after ``wait_round`` quiet waits and is
    restarted by the next :meth:`submit`.
    """

    def __init__(self, code: int, config: RequestDispatcherConfig, creator: ThreadCreator | Callable[[int], RequestWorker],
                 scheduler: Scheduler, stream_type: type[OutMessageStream] = OutMessageStream,
                 on_responded: Callable[[], None] | None = None) -> None:
        self.code = code
        self.config = config
        self.creator = creator
        self.stream_type = stream_type
        self._on_responded = on_responded
        self._cond = threading.Condition()
        self._inbox: deque[OutMessageStream] = deque()
        self._ready = False
        self._closed = False
        self._disposed = False
        self._workers_lock = threading.Lock()
        self.workers: dict[int, RequestWorker] = {}
        self._next_id = 0
        self.peak_workers = 0
        # queue lengths of the live workers at each creation, for auditing
        self.creation_log: list[tuple[int, ...]] = []
        self._idle_check: ScheduledTask | None = scheduler.schedule(
            self.check_idle, config.idle_check_delay / 1000, config.idle_check_period / 1000)

    def is_ready(self) -> bool:
        return self._ready

    @property
    def worker_count(self) -> int:
        return len(self.workers)

    def submit(self, stream: OutMessageStream, execute: Callable[[Callable[[], None]], object]) -> None:
        """Start the distribution loop if it is not running, then enqueue."""
        with self._cond:
            if self._closed:
                raise Rejected(f"dispatcher for type {self.code} is disposed")
            if not self._ready:
                self._ready = True
                execute(self.distribute)
            self._inbox.append(stream)
            self._cond.notify_all()

    def distribute(self) -> None:
        wait = self.config.dispatcher_wait_time / 1000
        try:
            while True:
                with self._cond:
                    quiet = 0
                    while not self._inbox:
                        if self._closed or quiet >= self.config.wait_round:
                            self._ready = False
                            self._cond.notify_all()
                            return
                        self._cond.wait(wait)
                        quiet += 1
                    stream = self._inbox.popleft()
                self._assign(stream)
        except Exception:
            logger.exception("distribution loop for type %d failed; disposing", self.code)
            with self._cond:
                self._closed = True
                dropped = len(self._inbox)
                self._inbox.clear()
                self._ready = False
                self._cond.notify_all()
            if dropped:
                logger.error("dropped %d queued request(s) for type %d", dropped, self.code)

    def _assign(self, stream: OutMessageStream) -> None:
        rounds = 0
        wait = self.config.dispatcher_wait_time / 1000
        while True:
            with self._workers_lock:
                live = [w for w in self.workers.values() if not w.retiring]
                loads = [(w.worker_id, w.pending()) for w in live]
                target = choose_worker(loads, self.config.max_task_size)
                if target is None and len(self.workers) < self.config.pool_size:
                    worker = self._create_worker(loads)
                elif target is None and (rounds >= self.config.wait_round or self._closed):
                    target = least_loaded(loads)
                    worker = self.workers[target] if target is not None else None
                else:
                    worker = self.workers[target] if target is not None else None
                if worker is not None:
                    try:
                        worker.enqueue(stream)
                        return
                    except Rejected:
                        pass
            rounds += 1
            time.sleep(wait)

    def _create_worker(self, loads: list[tuple[int, int]]) -> RequestWorker:
        worker = self.creator(self.config.max_task_size)
        worker.worker_id = self._next_id
        self._next_id += 1
        worker.wait_time = self.config.request_thread_wait_time
        worker.on_responded = self._on_responded
        worker.name = f"polldesk-worker-{self.code}-{worker.worker_id}"
        worker.start()
        self.workers[worker.worker_id] = worker
        self.creation_log.append(tuple(length for _, length in loads))
        self.peak_workers = max(self.peak_workers, len(self.workers))
        return worker

    def check_idle(self) -> set[int]:
        with self._workers_lock:
            retired = reclaim_idle(list(self.workers.values()), self.config.keep_alive / 1000, time.monotonic())
            leaving = [self.workers[i] for i in retired]
        for worker in leaving:
            worker.join()
        with self._workers_lock:
            for worker in leaving:
                self.workers.pop(worker.worker_id, None)
        if retired:
            logger.debug("type %d reclaimed idle workers %s", self.code, sorted(retired))
        return retired

    def dispose(self) -> None:
        """Reject new work, drain the inbox into workers, let workers finish, join them."""
        with self._cond:
            if self._disposed:
                return
            self._disposed = True
            self._closed = True
            self._cond.notify_all()
            while self._ready:
                self._cond.wait()
            leftover = list(self._inbox)
            self._inbox.clear()
        for stream in leftover:
            self._assign(stream)
        if self._idle_check is not None:
            self._idle_check.cancel()
        with self._workers_lock:
            workers = list(self.workers.values())
        for worker in workers:
            worker.shutdown()
        for worker in workers:
            worker.join()
        with self._workers_lock:
            self.workers.clear()


@dataclass
class DispatcherStats:
    unknown_routes: int = 0
    responses_written: int = 0
    received: dict[str, int] = field(default_factory=dict)
    rejected: int = 0


class ServerDispatcher:
    """Switches incoming streams on their type code.

    Subclasses register their routes in ``__init__``; :meth:`consume` is
    the transport sink and :meth:`shutdown` drains every dispatcher before
    stopping the pools.
    """

    def __init__(self, config: ServerDispatcherConfig | None = None,
                 registry: MessageTypeRegistry | None = None,
                 out: TextIO | None = None, handshake: bool = True) -> None:
        self.config = config or ServerDispatcherConfig()
        self.registry = registry or REGISTRY
        self._out = out
        self._executor = ThreadPoolExecutor(max_workers=self.config.thread_pool_size,
                                            thread_name_prefix="polldesk-dispatch")
        self._scheduler = Scheduler(self.config.scheduler_pool_size)
        self._routes: dict[int, RequestDispatcher | NotificationHandler] = {}
        self._stats_lock = threading.Lock()
        self._unknown = 0
        self._responses = 0
        self._rejected = 0
        self._received: Counter[str] = Counter()
        self._closed = False
        self._shutdown_done = False
        # node key -> connection ids that registered under it
        self.clients: dict[str, set[int]] = {}
        if handshake:
            self.register_notification_route(REGISTER_CLIENT_NOTIFICATION, self._on_register_client)
            self.register_notification_route(INIT_READ_NOTIFICATION, self._on_init_read)

    # -- routes ----------------------------------------------------------

    def register_request_route(self, code: int, config: RequestDispatcherConfig | None = None,
                               handler: Handler | None = None,
                               creator: ThreadCreator | Callable[[int], RequestWorker] | None = None,
                               stream_type: type[OutMessageStream] = OutMessageStream) -> RequestDispatcher:
        if creator is None:
            if handler is None:
                raise ValueError("a request route needs a handler or a thread creator")
            creator = HandlerThreadCreator(handler)
        self._check_route(code)
        dispatcher = RequestDispatcher(code, config or RequestDispatcherConfig(), creator, self._scheduler,
                                       stream_type, self._count_response)
        self._routes[int(code)] = dispatcher
        return dispatcher

    def register_notification_route(self, code: int, handler: NotificationHandler) -> None:
        self._check_route(code)
        self._routes[int(code)] = handler

    def _check_route(self, code: int) -> None:
        if self._closed:
            raise Rejected("server dispatcher is shut down")
        if int(code) in self._routes:
            raise DuplicateRoute(f"type {code} is already routed")

    @property
    def request_dispatchers(self) -> list[RequestDispatcher]:
        return [r for r in self._routes.values() if isinstance(r, RequestDispatcher)]

    # -- intake ----------------------------------------------------------

    def execute(self, task: Callable[[], None]) -> None:
        self._executor.submit(task)

    def consume(self, stream: OutMessageStream) -> None:
        code = stream.message.type_code
        route = self._routes.get(code)
        if route is None or self._closed:
            with self._stats_lock:
                if route is None:
                    self._unknown += 1
                else:
                    self._rejected += 1
            if route is None:
                logger.warning("no route for type %d on connection %d; dropped", code, stream.connection)
            return
        name = self.registry.name_of(code, str(code))
        self._print_receipt(name)
        with self._stats_lock:
            self._received[name] += 1
        if isinstance(route, RequestDispatcher):
            try:
                route.submit(route.stream_type.rewrap(stream), self.execute)
            except Rejected:
                with self._stats_lock:
                    self._rejected += 1
            return
        # block this connection's reader so later frames see the handler's effects
        future = self._scheduler.submit(route, stream)
        try:
            future.result()
        except Exception:
            logger.exception("notification handler for %s failed", name)

    def _print_receipt(self, name: str) -> None:
        print(receipt_line(name), file=self._out or sys.stdout, flush=True)

    def _count_response(self) -> None:
        with self._stats_lock:
            self._responses += 1

    def stats(self) -> DispatcherStats:
        with self._stats_lock:
            return DispatcherStats(self._unknown, self._responses, dict(self._received), self._rejected)

    # -- built-in handshake ------------------------------------------------

    def _on_register_client(self, stream: OutMessageStream) -> None:
        node_key = stream.message.payload.get("node_key", "")
        with self._stats_lock:
            self.clients.setdefault(node_key, set()).add(stream.connection)
        self._reply(stream, Envelope(NODE_KEY_NOTIFICATION, {"node_key": node_key}))

    def _on_init_read(self, stream: OutMessageStream) -> None:
        node_key = stream.message.payload.get("node_key", "")
        self._reply(stream, Envelope(INIT_READ_FEEDBACK_NOTIFICATION, {"node_key": node_key}))

    def _reply(self, stream: OutMessageStream, env: Envelope) -> None:
        try:
            respond(stream, env)
        except ConnectionClosed as exc:
            logger.warning("handshake reply lost: %s", exc)

    # -- lifecycle -------------------------------------------------------

    def shutdown(self) -> None:
        """Dispose every request dispatcher (draining queued work), then stop the pools."""
        if self._shutdown_done:
            return
        self._closed = True
        for dispatcher in self.request_dispatchers:
            dispatcher.dispose()
        self._executor.shutdown(wait=True)
        self._scheduler.shutdown()
        self._shutdown_done = True


class PollingServer:
    """A listening transport bound to a dispatcher, with ordered shutdown."""

    def __init__(self, dispatcher: ServerDispatcher, handle) -> None:
        self.dispatcher = dispatcher
        self.handle = handle
        self._lock = threading.Lock()
        self._stopped = False

    @property
    def address(self) -> tuple[str, int]:
        return self.handle.address

    @property
    def port(self) -> int:
        return self.handle.port

    def shutdown(self) -> None:
        """Stop intake, drain queued requests (responses still go out), then close sockets."""
        with self._lock:
            if self._stopped:
                return
            self._stopped = True
        self.handle.stop_delivery()
        self.dispatcher.shutdown()
        self.handle.shutdown()

    def __enter__(self) -> "PollingServer":
        return self

    def __exit__(self, *exc) -> None:
        self.shutdown()


def serve(dispatcher: ServerDispatcher, host: str = "127.0.0.1", port: int = 0,
          max_payload: int | None = None) -> PollingServer:
    """Listen on ``host:port`` (0 picks a free port) and feed frames to ``dispatcher``."""
    kwargs = {} if max_payload is None else {"max_payload": max_payload}
    handle = listen(host, port, dispatcher.consume, dispatcher.registry, **kwargs)
    return PollingServer(dispatcher, handle)
