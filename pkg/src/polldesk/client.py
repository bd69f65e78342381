"""Blocking remote reads over a pool of exclusively held connections.

One read checks a connection out, writes the request frame and waits for
exactly one response frame on that same connection. Because a connection
carries at most one outstanding request, responses correlate by position.
"""

from __future__ import annotations

import logging
import os
import re
import socket
import threading
import time
from collections import deque
from pathlib import Path
from typing import Callable

from .codec import (
    INIT_READ_FEEDBACK_NOTIFICATION,
    INIT_READ_NOTIFICATION,
    MAX_PAYLOAD,
    NODE_KEY_NOTIFICATION,
    REGISTER_CLIENT_NOTIFICATION,
    REGISTRY,
    Envelope,
    FrameDecoder,
    MessageTypeRegistry,
    encode_envelope,
)
from .errors import (
    ConnectFailure,
    ConnectionClosed,
    HandshakeTimeout,
    PoolClosed,
    PolldeskError,
    ReadTimeout,
    SessionNotReady,
)

logger = logging.getLogger(__name__)

NODE_KEY_RE = re.compile(r"^[0-9a-f]{32}$")


def new_node_key() -> str:
    return os.urandom(16).hex()


def load_or_create_node_key(path: str | os.PathLike) -> str:
    """Read the persisted node key, creating the file on first use."""
    path = Path(path)
    try:
        key = path.read_text(encoding="ascii").strip()
    except FileNotFoundError:
        key = None
    if key is not None:
        if not NODE_KEY_RE.match(key):
            raise ValueError(f"{path} does not hold a 32-hex-character node key")
        return key
    key = new_node_key()
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(key + "\n", encoding="ascii")
    return key


class RemoteConnection:
    def __init__(self, sock: socket.socket, registry: MessageTypeRegistry, max_payload: int) -> None:
        self.sock = sock
        self.registry = registry
        self.decoder = FrameDecoder(max_payload)
        self.pending: deque[Envelope] = deque()
        self.closed = False

    def send(self, env: Envelope) -> None:
        frame = encode_envelope(env, self.registry, self.decoder.max_payload)
        try:
            self.sock.sendall(frame)
        except socket.timeout as exc:
            raise ReadTimeout("timed out sending request") from exc
        except OSError as exc:
            raise ConnectionClosed(str(exc)) from exc

    def receive(self, timeout: float) -> Envelope:
        deadline = time.monotonic() + timeout
        while not self.pending:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise ReadTimeout(f"no response within {timeout:.3f}s")
            self.sock.settimeout(remaining)
            try:
                data = self.sock.recv(65536)
            except socket.timeout as exc:
                raise ReadTimeout(f"no response within {timeout:.3f}s") from exc
            except OSError as exc:
                raise ConnectionClosed(str(exc)) from exc
            if not data:
                raise ConnectionClosed("server closed the connection")
            self.pending.extend(self.decoder.feed(data))
        return self.pending.popleft()

    def close(self) -> None:
        if self.closed:
            return
        self.closed = True
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()


class _Waiter:
    __slots__ = ("event", "conn", "slot", "error")

    def __init__(self) -> None:
        self.event = threading.Event()
        self.conn: RemoteConnection | None = None
        self.slot = False
        self.error: Exception | None = None


class RemoteReaderPool:
    """Connection pool to one server, with FIFO-fair checkout.

    ``read_timeout`` is in milliseconds and bounds the handshake, each
    read, and :meth:`dispose`.
    """

    def __init__(self, host: str, port: int, registry: MessageTypeRegistry | None = None,
                 node_key: str | None = None, max_connections: int = 8, read_timeout: int = 10000,
                 max_payload: int = MAX_PAYLOAD) -> None:
        if max_connections < 1 or read_timeout <= 0:
            raise ValueError("max_connections and read_timeout must be positive")
        self.host = host
        self.port = port
        self.registry = registry or REGISTRY
        self.node_key = node_key or new_node_key()
        self.max_connections = max_connections
        self.read_timeout = read_timeout
        self.max_payload = max_payload
        self._lock = threading.Condition()
        self._idle: list[RemoteConnection] = []
        self._checked_out: set[RemoteConnection] = set()
        self._open = 0
        self._waiters: deque[_Waiter] = deque()
        self._ready = False
        self._closed = False

    @property
    def timeout_s(self) -> float:
        return self.read_timeout / 1000

    @property
    def ready(self) -> bool:
        return self._ready

    def counts(self) -> tuple[int, int, int]:
        """(idle, checked out, open); open also counts slots whose connect is in progress."""
        with self._lock:
            return len(self._idle), len(self._checked_out), self._open

    # -- connections -----------------------------------------------------

    def _connect(self) -> RemoteConnection:
        try:
            sock = socket.create_connection((self.host, self.port), timeout=self.timeout_s)
        except OSError as exc:
            raise ConnectFailure(f"cannot reach {self.host}:{self.port}: {exc}") from exc
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        return RemoteConnection(sock, self.registry, self.max_payload)

    def _open_reserved(self) -> RemoteConnection:
        try:
            conn = self._connect()
        except BaseException:
            with self._lock:
                self._open -= 1
                self._hand_over_slot()
                self._lock.notify_all()
            raise
        with self._lock:
            if self._closed:
                self._open -= 1
                self._lock.notify_all()
                conn.close()
                raise PoolClosed("pool disposed")
            self._checked_out.add(conn)
        return conn

    def _checkout(self) -> RemoteConnection:
        waiter = None
        with self._lock:
            if self._closed:
                raise PoolClosed("pool disposed")
            if not self._waiters and self._idle:
                conn = self._idle.pop()
                self._checked_out.add(conn)
                return conn
            if not self._waiters and self._open < self.max_connections:
                self._open += 1
            else:
                waiter = _Waiter()
                self._waiters.append(waiter)
        if waiter is None:
            return self._open_reserved()
        waiter.event.wait()
        if waiter.error is not None:
            raise waiter.error
        if waiter.slot:
            return self._open_reserved()
        return waiter.conn

    def _hand_over_slot(self) -> None:
        # caller holds the lock and has just freed one connection slot
        if self._waiters and not self._closed and self._open < self.max_connections:
            waiter = self._waiters.popleft()
            self._open += 1
            waiter.slot = True
            waiter.event.set()

    def _release(self, conn: RemoteConnection) -> None:
        with self._lock:
            self._checked_out.discard(conn)
            if self._closed:
                conn.close()
                self._open -= 1
            elif self._waiters:
                waiter = self._waiters.popleft()
                waiter.conn = conn
                self._checked_out.add(conn)
                waiter.event.set()
            else:
                self._idle.append(conn)
            self._lock.notify_all()

    def _discard(self, conn: RemoteConnection) -> None:
        conn.close()
        with self._lock:
            self._checked_out.discard(conn)
            self._open -= 1
            self._hand_over_slot()
            self._lock.notify_all()

    # -- session ---------------------------------------------------------

    def init_session(self, on_notification: Callable[[Envelope], None] | None = None) -> None:
        """Register this node with the server and wait for both handshake replies."""
        with self._lock:
            if self._ready:
                return
            if self._closed:
                raise PoolClosed("pool disposed")
            self._open += 1
        conn = self._open_reserved()
        expected = {int(NODE_KEY_NOTIFICATION), int(INIT_READ_FEEDBACK_NOTIFICATION)}
        try:
            conn.send(Envelope(REGISTER_CLIENT_NOTIFICATION, {"node_key": self.node_key}))
            conn.send(Envelope(INIT_READ_NOTIFICATION, {"node_key": self.node_key}))
            deadline = time.monotonic() + self.timeout_s
            while expected:
                reply = conn.receive(max(deadline - time.monotonic(), 0.001))
                if reply.type_code not in expected:
                    raise ConnectionClosed(f"unexpected handshake reply type {reply.type_code}")
                expected.discard(reply.type_code)
                if on_notification is not None:
                    on_notification(reply)
        except ReadTimeout as exc:
            self._discard(conn)
            raise HandshakeTimeout(str(exc)) from exc
        except BaseException:
            self._discard(conn)
            raise
        with self._lock:
            self._ready = True
        self._release(conn)

    # -- reads -----------------------------------------------------------

    def read(self, request: Envelope) -> Envelope:
        """Send ``request`` and block until its response arrives."""
        if not self._ready:
            raise SessionNotReady("call init_session() first")
        conn = self._checkout()
        try:
            conn.send(request)
            response = conn.receive(self.timeout_s)
        except BaseException:
            self._discard(conn)
            raise
        self._release(conn)
        return response

    def read_or_sentinel(self, request: Envelope, sentinel: Envelope) -> Envelope:
        try:
            return self.read(request)
        except (PolldeskError, OSError) as exc:
            logger.error("read of type %d failed: %s", request.type_code, exc)
            return sentinel

    def notify(self, notification: Envelope) -> None:
        """Send a one-way message; nothing is read back."""
        if not self._ready:
            raise SessionNotReady("call init_session() first")
        conn = self._checkout()
        try:
            conn.send(notification)
        except BaseException:
            self._discard(conn)
            raise
        self._release(conn)

    def dispose(self) -> None:
        """Close idle connections, give in-flight reads up to ``read_timeout`` to finish."""
        with self._lock:
            if self._closed:
                return
            self._closed = True
            for conn in self._idle:
                conn.close()
            self._open -= len(self._idle)
            self._idle.clear()
            while self._waiters:
                waiter = self._waiters.popleft()
                waiter.error = PoolClosed("pool disposed")
                waiter.event.set()
            self._lock.wait_for(lambda: not self._checked_out, timeout=self.timeout_s)
            stragglers = list(self._checked_out)
        for conn in stragglers:
            conn.close()

    def __enter__(self) -> "RemoteReaderPool":
        return self

    def __exit__(self, *exc) -> None:
        self.dispose()

