"""TCP listener with one reader thread per connection.

Every complete frame is wrapped in an :class:`OutMessageStream` and handed
to the sink. Responses go back through :func:`respond`, which writes a
whole frame under the connection's write lock.
"""

from __future__ import annotations

import itertools
import logging
import socket
import threading
from dataclasses import dataclass
from typing import Callable

from .codec import MAX_PAYLOAD, REGISTRY, Envelope, FrameDecoder, MessageTypeRegistry, encode_envelope
from .errors import BindFailure, ConnectionClosed, FrameError
from .message import ServerMessage, is_sentinel

logger = logging.getLogger(__name__)

RECV_SIZE = 65536
ACCEPT_POLL = 0.2

_connection_ids = itertools.count(1)


class Connection:
    """Server side of one accepted socket."""

    def __init__(self, sock: socket.socket, peer, registry: MessageTypeRegistry,
                 max_payload: int = MAX_PAYLOAD) -> None:
        self.id = next(_connection_ids)
        self.sock = sock
        self.peer = peer
        self.registry = registry
        self.max_payload = max_payload
        self.write_lock = threading.Lock()
        self.closed = False

    def sendall(self, frame: bytes) -> None:
        if self.closed:
            raise ConnectionClosed(f"connection {self.id} is closed")
        try:
            self.sock.sendall(frame)
        except OSError as exc:
            self.close()
            raise ConnectionClosed(f"connection {self.id}: {exc}") from exc

    def close(self) -> None:
        if self.closed:
            return
        self.closed = True
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()


@dataclass
class OutMessageStream:
    """A received request plus the means to answer it on its own connection."""

    connection: int
    writer: Connection
    lock: threading.Lock
    message: Envelope

    @classmethod
    def rewrap(cls, other: "OutMessageStream") -> "OutMessageStream":
        if type(other) is cls:
            return other
        return cls(other.connection, other.writer, other.lock, other.message)


def respond(out: OutMessageStream, response: Envelope | ServerMessage) -> None:
    """Write ``response`` as one frame on the originating connection."""
    if isinstance(response, ServerMessage):
        response = response.to_envelope()
    if is_sentinel(response):
        raise ValueError("sentinel responses are client-side only")
    frame = encode_envelope(response, out.writer.registry, out.writer.max_payload)
    with out.lock:
        out.writer.sendall(frame)


Sink = Callable[[OutMessageStream], None]


class ServerHandle:
    def __init__(self, sock: socket.socket, sink: Sink, registry: MessageTypeRegistry,
                 max_payload: int) -> None:
        self._sock = sock
        self.address = sock.getsockname()[:2]
        self._sink = sink
        self.registry = registry
        self.max_payload = max_payload
        self.connections: dict[int, Connection] = {}
        self._lock = threading.Condition()
        self._readers: dict[int, threading.Thread] = {}
        self._delivering = True
        self._in_sink = 0
        self._stopped = threading.Event()
        self._accept_thread = threading.Thread(target=self._accept_loop, name="polldesk-accept", daemon=True)
        self._accept_thread.start()

    @property
    def port(self) -> int:
        return self.address[1]

    def _accept_loop(self) -> None:
        while not self._stopped.is_set():
            try:
                sock, peer = self._sock.accept()
            except socket.timeout:
                continue
            except OSError:
                if not self._stopped.is_set():
                    logger.exception("accept failed")
                break
            sock.settimeout(None)
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            conn = Connection(sock, peer, self.registry, self.max_payload)
            with self._lock:
                if self._stopped.is_set():
                    conn.close()
                    break
                self.connections[conn.id] = conn
                reader = threading.Thread(target=self._read_loop, args=(conn,),
                                          name=f"polldesk-conn-{conn.id}", daemon=True)
                self._readers[conn.id] = reader
            reader.start()

    def _read_loop(self, conn: Connection) -> None:
        decoder = FrameDecoder(self.max_payload)
        try:
            while True:
                try:
                    data = conn.sock.recv(RECV_SIZE)
                except OSError:
                    break
                if not data:
                    break
                try:
                    frames = decoder.feed(data)
                except FrameError as exc:
                    logger.warning("closing connection %d from %s: %s", conn.id, conn.peer, exc)
                    break
                for env in frames:
                    if not self._deliver(OutMessageStream(conn.id, conn, conn.write_lock, env)):
                        return
        except Exception:
            logger.exception("reader for connection %d crashed", conn.id)
        finally:
            with self._lock:
                self._readers.pop(conn.id, None)
                if self._delivering:
                    self.connections.pop(conn.id, None)
            if self._delivering:
                conn.close()

    def _deliver(self, stream: OutMessageStream) -> bool:
        with self._lock:
            if not self._delivering:
                return False
            self._in_sink += 1
        try:
            self._sink(stream)
        finally:
            with self._lock:
                self._in_sink -= 1
                self._lock.notify_all()
        return True

    def stop_delivery(self) -> None:
        """Stop accepting and stop feeding the sink; open connections stay writable.

        Returns once no reader is still inside the sink, so everything the
        sink accepted is visible to whoever shuts it down next.
        """
        with self._lock:
            self._delivering = False
            if threading.current_thread() not in self._readers.values():
                self._lock.wait_for(lambda: self._in_sink == 0)
        self._stopped.set()
        try:
            self._sock.close()
        except OSError:
            pass
        if threading.current_thread() is not self._accept_thread:
            self._accept_thread.join()

    def shutdown(self) -> None:
        """Close the listener and every connection. Idempotent."""
        self.stop_delivery()
        with self._lock:
            conns = list(self.connections.values())
            self.connections.clear()
            readers = list(self._readers.values())
        for conn in conns:
            conn.close()
        current = threading.current_thread()
        for reader in readers:
            if reader is not current:
                reader.join()


def listen(address: str, port: int, sink: Sink, registry: MessageTypeRegistry | None = None,
           max_payload: int = MAX_PAYLOAD) -> ServerHandle:
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        sock.bind((address, port))
        sock.listen(128)
    except OSError as exc:
        sock.close()
        raise BindFailure(f"cannot listen on {address}:{port}: {exc}") from exc
    sock.settimeout(ACCEPT_POLL)
    return ServerHandle(sock, sink, registry or REGISTRY, max_payload)
