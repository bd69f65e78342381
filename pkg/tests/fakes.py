"""In-memory stand-ins for connections, so dispatch and worker tests need no sockets."""

import itertools
import threading

from polldesk.codec import Envelope, MessageTypeRegistry, decode_envelope
from polldesk.errors import ConnectionClosed
from polldesk.transport import OutMessageStream

TEST_REGISTRY = MessageTypeRegistry.with_builtins()
REQ = TEST_REGISTRY.register("TEST_REQUEST", 100)
RESP = TEST_REGISTRY.register("TEST_RESPONSE", 101)
OTHER_REQ = TEST_REGISTRY.register("OTHER_REQUEST", 102)
OTHER_RESP = TEST_REGISTRY.register("OTHER_RESPONSE", 103)
NOTE = TEST_REGISTRY.register("SOME_NOTIFICATION", 104)

_ids = itertools.count(1000)


class FakeConnection:
    """Decodes every frame written to it; a real frame boundary check on each write."""

    def __init__(self, registry=TEST_REGISTRY, max_payload=16 * 1024 * 1024):
        self.id = next(_ids)
        self.registry = registry
        self.max_payload = max_payload
        self.write_lock = threading.Lock()
        self.closed = False
        self.sent: list[Envelope] = []
        self.cond = threading.Condition()

    def sendall(self, frame: bytes) -> None:
        if self.closed:
            raise ConnectionClosed("fake closed")
        env, used = decode_envelope(frame)
        assert used == len(frame)
        with self.cond:
            self.sent.append(env)
            self.cond.notify_all()

    def wait_for(self, n, timeout=5.0):
        with self.cond:
            self.cond.wait_for(lambda: len(self.sent) >= n, timeout)
            return list(self.sent)


def stream_for(env: Envelope, conn: FakeConnection | None = None) -> OutMessageStream:
    conn = conn or FakeConnection()
    return OutMessageStream(conn.id, conn, conn.write_lock, env)


def echo_key(message: Envelope) -> Envelope:
    return Envelope(RESP, {"key": message.message_key, "value": message.payload.get("value")})
