import socket
import threading
import time

import pytest

from make_reference import GOLDEN_KEY
from polldesk.codec import Envelope, FrameDecoder, MessageTypeRegistry, encode_envelope
from polldesk.errors import BindFailure, ConnectionClosed
from polldesk.transport import listen, respond


@pytest.fixture
def registry():
    reg = MessageTypeRegistry.with_builtins()
    reg.register("TEST_REQUEST", 100)
    reg.register("TEST_RESPONSE", 101)
    return reg


class Collector:
    def __init__(self):
        self.streams = []
        self.cond = threading.Condition()

    def __call__(self, stream):
        with self.cond:
            self.streams.append(stream)
            self.cond.notify_all()

    def wait_for(self, n, timeout=5.0):
        with self.cond:
            assert self.cond.wait_for(lambda: len(self.streams) >= n, timeout), self.streams
        return self.streams


@pytest.fixture
def server(registry):
    sink = Collector()
    handle = listen("127.0.0.1", 0, sink, registry)
    handle.sink = sink
    yield handle
    handle.shutdown()


def connect(handle):
    return socket.create_connection(handle.address, timeout=5)


def read_frames(sock, n, timeout=5.0):
    decoder = FrameDecoder()
    frames = []
    sock.settimeout(timeout)
    while len(frames) < n:
        data = sock.recv(65536)
        if not data:
            break
        frames += decoder.feed(data)
    return frames


def test_golden_frame_reaches_sink(server, registry):
    with connect(server) as sock:
        sock.sendall(encode_envelope(Envelope(100, {"request": "request"}, GOLDEN_KEY), registry))
        (stream,) = server.sink.wait_for(1)
    assert stream.message == Envelope(100, {"request": "request"}, GOLDEN_KEY)
    assert stream.writer.id == stream.connection


def test_split_frame_reassembled(server, registry):
    frame = encode_envelope(Envelope(100, {"request": "x" * 1000}), registry)
    with connect(server) as sock:
        for i in range(0, len(frame), 7):
            sock.sendall(frame[i:i + 7])
        (stream,) = server.sink.wait_for(1)
    assert stream.message.payload == {"request": "x" * 1000}


def test_two_clients_tagged_by_origin(server, registry):
    a, b = connect(server), connect(server)
    try:
        a.sendall(encode_envelope(Envelope(100, {"from": "a"}), registry))
        b.sendall(encode_envelope(Envelope(100, {"from": "b"}), registry))
        streams = server.sink.wait_for(2)
        by_origin = {s.message.payload["from"]: s.connection for s in streams}
        assert by_origin["a"] != by_origin["b"]
    finally:
        a.close()
        b.close()


def test_respond_reaches_client(server, registry):
    with connect(server) as sock:
        sock.sendall(encode_envelope(Envelope(100, {"request": "request"}), registry))
        (stream,) = server.sink.wait_for(1)
        respond(stream, Envelope(101, {"response": "response"}))
        (reply,) = read_frames(sock, 1)
    assert reply.type_code == 101 and reply.payload == {"response": "response"}


def test_malformed_frame_closes_only_that_connection(server, registry):
    bad, good = connect(server), connect(server)
    try:
        bad.sendall(b"XX" + bytes(40))
        bad.settimeout(5)
        assert bad.recv(10) == b""  # closed by the server
        good.sendall(encode_envelope(Envelope(100, {}), registry))
        (stream,) = server.sink.wait_for(1)
        respond(stream, Envelope(101, {}))
        assert read_frames(good, 1)[0].type_code == 101
    finally:
        bad.close()
        good.close()


def test_respond_on_closed_connection(server, registry):
    with connect(server) as sock:
        sock.sendall(encode_envelope(Envelope(100, {}), registry))
        (stream,) = server.sink.wait_for(1)
    stream.writer.close()
    with pytest.raises(ConnectionClosed):
        respond(stream, Envelope(101, {}))


def test_concurrent_responders_never_tear_frames(server, registry):
    with connect(server) as sock:
        sock.sendall(encode_envelope(Envelope(100, {}), registry))
        (stream,) = server.sink.wait_for(1)
        big = {"blob": b"z" * 200_000}

        def answer(i):
            respond(stream, Envelope(101, dict(big, i=i)))

        threads = [threading.Thread(target=answer, args=(i,)) for i in range(8)]
        for t in threads:
            t.start()
        frames = read_frames(sock, 8, timeout=10)
        for t in threads:
            t.join()
    assert sorted(f.payload["i"] for f in frames) == list(range(8))


def test_shutdown_idempotent_and_releases_port(registry):
    handle = listen("127.0.0.1", 0, Collector(), registry)
    port = handle.port
    handle.shutdown()
    handle.shutdown()
    again = listen("127.0.0.1", port, Collector(), registry)
    again.shutdown()


def test_shutdown_closes_client_mid_read(registry):
    handle = listen("127.0.0.1", 0, Collector(), registry)
    sock = connect(handle)
    time.sleep(0.1)
    handle.shutdown()
    sock.settimeout(5)
    try:
        assert sock.recv(10) == b""
    except ConnectionResetError:
        pass
    sock.close()


def test_bind_failure(registry):
    handle = listen("127.0.0.1", 0, Collector(), registry)
    try:
        with pytest.raises(BindFailure):
            listen("127.0.0.1", handle.port, Collector(), registry)
    finally:
        handle.shutdown()


def test_stop_delivery_waits_for_sink_in_progress(registry):
    entered, done = threading.Event(), threading.Event()

    def slow_sink(stream):
        entered.set()
        time.sleep(0.3)
        done.set()

    handle = listen("127.0.0.1", 0, slow_sink, registry)
    with connect(handle) as sock:
        sock.sendall(encode_envelope(Envelope(100, {}), registry))
        assert entered.wait(5)
        handle.stop_delivery()
        assert done.is_set()
    handle.shutdown()
