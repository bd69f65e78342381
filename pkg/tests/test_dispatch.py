import io
import re
import threading
import time

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fakes import NOTE, OTHER_REQ, OTHER_RESP, REQ, RESP, TEST_REGISTRY, FakeConnection, echo_key, stream_for
from oracles import simulate_burst
from polldesk.codec import (
    INIT_READ_FEEDBACK_NOTIFICATION,
    INIT_READ_NOTIFICATION,
    NODE_KEY_NOTIFICATION,
    REGISTER_CLIENT_NOTIFICATION,
    Envelope,
)
from polldesk.dispatch import (
    RequestDispatcherConfig,
    ServerDispatcher,
    ServerDispatcherConfig,
    choose_worker,
    least_loaded,
)
from polldesk.errors import DuplicateRoute, Rejected

FAST = dict(dispatcher_wait_time=20, wait_round=3, request_thread_wait_time=50)


def make_server(**kwargs):
    return ServerDispatcher(ServerDispatcherConfig(thread_pool_size=8, scheduler_pool_size=4),
                            TEST_REGISTRY, out=io.StringIO(), **kwargs)


@pytest.fixture
def server():
    sd = make_server()
    yield sd
    sd.shutdown()


# -- the assignment rule ---------------------------------------------------

@given(st.lists(st.integers(0, 6), max_size=10), st.integers(1, 6))
def test_choose_worker_matches_brute_force(lengths, max_task_size):
    loads = list(enumerate(lengths))
    open_ = [(length, wid) for wid, length in loads if length < max_task_size]
    expected = min(open_)[1] if open_ else None
    assert choose_worker(loads, max_task_size) == expected


def test_least_loaded_ties_lowest_id():
    assert least_loaded([(3, 2), (1, 2), (2, 5)]) == 1
    assert least_loaded([]) is None


def test_config_rejects_nonpositive():
    with pytest.raises(ValueError):
        RequestDispatcherConfig(pool_size=0)
    with pytest.raises(ValueError):
        ServerDispatcherConfig(thread_pool_size=-1)


# -- routing ---------------------------------------------------------------

def test_request_printed_and_answered(server):
    server.register_request_route(REQ, RequestDispatcherConfig(**FAST), handler=echo_key)
    conn = FakeConnection()
    env = Envelope(REQ, {"value": 1})
    server.consume(stream_for(env, conn))
    (reply,) = conn.wait_for(1)
    assert reply.payload["key"] == env.message_key
    assert re.fullmatch(r"TEST_REQUEST received @\S+\n", server._out.getvalue())
    assert server.stats().responses_written == 1


def test_unknown_route_dropped(server):
    server.consume(stream_for(Envelope(REQ)))  # nothing routed yet
    stats = server.stats()
    assert stats.unknown_routes == 1 and stats.received == {}
    assert server._out.getvalue() == ""


def test_duplicate_route(server):
    server.register_request_route(REQ, handler=echo_key)
    with pytest.raises(DuplicateRoute):
        server.register_notification_route(REQ, lambda s: None)


def test_register_after_shutdown():
    sd = make_server()
    sd.shutdown()
    with pytest.raises(Rejected):
        sd.register_request_route(REQ, handler=echo_key)


def test_two_routes_have_independent_pools(server):
    a = server.register_request_route(REQ, RequestDispatcherConfig(**FAST), handler=echo_key)
    b = server.register_request_route(OTHER_REQ, RequestDispatcherConfig(**FAST),
                                      handler=lambda m: Envelope(OTHER_RESP, {"n": m.payload["n"] * 2}))
    conn = FakeConnection()
    server.consume(stream_for(Envelope(REQ, {"value": 1}), conn))
    server.consume(stream_for(Envelope(OTHER_REQ, {"n": 21}), conn))
    replies = conn.wait_for(2)
    assert {r.type_code for r in replies} == {RESP, OTHER_RESP}
    assert a.worker_count == 1 and b.worker_count == 1
    assert set(a.workers.values()).isdisjoint(b.workers.values())


def test_notifications_apply_in_arrival_order(server):
    store = {}
    server.register_notification_route(NOTE, lambda s: store.update(s.message.payload))
    server.register_request_route(REQ, RequestDispatcherConfig(**FAST),
                                  handler=lambda m: Envelope(RESP, dict(store)))
    conn = FakeConnection()
    for i in range(20):
        server.consume(stream_for(Envelope(NOTE, {"v": i}), conn))
        server.consume(stream_for(Envelope(REQ), conn))
        assert conn.wait_for(i + 1)[-1].payload == {"v": i}


def test_handshake_replies(server):
    conn = FakeConnection()
    server.consume(stream_for(Envelope(REGISTER_CLIENT_NOTIFICATION, {"node_key": "ab" * 16}), conn))
    server.consume(stream_for(Envelope(INIT_READ_NOTIFICATION, {"node_key": "ab" * 16}), conn))
    replies = conn.wait_for(2)
    assert [r.type_code for r in replies] == [NODE_KEY_NOTIFICATION, INIT_READ_FEEDBACK_NOTIFICATION]
    assert server.clients == {"ab" * 16: {conn.id}}


# -- the elastic pool ------------------------------------------------------

def blocked_route(server, gate, **cfg):
    def handler(message):
        gate.wait(10)
        return echo_key(message)

    return server.register_request_route(REQ, RequestDispatcherConfig(**{**FAST, **cfg}), handler=handler)


def test_cold_start_creates_one_worker(server):
    gate = threading.Event()
    rd = blocked_route(server, gate)
    server.consume(stream_for(Envelope(REQ)))
    time.sleep(0.2)
    assert rd.worker_count == 1
    gate.set()


def test_burst_respects_pool_bound(server):
    gate = threading.Event()
    rd = blocked_route(server, gate, pool_size=8, max_task_size=4)
    conn = FakeConnection()
    for i in range(32):
        server.consume(stream_for(Envelope(REQ, {"value": i}), conn))
    time.sleep(0.5)
    # 7 if every new worker grabbed its first request before the next
    # arrival, up to 8 otherwise; never more
    lo = len(simulate_burst(32, 8, 4, first_taken=True))
    hi = len(simulate_burst(32, 8, 4, first_taken=False))
    assert lo <= rd.peak_workers <= hi == 8
    # a worker only ever appeared when every live queue was full
    assert all(all(q >= 4 for q in loads) for loads in rd.creation_log)
    gate.set()
    assert len(conn.wait_for(32)) == 32


def test_waits_for_a_free_slot_instead_of_forcing(server):
    gate = threading.Event()
    rd = blocked_route(server, gate, pool_size=1, max_task_size=1, dispatcher_wait_time=200, wait_round=50)
    conn = FakeConnection()
    for i in range(3):
        server.consume(stream_for(Envelope(REQ, {"value": i}), conn))
    time.sleep(0.3)
    assert rd.worker_count == 1
    released = time.monotonic()
    gate.set()
    assert len(conn.wait_for(3)) == 3
    assert time.monotonic() - released < 2.0  # well inside 50 x 200 ms


def test_ready_flag_lifecycle(server):
    rd = server.register_request_route(REQ, RequestDispatcherConfig(**FAST), handler=echo_key)
    conn = FakeConnection()
    server.consume(stream_for(Envelope(REQ), conn))
    assert rd.is_ready()
    conn.wait_for(1)
    time.sleep((FAST["wait_round"] + 2) * FAST["dispatcher_wait_time"] / 1000 + 0.1)
    assert not rd.is_ready()
    server.consume(stream_for(Envelope(REQ), conn))
    assert len(conn.wait_for(2)) == 2


def test_idle_workers_reclaimed(server):
    rd = server.register_request_route(REQ, RequestDispatcherConfig(
        **FAST, keep_alive=200, idle_check_delay=100, idle_check_period=100), handler=echo_key)
    conn = FakeConnection()
    for _ in range(5):
        server.consume(stream_for(Envelope(REQ), conn))
    conn.wait_for(5)
    assert rd.worker_count >= 1
    deadline = time.monotonic() + 3
    while rd.worker_count and time.monotonic() < deadline:
        time.sleep(0.05)
    assert rd.worker_count == 0
    # and the pool grows back on demand
    server.consume(stream_for(Envelope(REQ), conn))
    assert len(conn.wait_for(6)) == 6


def test_dispose_drains_queued_requests(server):
    rd = server.register_request_route(REQ, RequestDispatcherConfig(**FAST, pool_size=2, max_task_size=20),
                                       handler=lambda m: (time.sleep(0.01), echo_key(m))[1])
    conn = FakeConnection()
    for i in range(10):
        server.consume(stream_for(Envelope(REQ, {"value": i}), conn))
    rd.dispose()
    assert len(conn.sent) == 10
    assert rd.worker_count == 0 and not rd.is_ready()
    rd.dispose()  # no-op
    with pytest.raises(Rejected):
        rd.submit(stream_for(Envelope(REQ)), server.execute)


def test_dispose_with_no_workers_is_immediate(server):
    rd = server.register_request_route(REQ, handler=echo_key)
    started = time.monotonic()
    rd.dispose()
    assert time.monotonic() - started < 0.5


def test_shutdown_disposes_every_route():
    sd = make_server()
    a = sd.register_request_route(REQ, RequestDispatcherConfig(**FAST), handler=echo_key)
    b = sd.register_request_route(OTHER_REQ, RequestDispatcherConfig(**FAST), handler=echo_key)
    conn = FakeConnection()
    for _ in range(5):
        sd.consume(stream_for(Envelope(REQ), conn))
        sd.consume(stream_for(Envelope(OTHER_REQ), conn))
    sd.shutdown()
    assert len(conn.sent) == 10
    assert a.worker_count == b.worker_count == 0
    sd.shutdown()


def test_shutdown_of_unused_server_is_quick():
    sd = make_server()
    started = time.monotonic()
    sd.shutdown()
    assert time.monotonic() - started < 1.0


def test_consume_after_shutdown_counts_rejection():
    sd = make_server()
    sd.register_request_route(REQ, handler=echo_key)
    sd.shutdown()
    sd.consume(stream_for(Envelope(REQ)))
    assert sd.stats().rejected == 1
