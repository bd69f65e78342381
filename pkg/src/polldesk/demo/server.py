"""The demo server executable."""

from __future__ import annotations

import logging
import signal
import sys
import threading
from typing import Callable, TextIO

from polldesk.dispatch import PollingServer, serve
from polldesk.errors import BindFailure

from .config import DemoConfig
from .server_dispatcher import MyServerDispatcher
from .weather import WeatherStore

logger = logging.getLogger(__name__)


def run_server(config: DemoConfig, out: TextIO | None = None, stop: threading.Event | None = None,
               on_started: Callable[[PollingServer], None] | None = None) -> int:
    """Serve until ``stop`` is set (or SIGINT/SIGTERM arrives); return the exit code."""
    out = out or sys.stdout
    stop = stop or threading.Event()
    print("Server starting up ...", file=out, flush=True)
    dispatcher = MyServerDispatcher(config.server_config(), config.request_config(), WeatherStore(), out)
    try:
        server = serve(dispatcher, config.server_ip, config.server_port)
    except BindFailure as exc:
        dispatcher.shutdown()
        print(f"error: {exc}", file=sys.stderr)
        return 1

    previous = {}
    if threading.current_thread() is threading.main_thread():
        for sig in (signal.SIGINT, signal.SIGTERM):
            previous[sig] = signal.signal(sig, lambda *_: stop.set())
    try:
        print("Server started ...", file=out, flush=True)
        if on_started is not None:
            on_started(server)
        while not stop.wait(0.5):
            pass
    finally:
        server.shutdown()
        for sig, handler in previous.items():
            signal.signal(sig, handler)
    logger.info("server stopped")
    return 0
