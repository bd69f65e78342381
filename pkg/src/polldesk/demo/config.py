"""Flat ``key=value`` configuration shared by the demo server and client.

Blank lines and ``#`` comments are ignored. Durations are milliseconds.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from polldesk.dispatch import RequestDispatcherConfig, ServerDispatcherConfig


class ConfigError(Exception):
    pass


@dataclass
class DemoConfig:
    server_ip: str = "127.0.0.1"
    server_port: int = 8944
    # server side
    thread_pool_size: int = 100
    scheduler_pool_size: int = 10
    pool_size: int = 100
    keep_alive: int = 30000
    max_task_size: int = 200
    dispatcher_wait_time: int = 500
    wait_round: int = 5
    idle_check_delay: int = 3000
    idle_check_period: int = 6000
    request_thread_wait_time: int = 2000
    # client side
    max_connections: int = 8
    read_timeout: int = 10000
    node_key_file: str = ""

    @classmethod
    def load(cls, path: str | Path | None, **overrides) -> "DemoConfig":
        values: dict[str, str] = {}
        if path is not None:
            try:
                text = Path(path).read_text(encoding="utf-8")
            except OSError as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from exc
            values = parse(text)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_values(values)

    @classmethod
    def from_values(cls, values: dict) -> "DemoConfig":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            if known[key].type == "int":
                try:
                    kwargs[key] = int(raw)
                except (TypeError, ValueError):
                    raise ConfigError(f"{key} must be an integer, got {raw!r}") from None
            else:
                kwargs[key] = str(raw)
        cfg = cls(**kwargs)
        if not 0 <= cfg.server_port <= 65535:
            raise ConfigError(f"server_port out of range: {cfg.server_port}")
        try:
            cfg.server_config()
            cfg.request_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if cfg.max_connections < 1 or cfg.read_timeout < 1:
            raise ConfigError("max_connections and read_timeout must be positive")
        return cfg

    def server_config(self) -> ServerDispatcherConfig:
        return ServerDispatcherConfig(thread_pool_size=self.thread_pool_size,
                                      scheduler_pool_size=self.scheduler_pool_size)

    def request_config(self) -> RequestDispatcherConfig:
        return RequestDispatcherConfig(
            pool_size=self.pool_size,
            keep_alive=self.keep_alive,
            max_task_size=self.max_task_size,
            dispatcher_wait_time=self.dispatcher_wait_time,
            wait_round=self.wait_round,
            idle_check_delay=self.idle_check_delay,
            idle_check_period=self.idle_check_period,
            request_thread_wait_time=self.request_thread_wait_time,
        )


def parse(text: str) -> dict[str, str]:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        values[key.strip()] = value.strip()
    return values
