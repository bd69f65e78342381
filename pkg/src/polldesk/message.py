"""Typed message classes on top of :class:`~polldesk.codec.Envelope`.

A concrete message is a dataclass deriving from :class:`ServerMessage`
with a ``message_type`` class attribute::

    @dataclass
    class TestRequest(ServerMessage):
        message_type = messages.TEST_REQUEST

        request: str = ""

Its dataclass fields become the payload map, in declaration order.
"""

from __future__ import annotations

import dataclasses
from typing import Any, ClassVar, TypeVar

from .codec import Envelope

SENTINEL_FIELD = "__absent__"

M = TypeVar("M", bound="ServerMessage")


def make_sentinel(type_code: int) -> Envelope:
    """The designated "absent" response for ``type_code``."""
    return Envelope(type_code, {SENTINEL_FIELD: True}, bytes(16))


def is_sentinel(env: Envelope) -> bool:
    return env.payload.get(SENTINEL_FIELD) is True


class ServerMessage:
    message_type: ClassVar[int]
    message_key: bytes | None = None
    is_sentinel: bool = False

    def payload(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}

    def to_envelope(self) -> Envelope:
        if self.message_key is None:
            return Envelope(self.message_type, self.payload())
        return Envelope(self.message_type, self.payload(), self.message_key)

    @classmethod
    def from_envelope(cls: type[M], env: Envelope) -> M:
        if env.type_code != cls.message_type:
            raise ValueError(f"{cls.__name__} expects type {cls.message_type}, got {env.type_code}")
        known = {f.name for f in dataclasses.fields(cls)}
        msg = cls(**{k: v for k, v in env.payload.items() if k in known})
        msg.message_key = env.message_key
        msg.is_sentinel = is_sentinel(env)
        return msg
