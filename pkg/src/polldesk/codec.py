"""Message-type registry and the binary wire format.

Frame layout (all integers big-endian)::

    offset  size  field
    0       2     magic 0x47 0x46 ("GF")
    2       1     version 0x01
    3       4     type code (u32)
    7       16    message key
    23      4     payload length (u32)
    27      n     payload: one encoded map value

Field values are tagged::

    0x00 unit                      (None)
    0x01 bool    u8 0|1
    0x02 int     i64
    0x03 float   f64
    0x04 string  u32 length + UTF-8
    0x05 bytes   u32 length + raw
    0x06 list    u32 count + values
    0x07 map     u32 count + (u32 key length + UTF-8 key + value)*
"""

from __future__ import annotations

import os
import struct
import threading
from dataclasses import dataclass, field
from typing import Any, Iterator

from .errors import (
    BadMagic,
    BadVersion,
    CodecError,
    DuplicateCode,
    DuplicateName,
    MalformedPayload,
    NeedMoreBytes,
    PayloadTooLarge,
    RegistryError,
    ReservedCode,
    UnregisteredType,
)

MAGIC = b"GF"
VERSION = 0x01
KEY_SIZE = 16
HEADER = struct.Struct(">2sBI16sI")
HEADER_SIZE = HEADER.size
MAX_PAYLOAD = 16 * 1024 * 1024
RESERVED_CODES = range(0, 16)
MAX_DEPTH = 64

TAG_UNIT = 0x00
TAG_BOOL = 0x01
TAG_INT = 0x02
TAG_FLOAT = 0x03
TAG_STR = 0x04
TAG_BYTES = 0x05
TAG_LIST = 0x06
TAG_MAP = 0x07

_U32 = struct.Struct(">I")
_I64 = struct.Struct(">q")
_F64 = struct.Struct(">d")
_INT_MIN, _INT_MAX = -(2**63), 2**63 - 1


class MessageTypeCode(int):
    """A u32 type code that remembers its symbolic name."""

    name: str

    def __new__(cls, code: int, name: str) -> "MessageTypeCode":
        obj = super().__new__(cls, code)
        obj.name = name
        return obj

    def __repr__(self) -> str:
        return f"{self.name}({int(self)})"


class MessageTypeRegistry:
    """Bijective name <-> code table.

    Filled once at startup, read-only afterwards; lookups take no lock.
    """

    def __init__(self) -> None:
        self._by_name: dict[str, MessageTypeCode] = {}
        self._by_code: dict[int, MessageTypeCode] = {}
        self._lock = threading.Lock()

    @classmethod
    def with_builtins(cls) -> "MessageTypeRegistry":
        registry = cls()
        for name, code in BUILTIN_TYPES.items():
            registry._add(name, code)
        return registry

    def register(self, name: str, code: int) -> MessageTypeCode:
        if code in RESERVED_CODES:
            raise ReservedCode(f"code {code} is reserved for built-in messages")
        return self._add(name, code)

    def _add(self, name: str, code: int) -> MessageTypeCode:
        if not name:
            raise RegistryError("message type name must be nonempty")
        if not 0 <= code <= 0xFFFFFFFF:
            raise RegistryError(f"code {code} does not fit in u32")
        with self._lock:
            if name in self._by_name:
                raise DuplicateName(name)
            if code in self._by_code:
                raise DuplicateCode(f"{code} already names {self._by_code[code].name}")
            entry = MessageTypeCode(code, name)
            self._by_name[name] = entry
            self._by_code[code] = entry
        return entry

    def code_of(self, name: str) -> MessageTypeCode:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnregisteredType(name) from None

    def lookup(self, code: int) -> MessageTypeCode:
        try:
            return self._by_code[code]
        except KeyError:
            raise UnregisteredType(code) from None

    def name_of(self, code: int, default: str | None = None) -> str | None:
        entry = self._by_code.get(code)
        return entry.name if entry is not None else default

    def __contains__(self, code: object) -> bool:
        return code in self._by_code

    def __iter__(self) -> Iterator[MessageTypeCode]:
        return iter(sorted(self._by_code.values()))

    def __len__(self) -> int:
        return len(self._by_code)


BUILTIN_TYPES = {
    "REGISTER_CLIENT_NOTIFICATION": 1,
    "NODE_KEY_NOTIFICATION": 2,
    "INIT_READ_NOTIFICATION": 3,
    "INIT_READ_FEEDBACK_NOTIFICATION": 4,
}

REGISTRY = MessageTypeRegistry.with_builtins()
REGISTER_CLIENT_NOTIFICATION = REGISTRY.code_of("REGISTER_CLIENT_NOTIFICATION")
NODE_KEY_NOTIFICATION = REGISTRY.code_of("NODE_KEY_NOTIFICATION")
INIT_READ_NOTIFICATION = REGISTRY.code_of("INIT_READ_NOTIFICATION")
INIT_READ_FEEDBACK_NOTIFICATION = REGISTRY.code_of("INIT_READ_FEEDBACK_NOTIFICATION")


def register_message_type(name: str, code: int, registry: MessageTypeRegistry | None = None) -> MessageTypeCode:
    """Register an application message type on ``registry`` (default: the process-wide one)."""
    return (registry or REGISTRY).register(name, code)


def new_message_key() -> bytes:
    return os.urandom(KEY_SIZE)


@dataclass
class Envelope:
    type_code: int
    payload: dict[str, Any] = field(default_factory=dict)
    message_key: bytes = field(default_factory=new_message_key)

    def __post_init__(self) -> None:
        self.type_code = int(self.type_code)
        if not 0 <= self.type_code <= 0xFFFFFFFF:
            raise CodecError(f"type code {self.type_code} does not fit in u32")
        if len(self.message_key) != KEY_SIZE:
            raise CodecError(f"message key must be {KEY_SIZE} bytes")
        self.message_key = bytes(self.message_key)


# -- field values ------------------------------------------------------------

def _encode_str(out: bytearray, text: str) -> None:
    raw = text.encode("utf-8")
    out += _U32.pack(len(raw))
    out += raw


def encode_value(value: Any, out: bytearray | None = None) -> bytearray:
    if out is None:
        out = bytearray()
    if value is None:
        out.append(TAG_UNIT)
    elif isinstance(value, bool):
        out.append(TAG_BOOL)
        out.append(1 if value else 0)
    elif isinstance(value, int):
        if not _INT_MIN <= value <= _INT_MAX:
            raise CodecError(f"integer {value} does not fit in i64")
        out.append(TAG_INT)
        out += _I64.pack(value)
    elif isinstance(value, float):
        out.append(TAG_FLOAT)
        out += _F64.pack(value)
    elif isinstance(value, str):
        out.append(TAG_STR)
        _encode_str(out, value)
    elif isinstance(value, (bytes, bytearray, memoryview)):
        raw = bytes(value)
        out.append(TAG_BYTES)
        out += _U32.pack(len(raw))
        out += raw
    elif isinstance(value, (list, tuple)):
        out.append(TAG_LIST)
        out += _U32.pack(len(value))
        for item in value:
            encode_value(item, out)
    elif isinstance(value, dict):
        out.append(TAG_MAP)
        out += _U32.pack(len(value))
        for key, item in value.items():
            if not isinstance(key, str):
                raise CodecError(f"map keys must be str, got {type(key).__name__}")
            _encode_str(out, key)
            encode_value(item, out)
    else:
        raise CodecError(f"cannot encode {type(value).__name__}")
    return out


class _Reader:
    __slots__ = ("buf", "pos", "end")

    def __init__(self, buf: memoryview) -> None:
        self.buf = buf
        self.pos = 0
        self.end = len(buf)

    def take(self, n: int) -> memoryview:
        if self.pos + n > self.end:
            raise MalformedPayload("value runs past end of payload")
        chunk = self.buf[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u32(self) -> int:
        return _U32.unpack(self.take(4))[0]

    def text(self) -> str:
        try:
            return str(self.take(self.u32()), "utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedPayload(f"invalid UTF-8: {exc}") from None

    def value(self, depth: int = 0) -> Any:
        if depth > MAX_DEPTH:
            raise MalformedPayload("nesting too deep")
        tag = self.take(1)[0]
        if tag == TAG_UNIT:
            return None
        if tag == TAG_BOOL:
            flag = self.take(1)[0]
            if flag > 1:
                raise MalformedPayload(f"bad bool byte {flag:#x}")
            return flag == 1
        if tag == TAG_INT:
            return _I64.unpack(self.take(8))[0]
        if tag == TAG_FLOAT:
            return _F64.unpack(self.take(8))[0]
        if tag == TAG_STR:
            return self.text()
        if tag == TAG_BYTES:
            return bytes(self.take(self.u32()))
        if tag == TAG_LIST:
            return [self.value(depth + 1) for _ in range(self.u32())]
        if tag == TAG_MAP:
            count = self.u32()
            result: dict[str, Any] = {}
            for _ in range(count):
                key = self.text()
                if key in result:
                    raise MalformedPayload(f"duplicate map key {key!r}")
                result[key] = self.value(depth + 1)
            return result
        raise MalformedPayload(f"unknown tag {tag:#x}")


def decode_value(data: bytes | bytearray | memoryview) -> Any:
    """Decode exactly one value occupying all of ``data``."""
    reader = _Reader(memoryview(data))
    value = reader.value()
    if reader.pos != reader.end:
        raise MalformedPayload(f"{reader.end - reader.pos} trailing byte(s)")
    return value


# -- frames ------------------------------------------------------------------

def encode_envelope(env: Envelope, registry: MessageTypeRegistry | None = None,
                    max_payload: int = MAX_PAYLOAD) -> bytes:
    registry = registry or REGISTRY
    if env.type_code not in registry:
        raise UnregisteredType(env.type_code)
    payload = encode_value(env.payload)
    if len(payload) > max_payload:
        raise PayloadTooLarge(f"payload of {len(payload)} bytes exceeds cap {max_payload}")
    return HEADER.pack(MAGIC, VERSION, env.type_code, env.message_key, len(payload)) + payload


def decode_envelope(data: bytes | bytearray | memoryview,
                    max_payload: int = MAX_PAYLOAD) -> tuple[Envelope, int]:
    """Decode one frame from the front of ``data``.

    Returns the envelope and the number of bytes it occupied. Raises
    :class:`NeedMoreBytes` when the frame is incomplete; any
    :class:`FrameError` means the stream is unusable.
    """
    view = memoryview(data)
    have = len(view)
    for i in range(min(have, 2)):
        if view[i] != MAGIC[i]:
            raise BadMagic(bytes(view[:2]).hex())
    if have >= 3 and view[2] != VERSION:
        raise BadVersion(view[2])
    if have < HEADER_SIZE:
        raise NeedMoreBytes(HEADER_SIZE - have)
    _, _, code, key, length = HEADER.unpack_from(view)
    if length > max_payload:
        raise PayloadTooLarge(f"frame announces {length} bytes, cap is {max_payload}")
    total = HEADER_SIZE + length
    if have < total:
        raise NeedMoreBytes(total - have)
    try:
        payload = decode_value(view[HEADER_SIZE:total])
    except struct.error as exc:
        raise MalformedPayload(str(exc)) from None
    if not isinstance(payload, dict):
        raise MalformedPayload("payload is not a map")
    return Envelope(code, payload, key), total


class FrameDecoder:
    """Incremental decoder for a byte stream carrying back-to-back frames."""

    def __init__(self, max_payload: int = MAX_PAYLOAD) -> None:
        self.max_payload = max_payload
        self._buf = bytearray()
        self._need = 1

    def feed(self, data: bytes) -> list[Envelope]:
        self._buf += data
        if len(self._buf) < self._need:
            return []
        # snapshot: memoryviews must not pin the resizable buffer
        snapshot = bytes(self._buf)
        frames = []
        offset = 0
        while True:
            try:
                env, used = decode_envelope(memoryview(snapshot)[offset:], self.max_payload)
            except NeedMoreBytes as exc:
                self._need = len(snapshot) - offset + exc.missing
                break
            frames.append(env)
            offset += used
        if offset:
            del self._buf[:offset]
        return frames

    @property
    def buffered(self) -> int:
        return len(self._buf)
