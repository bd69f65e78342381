"""polldesk: distributed polling over typed request/response messages."""

from .codec import Envelope, MessageTypeCode, MessageTypeRegistry, decode_envelope, encode_envelope
from .client import RemoteReaderPool
from .dispatch import RequestDispatcherConfig, ServerDispatcher, ServerDispatcherConfig, serve
from .message import ServerMessage, make_sentinel

__version__ = "0.1.0"
