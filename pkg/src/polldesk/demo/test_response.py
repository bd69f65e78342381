# Generated by polldesk scaffold.
from dataclasses import dataclass

from polldesk.message import ServerMessage

from . import messages


@dataclass
class TestResponse(ServerMessage):
    message_type = messages.TEST_RESPONSE

    response: str = ""
