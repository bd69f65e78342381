"""One-way messages: the server handles them without answering."""

from __future__ import annotations

from dataclasses import dataclass, field

from polldesk.codec import Envelope
from polldesk.message import ServerMessage

from . import messages
from .weather import Weather


@dataclass
class SignUpNotification(ServerMessage):
    message_type = messages.SIGN_UP_NOTIFICATION

    node_key: str = ""
    username: str = ""


@dataclass
class SetWeatherNotification(ServerMessage):
    message_type = messages.SET_WEATHER_NOTIFICATION

    weather: Weather = field(default_factory=Weather)

    def payload(self) -> dict:
        return {"weather": self.weather.to_fields()}

    @classmethod
    def from_envelope(cls, env: Envelope) -> "SetWeatherNotification":
        msg = super().from_envelope(env)
        if isinstance(msg.weather, dict):
            msg.weather = Weather.from_fields(msg.weather)
        return msg


@dataclass
class TestNotification(ServerMessage):
    message_type = messages.TEST_NOTIFICATION

    notification: str = ""
