from __future__ import annotations

from dataclasses import dataclass, field

from polldesk.codec import Envelope
from polldesk.message import ServerMessage

from . import messages
from .weather import Weather


@dataclass
class WeatherResponse(ServerMessage):
    message_type = messages.WEATHER_RESPONSE

    weather: Weather = field(default_factory=Weather)

    def payload(self) -> dict:
        return {"weather": self.weather.to_fields()}

    @classmethod
    def from_envelope(cls, env: Envelope) -> "WeatherResponse":
        msg = super().from_envelope(env)
        if isinstance(msg.weather, dict):
            msg.weather = Weather.from_fields(msg.weather)
        return msg
