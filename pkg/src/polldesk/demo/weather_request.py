from dataclasses import dataclass

from polldesk.message import ServerMessage

from . import messages


@dataclass
class WeatherRequest(ServerMessage):
    message_type = messages.WEATHER_REQUEST
