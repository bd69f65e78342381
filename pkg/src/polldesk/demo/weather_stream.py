from polldesk.transport import OutMessageStream

from .weather_request import WeatherRequest


class WeatherStream(OutMessageStream):
    @property
    def typed(self) -> WeatherRequest:
        return WeatherRequest.from_envelope(self.message)
