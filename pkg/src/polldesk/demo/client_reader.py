from polldesk.client import RemoteReaderPool
from polldesk.message import ServerMessage

from . import message_config
from .weather_request import WeatherRequest
from .weather_response import WeatherResponse
from .test_request import TestRequest
from .test_response import TestResponse
# scaffold:imports


class ClientReader:
    """One blocking accessor per request type; failures come back as the type's sentinel."""

    def __init__(self, reader: RemoteReaderPool) -> None:
        self.reader = reader

    def notify(self, message: ServerMessage) -> None:
        self.reader.notify(message.to_envelope())

    def get_weather(self, request: WeatherRequest | None = None) -> WeatherResponse:
        request = request or WeatherRequest()
        response = self.reader.read_or_sentinel(request.to_envelope(), message_config.NO_WEATHER_RESPONSE)
        return WeatherResponse.from_envelope(response)

    def get_test(self, request: TestRequest) -> TestResponse:
        response = self.reader.read_or_sentinel(request.to_envelope(), message_config.NO_TEST_RESPONSE)
        return TestResponse.from_envelope(response)
    # scaffold:client-accessors
