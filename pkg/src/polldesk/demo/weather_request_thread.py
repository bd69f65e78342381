import logging

from polldesk.worker import RequestWorker

from .weather import WeatherStore
from .weather_response import WeatherResponse
from .weather_stream import WeatherStream

logger = logging.getLogger(__name__)


class WeatherRequestThread(RequestWorker):
    def __init__(self, max_task_size: int, store: WeatherStore) -> None:
        super().__init__(max_task_size)
        self.store = store

    def run(self) -> None:
        while not self.is_shutdown():
            while not self.is_empty():
                request = self.get_request()
                response = None
                try:
                    response = self.process(request)
                    self.respond(request, response)
                except Exception:
                    logger.exception("WeatherRequestThread failed on %r", request.message)
                self.dispose_message(request, response)
            self.hold_on()

    def process(self, request: WeatherStream) -> WeatherResponse:
        return WeatherResponse(weather=self.store.get())
