from polldesk.worker import ThreadCreator

from .weather import WeatherStore
from .weather_request_thread import WeatherRequestThread


class WeatherRequestThreadCreator(ThreadCreator):
    def __init__(self, store: WeatherStore) -> None:
        self.store = store

    def create_request_thread_instance(self, task_size: int) -> WeatherRequestThread:
        return WeatherRequestThread(task_size, self.store)
