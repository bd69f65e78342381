import logging
from typing import TextIO

from polldesk.dispatch import RequestDispatcherConfig, ServerDispatcher, ServerDispatcherConfig
from polldesk.transport import OutMessageStream

from . import messages
from .notifications import SetWeatherNotification, SignUpNotification, TestNotification
from .weather import WeatherStore
from .weather_request_thread_creator import WeatherRequestThreadCreator
from .weather_stream import WeatherStream
from .test_request_thread_creator import TestRequestThreadCreator
from .test_stream import TestStream
# scaffold:imports

logger = logging.getLogger(__name__)


class MyServerDispatcher(ServerDispatcher):
    def __init__(self, config: ServerDispatcherConfig | None = None,
                 request_config: RequestDispatcherConfig | None = None,
                 store: WeatherStore | None = None, out: TextIO | None = None) -> None:
        super().__init__(config, messages.REGISTRY, out)
        self.store = store or WeatherStore()
        self.users: dict[str, str] = {}
        request_config = request_config or RequestDispatcherConfig()

        self.register_notification_route(messages.SIGN_UP_NOTIFICATION, self.on_sign_up)
        self.register_notification_route(messages.SET_WEATHER_NOTIFICATION, self.on_set_weather)
        self.register_notification_route(messages.TEST_NOTIFICATION, self.on_test_notification)

        self.weather_request_dispatcher = self.register_request_route(
            messages.WEATHER_REQUEST,
            request_config,
            creator=WeatherRequestThreadCreator(self.store),
            stream_type=WeatherStream,
        )
        self.test_request_dispatcher = self.register_request_route(
            messages.TEST_REQUEST,
            request_config,
            creator=TestRequestThreadCreator(),
            stream_type=TestStream,
        )
        # scaffold:dispatch-routes

    def on_sign_up(self, stream: OutMessageStream) -> None:
        msg = SignUpNotification.from_envelope(stream.message)
        self.users[msg.node_key] = msg.username

    def on_set_weather(self, stream: OutMessageStream) -> None:
        msg = SetWeatherNotification.from_envelope(stream.message)
        try:
            self.store.set(msg.weather)
        except ValueError as exc:
            logger.warning("ignored invalid weather: %s", exc)

    def on_test_notification(self, stream: OutMessageStream) -> None:
        msg = TestNotification.from_envelope(stream.message)
        logger.info("test notification: %s", msg.notification)
