"""The demo's menu-driven client."""

from __future__ import annotations

import sys
import time
from enum import IntEnum
from typing import Iterable, Iterator, TextIO

from polldesk.client import RemoteReaderPool, load_or_create_node_key
from polldesk.dispatch import receipt_line
from polldesk.errors import PolldeskError

from . import messages
from .client_reader import ClientReader
from .config import DemoConfig
from .notifications import SetWeatherNotification, SignUpNotification, TestNotification
from .test_request import TestRequest
from .weather import Weather

CANNED_WEATHER = Weather(temperature=25.0, forecast="sunny", rain=False, how_much_rain=0.0, time=1492155880.0)
CANNED_USERNAME = "demo"


class MenuOption(IntEnum):
    SIGN_UP = 1
    SET_WEATHER = 2
    GET_WEATHER = 3
    NOTIFY_TEST = 4
    REQUEST_TEST = 5
    QUIT = 0


LABELS = {
    MenuOption.SIGN_UP: "Sign up",
    MenuOption.SET_WEATHER: "Set Weather",
    MenuOption.GET_WEATHER: "Get Weather",
    MenuOption.NOTIFY_TEST: "Notify Test",
    MenuOption.REQUEST_TEST: "Request Test",
    MenuOption.QUIT: "Quit",
}


def render_menu() -> str:
    lines = ["", "===== Menu Head ====="]
    lines += [f"{int(option)}) {label}" for option, label in LABELS.items()]
    lines += ["===== Menu Tail =====", ""]
    return "\n".join(lines)


def parse_option(text: str) -> MenuOption | None:
    try:
        return MenuOption(int(text.strip()))
    except ValueError:
        return None


class ClientUI:
    """Runs menu options against the server.

    In scripted mode every input (option or prompted field) comes from the
    script and options that need data use canned values.
    """

    def __init__(self, client: ClientReader, node_key: str, out: TextIO, inputs: Iterator[str] | None = None) -> None:
        self.client = client
        self.node_key = node_key
        self.out = out
        self.inputs = inputs  # None means interactive

    def say(self, text: str = "") -> None:
        print(text, file=self.out, flush=True)

    def ask(self, prompt: str) -> str | None:
        if self.inputs is not None:
            return next(self.inputs, None)
        try:
            return input(prompt)
        except EOFError:
            return None

    def send(self, option: MenuOption) -> None:
        if option is MenuOption.SIGN_UP:
            username = CANNED_USERNAME if self.inputs is not None else (self.ask("Username: ") or CANNED_USERNAME)
            self.notify(SignUpNotification(node_key=self.node_key, username=username))
        elif option is MenuOption.SET_WEATHER:
            weather = CANNED_WEATHER if self.inputs is not None else self.prompt_weather()
            if weather is not None:
                self.set_weather(weather)
        elif option is MenuOption.GET_WEATHER:
            weather = self.client.get_weather().weather
            self.say(f"Temperature: {weather.temperature}")
            self.say(f"Forecast: {weather.forecast}")
            self.say(f"Rain: {weather.rain}")
            self.say(f"How much rain: {weather.how_much_rain}")
            self.say(f"Time: {weather.time_text}")
        elif option is MenuOption.NOTIFY_TEST:
            self.notify(TestNotification(notification="notification"))
        elif option is MenuOption.REQUEST_TEST:
            response = self.client.get_test(TestRequest(request="request"))
            self.say(response.response)

    def set_weather(self, weather: Weather) -> bool:
        try:
            weather.validate()
        except ValueError as exc:
            self.say(f"Invalid weather: {exc}")
            return False
        return self.notify(SetWeatherNotification(weather=weather))

    def notify(self, message) -> bool:
        try:
            self.client.notify(message)
            return True
        except (PolldeskError, OSError) as exc:
            self.say(f"Send failed: {exc}")
            return False

    def prompt_weather(self) -> Weather | None:
        try:
            temperature = float(self.ask("Temperature: ") or 0)
            forecast = self.ask("Forecast: ") or "unknown"
            rain = (self.ask("Rain (y/n): ") or "n").strip().lower().startswith("y")
            how_much_rain = float(self.ask("How much rain: ") or 0) if rain else 0.0
        except ValueError as exc:
            self.say(f"Invalid weather: {exc}")
            return None
        return Weather(temperature, forecast, rain, how_much_rain, time.time())

    def loop(self) -> None:
        while True:
            self.say(render_menu())
            self.say("Input an option:")
            text = self.ask("")
            if text is None:
                return
            option = parse_option(text)
            if option is None:
                continue
            self.say(f"Your choice: {int(option)}")
            if option is MenuOption.QUIT:
                return
            self.send(option)


def run_client(config: DemoConfig, script: Iterable[str] | None = None, out: TextIO | None = None) -> int:
    """Run the menu; ``script`` (lines of input) makes it non-interactive."""
    out = out or sys.stdout
    node_key = load_or_create_node_key(config.node_key_file) if config.node_key_file else None
    pool = RemoteReaderPool(config.server_ip, config.server_port, messages.REGISTRY, node_key,
                            config.max_connections, config.read_timeout)
    try:
        try:
            pool.init_session(lambda env: print(receipt_line(messages.REGISTRY.name_of(env.type_code)),
                                                file=out, flush=True))
        except PolldeskError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        inputs = None if script is None else iter([line.strip() for line in script if line.strip()])
        ClientUI(ClientReader(pool), pool.node_key, out, inputs).loop()
    finally:
        pool.dispose()
    return 0
