from __future__ import annotations

import threading
from dataclasses import asdict, dataclass
from datetime import datetime, timezone


@dataclass
class Weather:
    temperature: float = 0.0  # degrees Celsius
    forecast: str = "unknown"
    rain: bool = False
    how_much_rain: float = 0.0  # mm
    time: float = 0.0  # seconds since the epoch

    def validate(self) -> None:
        if self.how_much_rain < 0:
            raise ValueError("how_much_rain must not be negative")
        if not self.rain and self.how_much_rain != 0:
            raise ValueError("how_much_rain must be 0 when it is not raining")

    def to_fields(self) -> dict:
        return asdict(self)

    @classmethod
    def from_fields(cls, fields: dict) -> "Weather":
        return cls(
            temperature=float(fields.get("temperature", 0.0)),
            forecast=str(fields.get("forecast", "unknown")),
            rain=bool(fields.get("rain", False)),
            how_much_rain=float(fields.get("how_much_rain", 0.0)),
            time=float(fields.get("time", 0.0)),
        )

    @property
    def time_text(self) -> str:
        return datetime.fromtimestamp(self.time, timezone.utc).isoformat()


class WeatherStore:
    """The server's current weather; starts out at the default value."""

    def __init__(self, weather: Weather | None = None) -> None:
        self._weather = weather or Weather()
        self._lock = threading.Lock()

    def get(self) -> Weather:
        with self._lock:
            return self._weather

    def set(self, weather: Weather) -> None:
        weather.validate()
        with self._lock:
            self._weather = weather
