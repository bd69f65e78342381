"""Type codes for every message the demo exchanges."""

from polldesk.codec import MessageTypeRegistry

REGISTRY = MessageTypeRegistry.with_builtins()

WEATHER_REQUEST = REGISTRY.register("WEATHER_REQUEST", 100)
WEATHER_RESPONSE = REGISTRY.register("WEATHER_RESPONSE", 101)
SET_WEATHER_NOTIFICATION = REGISTRY.register("SET_WEATHER_NOTIFICATION", 102)
SIGN_UP_NOTIFICATION = REGISTRY.register("SIGN_UP_NOTIFICATION", 103)
TEST_NOTIFICATION = REGISTRY.register("TEST_NOTIFICATION", 104)
TEST_REQUEST = REGISTRY.register("TEST_REQUEST", 105)
TEST_RESPONSE = REGISTRY.register("TEST_RESPONSE", 106)
# scaffold:type-codes
