from polldesk.message import make_sentinel

from . import messages

NO_WEATHER_RESPONSE = make_sentinel(messages.WEATHER_RESPONSE)
NO_TEST_RESPONSE = make_sentinel(messages.TEST_RESPONSE)
# scaffold:sentinels
