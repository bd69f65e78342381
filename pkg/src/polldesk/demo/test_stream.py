# Generated by polldesk scaffold.
from polldesk.transport import OutMessageStream

from .test_request import TestRequest


class TestStream(OutMessageStream):
    @property
    def typed(self) -> TestRequest:
        return TestRequest.from_envelope(self.message)
