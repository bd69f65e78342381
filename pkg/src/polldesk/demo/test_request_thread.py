# Generated by polldesk scaffold.
import logging

from polldesk.worker import RequestWorker

from .test_response import TestResponse
from .test_stream import TestStream

logger = logging.getLogger(__name__)


class TestRequestThread(RequestWorker):
    def run(self) -> None:
        while not self.is_shutdown():
            while not self.is_empty():
                request = self.get_request()
                response = None
                try:
                    response = self.process(request)
                    self.respond(request, response)
                except Exception:
                    logger.exception("TestRequestThread failed on %r", request.message)
                self.dispose_message(request, response)
            self.hold_on()

    def process(self, request: TestStream) -> TestResponse:
        return TestResponse(response="response")
