# Generated by polldesk scaffold.
from polldesk.worker import ThreadCreator

from .test_request_thread import TestRequestThread


class TestRequestThreadCreator(ThreadCreator):
    def create_request_thread_instance(self, task_size: int) -> TestRequestThread:
        return TestRequestThread(task_size)
