from polldesk.dispatch import RequestDispatcherConfig, ServerDispatcher, ServerDispatcherConfig

from . import messages
# scaffold:imports


class MyServerDispatcher(ServerDispatcher):
    def __init__(self, config: ServerDispatcherConfig | None = None,
                 request_config: RequestDispatcherConfig | None = None, out=None) -> None:
        super().__init__(config, messages.REGISTRY, out)
        request_config = request_config or RequestDispatcherConfig()
        # scaffold:dispatch-routes
