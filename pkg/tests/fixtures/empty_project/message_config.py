from polldesk.message import make_sentinel

from . import messages

# scaffold:sentinels
