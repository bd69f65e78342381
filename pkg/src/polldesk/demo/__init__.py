"""Weather/test demo application.

This package doubles as the reference project layout that ``polldesk
scaffold`` understands: ``messages.py`` holds the type codes,
``message_config.py`` the sentinels, ``server_dispatcher.py`` the route
registrations and ``client_reader.py`` one accessor per request type.
"""
