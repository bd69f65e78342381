"""Exception hierarchy shared by every polldesk layer."""


class PolldeskError(Exception):
    pass


# -- codec -------------------------------------------------------------------

class CodecError(PolldeskError):
    pass


class RegistryError(CodecError):
    pass


class DuplicateName(RegistryError):
    pass


class DuplicateCode(RegistryError):
    pass


class ReservedCode(RegistryError):
    """Application code falls inside the built-in range 0-15."""


class UnregisteredType(CodecError):
    pass


class NeedMoreBytes(CodecError):
    """Input ends before a full frame; ``missing`` is a lower bound."""

    def __init__(self, missing: int):
        super().__init__(f"need at least {missing} more byte(s)")
        self.missing = missing


class FrameError(CodecError):
    """Fatal for the connection that produced the bytes."""


class BadMagic(FrameError):
    pass


class BadVersion(FrameError):
    pass


class PayloadTooLarge(FrameError):
    pass


class MalformedPayload(FrameError):
    pass


# -- transport / dispatch ----------------------------------------------------

class BindFailure(PolldeskError):
    pass


class ConnectionClosed(PolldeskError):
    pass


class Rejected(PolldeskError):
    """Work offered to something that is shut down or disposed."""


class DuplicateRoute(PolldeskError):
    pass


# -- client ------------------------------------------------------------------

class ClientError(PolldeskError):
    pass


class ConnectFailure(ClientError):
    pass


class HandshakeTimeout(ClientError):
    pass


class ReadTimeout(ClientError):
    pass


class PoolClosed(ClientError):
    pass


class SessionNotReady(ClientError):
    pass
