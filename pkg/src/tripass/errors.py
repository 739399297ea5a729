"""Exception types shared across the package."""


class TripassError(Exception):
    """Base class for every error this package raises deliberately."""


class InvalidCharacter(TripassError):
    """A character outside A-Z/a-z where a letter was required."""


class EmptyKey(TripassError):
    """A key with no letters in it."""


class KeyLengthMismatch(TripassError):
    """Key stream length does not match the message's letter count."""


class ProtocolViolation(TripassError):
    """A three-pass step ran out of order or under the wrong role."""


class PolicyMismatch(TripassError):
    """The two parties disagreed on key mode or text policy."""


class FrameError(TripassError):
    """Base for wire codec failures; `field` names the offending part."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class UnsupportedVersion(FrameError):
    """Frame carries a version tag this codec does not speak."""


class MalformedFrame(FrameError):
    """Frame structure is broken (field count, session id, pass number...)."""


class MalformedPayload(FrameError):
    """Frame payload is not valid base64 text."""


class TransportError(TripassError):
    """Base for socket-level exchange failures."""


class TimedOut(TransportError):
    """The peer did not answer within the configured timeout."""


class RemoteError(TransportError):
    """The peer rejected the exchange with an in-band error frame."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class InsufficientData(TripassError):
    """Not enough letters to compute the requested statistic."""
