"""Exception types raised across the sorting pipelines."""


class CodedSortError(Exception):
    """Base class for all errors raised by this package."""


class InvalidConfigurationError(CodedSortError, ValueError):
    pass


class OutOfDomainError(CodedSortError, ValueError):
    pass


class InvalidCallError(CodedSortError, ValueError):
    pass


class ConsistencyError(CodedSortError, RuntimeError):
    """A node is missing data that the placement guarantees it holds."""


class MalformedPacketError(CodedSortError, ValueError):
    pass


class MalformedDataError(CodedSortError, ValueError):
    pass


class TransmissionError(CodedSortError, RuntimeError):
    def __init__(self, message, slot=None):
        super().__init__(message if slot is None else f"slot {slot}: {message}")
        self.slot = slot
