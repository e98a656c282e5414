"""Exception hierarchy shared by every ergopt module."""


class ErgoptError(Exception):
    """Base class for all library errors."""


class DomainError(ErgoptError, ValueError):
    pass


class NotDifferentiable(ErgoptError, ValueError):
    pass


class NotFound(ErgoptError):
    pass


class ParseError(ErgoptError, ValueError):
    """Raised by the observable parser.

    ``offset`` is the byte offset of the offending token in the source and
    ``expected`` the set of token kinds that would have been accepted there.
    """

    def __init__(self, message, offset, expected=()):
        self.offset = offset
        self.expected = frozenset(expected)
        exp = ", ".join(sorted(self.expected))
        super().__init__(f"{message} at offset {offset}" + (f" (expected {exp})" if exp else ""))


class UnsupportedNode(ErgoptError):
    pass


class CapExceeded(ErgoptError, ValueError):
    pass


class NoCycle(ErgoptError):
    pass


class DepthOverflow(ErgoptError):
    pass


class ConstantsUnavailable(ErgoptError):
    pass


class CoverageGap(ErgoptError):
    def __init__(self, point):
        self.point = point
        super().__init__(f"point {point} lies in no cover component")


class MarginTooSmall(ErgoptError):
    pass


class BaseNotMaximized(ErgoptError):
    pass
