from enum import Enum


class ExitStatus:
    OK = 0
    USAGE = 1
    RUNTIME = 2


class CustomExceptionEnum(Enum):
    """
    example

    UNKNOWN_LABEL = (
        "unknown label {label!r} at line {line}",
        "DT001",
        ExitStatus.RUNTIME,
    )
    """

    def __init__(self, message, code, status):
        self.message = message
        self.code = code
        self.status = status
