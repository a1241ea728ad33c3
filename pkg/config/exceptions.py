from common.exceptions.exception_enum import CustomExceptionEnum, ExitStatus


class ConfigExceptionEnum(CustomExceptionEnum):
    MALFORMED_LINE = (
        "config line {line}: expected 'key = value', got {text!r}",
        "CF001",
        ExitStatus.RUNTIME,
    )
    UNKNOWN_KEY = (
        "config line {line}: unknown key {key!r}",
        "CF002",
        ExitStatus.RUNTIME,
    )
    DUPLICATE_KEY = (
        "config line {line}: key {key!r} already set",
        "CF003",
        ExitStatus.RUNTIME,
    )
    BAD_VALUE = (
        "config line {line}: {key} = {value!r} is not a valid {kind}",
        "CF004",
        ExitStatus.RUNTIME,
    )
    INVALID = (
        "invalid config: {reason}",
        "CF005",
        ExitStatus.RUNTIME,
    )
