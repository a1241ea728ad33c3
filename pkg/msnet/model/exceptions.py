from common.exceptions.exception_enum import CustomExceptionEnum, ExitStatus


class ModelExceptionEnum(CustomExceptionEnum):
    ## architecture
    INVALID_CONFIG = (
        "invalid model config: {reason}",
        "MD001",
        ExitStatus.RUNTIME,
    )
    WRONG_SIDE = (
        "input side {actual} does not match the model side {expected}",
        "MD002",
        ExitStatus.RUNTIME,
    )
    MODE_MISMATCH = (
        "{operation} needs a {expected} model, got {actual}",
        "MD003",
        ExitStatus.RUNTIME,
    )
    VIEW_COUNT = (
        "{mode} model takes {expected} view(s), got {actual}",
        "MD004",
        ExitStatus.RUNTIME,
    )

    ## weight files
    BAD_MAGIC = (
        "{path}: not a weight file (magic {magic!r})",
        "WF001",
        ExitStatus.RUNTIME,
    )
    VERSION_MISMATCH = (
        "{path}: weight format version {version}, expected {expected}",
        "WF002",
        ExitStatus.RUNTIME,
    )
    CRC_MISMATCH = (
        "{path}: payload CRC32 {actual:#010x} does not match stored {stored:#010x}",
        "WF003",
        ExitStatus.RUNTIME,
    )
    TRUNCATED = (
        "{path}: truncated while reading {what}",
        "WF004",
        ExitStatus.RUNTIME,
    )
    CORRUPT = (
        "{path}: {reason}",
        "WF005",
        ExitStatus.RUNTIME,
    )
