from common.exceptions.exception_enum import CustomExceptionEnum, ExitStatus


class InferExceptionEnum(CustomExceptionEnum):
    NO_PREDICTIONS = (
        "at least one prediction set is required",
        "IF001",
        ExitStatus.RUNTIME,
    )
    ID_MISMATCH = (
        "prediction sets cover different images: {diff}",
        "IF002",
        ExitStatus.RUNTIME,
    )
    DUPLICATE_ID = (
        "image {image_id!r} predicted twice{where}",
        "IF003",
        ExitStatus.RUNTIME,
    )
    INVALID_PROBS = (
        "{image_id}: {reason}",
        "IF004",
        ExitStatus.RUNTIME,
    )
    BAD_HEADER = (
        "{path}: expected header {expected!r}, got {actual!r}",
        "IF005",
        ExitStatus.RUNTIME,
    )
    BAD_ROW = (
        "{path} line {line}: {reason}",
        "IF006",
        ExitStatus.RUNTIME,
    )
