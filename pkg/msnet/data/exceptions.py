from common.exceptions.exception_enum import CustomExceptionEnum, ExitStatus


class DataExceptionEnum(CustomExceptionEnum):
    ## manifest errors
    BAD_HEADER = (
        "{path}: header must be {expected!r}, got {actual!r}",
        "DT001",
        ExitStatus.RUNTIME,
    )
    UNKNOWN_LABEL = (
        "{path} line {line}: unknown label {label!r}",
        "DT002",
        ExitStatus.RUNTIME,
    )
    DUPLICATE_ID = (
        "{path} line {line}: image_id {image_id!r} already listed",
        "DT003",
        ExitStatus.RUNTIME,
    )
    MISSING_FILE = (
        "{path} line {line}: image file {file} does not exist",
        "DT004",
        ExitStatus.RUNTIME,
    )
    MALFORMED_ROW = (
        "{path} line {line}: expected 3 fields, got {count}",
        "DT005",
        ExitStatus.RUNTIME,
    )

    ## sampling and splitting
    EMPTY_CLASS = (
        "no examples for class(es): {classes}",
        "DT006",
        ExitStatus.RUNTIME,
    )
    BAD_BATCH_SIZE = (
        "batch size must be at least 3, got {batch_size}",
        "DT007",
        ExitStatus.RUNTIME,
    )
    BAD_FOLD = (
        "invalid fold {fold_index} of k={k} for {size} entries",
        "DT008",
        ExitStatus.RUNTIME,
    )

    ## synthetic data
    BAD_NATIVE_SIZE = (
        "native_size must be at least 128, got {native_size}",
        "DT009",
        ExitStatus.RUNTIME,
    )
    WRITE_FAILED = (
        "could not write {path}: {reason}",
        "DT010",
        ExitStatus.RUNTIME,
    )
