from common.exceptions.exception_enum import CustomExceptionEnum, ExitStatus


class TensorExceptionEnum(CustomExceptionEnum):
    SHAPE_MISMATCH = (
        "{op}: shape mismatch, {detail}",
        "TS001",
        ExitStatus.RUNTIME,
    )
    ODD_SPATIAL = (
        "maxpool2: spatial size {height}x{width} is not even",
        "TS002",
        ExitStatus.RUNTIME,
    )
    INDEX_OUT_OF_RANGE = (
        "{op}: class index {index} out of range for {classes} classes",
        "TS003",
        ExitStatus.RUNTIME,
    )
    NOT_SCALAR = (
        "backward: loss must be a scalar, got shape {shape}",
        "TS004",
        ExitStatus.RUNTIME,
    )
    EMPTY_SHAPE = (
        "tensor dimensions must be positive, got shape {shape}",
        "TS005",
        ExitStatus.RUNTIME,
    )
    DUPLICATE_PARAMETER = (
        "parameter name {name!r} used twice",
        "TS006",
        ExitStatus.RUNTIME,
    )
    UNKNOWN_GRADIENT = (
        "adam_step: gradient for unknown parameter {name!r}",
        "TS007",
        ExitStatus.RUNTIME,
    )
