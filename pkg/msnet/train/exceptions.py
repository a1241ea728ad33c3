from common.exceptions.exception_enum import CustomExceptionEnum, ExitStatus


class TrainExceptionEnum(CustomExceptionEnum):
    INVALID_STAGE = (
        "invalid stage config: {reason}",
        "TR001",
        ExitStatus.RUNTIME,
    )
    INVALID_SCHEDULE = (
        "schedule must be [stage1, stage2], got {stages}",
        "TR002",
        ExitStatus.RUNTIME,
    )
    NON_FINITE_LOSS = (
        "loss became {loss} at update {update}",
        "TR003",
        ExitStatus.RUNTIME,
    )
    BAD_LOG = (
        "{path} line {line}: {reason}",
        "TR004",
        ExitStatus.RUNTIME,
    )
