from common.exceptions.exception_enum import CustomExceptionEnum, ExitStatus


class CliExceptionEnum(CustomExceptionEnum):
    USAGE = (
        "{message}",
        "CL001",
        ExitStatus.USAGE,
    )
    BAD_FOLD_SPEC = (
        "--fold expects k/i (e.g. 5/0), got {value!r}",
        "CL002",
        ExitStatus.USAGE,
    )
