from loguru import logger

from common.exceptions.custom_exceptions import CustomException
from common.exceptions.exception_enum import ExitStatus


def custom_exception_handler(exc: BaseException) -> int:
    """Log a command failure and map it to a process exit code."""
    logger.error(f"Exception: {exc}")

    if isinstance(exc, CustomException):
        return exc.status_code

    if isinstance(exc, OSError):
        return ExitStatus.RUNTIME

    raise exc
