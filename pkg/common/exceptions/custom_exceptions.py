from common.exceptions.exception_enum import CustomExceptionEnum


class CustomException(Exception):
    def __init__(self, error_code: CustomExceptionEnum, **detail):
        self.error_code = error_code
        self.detail = detail
        self.message = error_code.message.format(**detail) if detail else error_code.message
        self.status_code = error_code.status
        self.code = error_code.code
        super().__init__(self.message)

    def __str__(self):
        return f"[{self.code}] {self.message}"
